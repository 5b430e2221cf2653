"""Smell detection over pond entries.

Every detector is a pure function of one entry. The rules share one
principle: a smell is only reported on positive evidence, never because
a lookup failed. Inconclusive evaluations are tallied separately as
unknowns so reports can show how much was actually checked.

Gating between the smells:

  - A package whose repository answered 404/410 is the URL-404 pattern
    of S1 and is excluded from S2 and S4 entirely; a dead repository has
    no tags or fork flag worth reporting twice.
  - A package with no usable repository URL can only exhibit the no-URL
    pattern of S1 (plus S3 via registry deprecation and S5).
  - Repository accessibility Unknown blocks S2/S4 evaluation and the
    URL-404 pattern; each tallies as unknown.
  - S3 fuses two signals: registry deprecation OR an archived
    repository. Either positive signal alone is a finding; when neither
    is positive and either is Unknown, the package tallies as S3-unknown.
"""

from __future__ import annotations

from .model import (
    ACCESSIBLE,
    ARCHIVED,
    DEPRECATED,
    DirtyPond,
    FORK,
    NOT_FOUND,
    NO_ATTESTATION,
    NO_TAG_FOUND,
    PondEntry,
    SmellFinding,
    SmellKind,
    SmellSummary,
    UNKNOWN,
)

__all__ = [
    "detect_all",
    "detect_s1",
    "detect_s2",
    "detect_s3",
    "detect_s4",
    "detect_s5",
    "evaluate_entry",
    "summarize",
]


def _finding(entry: PondEntry, kind: SmellKind, evidence: str) -> SmellFinding:
    return SmellFinding(kind=kind, id=entry.id, direct=entry.direct, evidence=evidence)


def _eval_s1(entry: PondEntry, findings: list[SmellFinding], unknowns: dict[SmellKind, str]) -> None:
    if entry.repo is not None:
        access = entry.repo.accessibility
        if access.state == NOT_FOUND:
            findings.append(
                _finding(
                    entry,
                    SmellKind.S1_SOURCE_URL_404,
                    f"repository {entry.repo.url} answered {access.detail or 'not found'}",
                )
            )
        elif access.state == UNKNOWN:
            unknowns[SmellKind.S1_SOURCE_URL_404] = access.detail or "accessibility unknown"
        return
    if entry.registry.fetch_failure:
        reason = entry.registry.fetch_failure
        unknowns[SmellKind.S1_NO_SOURCE_URL] = reason
        unknowns[SmellKind.S1_SOURCE_URL_404] = reason
        return
    if entry.repository_url_raw:
        findings.append(
            _finding(
                entry,
                SmellKind.S1_NO_SOURCE_URL,
                f"repository field {entry.repository_url_raw!r} is not a usable repository URL",
            )
        )
    else:
        findings.append(
            _finding(entry, SmellKind.S1_NO_SOURCE_URL, "no repository URL in registry metadata")
        )


def _eval_s2(entry: PondEntry, findings: list[SmellFinding], unknowns: dict[SmellKind, str]) -> None:
    if entry.repo is None:
        return
    access = entry.repo.accessibility
    if access.state == NOT_FOUND:
        return
    if access.state == UNKNOWN:
        unknowns[SmellKind.S2_INACCESSIBLE_TAG] = access.detail or "accessibility unknown"
        return
    tag = entry.repo.matched_tag
    if tag.state == NO_TAG_FOUND:
        findings.append(
            _finding(
                entry,
                SmellKind.S2_INACCESSIBLE_TAG,
                f"no tag matching version {entry.id.version} in {entry.repo.url}",
            )
        )
    elif tag.state == UNKNOWN:
        unknowns[SmellKind.S2_INACCESSIBLE_TAG] = tag.detail or "tag lookup inconclusive"


def _eval_s3(entry: PondEntry, findings: list[SmellFinding], unknowns: dict[SmellKind, str]) -> None:
    deprecation = entry.registry.deprecation
    archived = entry.repo.is_archived if entry.repo is not None else None

    reasons: list[str] = []
    if deprecation.state == DEPRECATED:
        message = deprecation.detail
        reasons.append(
            f"deprecated on the registry: {message}" if message else "deprecated on the registry"
        )
    if archived is not None and archived.state == ARCHIVED:
        reasons.append("repository is archived")
    if reasons:
        findings.append(_finding(entry, SmellKind.S3_DEPRECATED, "; ".join(reasons)))
        return

    blockers: list[str] = []
    if deprecation.state == UNKNOWN:
        blockers.append(deprecation.detail or "deprecation unknown")
    if archived is not None and archived.state == UNKNOWN:
        blockers.append(archived.detail or "archive flag unknown")
    if blockers:
        unknowns[SmellKind.S3_DEPRECATED] = "; ".join(blockers)


def _eval_s4(entry: PondEntry, findings: list[SmellFinding], unknowns: dict[SmellKind, str]) -> None:
    if entry.repo is None:
        return
    access = entry.repo.accessibility
    if access.state == NOT_FOUND:
        return
    if access.state == UNKNOWN:
        unknowns[SmellKind.S4_FORK] = access.detail or "accessibility unknown"
        return
    fork = entry.repo.is_fork
    if fork.state == FORK:
        parent = fork.detail
        evidence = (
            f"repository is a fork of {parent}"
            if parent
            else "repository is declared a fork (parent not reported)"
        )
        findings.append(_finding(entry, SmellKind.S4_FORK, evidence))
    elif fork.state == UNKNOWN:
        unknowns[SmellKind.S4_FORK] = fork.detail or "fork flag unknown"


def _eval_s5(entry: PondEntry, findings: list[SmellFinding], unknowns: dict[SmellKind, str]) -> None:
    provenance = entry.registry.provenance
    if provenance.state == NO_ATTESTATION:
        findings.append(
            _finding(
                entry,
                SmellKind.S5_NO_PROVENANCE,
                "no build provenance attestation on the registry",
            )
        )
    elif provenance.state == UNKNOWN:
        unknowns[SmellKind.S5_NO_PROVENANCE] = provenance.detail or "provenance unknown"


_EVALUATORS = (_eval_s1, _eval_s2, _eval_s3, _eval_s4, _eval_s5)


def evaluate_entry(entry: PondEntry) -> tuple[list[SmellFinding], dict[SmellKind, str]]:
    """All findings plus {kind: reason} for inconclusive evaluations."""
    findings: list[SmellFinding] = []
    unknowns: dict[SmellKind, str] = {}
    for evaluate in _EVALUATORS:
        evaluate(entry, findings, unknowns)
    return findings, unknowns


def _single(entry: PondEntry, kind: SmellKind) -> SmellFinding | None:
    findings, _ = evaluate_entry(entry)
    for finding in findings:
        if finding.kind == kind:
            return finding
    return None


def detect_s1(entry: PondEntry) -> SmellFinding | None:
    """Inaccessible source: no usable URL, or the URL answers 404/410."""
    findings, _ = evaluate_entry(entry)
    for finding in findings:
        if finding.kind in (SmellKind.S1_NO_SOURCE_URL, SmellKind.S1_SOURCE_URL_404):
            return finding
    return None


def detect_s2(entry: PondEntry) -> SmellFinding | None:
    """Accessible repository with no tag matching the released version."""
    return _single(entry, SmellKind.S2_INACCESSIBLE_TAG)


def detect_s3(entry: PondEntry) -> SmellFinding | None:
    """Deprecated on the registry, or the repository is archived."""
    return _single(entry, SmellKind.S3_DEPRECATED)


def detect_s4(entry: PondEntry) -> SmellFinding | None:
    """Package built from a fork rather than the original repository."""
    return _single(entry, SmellKind.S4_FORK)


def detect_s5(entry: PondEntry) -> SmellFinding | None:
    """No build provenance attestation published for this version."""
    return _single(entry, SmellKind.S5_NO_PROVENANCE)


def detect_all(pond: DirtyPond) -> tuple[list[SmellFinding], dict[SmellKind, int]]:
    """Evaluate every entry; findings ordered by package, then unknown tallies."""
    findings: list[SmellFinding] = []
    unknown_counts = {kind: 0 for kind in SmellKind}
    for pkg in pond.sorted_ids():
        entry_findings, entry_unknowns = evaluate_entry(pond.entries[pkg])
        findings.extend(entry_findings)
        for kind in entry_unknowns:
            unknown_counts[kind] += 1
    return findings, unknown_counts


def summarize(findings: list[SmellFinding], pond: DirtyPond) -> SmellSummary:
    """Distinct-package counts per kind plus unknown tallies from the pond.

    A package with several findings of one kind counts once for that
    kind. Unknown tallies are recomputed from the pond so they cannot
    drift from the findings list.
    """
    flagged: dict[SmellKind, set] = {kind: set() for kind in SmellKind}
    for finding in findings:
        flagged[finding.kind].add(finding.id)
    _, unknown_counts = detect_all(pond)
    return SmellSummary(
        total_packages=len(pond.entries),
        counts={kind: len(flagged[kind]) for kind in SmellKind},
        unknown_counts=unknown_counts,
    )

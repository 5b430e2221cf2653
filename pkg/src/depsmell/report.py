"""Report rendering: Markdown for humans, JSON for pipelines.

Rendering is a pure function of a ReportBundle, so the same bundle
always produces byte-identical output. The Markdown and JSON views of
one bundle always agree on every count; both read the same summary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable

from .model import (
    DirtyPond,
    PackageManagerKind,
    SmellFinding,
    SmellKind,
    SmellSummary,
    utc_now,
)
from .pond import format_timestamp

__all__ = [
    "ReportBundle",
    "TABLE_LABELS",
    "TOTAL_LABEL",
    "build_bundle",
    "diff_summaries",
    "render_call_to_action",
    "render_json",
    "render_markdown",
]

TOTAL_LABEL = "# of Total Packages"

TABLE_LABELS = {
    SmellKind.S1_NO_SOURCE_URL: "# with No Source Code URL",
    SmellKind.S1_SOURCE_URL_404: "# Source Code URL 404",
    SmellKind.S2_INACCESSIBLE_TAG: "# Inaccessible Tag",
    SmellKind.S3_DEPRECATED: "# of Deprecated",
    SmellKind.S4_FORK: "# from Forks",
    SmellKind.S5_NO_PROVENANCE: "# without Provenance",
}

SECTION_TITLES = {
    SmellKind.S1_NO_SOURCE_URL: "S1: No source code URL",
    SmellKind.S1_SOURCE_URL_404: "S1: Source code URL answers 404",
    SmellKind.S2_INACCESSIBLE_TAG: "S2: No release tag matching the version",
    SmellKind.S3_DEPRECATED: "S3: Deprecated",
    SmellKind.S4_FORK: "S4: Built from a fork",
    SmellKind.S5_NO_PROVENANCE: "S5: No provenance attestation",
}

# Guidance blocks, keyed by headline. S1's two patterns share one block.
_CTA_PR = (
    "Submit a Pull Request to the dependency's maintainer, requesting correct "
    "repository metadata and proper tagging of releases."
)
CALL_TO_ACTION: list[tuple[str, tuple[SmellKind, ...], str]] = [
    ("S1: Inaccessible source code", (SmellKind.S1_NO_SOURCE_URL, SmellKind.S1_SOURCE_URL_404), _CTA_PR),
    ("S2: Inaccessible release tag", (SmellKind.S2_INACCESSIBLE_TAG,), _CTA_PR),
    (
        "S3: Deprecated package",
        (SmellKind.S3_DEPRECATED,),
        "Confirm the maintainer's deprecation intention and double-check for "
        "alternative versions that are not deprecated.",
    ),
    (
        "S4: Forked repository",
        (SmellKind.S4_FORK,),
        "Inspect the package and its GitHub repository to verify that the fork "
        "is not malicious.",
    ),
    (
        "S5: Missing provenance",
        (SmellKind.S5_NO_PROVENANCE,),
        "Open an issue in the dependency's repository asking the maintainer to "
        "add provenance and build attestation to the release pipeline.",
    ),
]

# Findings listed inline per section before collapsing into <details>.
DEFAULT_MAX_LISTED = 50


@dataclass
class ReportBundle:
    """Everything a renderer needs, already sorted and deduplicated."""

    project: str
    project_version: str
    package_manager: PackageManagerKind
    summary: SmellSummary
    groups: dict[SmellKind, list[SmellFinding]]
    generated_at: datetime
    tool_version: str
    warnings: list[str] = field(default_factory=list)
    max_listed: int = DEFAULT_MAX_LISTED


def build_bundle(
    pond: DirtyPond,
    findings: list[SmellFinding],
    summary: SmellSummary,
    *,
    tool_version: str,
    clock: Callable[[], datetime] = utc_now,
    warnings: list[str] | None = None,
    max_listed: int = DEFAULT_MAX_LISTED,
) -> ReportBundle:
    """Group findings per kind, one per package, direct packages first."""
    groups: dict[SmellKind, list[SmellFinding]] = {kind: [] for kind in SmellKind}
    seen: set[tuple[SmellKind, object]] = set()
    for finding in findings:
        key = (finding.kind, finding.id)
        if key not in seen:
            seen.add(key)
            groups[finding.kind].append(finding)
    for kind in groups:
        groups[kind].sort(key=lambda f: (not f.direct, f.id))
    return ReportBundle(
        project=pond.project,
        project_version=pond.project_version,
        package_manager=pond.package_manager,
        summary=summary,
        groups=groups,
        generated_at=clock(),
        tool_version=tool_version,
        warnings=list(warnings or []),
        max_listed=max_listed,
    )


def _finding_line(finding: SmellFinding) -> str:
    role = "direct" if finding.direct else "transitive"
    return f"- `{finding.id.spec()}` ({role}): {finding.evidence}"


def render_markdown(bundle: ReportBundle) -> str:
    summary = bundle.summary
    lines: list[str] = []
    lines.append("# Software Supply Chain Smell Report")
    lines.append("")
    lines.append(f"- Project: `{bundle.project}@{bundle.project_version}`")
    lines.append(f"- Package manager: {bundle.package_manager.value}")
    lines.append(f"- Generated: {format_timestamp(bundle.generated_at)}")
    lines.append(f"- Tool: depsmell {bundle.tool_version}")
    lines.append("")

    if bundle.warnings:
        lines.append("> **Warning: this report is based on incomplete data.**")
        for warning in bundle.warnings:
            lines.append(f"> - {warning}")
        lines.append("")

    lines.append("## How to Read This Report")
    lines.append("")
    lines.append(
        "A smell is a warning sign observed on a dependency, not proof of a "
        "compromise. Each package is counted once per smell, however many "
        "dependents pull it in. Lookups that failed are never counted as "
        "smells; they appear in the \"could not evaluate\" column instead. "
        "Direct dependencies are the ones your manifest names; everything "
        "else is transitive."
    )
    lines.append("")

    lines.append("## Summary")
    lines.append("")
    lines.append("| Metric | Count | Could not evaluate |")
    lines.append("| --- | ---: | ---: |")
    lines.append(f"| {TOTAL_LABEL} | {summary.total_packages} | |")
    for kind in SmellKind:
        count = summary.counts.get(kind, 0)
        unknown_count = summary.unknown_counts.get(kind, 0)
        lines.append(f"| {TABLE_LABELS[kind]} | {count} | {unknown_count} |")
    lines.append("")

    lines.append("## Findings")
    lines.append("")
    any_findings = False
    for kind in SmellKind:
        group = bundle.groups.get(kind, [])
        if not group:
            continue
        any_findings = True
        lines.append(f"### {SECTION_TITLES[kind]} ({len(group)})")
        lines.append("")
        shown = group[: bundle.max_listed]
        for finding in shown:
            lines.append(_finding_line(finding))
        rest = group[bundle.max_listed :]
        if rest:
            lines.append("")
            lines.append(f"<details><summary>{len(rest)} more</summary>")
            lines.append("")
            for finding in rest:
                lines.append(_finding_line(finding))
            lines.append("")
            lines.append("</details>")
        lines.append("")
    if not any_findings:
        lines.append("No smells detected.")
        lines.append("")

    lines.append(render_call_to_action(bundle.summary))
    return "\n".join(lines)


def render_call_to_action(summary: SmellSummary) -> str:
    """Per-smell guidance for every kind present in the summary."""
    lines: list[str] = ["## Call to Action", ""]
    any_block = False
    for title, kinds, guidance in CALL_TO_ACTION:
        affected = sum(summary.counts.get(kind, 0) for kind in kinds)
        if not affected:
            continue
        any_block = True
        lines.append(f"### {title}")
        lines.append("")
        lines.append(guidance)
        lines.append("")
    if not any_block:
        lines.append("No smells detected; no action required.")
        lines.append("")
    return "\n".join(lines)


def render_json(bundle: ReportBundle) -> str:
    summary = bundle.summary
    smells = {}
    for kind in SmellKind:
        smells[kind.value] = {
            "label": TABLE_LABELS[kind],
            "count": summary.counts.get(kind, 0),
            "could_not_evaluate": summary.unknown_counts.get(kind, 0),
            "findings": [
                {
                    "name": f.id.name,
                    "version": f.id.version,
                    "direct": f.direct,
                    "evidence": f.evidence,
                }
                for f in bundle.groups.get(kind, [])
            ],
        }
    doc = {
        "project": bundle.project,
        "project_version": bundle.project_version,
        "package_manager": bundle.package_manager.value,
        "generated_at": format_timestamp(bundle.generated_at),
        "tool_version": bundle.tool_version,
        "total_packages": summary.total_packages,
        "smells": smells,
        "warnings": bundle.warnings,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _delta(old: int, new: int) -> str:
    diff = new - old
    return f"{diff:+d}" if diff else "0"


def diff_summaries(label_a: str, a: SmellSummary, label_b: str, b: SmellSummary) -> str:
    """Markdown table of counts side by side with signed deltas."""
    lines = [
        "# Smell Summary Diff",
        "",
        f"| Metric | {label_a} | {label_b} | Delta |",
        "| --- | ---: | ---: | ---: |",
        f"| {TOTAL_LABEL} | {a.total_packages} | {b.total_packages} "
        f"| {_delta(a.total_packages, b.total_packages)} |",
    ]
    for kind in SmellKind:
        old = a.counts.get(kind, 0)
        new = b.counts.get(kind, 0)
        lines.append(f"| {TABLE_LABELS[kind]} | {old} | {new} | {_delta(old, new)} |")
    lines.append("")
    return "\n".join(lines)

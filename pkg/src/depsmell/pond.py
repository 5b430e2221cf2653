"""The dirty pond: a persisted cache of fused registry and repo metadata.

The pond is a public, versioned JSON format. Serialization is canonical:
entries sorted by (name, version), fixed field order, two-space indent,
UTF-8, trailing newline. Writing what load_pond read back produces a
byte-identical file, which is what makes replay runs reproducible and
ponds diffable in version control.

Timestamps are ISO-8601 UTC with a Z suffix; fractional seconds appear
only when nonzero so round trips stay exact.
"""

from __future__ import annotations

import json
import re
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .errors import CacheMiss, MalformedPond, SchemaVersionMismatch
from .model import (
    ACCESSIBLE,
    ACTIVE,
    ARCHIVED,
    DEPRECATED,
    DirtyPond,
    FORK,
    HAS_ATTESTATION,
    NOT_DEPRECATED,
    NOT_FORK,
    NOT_FOUND,
    NO_ATTESTATION,
    NO_TAG_FOUND,
    NormalizedRepoUrl,
    PackageId,
    PackageManagerKind,
    PondEntry,
    RegistryMetadata,
    RepoStatus,
    SOURCE_LIVE,
    SOURCE_REPLAY,
    Status,
    TAG_FOUND,
    UNKNOWN,
    unknown,
    utc_now,
)
from .registry import RegistryFetch
from .repoprobe import normalize_repo_url

__all__ = [
    "SCHEMA_VERSION",
    "ReplayFetcher",
    "dumps_pond",
    "load_pond",
    "loads_pond",
    "save_pond",
]

SCHEMA_VERSION = 1

_DEPRECATION_STATES = frozenset({NOT_DEPRECATED, DEPRECATED, UNKNOWN})
_PROVENANCE_STATES = frozenset({HAS_ATTESTATION, NO_ATTESTATION, UNKNOWN})
_ACCESSIBILITY_STATES = frozenset({ACCESSIBLE, NOT_FOUND, UNKNOWN})
_FORK_STATES = frozenset({FORK, NOT_FORK, UNKNOWN})
_ARCHIVE_STATES = frozenset({ARCHIVED, ACTIVE, UNKNOWN})
_TAG_STATES = frozenset({TAG_FOUND, NO_TAG_FOUND, UNKNOWN})
_SOURCES = frozenset({SOURCE_LIVE, SOURCE_REPLAY})

_TS_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?Z$")


def format_timestamp(moment: datetime) -> str:
    if moment.tzinfo is None:
        raise ValueError("timestamps must be timezone-aware")
    moment = moment.astimezone(timezone.utc)
    # Not strftime: %Y drops leading zeros for years below 1000 on glibc.
    text = (
        f"{moment.year:04d}-{moment.month:02d}-{moment.day:02d}"
        f"T{moment.hour:02d}:{moment.minute:02d}:{moment.second:02d}"
    )
    if moment.microsecond:
        text += f".{moment.microsecond:06d}".rstrip("0")
    return text + "Z"


def parse_timestamp(text: str) -> datetime:
    match = _TS_RE.match(text)
    if not match:
        raise MalformedPond(f"bad timestamp: {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in match.groups()[:6])
    fraction = match.group(7) or ""
    micro = int(fraction.ljust(6, "0")) if fraction else 0
    try:
        return datetime(year, month, day, hour, minute, second, micro, tzinfo=timezone.utc)
    except ValueError as exc:
        raise MalformedPond(f"bad timestamp: {text!r}") from exc


# --- writing ---------------------------------------------------------------


def _status_doc(status: Status) -> dict:
    return {"state": status.state, "detail": status.detail}


def _registry_doc(meta: RegistryMetadata) -> dict:
    return {
        "repository_url_raw": meta.repository_url_raw,
        "deprecation": _status_doc(meta.deprecation),
        "provenance": _status_doc(meta.provenance),
        "fetched_at": format_timestamp(meta.fetched_at),
        "source": meta.source,
        "fetch_failure": meta.fetch_failure,
    }


def _repo_doc(repo: RepoStatus) -> dict:
    return {
        "url": {"host": repo.url.host, "owner": repo.url.owner, "repo": repo.url.repo},
        "accessibility": _status_doc(repo.accessibility),
        "is_fork": _status_doc(repo.is_fork),
        "is_archived": _status_doc(repo.is_archived),
        "matched_tag": _status_doc(repo.matched_tag),
        "probed_at": format_timestamp(repo.probed_at),
    }


def _entry_doc(entry: PondEntry) -> dict:
    return {
        "name": entry.id.name,
        "version": entry.id.version,
        "direct": entry.direct,
        "repository_url_raw": entry.repository_url_raw,
        "monorepo_directory": entry.monorepo_directory,
        "registry": _registry_doc(entry.registry),
        "repo": _repo_doc(entry.repo) if entry.repo is not None else None,
        "diagnostics": list(entry.diagnostics),
    }


def validate_pond(pond: DirtyPond) -> None:
    """Check the invariants a pond must satisfy before it may be written."""
    if pond.schema_version != SCHEMA_VERSION:
        raise ValueError(f"can only write schema version {SCHEMA_VERSION}")
    for pkg, entry in pond.entries.items():
        if pkg != entry.id:
            raise ValueError(f"entry keyed {pkg.spec()} carries id {entry.id.spec()}")
        normalized = normalize_repo_url(entry.repository_url_raw)
        if (entry.repo is not None) != (normalized is not None):
            raise ValueError(
                f"{pkg.spec()}: repo status must be present exactly when "
                "repository_url_raw normalizes"
            )
        if entry.repo is not None and entry.repo.url != normalized:
            raise ValueError(f"{pkg.spec()}: repo status url disagrees with repository_url_raw")


def dumps_pond(pond: DirtyPond) -> str:
    validate_pond(pond)
    doc = {
        "schema_version": pond.schema_version,
        "project": pond.project,
        "project_version": pond.project_version,
        "package_manager": pond.package_manager.value,
        "created_at": format_timestamp(pond.created_at),
        "entries": {pkg.spec(): _entry_doc(pond.entries[pkg]) for pkg in pond.sorted_ids()},
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def save_pond(pond: DirtyPond, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_pond(pond), encoding="utf-8")


# --- reading ---------------------------------------------------------------


def _need(doc: dict, key: str, context: str) -> object:
    if key not in doc:
        raise MalformedPond(f"{context}: missing field {key!r}")
    return doc[key]


def _read_status(doc: object, allowed: frozenset[str], context: str) -> Status:
    if not isinstance(doc, dict):
        raise MalformedPond(f"{context}: status is not an object")
    state = _need(doc, "state", context)
    detail = doc.get("detail", "")
    if state not in allowed:
        raise MalformedPond(f"{context}: illegal state {state!r}")
    if not isinstance(detail, str):
        raise MalformedPond(f"{context}: detail is not a string")
    return Status(str(state), detail)


def _read_optional_text(doc: dict, key: str, context: str) -> str | None:
    value = doc.get(key)
    if value is None or isinstance(value, str):
        return value
    raise MalformedPond(f"{context}: {key} must be a string or null")


def _read_registry(doc: object, pkg: PackageId, context: str) -> RegistryMetadata:
    if not isinstance(doc, dict):
        raise MalformedPond(f"{context}: registry is not an object")
    source = _need(doc, "source", context)
    if source not in _SOURCES:
        raise MalformedPond(f"{context}: illegal source {source!r}")
    return RegistryMetadata(
        id=pkg,
        repository_url_raw=_read_optional_text(doc, "repository_url_raw", context),
        deprecation=_read_status(doc.get("deprecation"), _DEPRECATION_STATES, context),
        provenance=_read_status(doc.get("provenance"), _PROVENANCE_STATES, context),
        fetched_at=parse_timestamp(str(_need(doc, "fetched_at", context))),
        source=str(source),
        fetch_failure=_read_optional_text(doc, "fetch_failure", context),
    )


def _read_repo(doc: object, context: str) -> RepoStatus | None:
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise MalformedPond(f"{context}: repo is not an object")
    url_doc = _need(doc, "url", context)
    if not isinstance(url_doc, dict):
        raise MalformedPond(f"{context}: repo url is not an object")
    try:
        url = NormalizedRepoUrl(
            host=str(_need(url_doc, "host", context)),
            owner=str(_need(url_doc, "owner", context)),
            repo=str(_need(url_doc, "repo", context)),
        )
        return RepoStatus(
            url=url,
            accessibility=_read_status(doc.get("accessibility"), _ACCESSIBILITY_STATES, context),
            is_fork=_read_status(doc.get("is_fork"), _FORK_STATES, context),
            is_archived=_read_status(doc.get("is_archived"), _ARCHIVE_STATES, context),
            matched_tag=_read_status(doc.get("matched_tag"), _TAG_STATES, context),
            probed_at=parse_timestamp(str(_need(doc, "probed_at", context))),
        )
    except ValueError as exc:
        raise MalformedPond(f"{context}: {exc}") from exc


def _read_entry(key: str, doc: object) -> PondEntry:
    context = f"entry {key!r}"
    if not isinstance(doc, dict):
        raise MalformedPond(f"{context}: not an object")
    try:
        pkg = PackageId(str(_need(doc, "name", context)), str(_need(doc, "version", context)))
    except ValueError as exc:
        raise MalformedPond(f"{context}: {exc}") from exc
    if key != pkg.spec():
        raise MalformedPond(f"{context}: key disagrees with name@version {pkg.spec()!r}")
    direct = _need(doc, "direct", context)
    if not isinstance(direct, bool):
        raise MalformedPond(f"{context}: direct must be a boolean")
    diagnostics = doc.get("diagnostics", [])
    if not isinstance(diagnostics, list) or any(not isinstance(d, str) for d in diagnostics):
        raise MalformedPond(f"{context}: diagnostics must be a list of strings")
    return PondEntry(
        id=pkg,
        direct=direct,
        registry=_read_registry(doc.get("registry"), pkg, context),
        repo=_read_repo(doc.get("repo"), context),
        repository_url_raw=_read_optional_text(doc, "repository_url_raw", context),
        monorepo_directory=_read_optional_text(doc, "monorepo_directory", context),
        diagnostics=list(diagnostics),
    )


def loads_pond(text: str) -> DirtyPond:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedPond(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedPond("pond is not a JSON object")
    version = _need(doc, "schema_version", "pond")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"pond schema version {version!r}; this tool reads version {SCHEMA_VERSION}"
        )
    try:
        manager = PackageManagerKind(str(_need(doc, "package_manager", "pond")))
    except ValueError as exc:
        raise MalformedPond(str(exc)) from exc
    entries_doc = _need(doc, "entries", "pond")
    if not isinstance(entries_doc, dict):
        raise MalformedPond("entries is not an object")
    entries: dict[PackageId, PondEntry] = {}
    for key, entry_doc in entries_doc.items():
        entry = _read_entry(str(key), entry_doc)
        if entry.id in entries:
            raise MalformedPond(f"duplicate entry for {entry.id.spec()}")
        entries[entry.id] = entry
    pond = DirtyPond(
        schema_version=int(version),
        project=str(_need(doc, "project", "pond")),
        project_version=str(_need(doc, "project_version", "pond")),
        package_manager=manager,
        created_at=parse_timestamp(str(_need(doc, "created_at", "pond"))),
        entries=entries,
    )
    try:
        validate_pond(pond)
    except ValueError as exc:
        raise MalformedPond(str(exc)) from exc
    return pond


def load_pond(path: Path) -> DirtyPond:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedPond(f"cannot read pond {path}: {exc}") from exc
    return loads_pond(text)


# --- replay ----------------------------------------------------------------


class ReplayFetcher:
    """Serves registry and repository queries from a recorded pond.

    Implements the same call shapes as RegistryClient.fetch_metadata and
    RepoProber.probe, so the orchestrator can run entirely offline.
    Asking about a package the pond does not hold raises CacheMiss for
    metadata and yields an Unknown-everything repo status for probes.
    """

    def __init__(self, pond: DirtyPond, *, clock: Callable[[], datetime] = utc_now):
        self._pond = pond
        self._clock = clock

    @property
    def pond(self) -> DirtyPond:
        return self._pond

    def entry(self, pkg: PackageId) -> PondEntry | None:
        return self._pond.entries.get(pkg)

    def fetch_metadata(self, pkg: PackageId) -> RegistryFetch:
        entry = self.entry(pkg)
        if entry is None:
            raise CacheMiss(pkg.spec())
        metadata = replace(entry.registry, source=SOURCE_REPLAY)
        return RegistryFetch(metadata, entry.monorepo_directory)

    def probe(self, url: NormalizedRepoUrl, pkg: PackageId) -> RepoStatus:
        entry = self.entry(pkg)
        if entry is not None and entry.repo is not None and entry.repo.url == url:
            return entry.repo
        return RepoStatus.gated(url, unknown(f"replay miss: {pkg.spec()}"), self._clock())

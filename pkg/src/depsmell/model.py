"""Domain types shared across the pipeline.

Everything here is a plain dataclass or enum with no I/O. Probe results
use a single Status shape (a state constant plus free-form detail) so the
pond serialization stays uniform; the legal states for each field are the
module-level constants below.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

__all__ = [
    "ACCESSIBLE",
    "ACTIVE",
    "ARCHIVED",
    "DEPRECATED",
    "DependencyGraph",
    "DependencyRecord",
    "DirtyPond",
    "FORK",
    "HAS_ATTESTATION",
    "NOT_DEPRECATED",
    "NOT_FORK",
    "NOT_FOUND",
    "NO_ATTESTATION",
    "NO_TAG_FOUND",
    "NormalizedRepoUrl",
    "PackageId",
    "PackageManagerKind",
    "PondEntry",
    "RegistryMetadata",
    "RepoStatus",
    "SOURCE_LIVE",
    "SOURCE_REPLAY",
    "SmellFinding",
    "SmellKind",
    "SmellSummary",
    "Status",
    "TAG_FOUND",
    "UNKNOWN",
    "unknown",
    "utc_now",
]

# Shared tri-state marker. Unknown always carries a reason in detail.
UNKNOWN = "unknown"

# Deprecation states.
NOT_DEPRECATED = "not_deprecated"
DEPRECATED = "deprecated"

# Provenance states.
HAS_ATTESTATION = "has_attestation"
NO_ATTESTATION = "no_attestation"

# Repository accessibility states.
ACCESSIBLE = "accessible"
NOT_FOUND = "not_found"

# Fork states. FORK carries the parent's canonical URL in detail when known.
FORK = "fork"
NOT_FORK = "not_fork"

# Archive states.
ARCHIVED = "archived"
ACTIVE = "active"

# Release tag states. TAG_FOUND carries the matched tag name in detail.
TAG_FOUND = "tag_found"
NO_TAG_FOUND = "no_tag_found"

# Provenance of the metadata itself: fetched live or replayed from a pond.
SOURCE_LIVE = "live"
SOURCE_REPLAY = "replay"


def utc_now() -> datetime:
    """Current time as an aware UTC datetime. Injectable seam for tests."""
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Status:
    """One probe result: a definite state plus free-form detail text.

    detail holds the reason when state is UNKNOWN, the deprecation message
    for DEPRECATED, the parent URL for FORK, the tag name for TAG_FOUND,
    and is empty otherwise.
    """

    state: str
    detail: str = ""

    def is_unknown(self) -> bool:
        return self.state == UNKNOWN


def unknown(reason: str) -> Status:
    """Build an Unknown status; the reason is mandatory by construction."""
    return Status(UNKNOWN, reason)


_WILDCARDS = {"x", "X", "*"}


def _is_range(version: str) -> bool:
    # Exact semver only: no comparators, no spaces, no wildcard core parts.
    if set(version) & set("^~<>= |"):
        return True
    core = re.split(r"[-+]", version, maxsplit=1)[0]
    return any(part in _WILDCARDS for part in core.split("."))


@dataclass(frozen=True, order=True)
class PackageId:
    """Exact identity of one resolved package: name plus pinned version.

    Ordering is lexicographic by (name, version), which fixes iteration
    order everywhere a pond or report is serialized.
    """

    name: str
    version: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("package name must be non-empty")
        if self.name.startswith("@"):
            scope, sep, rest = self.name[1:].partition("/")
            if not sep or not scope or not rest:
                raise ValueError(f"malformed scoped name: {self.name!r}")
        if not self.version:
            raise ValueError("package version must be non-empty")
        if _is_range(self.version):
            raise ValueError(f"expected an exact version, got a range: {self.version!r}")

    @property
    def unscoped_name(self) -> str:
        if self.name.startswith("@"):
            return self.name.split("/", 1)[1]
        return self.name

    def spec(self) -> str:
        return f"{self.name}@{self.version}"

    def __str__(self) -> str:
        return self.spec()


class PackageManagerKind(Enum):
    """The three lockfile dialects this tool reads."""

    YARN_V1 = "yarn"
    PNPM = "pnpm"
    NPM = "npm"

    @property
    def lockfile_name(self) -> str:
        return _LOCKFILE_NAMES[self]


_LOCKFILE_NAMES = {
    PackageManagerKind.YARN_V1: "yarn.lock",
    PackageManagerKind.PNPM: "pnpm-lock.yaml",
    PackageManagerKind.NPM: "package-lock.json",
}


@dataclass
class DependencyRecord:
    """One resolved package as the lockfile describes it.

    declared_specifiers are the range strings that resolved to this exact
    version (possibly from several dependents). unregistered marks git or
    tarball dependencies that have no registry identity; for those,
    resolved_url carries the only known source location.
    """

    id: PackageId
    declared_specifiers: set[str] = field(default_factory=set)
    resolved_url: str | None = None
    integrity: str | None = None
    declared_dependencies: dict[str, str] = field(default_factory=dict)
    unregistered: bool = False


@dataclass
class DependencyGraph:
    """Deduplicated dependency closure extracted from one lockfile.

    packages is keyed by exact (name, version); the same name may appear
    under several versions. direct is filled by classify_direct. edges
    only connect packages that both exist in the map. diagnostics records
    excluded entries (workspace links) and unmatched manifest ranges.
    """

    package_manager: PackageManagerKind
    packages: dict[PackageId, DependencyRecord] = field(default_factory=dict)
    direct: set[PackageId] = field(default_factory=set)
    edges: set[tuple[PackageId, PackageId]] = field(default_factory=set)
    diagnostics: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.packages)

    def sorted_ids(self) -> list[PackageId]:
        return sorted(self.packages)

    def add(self, record: DependencyRecord) -> DependencyRecord:
        """Insert or merge a record; duplicates union their fields."""
        existing = self.packages.get(record.id)
        if existing is None:
            self.packages[record.id] = record
            return record
        existing.declared_specifiers |= record.declared_specifiers
        if existing.resolved_url is None:
            existing.resolved_url = record.resolved_url
        if existing.integrity is None:
            existing.integrity = record.integrity
        for dep, rng in record.declared_dependencies.items():
            existing.declared_dependencies.setdefault(dep, rng)
        existing.unregistered = existing.unregistered or record.unregistered
        return existing


@dataclass(frozen=True)
class RegistryMetadata:
    """What the registry knows about one package version.

    fetch_failure is set (with a reason) only when the registry could not
    be asked at all; downstream detectors must then treat the absent
    repository URL as inconclusive rather than as a smell. A definite 404
    for the package document leaves fetch_failure unset.
    """

    id: PackageId
    repository_url_raw: str | None
    deprecation: Status
    provenance: Status
    fetched_at: datetime
    source: str = SOURCE_LIVE
    fetch_failure: str | None = None


_HOST_RE = re.compile(r"^[a-z0-9]([a-z0-9.-]*[a-z0-9])?$")


@dataclass(frozen=True)
class NormalizedRepoUrl:
    """Canonical repository coordinates: lowercase host, owner, repo name."""

    host: str
    owner: str
    repo: str

    def __post_init__(self):
        if not _HOST_RE.match(self.host):
            raise ValueError(f"bad host: {self.host!r}")
        if not self.owner or not self.repo:
            raise ValueError("owner and repo must be non-empty")

    @property
    def canonical_https(self) -> str:
        return f"https://{self.host}/{self.owner}/{self.repo}"

    def __str__(self) -> str:
        return self.canonical_https


# Reason attached to repo sub-statuses when accessibility is not Accessible.
GATED_REASON = "repo inaccessible"


@dataclass(frozen=True)
class RepoStatus:
    """Everything probed about one repository for one package.

    Invariant: when accessibility is not Accessible, the fork, archive and
    tag statuses are all Unknown; nothing was (or may be) probed behind an
    inaccessible repository.
    """

    url: NormalizedRepoUrl
    accessibility: Status
    is_fork: Status
    is_archived: Status
    matched_tag: Status
    probed_at: datetime

    def __post_init__(self):
        if self.accessibility.state != ACCESSIBLE:
            for s in (self.is_fork, self.is_archived, self.matched_tag):
                if not s.is_unknown():
                    raise ValueError(
                        "repo not accessible: fork/archive/tag statuses must be Unknown"
                    )

    @classmethod
    def gated(cls, url: NormalizedRepoUrl, accessibility: Status, probed_at: datetime) -> "RepoStatus":
        """Status for a repository that could not be inspected further."""
        blocked = unknown(GATED_REASON)
        return cls(url, accessibility, blocked, blocked, blocked, probed_at)


@dataclass
class PondEntry:
    """Fused registry and repository knowledge about one package.

    repo is present exactly when repository_url_raw normalized to a usable
    URL. repository_url_raw is the URL the analysis acted on: the registry
    field for registered packages, the embedded git URL for unregistered
    ones, None when nothing was known.
    """

    id: PackageId
    direct: bool
    registry: RegistryMetadata
    repo: RepoStatus | None
    repository_url_raw: str | None
    monorepo_directory: str | None = None
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class DirtyPond:
    """The persisted fusion cache: one entry per analyzed package."""

    schema_version: int
    project: str
    project_version: str
    package_manager: PackageManagerKind
    created_at: datetime
    entries: dict[PackageId, PondEntry] = field(default_factory=dict)

    def sorted_ids(self) -> list[PackageId]:
        return sorted(self.entries)


class SmellKind(Enum):
    """The five smells; the first smell splits into two observable patterns."""

    S1_NO_SOURCE_URL = "s1_no_source_url"
    S1_SOURCE_URL_404 = "s1_source_url_404"
    S2_INACCESSIBLE_TAG = "s2_inaccessible_tag"
    S3_DEPRECATED = "s3_deprecated"
    S4_FORK = "s4_fork"
    S5_NO_PROVENANCE = "s5_no_provenance"


@dataclass(frozen=True)
class SmellFinding:
    """One smell observed on one package, with human-readable evidence."""

    kind: SmellKind
    id: PackageId
    direct: bool
    evidence: str

    def __post_init__(self):
        if not self.evidence:
            raise ValueError("a finding must carry evidence text")


@dataclass(frozen=True, eq=True)
class SmellSummary:
    """Distinct-package counts per smell kind, plus unknown tallies.

    counts[kind] is the number of distinct packages with at least one
    finding of that kind. unknown_counts[kind] is the number of packages
    whose evaluation for that kind was inconclusive; those never appear
    in counts.
    """

    total_packages: int
    counts: dict[SmellKind, int]
    unknown_counts: dict[SmellKind, int]

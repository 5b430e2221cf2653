"""depsmell: supply chain smell detection for NPM dependency trees.

Fuses lockfile, registry and repository data into a persisted "pond",
detects five smells over it (inaccessible source, missing release tag,
deprecation, forked origin, missing provenance) and renders Markdown
and JSON reports. Recorded ponds replay offline and deterministically.
"""

__version__ = "0.1.0"

from .errors import (
    CacheMiss,
    DepsmellError,
    MalformedLockfile,
    MalformedManifest,
    MalformedPond,
    NoLockfileFound,
    PackageNotFound,
    SchemaVersionMismatch,
    TransientFetchError,
    UnsupportedLockfileVersion,
)
from .model import (
    DependencyGraph,
    DependencyRecord,
    DirtyPond,
    NormalizedRepoUrl,
    PackageId,
    PackageManagerKind,
    PondEntry,
    RegistryMetadata,
    RepoStatus,
    SmellFinding,
    SmellKind,
    SmellSummary,
    Status,
)
from .lockfile import classify_direct, detect_package_manager, parse_lockfile, parse_manifest
from .registry import RegistryClient
from .repoprobe import RepoProber, normalize_repo_url
from .pond import ReplayFetcher, dumps_pond, load_pond, loads_pond, save_pond
from .smells import detect_all, detect_s1, detect_s2, detect_s3, detect_s4, detect_s5, summarize
from .report import build_bundle, diff_summaries, render_json, render_markdown
from .cli import RunConfig, main, run_analysis, run_diff

__all__ = [
    "CacheMiss",
    "DependencyGraph",
    "DependencyRecord",
    "DepsmellError",
    "DirtyPond",
    "MalformedLockfile",
    "MalformedManifest",
    "MalformedPond",
    "NoLockfileFound",
    "NormalizedRepoUrl",
    "PackageId",
    "PackageManagerKind",
    "PackageNotFound",
    "PondEntry",
    "RegistryClient",
    "RegistryMetadata",
    "RepoProber",
    "RepoStatus",
    "ReplayFetcher",
    "RunConfig",
    "SchemaVersionMismatch",
    "SmellFinding",
    "SmellKind",
    "SmellSummary",
    "Status",
    "TransientFetchError",
    "UnsupportedLockfileVersion",
    "__version__",
    "build_bundle",
    "classify_direct",
    "detect_all",
    "detect_package_manager",
    "detect_s1",
    "detect_s2",
    "detect_s3",
    "detect_s4",
    "detect_s5",
    "diff_summaries",
    "dumps_pond",
    "load_pond",
    "loads_pond",
    "main",
    "normalize_repo_url",
    "parse_lockfile",
    "parse_manifest",
    "render_json",
    "render_markdown",
    "run_analysis",
    "run_diff",
    "save_pond",
    "summarize",
]

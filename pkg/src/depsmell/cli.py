"""Command line interface and run orchestration.

A run has four stages: extract the dependency closure from the lockfile,
fetch registry metadata and probe repositories (concurrently, bounded),
persist the fused pond, then detect smells and render reports. The pond
is written before any report so a crash during rendering still leaves
the expensive fetch work on disk.

Exit codes: 0 on success, 2 when --fail-on names a smell with a positive
count, 1 on fatal errors (including usage errors).
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Protocol

from . import __version__, net
from .errors import CacheMiss, DepsmellError, NoLockfileFound, PackageNotFound
from .lockfile import classify_direct, detect_package_manager, parse_lockfile, parse_manifest
from .model import (
    DependencyGraph,
    DependencyRecord,
    DirtyPond,
    PackageId,
    PackageManagerKind,
    PondEntry,
    RegistryMetadata,
    SmellKind,
    SOURCE_LIVE,
    SOURCE_REPLAY,
    unknown,
    utc_now,
)
from .pond import SCHEMA_VERSION, ReplayFetcher, load_pond, save_pond
from .registry import DEFAULT_REGISTRY_URL, RegistryClient, RegistryFetch
from .report import build_bundle, diff_summaries, render_json, render_markdown
from .repoprobe import RepoProber, normalize_repo_url
from .smells import detect_all, summarize

__all__ = ["RunConfig", "main", "run_analysis", "run_diff"]

logger = logging.getLogger(__name__)

POND_FILENAME = "dirty-pond.json"
REPORT_FILENAME = "software_supply_chain_smells_report.md"
SUMMARY_FILENAME = "summary.json"

MODE_LIVE = "live"
MODE_REPLAY = "replay"

DEFAULT_OUTPUT_DIR = Path("depsmell-out")
DEFAULT_CONCURRENCY = 16
DEFAULT_CACHE_TTL_HOURS = 24.0

_FAIL_ON_GROUPS = {
    "s1": (SmellKind.S1_NO_SOURCE_URL, SmellKind.S1_SOURCE_URL_404),
    "s2": (SmellKind.S2_INACCESSIBLE_TAG,),
    "s3": (SmellKind.S3_DEPRECATED,),
    "s4": (SmellKind.S4_FORK,),
    "s5": (SmellKind.S5_NO_PROVENANCE,),
}


class RegistrySource(Protocol):
    def fetch_metadata(self, pkg: PackageId) -> RegistryFetch: ...


class RepoSource(Protocol):
    def probe(self, url, pkg: PackageId): ...


@dataclass
class RunConfig:
    """Everything one analysis run needs; every seam is injectable."""

    project_name: str
    project_version: str
    project_path: Path | None = None
    package_manager: PackageManagerKind | None = None
    mode: str = MODE_LIVE
    pond_path: Path | None = None
    output_dir: Path = DEFAULT_OUTPUT_DIR
    concurrency_limit: int = DEFAULT_CONCURRENCY
    fail_on: set[SmellKind] = field(default_factory=set)
    registry_base_url: str = DEFAULT_REGISTRY_URL
    rate_limit_per_sec: float = net.DEFAULT_RATE_PER_SEC
    cache_ttl_hours: float = DEFAULT_CACHE_TTL_HOURS
    github_token: str | None = None
    clock: Callable[[], datetime] = utc_now
    registry_source: RegistrySource | None = None
    repo_source: RepoSource | None = None

    def __post_init__(self):
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be at least 1")
        if self.mode not in (MODE_LIVE, MODE_REPLAY):
            raise ValueError(f"unknown mode: {self.mode!r}")


def parse_fail_on(text: str) -> set[SmellKind]:
    """Accept comma-separated S1..S5, case-insensitive."""
    kinds: set[SmellKind] = set()
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        group = _FAIL_ON_GROUPS.get(token)
        if group is None:
            raise ValueError(f"unknown smell {token!r}; expected S1..S5")
        kinds.update(group)
    return kinds


def _build_entry(
    pkg: PackageId,
    record: DependencyRecord | None,
    direct: bool,
    registry_source: RegistrySource,
    repo_source: RepoSource,
    clock: Callable[[], datetime],
    source_label: str,
) -> PondEntry:
    """Fuse registry and repository knowledge for one package."""
    diagnostics: list[str] = []
    monorepo_directory: str | None = None

    if record is not None and record.unregistered:
        reason = "git or tarball dependency; registry not consulted"
        metadata = RegistryMetadata(
            id=pkg,
            repository_url_raw=None,
            deprecation=unknown(reason),
            provenance=unknown(reason),
            fetched_at=clock(),
            source=source_label,
        )
        raw_url = record.resolved_url
        diagnostics.append(reason)
    else:
        try:
            fetched = registry_source.fetch_metadata(pkg)
            metadata = fetched.metadata
            monorepo_directory = fetched.monorepo_directory
            raw_url = metadata.repository_url_raw
        except PackageNotFound:
            reason = "package not found in registry"
            metadata = RegistryMetadata(
                id=pkg,
                repository_url_raw=None,
                deprecation=unknown(reason),
                provenance=unknown(reason),
                fetched_at=clock(),
                source=source_label,
            )
            raw_url = None
            diagnostics.append(reason)
        except CacheMiss:
            reason = f"replay miss: {pkg.spec()}"
            metadata = RegistryMetadata(
                id=pkg,
                repository_url_raw=None,
                deprecation=unknown(reason),
                provenance=unknown(reason),
                fetched_at=clock(),
                source=source_label,
                fetch_failure=reason,
            )
            raw_url = None
            diagnostics.append(reason)
        if metadata.fetch_failure and metadata.fetch_failure not in diagnostics:
            diagnostics.append(f"registry fetch failed: {metadata.fetch_failure}")

    normalized = normalize_repo_url(raw_url)
    repo = repo_source.probe(normalized, pkg) if normalized is not None else None
    return PondEntry(
        id=pkg,
        direct=direct,
        registry=metadata,
        repo=repo,
        repository_url_raw=raw_url,
        monorepo_directory=monorepo_directory,
        diagnostics=diagnostics,
    )


def _collect_entries(
    work: list[tuple[PackageId, DependencyRecord | None, bool]],
    build: Callable[[PackageId, DependencyRecord | None, bool], PondEntry],
    concurrency: int,
) -> dict[PackageId, PondEntry]:
    """Run the builders in a bounded pool; only this thread writes the map."""
    entries: dict[PackageId, PondEntry] = {}
    if concurrency <= 1 or len(work) <= 1:
        for pkg, record, direct in work:
            entries[pkg] = build(pkg, record, direct)
        return entries
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        futures = {pool.submit(build, pkg, record, direct): pkg for pkg, record, direct in work}
        for future in as_completed(futures):
            entry = future.result()
            entries[entry.id] = entry
    return entries


def _load_reusable(config: RunConfig, pond_file: Path) -> dict[PackageId, PondEntry]:
    """Entries from a previous run that are still fresh enough to reuse."""
    if not pond_file.is_file():
        return {}
    try:
        previous = load_pond(pond_file)
    except DepsmellError as exc:
        logger.warning("ignoring unreadable previous pond: %s", exc)
        return {}
    ttl = timedelta(hours=config.cache_ttl_hours)
    now = config.clock()
    return {
        pkg: entry
        for pkg, entry in previous.entries.items()
        if now - entry.registry.fetched_at < ttl
    }


def _extract_graph(config: RunConfig) -> DependencyGraph:
    root = config.project_path
    if root is None:
        raise NoLockfileFound("no project path given")
    if not root.is_dir():
        raise NoLockfileFound(f"not a directory: {root}")
    manager = config.package_manager or detect_package_manager(root)
    lock_path = root / manager.lockfile_name
    if not lock_path.is_file():
        raise NoLockfileFound(f"missing {lock_path}")
    graph = parse_lockfile(lock_path.read_text(encoding="utf-8"), manager)
    manifest_path = root / "package.json"
    if manifest_path.is_file():
        manifest = parse_manifest(manifest_path.read_text(encoding="utf-8"))
    else:
        manifest = {}
        graph.diagnostics.append("no package.json; every package is considered transitive")
    classify_direct(graph, manifest)
    for note in graph.diagnostics:
        logger.info("%s", note)
    return graph


def _incompleteness_warnings(entries: dict[PackageId, PondEntry]) -> list[str]:
    failures = sum(1 for e in entries.values() if e.registry.fetch_failure)
    warnings: list[str] = []
    if failures:
        warnings.append(
            f"{failures} package(s) could not be resolved against the registry; "
            "their smells were not evaluated"
        )
    return warnings


def run_analysis(config: RunConfig) -> int:
    """Run extract, fetch, persist and report; return the process exit code."""
    try:
        return _run_analysis(config)
    except DepsmellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _run_analysis(config: RunConfig) -> int:
    clock = config.clock
    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    pond_file = output_dir / POND_FILENAME

    project = config.project_name
    project_version = config.project_version

    registry_client: RegistryClient | None = None
    repo_prober: RepoProber | None = None
    try:
        if config.mode == MODE_REPLAY:
            if config.pond_path is None:
                raise DepsmellError("replay needs a pond file")
            base = load_pond(config.pond_path)
            manager = base.package_manager
            project = project or base.project
            project_version = project_version or base.project_version
            fetcher = ReplayFetcher(base, clock=clock)
            source_label = SOURCE_REPLAY
            if config.project_path is not None:
                graph = _extract_graph(config)
                manager = graph.package_manager
                work = [
                    (pkg, graph.packages[pkg], pkg in graph.direct) for pkg in graph.sorted_ids()
                ]
                build = lambda pkg, record, direct: _build_entry(  # noqa: E731
                    pkg, record, direct, fetcher, fetcher, clock, source_label
                )
                entries = _collect_entries(work, build, config.concurrency_limit)
            else:
                entries = {
                    pkg: replace(
                        entry, registry=replace(entry.registry, source=SOURCE_REPLAY)
                    )
                    for pkg, entry in base.entries.items()
                }
        else:
            graph = _extract_graph(config)
            manager = graph.package_manager
            throttle = net.HostThrottle(config.rate_limit_per_sec)
            if config.registry_source is not None:
                registry_source: RegistrySource = config.registry_source
            else:
                registry_client = RegistryClient(
                    config.registry_base_url, throttle=throttle, clock=clock
                )
                registry_source = registry_client
            if config.repo_source is not None:
                repo_source: RepoSource = config.repo_source
            else:
                repo_prober = RepoProber(
                    token=config.github_token, throttle=throttle, clock=clock
                )
                repo_source = repo_prober
            reusable = _load_reusable(config, pond_file)
            source_label = SOURCE_LIVE

            def build(pkg: PackageId, record: DependencyRecord | None, direct: bool) -> PondEntry:
                cached = reusable.get(pkg)
                if cached is not None:
                    return replace(cached, direct=direct)
                return _build_entry(
                    pkg, record, direct, registry_source, repo_source, clock, source_label
                )

            work = [(pkg, graph.packages[pkg], pkg in graph.direct) for pkg in graph.sorted_ids()]
            entries = _collect_entries(work, build, config.concurrency_limit)
    finally:
        if registry_client is not None:
            registry_client.close()
        if repo_prober is not None:
            repo_prober.close()

    pond = DirtyPond(
        schema_version=SCHEMA_VERSION,
        project=project,
        project_version=project_version,
        package_manager=manager,
        created_at=clock(),
        entries=entries,
    )
    save_pond(pond, pond_file)

    findings, _ = detect_all(pond)
    summary = summarize(findings, pond)
    bundle = build_bundle(
        pond,
        findings,
        summary,
        tool_version=__version__,
        clock=clock,
        warnings=_incompleteness_warnings(entries),
    )
    report_file = output_dir / REPORT_FILENAME
    summary_file = output_dir / SUMMARY_FILENAME
    report_file.write_text(render_markdown(bundle), encoding="utf-8")
    summary_file.write_text(render_json(bundle), encoding="utf-8")
    print(f"analyzed {summary.total_packages} packages; report at {report_file}")

    if any(summary.counts.get(kind, 0) > 0 for kind in config.fail_on):
        return 2
    return 0


def run_diff(old_path: Path, new_path: Path, output: Path | None = None) -> int:
    """Compare the smell summaries of two ponds."""
    try:
        old = load_pond(old_path)
        new = load_pond(new_path)
    except DepsmellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    old_summary = summarize(detect_all(old)[0], old)
    new_summary = summarize(detect_all(new)[0], new)
    text = diff_summaries(
        f"{old.project}@{old.project_version}",
        old_summary,
        f"{new.project}@{new.project_version}",
        new_summary,
    )
    if output is not None:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")
        print(f"diff written to {output}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depsmell",
        description="Detect supply chain smells in an NPM project's dependencies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze a project checkout (network required)")
    analyze.add_argument("--path", required=True, type=Path, help="project directory")
    analyze.add_argument("--name", required=True, help="project name for the report")
    analyze.add_argument("--version", required=True, help="project version for the report")
    analyze.add_argument("--output", type=Path, default=DEFAULT_OUTPUT_DIR)
    analyze.add_argument("--registry", default=DEFAULT_REGISTRY_URL, help="registry base URL")
    analyze.add_argument("--package-manager", choices=[k.value for k in PackageManagerKind])
    analyze.add_argument("--concurrency", type=int, default=DEFAULT_CONCURRENCY)
    analyze.add_argument("--rate-limit", type=float, default=net.DEFAULT_RATE_PER_SEC,
                         help="max requests per second per host")
    analyze.add_argument("--cache-ttl-hours", type=float, default=DEFAULT_CACHE_TTL_HOURS)
    analyze.add_argument("--fail-on", default="", help="comma-separated S1..S5")

    replay = sub.add_parser("replay", help="re-run detection from a recorded pond (offline)")
    replay.add_argument("--pond", required=True, type=Path, help="pond file to replay")
    replay.add_argument("--path", type=Path, help="optional project directory to re-extract")
    replay.add_argument("--name", default="", help="override the recorded project name")
    replay.add_argument("--version", default="", help="override the recorded project version")
    replay.add_argument("--output", type=Path, default=DEFAULT_OUTPUT_DIR)
    replay.add_argument("--fail-on", default="", help="comma-separated S1..S5")

    diff = sub.add_parser("diff", help="compare the smell summaries of two ponds")
    diff.add_argument("--old", required=True, type=Path)
    diff.add_argument("--new", required=True, type=Path)
    diff.add_argument("--output", type=Path, help="write the diff here instead of stdout")

    return parser


def main(argv: list[str] | None = None, *, clock: Callable[[], datetime] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for --fail-on hits.
        return 0 if exc.code == 0 else 1

    if args.command == "diff":
        return run_diff(args.old, args.new, args.output)

    try:
        fail_on = parse_fail_on(args.fail_on)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "analyze":
            config = RunConfig(
                project_name=args.name,
                project_version=args.version,
                project_path=args.path,
                package_manager=(
                    PackageManagerKind(args.package_manager) if args.package_manager else None
                ),
                mode=MODE_LIVE,
                output_dir=args.output,
                concurrency_limit=args.concurrency,
                fail_on=fail_on,
                registry_base_url=args.registry,
                rate_limit_per_sec=args.rate_limit,
                cache_ttl_hours=args.cache_ttl_hours,
                clock=clock or utc_now,
            )
        else:
            config = RunConfig(
                project_name=args.name,
                project_version=args.version,
                project_path=args.path,
                mode=MODE_REPLAY,
                pond_path=args.pond,
                output_dir=args.output,
                fail_on=fail_on,
                clock=clock or utc_now,
            )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run_analysis(config)


if __name__ == "__main__":
    sys.exit(main())

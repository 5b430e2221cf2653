"""Lockfile extraction for yarn classic, pnpm and npm.

All three parsers feed the same DependencyGraph shape. A package is the
pair (name, exact version); the same name may appear under several
versions and duplicate lockfile entries for the same pair are merged.
Workspace-internal entries (link:, workspace:, file:, portal:) are
excluded with a diagnostic because they have no registry identity and
their source is the project itself. Git and tarball URL dependencies are
kept but flagged unregistered; the embedded URL is the only source
location we will ever know for them.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import yaml

from .errors import (
    MalformedLockfile,
    MalformedManifest,
    NoLockfileFound,
    UnsupportedLockfileVersion,
)
from .model import DependencyGraph, DependencyRecord, PackageId, PackageManagerKind

__all__ = [
    "classify_direct",
    "detect_package_manager",
    "parse_lockfile",
    "parse_manifest",
    "split_descriptor",
]

logger = logging.getLogger(__name__)

# Specifier prefixes that point back into the workspace.
_WORKSPACE_PREFIXES = ("link:", "workspace:", "file:", "portal:")

# Specifier prefixes that name a source location directly, not a registry.
_URL_PREFIXES = (
    "git+",
    "git:",
    "git@",
    "github:",
    "gitlab:",
    "bitbucket:",
    "http:",
    "https:",
    "ssh:",
)

_MANIFEST_SECTIONS = (
    "dependencies",
    "devDependencies",
    "optionalDependencies",
    "peerDependencies",
)


def detect_package_manager(project_root: Path) -> PackageManagerKind:
    """Pick the package manager by which lockfile exists.

    Precedence when several lockfiles are present: yarn, pnpm, npm.
    """
    for kind in PackageManagerKind:
        if (project_root / kind.lockfile_name).is_file():
            return kind
    raise NoLockfileFound(f"no yarn.lock, pnpm-lock.yaml or package-lock.json in {project_root}")


def parse_lockfile(content: str, kind: PackageManagerKind) -> DependencyGraph:
    """Parse lockfile text into a deduplicated dependency graph."""
    if kind is PackageManagerKind.YARN_V1:
        return _parse_yarn(content)
    if kind is PackageManagerKind.PNPM:
        return _parse_pnpm(content)
    return _parse_npm(content)


def split_descriptor(descriptor: str) -> tuple[str, str]:
    """Split `name@range` at the first @ that is not part of a scope.

    Returns (name, range); range is empty when the descriptor has none.
    """
    start = 1 if descriptor.startswith("@") else 0
    cut = descriptor.find("@", start)
    if cut == -1:
        return descriptor, ""
    return descriptor[:cut], descriptor[cut + 1 :]


def _is_workspace_range(rng: str) -> bool:
    return rng.startswith(_WORKSPACE_PREFIXES)


def _is_url_range(rng: str) -> bool:
    return rng.startswith(_URL_PREFIXES) or "://" in rng


def _make_id(name: str, version: str, context: str, line_no: int | None = None) -> PackageId:
    try:
        return PackageId(name, version)
    except ValueError as exc:
        raise MalformedLockfile(f"{context}: {exc}", line_no) from exc


# --- yarn classic ---------------------------------------------------------


def _split_quoted_list(text: str, line_no: int) -> list[str]:
    """Split a yarn header on commas that sit outside double quotes."""
    parts: list[str] = []
    buf: list[str] = []
    quoted = False
    for ch in text:
        if ch == '"':
            quoted = not quoted
        if ch == "," and not quoted:
            parts.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    if quoted:
        raise MalformedLockfile("unbalanced quotes in entry header", line_no)
    parts.append("".join(buf).strip())
    return [p.strip('"') for p in parts if p.strip('"')]


def _split_key_value(line: str) -> tuple[str, str]:
    """Split one yarn body line into key and (unquoted) value."""
    text = line.strip()
    if text.startswith('"'):
        end = text.find('"', 1)
        if end == -1:
            return text, ""
        return text[1:end], text[end + 1 :].strip().strip('"')
    key, _, rest = text.partition(" ")
    return key, rest.strip().strip('"')


def _parse_yarn(content: str) -> DependencyGraph:
    graph = DependencyGraph(PackageManagerKind.YARN_V1)
    lines = content.splitlines()

    header: list[str] = []
    header_line = 0
    fields: dict[str, str] = {}
    deps: dict[str, str] = {}
    in_deps = False

    def flush() -> None:
        nonlocal header, fields, deps, in_deps
        if header:
            _add_yarn_entry(graph, header, fields, deps, header_line)
        header = []
        fields = {}
        deps = {}
        in_deps = False

    for i, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            marker = stripped.lstrip("# ").lower()
            if marker.startswith("yarn lockfile v") and marker != "yarn lockfile v1":
                raise UnsupportedLockfileVersion(f"unsupported {stripped.lstrip('# ')}")
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if indent == 0:
            if stripped == "__metadata:":
                raise UnsupportedLockfileVersion(
                    "yarn berry lockfile (has __metadata); only classic v1 is supported"
                )
            if not stripped.endswith(":"):
                raise MalformedLockfile("expected an entry header ending with ':'", i)
            flush()
            header = _split_quoted_list(stripped[:-1], i)
            header_line = i
            if not header:
                raise MalformedLockfile("empty entry header", i)
            continue
        if not header:
            raise MalformedLockfile("indented line before any entry header", i)
        if stripped.endswith(":"):
            section = stripped[:-1].strip('"')
            in_deps = section in ("dependencies", "optionalDependencies")
            continue
        key, value = _split_key_value(raw)
        if in_deps:
            deps.setdefault(key, value)
        else:
            fields[key] = value
    flush()

    # Edges resolve through (name, range): a dependency entry points at
    # the block whose header carried the same specifier.
    by_specifier: dict[tuple[str, str], PackageId] = {}
    for record in graph.packages.values():
        for rng in record.declared_specifiers:
            by_specifier[(record.id.name, rng)] = record.id
    for record in graph.packages.values():
        for dep_name, dep_range in record.declared_dependencies.items():
            target = by_specifier.get((dep_name, dep_range))
            if target is not None and target != record.id:
                graph.edges.add((record.id, target))
    return graph


def _add_yarn_entry(
    graph: DependencyGraph,
    header: list[str],
    fields: dict[str, str],
    deps: dict[str, str],
    line_no: int,
) -> None:
    specifiers: list[tuple[str, str]] = []
    for descriptor in header:
        name, rng = split_descriptor(descriptor)
        if not name:
            raise MalformedLockfile(f"descriptor without a name: {descriptor!r}", line_no)
        specifiers.append((name, rng))

    name, rng = specifiers[0]
    if _is_workspace_range(rng):
        graph.diagnostics.append(f"excluded workspace entry: {header[0]}")
        return
    if rng.startswith("npm:"):
        # Alias: installed under another name but this is the real package.
        real, _ = split_descriptor(rng[len("npm:") :])
        if real:
            name = real
    version = fields.get("version")
    if not version:
        raise MalformedLockfile(f"entry {header[0]!r} has no version", line_no)

    unregistered = _is_url_range(rng)
    resolved = fields.get("resolved")
    if unregistered and resolved is None:
        resolved = rng
    record = DependencyRecord(
        id=_make_id(name, version, f"entry {header[0]!r}", line_no),
        declared_specifiers={r for _, r in specifiers if r},
        resolved_url=resolved,
        integrity=fields.get("integrity"),
        declared_dependencies=dict(deps),
        unregistered=unregistered,
    )
    graph.add(record)


# --- pnpm -----------------------------------------------------------------


def _strip_peers(version: str) -> str:
    cut = version.find("(")
    return version[:cut] if cut != -1 else version


def _pnpm_key_to_split(key: str) -> tuple[str, str]:
    """Split a packages/snapshots key like /name@1.2.3(peer@1.0.0)."""
    text = _strip_peers(key.lstrip("/"))
    return split_descriptor(text)


def _safe_id(name: str, version: str) -> PackageId | None:
    try:
        return PackageId(name, _strip_peers(version))
    except ValueError:
        return None


def _pnpm_importer_specs(section: object) -> dict[str, tuple[str, str]]:
    """Extract {name: (specifier, resolved version)} from an importer block."""
    out: dict[str, tuple[str, str]] = {}
    if not isinstance(section, dict):
        return out
    for name, value in section.items():
        if isinstance(value, dict):
            spec = str(value.get("specifier", ""))
            version = str(value.get("version", ""))
        else:
            spec = ""
            version = str(value)
        out[str(name)] = (spec, version)
    return out


def _parse_pnpm(content: str) -> DependencyGraph:
    try:
        data = yaml.safe_load(content)
    except yaml.YAMLError as exc:
        raise MalformedLockfile(f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedLockfile("pnpm lockfile is not a YAML mapping")

    version = str(data.get("lockfileVersion", ""))
    major = version.split(".", 1)[0]
    if major not in ("6", "9"):
        raise UnsupportedLockfileVersion(
            f"pnpm lockfileVersion {version or '<missing>'} not supported (need 6.x or 9.x)"
        )

    graph = DependencyGraph(PackageManagerKind.PNPM)
    packages = data.get("packages") or {}
    if not isinstance(packages, dict):
        raise MalformedLockfile("packages section is not a mapping")

    dep_maps: dict[PackageId, dict[str, str]] = {}
    snapshot_key_ids: dict[str, PackageId] = {}
    for key, info in packages.items():
        name, key_version = _pnpm_key_to_split(str(key))
        if not name or not key_version:
            raise MalformedLockfile(f"cannot read package key: {key!r}")
        info = info if isinstance(info, dict) else {}
        resolution = info.get("resolution") or {}
        if _is_url_range(key_version):
            # Tarball or git URL dependency: the key carries the location,
            # the entry body carries the actual version.
            version = str(info.get("version") or "")
            if not version:
                graph.diagnostics.append(f"skipped URL dependency without a version: {key}")
                continue
            record = DependencyRecord(
                id=_make_id(name, version, f"entry {key!r}"),
                resolved_url=key_version,
                integrity=resolution.get("integrity"),
                unregistered=True,
            )
        else:
            record = DependencyRecord(
                id=_make_id(name, key_version, f"entry {key!r}"),
                resolved_url=resolution.get("tarball") or resolution.get("repo"),
                integrity=resolution.get("integrity"),
                unregistered=bool(resolution.get("repo") or resolution.get("type") == "git"),
            )
        graph.add(record)
        snapshot_key_ids[str(key).lstrip("/")] = record.id
        deps = dep_maps.setdefault(record.id, {})
        for section in ("dependencies", "optionalDependencies"):
            block = info.get(section)
            if isinstance(block, dict):
                deps.update({str(k): str(v) for k, v in block.items()})

    # v9 moved the resolved dependency maps out of packages into snapshots.
    snapshots = data.get("snapshots") or {}
    if isinstance(snapshots, dict):
        for key, info in snapshots.items():
            name, key_version = _pnpm_key_to_split(str(key))
            pkg = snapshot_key_ids.get(str(key).lstrip("/")) or _safe_id(name, key_version)
            if pkg is None or pkg not in graph.packages or not isinstance(info, dict):
                continue
            deps = dep_maps.setdefault(pkg, {})
            for section in ("dependencies", "optionalDependencies"):
                block = info.get(section)
                if isinstance(block, dict):
                    deps.update({str(k): str(v) for k, v in block.items()})

    for pkg, deps in dep_maps.items():
        record = graph.packages[pkg]
        for dep_name, dep_version in deps.items():
            record.declared_dependencies.setdefault(dep_name, dep_version)
            if _is_workspace_range(dep_version):
                continue
            target = _safe_id(dep_name, dep_version)
            if target is not None and target in graph.packages:
                graph.edges.add((pkg, target))

    # Root importer (".") carries the manifest-range specifiers. Standalone
    # v6 lockfiles put the same blocks at the top level instead.
    importers = data.get("importers")
    root = importers.get(".") if isinstance(importers, dict) else data
    if isinstance(root, dict):
        for section in ("dependencies", "devDependencies", "optionalDependencies"):
            for name, (spec, version) in _pnpm_importer_specs(root.get(section)).items():
                if _is_workspace_range(version) or _is_workspace_range(spec):
                    graph.diagnostics.append(f"excluded workspace entry: {name}@{spec or version}")
                    continue
                target = snapshot_key_ids.get(f"{name}@{version}") or _safe_id(name, version)
                if target is not None and target in graph.packages:
                    if spec:
                        graph.packages[target].declared_specifiers.add(spec)
                else:
                    graph.diagnostics.append(f"importer dependency {name}@{version} not in packages")
    return graph


# --- npm ------------------------------------------------------------------


def _npm_name_from_path(path: str) -> str:
    head, sep, tail = path.rpartition("node_modules/")
    del head, sep
    return tail


def _parse_npm(content: str) -> DependencyGraph:
    try:
        data = json.loads(content)
    except json.JSONDecodeError as exc:
        raise MalformedLockfile(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedLockfile("package-lock.json is not a JSON object")

    version = data.get("lockfileVersion")
    if version not in (2, 3):
        raise UnsupportedLockfileVersion(
            f"npm lockfileVersion {version!r} not supported (need 2 or 3)"
        )
    packages = data.get("packages")
    if not isinstance(packages, dict):
        raise MalformedLockfile("packages section missing or not an object")

    graph = DependencyGraph(PackageManagerKind.NPM)
    by_path: dict[str, PackageId] = {}

    for path, info in packages.items():
        if path == "" or not isinstance(info, dict):
            continue
        if info.get("link"):
            graph.diagnostics.append(f"excluded workspace link: {path}")
            continue
        if "node_modules/" not in path:
            graph.diagnostics.append(f"excluded workspace package: {path}")
            continue
        pkg_version = info.get("version")
        if not pkg_version:
            graph.diagnostics.append(f"skipped entry without a version: {path}")
            continue
        name = info.get("name") or _npm_name_from_path(path)
        if not name:
            raise MalformedLockfile(f"cannot derive a package name from key {path!r}")
        resolved = info.get("resolved")
        unregistered = bool(resolved) and _is_url_range(resolved) and not resolved.endswith(".tgz")
        record = DependencyRecord(
            id=_make_id(name, str(pkg_version), f"entry {path!r}"),
            resolved_url=resolved,
            integrity=info.get("integrity"),
            unregistered=unregistered,
        )
        graph.add(record)
        by_path[path] = record.id

    def resolve(from_path: str, dep_name: str) -> PackageId | None:
        """Walk up the node_modules nesting like the npm resolver does."""
        base = from_path
        while True:
            candidate = f"{base}/node_modules/{dep_name}" if base else f"node_modules/{dep_name}"
            found = by_path.get(candidate)
            if found is not None:
                return found
            if not base:
                return None
            cut = base.rfind("/node_modules")
            base = base[:cut] if cut != -1 else ""

    for path, info in packages.items():
        if not isinstance(info, dict):
            continue
        source = by_path.get(path) if path else None
        if path and source is None:
            continue
        sections = _MANIFEST_SECTIONS if path == "" else ("dependencies", "optionalDependencies")
        for section in sections:
            block = info.get(section)
            if not isinstance(block, dict):
                continue
            for dep_name, rng in block.items():
                target = resolve(path, str(dep_name))
                if target is None:
                    continue
                graph.packages[target].declared_specifiers.add(str(rng))
                if source is not None:
                    graph.edges.add((source, target))
    return graph


# --- manifest and classification ------------------------------------------


def parse_manifest(content: str) -> dict[str, str]:
    """Read package.json dependency sections into {name: range}.

    When a name appears in several sections the first section (in the
    order dependencies, devDependencies, optionalDependencies,
    peerDependencies) wins.
    """
    try:
        data = json.loads(content)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedManifest("package.json is not a JSON object")

    out: dict[str, str] = {}
    for section in _MANIFEST_SECTIONS:
        block = data.get(section)
        if block is None:
            continue
        if not isinstance(block, dict):
            raise MalformedManifest(f"{section} is not an object")
        for name, rng in block.items():
            if not isinstance(rng, str):
                raise MalformedManifest(f"{section}.{name} is not a string range")
            out.setdefault(name, rng)
    return out


def classify_direct(graph: DependencyGraph, manifest_deps: dict[str, str]) -> DependencyGraph:
    """Mark packages direct when a manifest range resolved to them.

    A package is direct iff its name appears in manifest_deps and one of
    its declared specifiers equals the manifest range. Aliased ranges
    (`npm:real@range`) are matched through the real package name. Ranges
    that match nothing produce a diagnostic, not an error; lockfile and
    manifest can legitimately drift apart.
    """
    by_name: dict[str, list[DependencyRecord]] = {}
    for record in graph.packages.values():
        by_name.setdefault(record.id.name, []).append(record)

    direct: set[PackageId] = set()
    for name, rng in manifest_deps.items():
        lookup = name
        if rng.startswith("npm:"):
            real, _ = split_descriptor(rng[len("npm:") :])
            if real:
                lookup = real
        matched = False
        for record in by_name.get(lookup, []):
            if rng in record.declared_specifiers:
                direct.add(record.id)
                matched = True
        if not matched:
            graph.diagnostics.append(f"manifest dependency {name}@{rng} not matched in lockfile")
    graph.direct = direct
    return graph

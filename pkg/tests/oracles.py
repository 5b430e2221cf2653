"""Independent package counters used as oracles for the real parsers.

Each function counts distinct (name, exact version) pairs with a plain
line scan over the lockfile text: no YAML or JSON parsing, no shared
code with depsmell.lockfile. They implement the same counting rules
(workspace entries excluded, duplicates merged, npm: aliases resolved
to the real name) by independent means, so agreement with the parsers
is meaningful.
"""

from __future__ import annotations

import re

_WORKSPACE = ("link:", "workspace:", "file:", "portal:")


def _descriptor_name(descriptor: str) -> tuple[str, str]:
    """(name, range) split at the first non-scope @."""
    start = 1 if descriptor.startswith("@") else 0
    cut = descriptor.find("@", start)
    if cut == -1:
        return descriptor, ""
    return descriptor[:cut], descriptor[cut + 1 :]


def count_yarn_packages(text: str) -> int:
    """Distinct packages in a yarn classic lockfile.

    A package starts at a column-zero header line ending with ':'. The
    name comes from the first comma-separated specifier (following npm:
    aliases to the real name), the version from the first indented
    `version "..."` line of the block.
    """
    pairs: set[tuple[str, str]] = set()
    name: str | None = None
    skip = False
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if not line.startswith((" ", "\t")):
            first = line.rstrip().rstrip(":").split(",")[0].strip().strip('"')
            name, rng = _descriptor_name(first)
            skip = rng.startswith(_WORKSPACE)
            if rng.startswith("npm:"):
                real, _ = _descriptor_name(rng[len("npm:") :])
                if real:
                    name = real
            continue
        match = re.match(r'^\s+version\s+"([^"]+)"\s*$', line)
        if match and name is not None and not skip:
            pairs.add((name, match.group(1)))
            name = None
    return len(pairs)


def count_pnpm_packages(text: str) -> int:
    """Distinct packages in a pnpm lockfile (v6 or v9 key shapes).

    Counts the two-space-indented keys of the `packages:` section,
    stripping the v6 leading slash and any peer suffix in parentheses.
    """
    pairs: set[tuple[str, str]] = set()
    in_packages = False
    for line in text.splitlines():
        if not line.strip():
            continue
        if not line.startswith(" "):
            in_packages = line.rstrip() == "packages:"
            continue
        if not in_packages:
            continue
        match = re.match(r"^  (\S.*?):\s*$", line)
        if not match:
            continue
        key = match.group(1).strip("'\"").lstrip("/")
        key = key.split("(", 1)[0]
        name, version = _descriptor_name(key)
        if name and version:
            pairs.add((name, version))
    return len(pairs)


def count_npm_packages(text: str) -> int:
    """Distinct packages in a package-lock v2/v3 `packages` map.

    Counts node_modules/* keys, taking the first `"version"` line inside
    the entry. Entries without a version line (workspace links) are not
    counted. Assumes the conventional npm layout where `version` is the
    first field of each entry, which holds for every fixture here.
    """
    pairs: set[tuple[str, str]] = set()
    pending: str | None = None
    for line in text.splitlines():
        key_match = re.match(r'^\s*"([^"]+)": \{', line)
        if key_match:
            key = key_match.group(1)
            if "node_modules/" in key:
                pending = key.rpartition("node_modules/")[2]
            else:
                pending = None
            continue
        version_match = re.match(r'^\s*"version": "([^"]+)"', line)
        if version_match and pending is not None:
            pairs.add((pending, version_match.group(1)))
            pending = None
    return len(pairs)


def naive_smell_counts(pond) -> tuple[dict[str, int], dict[str, int]]:
    """Per-smell (flagged, unknown) package counts from literal states.

    A deliberately plain restatement of the detection rules over raw
    state strings, sharing no code with depsmell.smells. Keys are the
    SmellKind values.
    """
    kinds = [
        "s1_no_source_url",
        "s1_source_url_404",
        "s2_inaccessible_tag",
        "s3_deprecated",
        "s4_fork",
        "s5_no_provenance",
    ]
    flagged = {kind: 0 for kind in kinds}
    unknown = {kind: 0 for kind in kinds}
    for entry in pond.entries.values():
        dep = entry.registry.deprecation.state
        prov = entry.registry.provenance.state
        if entry.repo is None:
            if entry.registry.fetch_failure:
                unknown["s1_no_source_url"] += 1
                unknown["s1_source_url_404"] += 1
            else:
                flagged["s1_no_source_url"] += 1
            access = fork = arch = tag = None
        else:
            access = entry.repo.accessibility.state
            fork = entry.repo.is_fork.state
            arch = entry.repo.is_archived.state
            tag = entry.repo.matched_tag.state
            if access == "not_found":
                flagged["s1_source_url_404"] += 1
            elif access == "unknown":
                unknown["s1_source_url_404"] += 1
        if access == "accessible":
            if tag == "no_tag_found":
                flagged["s2_inaccessible_tag"] += 1
            elif tag == "unknown":
                unknown["s2_inaccessible_tag"] += 1
            if fork == "fork":
                flagged["s4_fork"] += 1
            elif fork == "unknown":
                unknown["s4_fork"] += 1
        elif access == "unknown":
            unknown["s2_inaccessible_tag"] += 1
            unknown["s4_fork"] += 1
        if dep == "deprecated" or arch == "archived":
            flagged["s3_deprecated"] += 1
        elif dep == "unknown" or arch == "unknown":
            unknown["s3_deprecated"] += 1
        if prov == "no_attestation":
            flagged["s5_no_provenance"] += 1
        elif prov == "unknown":
            unknown["s5_no_provenance"] += 1
    return flagged, unknown

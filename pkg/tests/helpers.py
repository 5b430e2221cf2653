"""Builders for pond fixtures used across the test modules.

Entries built here always satisfy the pond invariants: repo status is
present exactly when the raw URL normalizes, and every sub-status behind
an inaccessible repo is Unknown.
"""

from __future__ import annotations

import random
from datetime import datetime, timezone

from depsmell.model import (
    ACCESSIBLE,
    ACTIVE,
    ARCHIVED,
    DEPRECATED,
    FORK,
    HAS_ATTESTATION,
    NOT_DEPRECATED,
    NOT_FORK,
    NOT_FOUND,
    NO_ATTESTATION,
    NO_TAG_FOUND,
    DirtyPond,
    PackageId,
    PackageManagerKind,
    PondEntry,
    RegistryMetadata,
    RepoStatus,
    SOURCE_LIVE,
    Status,
    TAG_FOUND,
    unknown,
)
from depsmell.pond import SCHEMA_VERSION
from depsmell.repoprobe import normalize_repo_url

FIXED_TIME = datetime(2026, 8, 14, 12, 0, 0, tzinfo=timezone.utc)


def fixed_clock() -> datetime:
    return FIXED_TIME


def make_entry(
    name: str,
    version: str,
    *,
    direct: bool = False,
    url: str | None = None,
    accessibility: Status | None = None,
    fork: Status | None = None,
    archived: Status | None = None,
    tag: Status | None = None,
    deprecation: Status | None = None,
    provenance: Status | None = None,
    fetch_failure: str | None = None,
    monorepo_directory: str | None = None,
    at: datetime = FIXED_TIME,
) -> PondEntry:
    """One pond entry with benign defaults and invariants enforced."""
    pkg = PackageId(name, version)
    registry = RegistryMetadata(
        id=pkg,
        repository_url_raw=url,
        deprecation=deprecation or Status(NOT_DEPRECATED),
        provenance=provenance or Status(HAS_ATTESTATION),
        fetched_at=at,
        source=SOURCE_LIVE,
        fetch_failure=fetch_failure,
    )
    normalized = normalize_repo_url(url)
    repo = None
    if normalized is not None:
        access = accessibility or Status(ACCESSIBLE)
        if access.state != ACCESSIBLE:
            repo = RepoStatus.gated(normalized, access, at)
        else:
            repo = RepoStatus(
                url=normalized,
                accessibility=access,
                is_fork=fork or Status(NOT_FORK),
                is_archived=archived or Status(ACTIVE),
                matched_tag=tag or Status(TAG_FOUND, f"v{version}"),
                probed_at=at,
            )
    return PondEntry(
        id=pkg,
        direct=direct,
        registry=registry,
        repo=repo,
        repository_url_raw=url,
        monorepo_directory=monorepo_directory,
    )


def make_pond(
    entries: list[PondEntry],
    *,
    project: str = "fixture",
    project_version: str = "0.0.0",
    manager: PackageManagerKind = PackageManagerKind.YARN_V1,
    at: datetime = FIXED_TIME,
) -> DirtyPond:
    return DirtyPond(
        schema_version=SCHEMA_VERSION,
        project=project,
        project_version=project_version,
        package_manager=manager,
        created_at=at,
        entries={entry.id: entry for entry in entries},
    )


def build_fixture10() -> DirtyPond:
    """The ten-entry pond with known counts (2, 1, 3, 2, 1, 10).

    No source URL: pkg-a, pkg-b. URL 404: pkg-c. No matching tag: pkg-d,
    pkg-e, pkg-f. Deprecated or archived: pkg-f, pkg-g. Fork: pkg-h.
    No provenance: all ten. pkg-a and pkg-d are direct.
    """
    url = "https://github.com/acme/{}"
    entries = [
        make_entry("pkg-a", "1.0.0", direct=True, provenance=Status(NO_ATTESTATION)),
        make_entry("pkg-b", "2.1.0", provenance=Status(NO_ATTESTATION)),
        make_entry(
            "pkg-c",
            "0.3.2",
            url=url.format("pkg-c"),
            accessibility=Status(NOT_FOUND, "http 404"),
            provenance=Status(NO_ATTESTATION),
        ),
        make_entry(
            "pkg-d",
            "1.2.3",
            direct=True,
            url=url.format("pkg-d"),
            tag=Status(NO_TAG_FOUND),
            provenance=Status(NO_ATTESTATION),
        ),
        make_entry(
            "pkg-e",
            "4.0.1",
            url=url.format("pkg-e"),
            tag=Status(NO_TAG_FOUND),
            provenance=Status(NO_ATTESTATION),
        ),
        make_entry(
            "pkg-f",
            "0.9.9",
            url=url.format("pkg-f"),
            tag=Status(NO_TAG_FOUND),
            deprecation=Status(DEPRECATED, "use pkg-g instead"),
            provenance=Status(NO_ATTESTATION),
        ),
        make_entry(
            "pkg-g",
            "2.0.0",
            url=url.format("pkg-g"),
            archived=Status(ARCHIVED),
            provenance=Status(NO_ATTESTATION),
        ),
        make_entry(
            "pkg-h",
            "3.3.0",
            url=url.format("pkg-h"),
            fork=Status(FORK, "https://github.com/upstream/pkg-h"),
            provenance=Status(NO_ATTESTATION),
        ),
        make_entry("pkg-i", "1.0.0", url=url.format("pkg-i"), provenance=Status(NO_ATTESTATION)),
        make_entry("pkg-j", "5.5.5", url=url.format("pkg-j"), provenance=Status(NO_ATTESTATION)),
    ]
    return make_pond(entries, project="fixture10", project_version="1.0.0")


def build_modeled_pond(
    project: str,
    project_version: str,
    *,
    total: int,
    no_url: int = 0,
    url_404: int = 0,
    no_tag: int = 0,
    deprecated: int = 0,
    forks: int = 0,
    without_provenance: int = 0,
) -> DirtyPond:
    """A pond shaped like a published measurement: exact counts per smell.

    The smelly segments are disjoint; provenance is independent of them
    (the first `without_provenance` packages lack attestations).
    """
    if no_url + url_404 + no_tag + deprecated + forks > total:
        raise ValueError("segments exceed total")
    entries = []
    for index in range(total):
        name = f"pkg-{index:04d}"
        version = "1.0.0"
        provenance = (
            Status(NO_ATTESTATION) if index < without_provenance else Status(HAS_ATTESTATION)
        )
        kwargs: dict = {"provenance": provenance}
        position = index
        if position < no_url:
            pass  # no URL at all
        elif position < no_url + url_404:
            kwargs.update(
                url=f"https://github.com/acme/{name}",
                accessibility=Status(NOT_FOUND, "http 404"),
            )
        elif position < no_url + url_404 + no_tag:
            kwargs.update(url=f"https://github.com/acme/{name}", tag=Status(NO_TAG_FOUND))
        elif position < no_url + url_404 + no_tag + deprecated:
            kwargs.update(
                url=f"https://github.com/acme/{name}",
                deprecation=Status(DEPRECATED, "no longer maintained"),
            )
        elif position < no_url + url_404 + no_tag + deprecated + forks:
            kwargs.update(
                url=f"https://github.com/acme/{name}",
                fork=Status(FORK, f"https://github.com/upstream/{name}"),
            )
        else:
            kwargs.update(url=f"https://github.com/acme/{name}")
        entries.append(make_entry(name, version, **kwargs))
    return make_pond(entries, project=project, project_version=project_version)


def random_pond(rng: random.Random, max_entries: int = 20) -> DirtyPond:
    """A structurally valid pond with arbitrary status combinations."""
    count = rng.randint(0, max_entries)
    entries = []
    for index in range(count):
        name = f"r-{index:03d}"
        version = f"{rng.randint(0, 9)}.{rng.randint(0, 9)}.{rng.randint(0, 9)}"
        deprecation = rng.choice(
            [Status(NOT_DEPRECATED), Status(DEPRECATED, "old"), unknown("registry oddity")]
        )
        provenance = rng.choice(
            [Status(HAS_ATTESTATION), Status(NO_ATTESTATION), unknown("endpoint flaked")]
        )
        fetch_failure = rng.choice([None, None, None, "registry timeout"])
        if fetch_failure is not None:
            entries.append(
                make_entry(
                    name,
                    version,
                    deprecation=unknown(fetch_failure),
                    provenance=unknown(fetch_failure),
                    fetch_failure=fetch_failure,
                )
            )
            continue
        shape = rng.randint(0, 3)
        if shape == 0:
            entries.append(
                make_entry(name, version, deprecation=deprecation, provenance=provenance)
            )
            continue
        url = f"https://github.com/acme/{name}"
        if shape == 1:
            accessibility = rng.choice(
                [Status(NOT_FOUND, "http 404"), unknown("http 503")]
            )
            entries.append(
                make_entry(
                    name,
                    version,
                    url=url,
                    accessibility=accessibility,
                    deprecation=deprecation,
                    provenance=provenance,
                )
            )
            continue
        entries.append(
            make_entry(
                name,
                version,
                url=url,
                direct=rng.random() < 0.3,
                fork=rng.choice([Status(NOT_FORK), Status(FORK, "https://github.com/u/p"), unknown("forge api down")]),
                archived=rng.choice([Status(ACTIVE), Status(ARCHIVED), unknown("forge api down")]),
                tag=rng.choice([Status(TAG_FOUND, f"v{version}"), Status(NO_TAG_FOUND), unknown("too many tags")]),
                deprecation=deprecation,
                provenance=provenance,
            )
        )
    return make_pond(entries, project="random", project_version="0.0.0")

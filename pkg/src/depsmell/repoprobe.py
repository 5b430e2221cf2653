"""Repository URL normalization and accessibility/tag/flag probing.

Normalization is a total function: any string in, canonical coordinates
or None out, never an exception. Probing is strictly gated: when the
repository page itself is not reachable, no further queries are made and
the fork/archive/tag statuses stay Unknown.

Tag listings come from the GitHub REST API for github.com hosts and from
the git smart-HTTP refs advertisement for every other forge, so S2 works
on self-hosted GitLab or Gitea instances too. Fork and archive flags are
GitHub-only; other forges report Unknown.
"""

from __future__ import annotations

import logging
import os
import re
import time
from datetime import datetime
from typing import Callable
from urllib.parse import urlsplit

import httpx

from . import net
from .errors import TransientFetchError
from .model import (
    ACCESSIBLE,
    ACTIVE,
    ARCHIVED,
    FORK,
    NOT_FORK,
    NOT_FOUND,
    NO_TAG_FOUND,
    TAG_FOUND,
    NormalizedRepoUrl,
    PackageId,
    RepoStatus,
    Status,
    unknown,
    utc_now,
)

__all__ = ["GITHUB_TOKEN_ENV", "RepoProber", "normalize_repo_url", "tag_candidates"]

logger = logging.getLogger(__name__)

GITHUB_TOKEN_ENV = "DW_GITHUB_TOKEN"
GITHUB_API_URL = "https://api.github.com"

# GitHub tag listing: 100 per page, give up past this many tags.
TAGS_PER_PAGE = 100
MAX_TAGS = 2000

_SHORTHAND_HOSTS = {
    "github:": "github.com",
    "gitlab:": "gitlab.com",
    "bitbucket:": "bitbucket.org",
}

# scp-style remote: git@host:owner/repo.git
_SCP_RE = re.compile(r"^(?:[A-Za-z0-9._-]+)@([A-Za-z0-9.-]+):(.+)$")

_HOST_OK_RE = re.compile(r"^[A-Za-z0-9]([A-Za-z0-9.-]*[A-Za-z0-9])?$")


def _from_host_path(host: str | None, path: str) -> NormalizedRepoUrl | None:
    if not host or not _HOST_OK_RE.match(host):
        return None
    path = path.split("#", 1)[0].split("?", 1)[0]
    segments = [s for s in path.split("/") if s]
    if len(segments) < 2:
        return None
    owner, repo = segments[0], segments[1]
    if repo.endswith(".git"):
        repo = repo[: -len(".git")]
    if not owner or not repo:
        return None
    return NormalizedRepoUrl(host.lower().rstrip("."), owner, repo)


def normalize_repo_url(raw: str | None) -> NormalizedRepoUrl | None:
    """Normalize whatever sits in a registry repository field.

    Accepts https/git/ssh URLs with optional git+ prefix, scp-style
    remotes, host shorthands (github:owner/repo) and bare owner/repo.
    Credentials, ports, .git suffixes, fragments and sub-paths beyond
    owner/repo are dropped. Returns None for anything unusable.
    """
    if raw is None:
        return None
    text = raw.strip()
    if not text or " " in text:
        return None
    for prefix, host in _SHORTHAND_HOSTS.items():
        if text.startswith(prefix):
            return _from_host_path(host, text[len(prefix) :])
    if text.startswith("git+"):
        text = text[len("git+") :]
    if "://" in text:
        try:
            parts = urlsplit(text)
        except ValueError:
            return None
        return _from_host_path(parts.hostname, parts.path)
    scp = _SCP_RE.match(text)
    if scp and "/" in scp.group(2):
        return _from_host_path(scp.group(1), scp.group(2))
    segments = [s for s in text.split("/") if s]
    if len(segments) == 2 and "." not in segments[0] and ":" not in segments[0]:
        # Bare owner/repo shorthand is GitHub by npm convention.
        return _from_host_path("github.com", text)
    if segments and "." in segments[0] and ":" not in segments[0]:
        # Looks like a schemeless URL: host/owner/repo.
        return _from_host_path(segments[0], "/".join(segments[1:]))
    return None


def tag_candidates(pkg: PackageId) -> list[str]:
    """Tag names that would mark this package's release, best first."""
    name, version, short = pkg.name, pkg.version, pkg.unscoped_name
    raw = [
        f"v{version}",
        version,
        f"{name}@{version}",
        f"{short}@{version}",
        f"{name}-v{version}",
        f"{short}-v{version}",
        f"{name}/v{version}",
    ]
    seen: set[str] = set()
    out: list[str] = []
    for cand in raw:
        if cand not in seen:
            seen.add(cand)
            out.append(cand)
    return out


def _parse_refs_advertisement(body: bytes) -> list[str]:
    """Pull tag names out of a git-upload-pack refs advertisement.

    The body is a sequence of pkt-lines: 4 hex digits of total length,
    then the payload `<sha> <refname>`. The first ref line carries a
    NUL-separated capability list and peeled tags repeat with a ^{}
    suffix; both are stripped.
    """
    tags: list[str] = []
    seen: set[str] = set()
    offset = 0
    while offset + 4 <= len(body):
        header = body[offset : offset + 4]
        try:
            length = int(header, 16)
        except ValueError as exc:
            raise TransientFetchError(f"malformed pkt-line header {header!r}") from exc
        if length == 0:
            offset += 4
            continue
        if length < 4 or offset + length > len(body):
            raise TransientFetchError("truncated pkt-line")
        payload = body[offset + 4 : offset + length]
        offset += length
        payload = payload.split(b"\0", 1)[0].strip()
        if payload.startswith(b"#"):
            continue
        parts = payload.split(b" ", 1)
        if len(parts) != 2:
            continue
        ref = parts[1]
        if not ref.startswith(b"refs/tags/"):
            continue
        name = ref[len(b"refs/tags/") :]
        if name.endswith(b"^{}"):
            name = name[: -len(b"^{}")]
        decoded = name.decode("utf-8", errors="replace")
        if decoded not in seen:
            seen.add(decoded)
            tags.append(decoded)
    return tags


class _TagListTruncated(Exception):
    """Internal: the repository has more tags than we are willing to page."""


class RepoProber:
    """Probes repositories over HTTP with shared per-host rate limiting.

    All knobs are injectable for tests: transport, clock, sleep. A GitHub
    token is read from DW_GITHUB_TOKEN unless given explicitly.
    """

    def __init__(
        self,
        *,
        token: str | None = None,
        throttle: net.HostThrottle | None = None,
        clock: Callable[[], datetime] = utc_now,
        transport: httpx.BaseTransport | None = None,
        timeout: float = 10.0,
        max_retries: int = net.DEFAULT_MAX_RETRIES,
        backoff_base: float = net.DEFAULT_BACKOFF_BASE,
        sleep_fn: Callable[[float], None] | None = None,
        max_tags: int = MAX_TAGS,
    ):
        self._clock = clock
        self._throttle = throttle if throttle is not None else net.HostThrottle()
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._sleep = sleep_fn if sleep_fn is not None else time.sleep
        self._max_tags = max_tags
        headers = {"User-Agent": "depsmell/0.1"}
        self._web = httpx.Client(
            follow_redirects=False, timeout=timeout, headers=headers, transport=transport
        )
        api_headers = dict(headers)
        api_headers["Accept"] = "application/vnd.github+json"
        token = token if token is not None else os.environ.get(GITHUB_TOKEN_ENV)
        if token:
            api_headers["Authorization"] = f"Bearer {token}"
        self._api = httpx.Client(
            base_url=GITHUB_API_URL, timeout=timeout, headers=api_headers, transport=transport
        )

    def close(self) -> None:
        self._web.close()
        self._api.close()

    def __enter__(self) -> "RepoProber":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _get(self, client: httpx.Client, url: str, host: str) -> httpx.Response:
        return net.retrying_get(
            client,
            url,
            throttle=self._throttle,
            host=host,
            max_retries=self._max_retries,
            backoff_base=self._backoff_base,
            sleep_fn=self._sleep,
        )

    def probe_accessibility(self, url: NormalizedRepoUrl) -> Status:
        """GET the repository page; redirects count as accessible."""
        try:
            response = self._get(self._web, url.canonical_https, url.host)
        except TransientFetchError as exc:
            return unknown(str(exc))
        code = response.status_code
        if 200 <= code < 400:
            return Status(ACCESSIBLE)
        if code in (404, 410):
            return Status(NOT_FOUND, f"http {code}")
        return unknown(f"http {code}")

    def find_release_tag(self, url: NormalizedRepoUrl, pkg: PackageId) -> Status:
        """Match the package version against the repository's tags."""
        try:
            tags = self._list_tags(url)
        except _TagListTruncated:
            return unknown(f"more than {self._max_tags} tags; listing truncated")
        except TransientFetchError as exc:
            return unknown(str(exc))
        if tags is None:
            return unknown("tag listing unavailable")
        tag_set = set(tags)
        for candidate in tag_candidates(pkg):
            if candidate in tag_set:
                return Status(TAG_FOUND, candidate)
        return Status(NO_TAG_FOUND)

    def _list_tags(self, url: NormalizedRepoUrl) -> list[str] | None:
        if url.host == "github.com":
            return self._list_tags_github(url)
        return self._list_tags_git_http(url)

    def _list_tags_github(self, url: NormalizedRepoUrl) -> list[str] | None:
        tags: list[str] = []
        page = 1
        while True:
            response = self._get(
                self._api,
                f"/repos/{url.owner}/{url.repo}/tags?per_page={TAGS_PER_PAGE}&page={page}",
                "api.github.com",
            )
            if response.status_code == 403:
                raise TransientFetchError("github api rate limited")
            if response.status_code != 200:
                logger.debug("tags api gave %d for %s", response.status_code, url)
                return None
            batch = response.json()
            if not isinstance(batch, list):
                return None
            tags.extend(str(item.get("name", "")) for item in batch if isinstance(item, dict))
            if len(tags) > self._max_tags:
                raise _TagListTruncated()
            if len(batch) < TAGS_PER_PAGE:
                return tags
            page += 1

    def _list_tags_git_http(self, url: NormalizedRepoUrl) -> list[str] | None:
        refs_url = f"{url.canonical_https}.git/info/refs?service=git-upload-pack"
        response = self._get(self._web, refs_url, url.host)
        if response.status_code != 200:
            logger.debug("refs advertisement gave %d for %s", response.status_code, url)
            return None
        tags = _parse_refs_advertisement(response.content)
        if len(tags) > self._max_tags:
            raise _TagListTruncated()
        return tags

    def fetch_repo_flags(self, url: NormalizedRepoUrl) -> tuple[Status, Status]:
        """Look up (fork, archived) flags; GitHub API only."""
        if url.host != "github.com":
            blocked = unknown("unsupported forge")
            return blocked, blocked
        try:
            response = self._get(self._api, f"/repos/{url.owner}/{url.repo}", "api.github.com")
        except TransientFetchError as exc:
            failed = unknown(str(exc))
            return failed, failed
        if response.status_code == 403:
            limited = unknown("github api rate limited")
            return limited, limited
        if response.status_code != 200:
            missing = unknown(f"github api http {response.status_code}")
            return missing, missing
        doc = response.json()
        if not isinstance(doc, dict):
            bad = unknown("github api gave a non-object body")
            return bad, bad
        if doc.get("fork"):
            fork = Status(FORK, _parent_url(doc.get("parent")))
        else:
            fork = Status(NOT_FORK)
        archived = Status(ARCHIVED) if doc.get("archived") else Status(ACTIVE)
        return fork, archived

    def probe(self, url: NormalizedRepoUrl, pkg: PackageId) -> RepoStatus:
        """Full probe for one package's repository, gating included."""
        accessibility = self.probe_accessibility(url)
        if accessibility.state != ACCESSIBLE:
            return RepoStatus.gated(url, accessibility, self._clock())
        matched_tag = self.find_release_tag(url, pkg)
        is_fork, is_archived = self.fetch_repo_flags(url)
        return RepoStatus(url, accessibility, is_fork, is_archived, matched_tag, self._clock())


def _parent_url(parent: object) -> str:
    """Canonical URL of a fork's parent, tolerant of API shape drift."""
    if isinstance(parent, str) and parent:
        normalized = normalize_repo_url(parent)
        if normalized is not None:
            return normalized.canonical_https
        return f"https://github.com/{parent}"
    if isinstance(parent, dict):
        full_name = parent.get("full_name")
        if full_name:
            return f"https://github.com/{full_name}"
        html = parent.get("html_url")
        if html:
            return str(html)
    return ""

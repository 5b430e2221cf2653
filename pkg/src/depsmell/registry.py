"""NPM registry client: repository URL, deprecation and provenance.

One package costs at most two requests: the package document and the
attestations endpoint. A 404 on the package document is a definite
answer (PackageNotFound); a transport failure after retries is not, and
yields metadata with every status Unknown plus a fetch_failure reason so
that no smell is ever derived from our own inability to ask.

Provenance is presence-only: the attestations endpoint either lists at
least one attestation or answers 404. Nothing is verified
cryptographically.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from datetime import datetime
from typing import Callable

import httpx

from . import net
from .errors import PackageNotFound, TransientFetchError
from .model import (
    DEPRECATED,
    HAS_ATTESTATION,
    NOT_DEPRECATED,
    NO_ATTESTATION,
    PackageId,
    RegistryMetadata,
    SOURCE_LIVE,
    Status,
    unknown,
    utc_now,
)

__all__ = ["DEFAULT_REGISTRY_URL", "RegistryClient", "RegistryFetch"]

logger = logging.getLogger(__name__)

DEFAULT_REGISTRY_URL = "https://registry.npmjs.org"


@dataclass(frozen=True)
class RegistryFetch:
    """fetch_metadata result: the metadata plus the monorepo sub-directory

    the repository field pointed at, when it declared one.
    """

    metadata: RegistryMetadata
    monorepo_directory: str | None = None


class RegistryClient:
    """Talks to one NPM-compatible registry with rate limiting and retries."""

    def __init__(
        self,
        base_url: str = DEFAULT_REGISTRY_URL,
        *,
        throttle: net.HostThrottle | None = None,
        clock: Callable[[], datetime] = utc_now,
        transport: httpx.BaseTransport | None = None,
        timeout: float = 10.0,
        max_retries: int = net.DEFAULT_MAX_RETRIES,
        backoff_base: float = net.DEFAULT_BACKOFF_BASE,
        sleep_fn: Callable[[float], None] | None = None,
    ):
        self._base_url = base_url.rstrip("/")
        self._host = httpx.URL(self._base_url).host or ""
        self._clock = clock
        self._throttle = throttle if throttle is not None else net.HostThrottle()
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._sleep = sleep_fn if sleep_fn is not None else time.sleep
        self._client = httpx.Client(
            base_url=self._base_url,
            timeout=timeout,
            headers={"User-Agent": "depsmell/0.1", "Accept": "application/json"},
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RegistryClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _get(self, path: str) -> httpx.Response:
        return net.retrying_get(
            self._client,
            path,
            throttle=self._throttle,
            host=self._host,
            max_retries=self._max_retries,
            backoff_base=self._backoff_base,
            sleep_fn=self._sleep,
        )

    def fetch_metadata(self, pkg: PackageId) -> RegistryFetch:
        """Fetch the package document and the attestation presence.

        Raises PackageNotFound on a definite 404. On transport failure
        returns Unknown-everything metadata with fetch_failure set.
        """
        try:
            response = self._get(f"/{pkg.name}")
        except TransientFetchError as exc:
            reason = str(exc)
            return RegistryFetch(
                RegistryMetadata(
                    id=pkg,
                    repository_url_raw=None,
                    deprecation=unknown(reason),
                    provenance=unknown(reason),
                    fetched_at=self._clock(),
                    source=SOURCE_LIVE,
                    fetch_failure=reason,
                )
            )
        if response.status_code == 404:
            raise PackageNotFound(pkg.spec())
        if response.status_code != 200:
            reason = f"registry gave http {response.status_code}"
            return RegistryFetch(
                RegistryMetadata(
                    id=pkg,
                    repository_url_raw=None,
                    deprecation=unknown(reason),
                    provenance=unknown(reason),
                    fetched_at=self._clock(),
                    source=SOURCE_LIVE,
                    fetch_failure=reason,
                )
            )
        doc = response.json()
        if not isinstance(doc, dict):
            doc = {}
        url_raw, directory = _repository_from_doc(doc, pkg.version)
        metadata = RegistryMetadata(
            id=pkg,
            repository_url_raw=url_raw,
            deprecation=_deprecation_from_doc(doc, pkg.version),
            provenance=self.check_provenance(pkg),
            fetched_at=self._clock(),
            source=SOURCE_LIVE,
        )
        return RegistryFetch(metadata, directory)

    def check_provenance(self, pkg: PackageId) -> Status:
        """Ask the attestations endpoint whether this version has any."""
        try:
            response = self._get(f"/-/npm/v1/attestations/{pkg.spec()}")
        except TransientFetchError as exc:
            return unknown(str(exc))
        if response.status_code == 404:
            return Status(NO_ATTESTATION)
        if response.status_code != 200:
            return unknown(f"attestations endpoint gave http {response.status_code}")
        try:
            body = response.json()
        except ValueError:
            return unknown("attestations endpoint gave a non-JSON body")
        attestations = body.get("attestations") if isinstance(body, dict) else None
        count = len(attestations) if isinstance(attestations, list) else 0
        if count:
            return Status(HAS_ATTESTATION, f"{count} attestation(s)")
        return Status(NO_ATTESTATION)


def _repository_from_doc(doc: dict, version: str) -> tuple[str | None, str | None]:
    """(repository url, monorepo directory) with version-level precedence."""
    versions = doc.get("versions")
    version_doc = versions.get(version) if isinstance(versions, dict) else None
    field = None
    if isinstance(version_doc, dict):
        field = version_doc.get("repository")
    if field is None:
        field = doc.get("repository")
    if isinstance(field, str):
        return (field or None), None
    if isinstance(field, dict):
        url = field.get("url")
        directory = field.get("directory")
        return (str(url) if url else None), (str(directory) if directory else None)
    return None, None


def _deprecation_from_doc(doc: dict, version: str) -> Status:
    """Deprecation for one version, falling back to package-level marks.

    The registry stores deprecation as a string message (possibly empty)
    on the version document; a handful of packages carry a package-level
    field instead, which deprecates every version.
    """
    versions = doc.get("versions")
    version_doc = versions.get(version) if isinstance(versions, dict) else None
    package_level = doc.get("deprecated")
    if not isinstance(version_doc, dict):
        if isinstance(package_level, str) and package_level:
            return Status(DEPRECATED, package_level)
        if package_level is True:
            return Status(DEPRECATED)
        return unknown(f"version {version} not in the registry document")
    mark = version_doc.get("deprecated")
    if isinstance(mark, str):
        # An empty string is how npm records explicit un-deprecation.
        return Status(DEPRECATED, mark) if mark else Status(NOT_DEPRECATED)
    if mark is True:
        return Status(DEPRECATED)
    if isinstance(package_level, str) and package_level:
        return Status(DEPRECATED, package_level)
    if package_level is True:
        return Status(DEPRECATED)
    return Status(NOT_DEPRECATED)

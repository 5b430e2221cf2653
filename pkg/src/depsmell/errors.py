"""Exception hierarchy for the analysis pipeline.

Every error the library raises on purpose derives from DepsmellError so
callers can catch one type at the CLI boundary.
"""

from __future__ import annotations


class DepsmellError(Exception):
    """Base class for all errors raised by this package."""


class NoLockfileFound(DepsmellError):
    """No supported lockfile exists in the project directory."""


class MalformedLockfile(DepsmellError):
    """The lockfile exists but violates its own format."""

    def __init__(self, reason: str, line: int | None = None):
        self.line = line
        if line is not None:
            reason = f"line {line}: {reason}"
        super().__init__(reason)


class UnsupportedLockfileVersion(DepsmellError):
    """The lockfile declares a format version this tool does not read."""


class MalformedManifest(DepsmellError):
    """package.json is not valid JSON or has a malformed dependency section."""


class PackageNotFound(DepsmellError):
    """The registry answered 404 for a package document."""

    def __init__(self, spec: str):
        self.spec = spec
        super().__init__(f"package not found in registry: {spec}")


class TransientFetchError(DepsmellError):
    """A network operation failed after exhausting retries.

    Callers map this to Unknown statuses; it must never surface as a smell.
    """


class MalformedPond(DepsmellError):
    """A pond file is unreadable or violates the pond schema."""


class SchemaVersionMismatch(DepsmellError):
    """A pond file declares a schema version this tool does not read."""


class CacheMiss(DepsmellError):
    """A replay fetcher was asked about a package the pond does not hold."""

    def __init__(self, spec: str):
        self.spec = spec
        super().__init__(f"not in pond: {spec}")

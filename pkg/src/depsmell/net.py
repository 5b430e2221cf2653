"""Shared HTTP plumbing: per-host token buckets and a retrying GET.

All waiting goes through injectable time/sleep functions so tests run
without real delays.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable

import httpx

from .errors import TransientFetchError

logger = logging.getLogger(__name__)

DEFAULT_RATE_PER_SEC = 8.0
DEFAULT_MAX_RETRIES = 3
DEFAULT_BACKOFF_BASE = 0.5

# Response codes that are worth retrying; everything else is final.
RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class TokenBucket:
    """Thread-safe token bucket: sustained `rate` requests per second.

    Capacity defaults to the rate, i.e. at most one second of burst.
    """

    def __init__(
        self,
        rate: float,
        capacity: float | None = None,
        *,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self._rate = rate
        self._capacity = capacity if capacity is not None else max(rate, 1.0)
        self._tokens = self._capacity
        self._time = time_fn
        self._sleep = sleep_fn
        self._last = time_fn()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        """Block until one token is available, then consume it."""
        while True:
            with self._lock:
                now = self._time()
                self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            # Sleep outside the lock so other threads can refill/consume.
            self._sleep(wait)


class HostThrottle:
    """One lazily created token bucket per host, shared across threads."""

    def __init__(
        self,
        rate: float = DEFAULT_RATE_PER_SEC,
        *,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        self._rate = rate
        self._time = time_fn
        self._sleep = sleep_fn
        self._buckets: dict[str, TokenBucket] = {}
        self._lock = threading.Lock()

    def acquire(self, host: str) -> None:
        with self._lock:
            bucket = self._buckets.get(host)
            if bucket is None:
                bucket = TokenBucket(self._rate, time_fn=self._time, sleep_fn=self._sleep)
                self._buckets[host] = bucket
        bucket.acquire()


def retrying_get(
    client: httpx.Client,
    url: str,
    *,
    throttle: HostThrottle | None = None,
    host: str | None = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    sleep_fn: Callable[[float], None] = time.sleep,
    headers: dict[str, str] | None = None,
) -> httpx.Response:
    """GET with rate limiting and exponential backoff on transport errors.

    Retries connection failures, timeouts and RETRYABLE_STATUSES up to
    max_retries times (doubling the delay each time), then raises
    TransientFetchError. Any other status code is returned to the caller
    for interpretation; this function never raises on a final status.
    """
    last_reason = "unreachable"
    for attempt in range(max_retries + 1):
        if attempt:
            delay = backoff_base * (2 ** (attempt - 1))
            sleep_fn(delay)
        if throttle is not None:
            throttle.acquire(host or httpx.URL(url).host or "")
        try:
            response = client.get(url, headers=headers)
        except httpx.HTTPError as exc:
            last_reason = f"{type(exc).__name__}: {exc}"
            logger.debug("GET %s failed (attempt %d): %s", url, attempt + 1, last_reason)
            continue
        if response.status_code in RETRYABLE_STATUSES:
            last_reason = f"http {response.status_code}"
            logger.debug("GET %s got %s (attempt %d)", url, last_reason, attempt + 1)
            continue
        return response
    raise TransientFetchError(f"GET {url} failed after {max_retries + 1} attempts: {last_reason}")

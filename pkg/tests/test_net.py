"""Token bucket, per-host throttle and retrying GET behavior."""

from __future__ import annotations

import httpx
import pytest

from depsmell.errors import TransientFetchError
from depsmell.net import HostThrottle, TokenBucket, retrying_get


class FakeTime:
    """Monotonic clock that only advances when something sleeps on it."""

    def __init__(self):
        self.now = 0.0
        self.slept: list[float] = []

    def time(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.slept.append(seconds)
        self.now += seconds


class TestTokenBucket:
    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            TokenBucket(0)

    def test_burst_up_to_capacity_is_free(self):
        ft = FakeTime()
        bucket = TokenBucket(2.0, capacity=2.0, time_fn=ft.time, sleep_fn=ft.sleep)
        bucket.acquire()
        bucket.acquire()
        assert ft.slept == []

    def test_drained_bucket_waits_for_refill(self):
        ft = FakeTime()
        bucket = TokenBucket(2.0, capacity=2.0, time_fn=ft.time, sleep_fn=ft.sleep)
        for _ in range(3):
            bucket.acquire()
        # Third token at 2/s means half a second of waiting.
        assert ft.now == pytest.approx(0.5)

    def test_sustained_rate(self):
        ft = FakeTime()
        bucket = TokenBucket(4.0, capacity=1.0, time_fn=ft.time, sleep_fn=ft.sleep)
        for _ in range(9):
            bucket.acquire()
        assert ft.now == pytest.approx(2.0)

    def test_idle_time_refills(self):
        ft = FakeTime()
        bucket = TokenBucket(1.0, capacity=1.0, time_fn=ft.time, sleep_fn=ft.sleep)
        bucket.acquire()
        ft.now += 10.0
        bucket.acquire()
        assert ft.slept == []


class TestHostThrottle:
    def test_hosts_do_not_share_budget(self):
        ft = FakeTime()
        throttle = HostThrottle(1.0, time_fn=ft.time, sleep_fn=ft.sleep)
        throttle.acquire("a.example")
        throttle.acquire("b.example")
        assert ft.slept == []
        throttle.acquire("a.example")
        assert len(ft.slept) == 1


def make_client(handler) -> httpx.Client:
    return httpx.Client(base_url="https://reg.test", transport=httpx.MockTransport(handler))


class TestRetryingGet:
    def test_final_status_is_returned_not_raised(self):
        client = make_client(lambda request: httpx.Response(404))
        response = retrying_get(client, "/x", sleep_fn=lambda _: None)
        assert response.status_code == 404

    def test_retryable_status_then_success(self):
        codes = iter([503, 200])
        client = make_client(lambda request: httpx.Response(next(codes)))
        response = retrying_get(client, "/x", sleep_fn=lambda _: None)
        assert response.status_code == 200

    def test_backoff_doubles(self):
        sleeps: list[float] = []
        client = make_client(lambda request: httpx.Response(429))
        with pytest.raises(TransientFetchError):
            retrying_get(client, "/x", max_retries=3, backoff_base=0.5, sleep_fn=sleeps.append)
        assert sleeps == [0.5, 1.0, 2.0]

    def test_transport_error_exhausts_to_transient(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            raise httpx.ConnectError("refused")

        client = make_client(handler)
        with pytest.raises(TransientFetchError) as exc:
            retrying_get(client, "/x", max_retries=2, sleep_fn=lambda _: None)
        assert len(attempts) == 3
        assert "refused" in str(exc.value)

    def test_zero_retries_means_single_attempt(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            return httpx.Response(500)

        client = make_client(handler)
        with pytest.raises(TransientFetchError):
            retrying_get(client, "/x", max_retries=0, sleep_fn=lambda _: None)
        assert len(attempts) == 1

    def test_throttle_is_consulted_per_attempt(self):
        acquired = []

        class SpyThrottle:
            def acquire(self, host):
                acquired.append(host)

        codes = iter([502, 200])
        client = make_client(lambda request: httpx.Response(next(codes)))
        retrying_get(
            client,
            "/x",
            throttle=SpyThrottle(),
            host="reg.test",
            sleep_fn=lambda _: None,
        )
        assert acquired == ["reg.test", "reg.test"]

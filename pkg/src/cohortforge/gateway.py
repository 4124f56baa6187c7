"""Text-generation client with retries, rate limiting and bounded concurrency.

A backend is any object with a ``backend_id`` attribute and a
``complete(request) -> str`` method that raises:

* ``TransientBackendError`` for retryable failures (timeouts, 408/429/5xx);
* ``AuthenticationError`` for rejected credentials (never retried);
* ``ProtocolError`` for responses it cannot interpret (never retried).

``Gateway.generate`` wraps a backend with exponential backoff and full jitter;
``Gateway.generate_batch`` runs many requests on a thread pool and returns
results in request order, with failures isolated to their own slot.
"""

from __future__ import annotations

import os
import random
import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .errors import (
    AuthenticationError,
    BackendError,
    ConfigError,
    PreconditionError,
    ProtocolError,
    TransientBackendError,
    TransportError,
)
from .mock import MockBackend, mock_generate
from .prompts import PromptBundle

__all__ = [
    "GenerationRequest",
    "GenerationResult",
    "Gateway",
    "HttpBackend",
    "MockBackend",
    "RateLimiter",
    "backoff_delay",
    "make_backend",
    "mock_generate",
]

ENV_ENDPOINT = "COHORTFORGE_LLM_ENDPOINT"
ENV_MODEL = "COHORTFORGE_LLM_MODEL"
ENV_API_KEY = "COHORTFORGE_LLM_API_KEY"


@dataclass(frozen=True)
class GenerationRequest:
    bundle: PromptBundle
    request_id: str
    temperature: float = 0.7
    max_output_tokens: int = 1500

    def __post_init__(self):
        if not self.temperature >= 0:
            raise PreconditionError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise PreconditionError("max_output_tokens must be positive")


@dataclass(frozen=True)
class GenerationResult:
    request_id: str
    text: str | None
    backend_id: str
    latency: float
    attempt_count: int
    error: BaseException | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def backoff_delay(attempt: int, base: float, cap: float) -> float:
    """Pre-jitter delay after failed attempt ``attempt`` (0-based)."""
    return min(cap, base * (2.0 ** attempt))


class RateLimiter:
    """Token bucket: at most ``rate`` acquisitions per second, bursts of ``burst``."""

    def __init__(self, rate: float, burst: int = 1, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0 or burst < 1:
            raise PreconditionError("rate must be positive and burst at least 1")
        self.rate = rate
        self.burst = burst
        self._clock = clock
        self._sleep = sleep
        self._tokens = float(burst)
        self._stamp = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.burst, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class Gateway:
    def __init__(
        self,
        backend,
        *,
        max_retries: int = 3,
        base_delay: float = 0.5,
        max_delay: float = 30.0,
        concurrency: int = 4,
        rate_limiter: RateLimiter | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        if max_retries < 0:
            raise PreconditionError("max_retries must be >= 0")
        if concurrency < 1:
            raise PreconditionError("concurrency must be >= 1")
        self.backend = backend
        self.max_retries = max_retries
        self.base_delay = base_delay
        self.max_delay = max_delay
        self.concurrency = concurrency
        self.rate_limiter = rate_limiter
        self._sleep = sleep
        # jitter only; never affects generated content
        self._rng = rng or random.Random()
        self._rng_lock = threading.Lock()

    @property
    def backend_id(self) -> str:
        return self.backend.backend_id

    def _jittered(self, attempt: int, retry_after: float | None) -> float:
        with self._rng_lock:
            delay = self._rng.uniform(0.0, backoff_delay(attempt, self.base_delay, self.max_delay))
        if retry_after is not None:
            delay = max(delay, min(retry_after, self.max_delay))
        return delay

    def generate(self, req: GenerationRequest) -> GenerationResult:
        start = time.perf_counter()
        last: BaseException | None = None
        for attempt in range(self.max_retries + 1):
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            try:
                text = self.backend.complete(req)
            except TransientBackendError as exc:
                last = exc
                if attempt < self.max_retries:
                    self._sleep(self._jittered(attempt, exc.retry_after))
                continue
            except BackendError as exc:
                exc.attempt_count = attempt + 1
                raise
            if not isinstance(text, str) or not text.strip():
                exc = ProtocolError(f"{req.request_id}: backend returned empty text")
                exc.attempt_count = attempt + 1
                raise exc
            return GenerationResult(
                req.request_id, text, self.backend_id, time.perf_counter() - start, attempt + 1
            )
        err = TransportError(f"{req.request_id}: gave up after {self.max_retries + 1} attempts: {last}")
        err.attempt_count = self.max_retries + 1
        raise err from last

    def generate_batch(
        self, reqs: Sequence[GenerationRequest], concurrency_limit: int | None = None
    ) -> list[GenerationResult]:
        limit = self.concurrency if concurrency_limit is None else concurrency_limit
        if limit < 1:
            raise PreconditionError("concurrency_limit must be >= 1")
        ids = [r.request_id for r in reqs]
        if len(set(ids)) != len(ids):
            raise PreconditionError("request ids must be unique within a batch")

        def run(req: GenerationRequest) -> GenerationResult:
            start = time.perf_counter()
            try:
                return self.generate(req)
            except Exception as exc:  # isolate per-slot failures
                return GenerationResult(
                    req.request_id, None, self.backend_id, time.perf_counter() - start,
                    getattr(exc, "attempt_count", 1), exc,
                )

        if limit == 1 or len(reqs) <= 1:
            return [run(r) for r in reqs]
        with ThreadPoolExecutor(max_workers=limit) as pool:
            return list(pool.map(run, reqs))


class HttpBackend:
    """OpenAI-style chat-completions endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        *,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        if not endpoint:
            raise ConfigError(f"no endpoint configured (set {ENV_ENDPOINT})")
        if not model:
            raise ConfigError(f"no model configured (set {ENV_MODEL})")
        self.endpoint = endpoint
        self.model = model
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self.backend_id = f"http:{model}"

    @classmethod
    def from_env(cls, environ=None, **kwargs) -> HttpBackend:
        env = os.environ if environ is None else environ
        return cls(env.get(ENV_ENDPOINT, ""), env.get(ENV_MODEL, ""), env.get(ENV_API_KEY), **kwargs)

    def close(self) -> None:
        self._client.close()

    def complete(self, request: GenerationRequest) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.bundle.system_text},
                {"role": "user", "content": request.bundle.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = self._client.post(self.endpoint, json=body)
        except httpx.TimeoutException as exc:
            raise TransientBackendError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransientBackendError(f"connection failed: {exc}") from exc

        status = resp.status_code
        if status in (401, 403):
            raise AuthenticationError(f"endpoint rejected credentials (HTTP {status})")
        if status in (408, 429) or status >= 500:
            raise TransientBackendError(f"HTTP {status}", _retry_after(resp))
        if status >= 400:
            raise ProtocolError(f"HTTP {status}: {resp.text[:200]}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"unexpected response body: {resp.text[:200]}") from exc
        if not isinstance(text, str):
            raise ProtocolError("completion content is not text")
        return text


def _retry_after(resp: httpx.Response) -> float | None:
    value = resp.headers.get("Retry-After")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


def make_backend(name: str, lexicon=None):
    if name == "mock":
        return MockBackend(lexicon)
    if name == "http":
        return HttpBackend.from_env()
    raise ConfigError(f"unknown backend {name!r} (expected 'http' or 'mock')")

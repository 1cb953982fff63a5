"""Single chokepoint for chat-completion calls.

Every LLM interaction in the pipeline goes through Gateway.complete, which
gives one place for record/replay caching, bounded retries, rate limiting,
and content-filter classification. With mode REPLAY_ONLY the whole
pipeline runs bit-deterministically with zero network access.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .util import atomic_write_text, stable_json


class RequestTag(Enum):
    NUGGET_CREATE = "nugget_create"
    NUGGET_IMPORTANCE = "nugget_importance"
    NUGGET_ASSIGN = "nugget_assign"
    QUERY_CLASSIFY = "query_classify"
    JUDGE = "judge"


class OutcomeStatus(Enum):
    OK = "ok"
    CONTENT_FILTERED = "content_filtered"
    FORMAT_ERROR = "format_error"
    TRANSPORT_ERROR = "transport_error"


class GatewayMode(Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY_ONLY = "replay-only"


@dataclass(frozen=True)
class LlmRequest:
    model_id: str
    messages: tuple[tuple[str, str], ...]  # (role, content), in order
    temperature: float = 0.0
    max_output_tokens: int = 2048
    request_tag: RequestTag = RequestTag.NUGGET_CREATE

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be nonempty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def with_repair_turn(self, previous_output: str, reminder: str) -> "LlmRequest":
        """Extend the conversation with the bad output and a format reminder."""
        return LlmRequest(
            model_id=self.model_id,
            messages=self.messages + (("assistant", previous_output), ("user", reminder)),
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            request_tag=self.request_tag,
        )


@dataclass(frozen=True)
class LlmOutcome:
    status: OutcomeStatus
    text: str
    cache_hit: bool
    latency: float


def cache_key(request: LlmRequest) -> str:
    """Stable digest of the fields that determine the completion.

    Message content is kept verbatim (whitespace included); the tag is
    bookkeeping and deliberately excluded.
    """
    canonical = stable_json(
        {
            "model_id": request.model_id,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
        }
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class CacheMissError(Exception):
    def __init__(self, key: str):
        super().__init__(f"replay-only cache miss for key {key}")
        self.key = key


class ReplayCache:
    """Content-addressed transcript store: one human-readable JSON file per key."""

    def __init__(self, cache_dir: Path | str):
        self.cache_dir = Path(cache_dir)
        self.hits = 0
        self.misses = 0
        self.writes = 0
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            with self._lock:
                self.misses += 1
            return None
        with open(path, "r", encoding="utf-8") as fh:
            entry = json.load(fh)
        with self._lock:
            self.hits += 1
        return entry

    def put(self, key: str, request: LlmRequest, status: OutcomeStatus, text: str) -> None:
        entry = {
            "key": key,
            "status": status.value,
            "text": text,
            "request": {
                "model_id": request.model_id,
                "messages": [{"role": r, "content": c} for r, c in request.messages],
                "temperature": request.temperature,
                "max_output_tokens": request.max_output_tokens,
                "request_tag": request.request_tag.value,
            },
        }
        atomic_write_text(self._path(key), stable_json(entry))
        with self._lock:
            self.writes += 1

    def stats(self) -> dict:
        with self._lock:
            return {"hits": self.hits, "misses": self.misses, "writes": self.writes}


class TransientTransportError(Exception):
    """Retryable failure: timeouts, connection trouble, 429, 5xx."""


# A transport takes a request and returns a definitive (status, text).
Transport = Callable[[LlmRequest], tuple[OutcomeStatus, str]]


@dataclass(frozen=True)
class ChatEndpointConfig:
    endpoint: str
    api_key: str | None = None
    timeout: float = 120.0


class HttpChatTransport:
    """OpenAI-compatible chat-completions HTTP transport."""

    def __init__(self, config: ChatEndpointConfig):
        self.config = config

    def __call__(self, request: LlmRequest) -> tuple[OutcomeStatus, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        payload = {
            "model": request.model_id,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            response = httpx.post(self.config.endpoint, json=payload, headers=headers,
                                  timeout=self.config.timeout)
        except httpx.HTTPError as exc:
            raise TransientTransportError(str(exc)) from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientTransportError(f"HTTP {response.status_code}")
        if response.status_code != 200:
            # Azure-style content filtering surfaces as a 400 with a coded error.
            try:
                error = response.json().get("error", {})
            except ValueError:
                error = {}
            code = str(error.get("code", "")).lower()
            if "content_filter" in code or "responsibleai" in code:
                return OutcomeStatus.CONTENT_FILTERED, ""
            return OutcomeStatus.TRANSPORT_ERROR, ""
        try:
            body = response.json()
            choice = body["choices"][0]
            if choice.get("finish_reason") == "content_filter":
                return OutcomeStatus.CONTENT_FILTERED, ""
            text = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            return OutcomeStatus.FORMAT_ERROR, ""
        if not isinstance(text, str) or not text:
            return OutcomeStatus.FORMAT_ERROR, ""
        return OutcomeStatus.OK, text


class TokenBucket:
    """Simple blocking token-bucket limiter (requests per second)."""

    def __init__(self, rate_per_sec: float, burst: int = 1):
        self.rate = rate_per_sec
        self.capacity = max(1, burst)
        self.tokens = float(self.capacity)
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


class Gateway:
    """Chat-completion chokepoint with record/replay semantics.

    LIVE always calls the transport; RECORD reads the cache first and
    writes definitive outcomes through; REPLAY_ONLY never touches the
    transport and raises CacheMissError on unknown requests.
    """

    def __init__(
        self,
        cache: ReplayCache,
        mode: GatewayMode,
        transport: Transport | None = None,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        rate_per_sec: float | None = None,
        max_in_flight: int = 8,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode is not GatewayMode.REPLAY_ONLY and transport is None:
            raise ValueError(f"mode {mode.value} requires a transport")
        self.cache = cache
        self.mode = mode
        self.transport = transport
        self.max_retries = max(1, max_retries)
        self.backoff_base = backoff_base
        self._sleep = sleep
        self._bucket = TokenBucket(rate_per_sec) if rate_per_sec else None
        self._in_flight = threading.Semaphore(max(1, max_in_flight))

    def _call_with_retries(self, request: LlmRequest) -> tuple[OutcomeStatus, str]:
        assert self.transport is not None
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                with self._in_flight:
                    return self.transport(request)
            except TransientTransportError as exc:
                last_error = exc
                if attempt + 1 < self.max_retries:
                    self._sleep(self.backoff_base * (2 ** attempt))
        assert last_error is not None
        return OutcomeStatus.TRANSPORT_ERROR, ""

    def complete(self, request: LlmRequest) -> LlmOutcome:
        started = time.monotonic()
        key = cache_key(request)
        if self.mode in (GatewayMode.RECORD, GatewayMode.REPLAY_ONLY):
            entry = self.cache.get(key)
            if entry is not None:
                return LlmOutcome(
                    status=OutcomeStatus(entry["status"]),
                    text=entry["text"],
                    cache_hit=True,
                    latency=time.monotonic() - started,
                )
            if self.mode is GatewayMode.REPLAY_ONLY:
                raise CacheMissError(key)
        status, text = self._call_with_retries(request)
        if self.mode is GatewayMode.RECORD and status in (
            OutcomeStatus.OK,
            OutcomeStatus.CONTENT_FILTERED,
        ):
            self.cache.put(key, request, status, text)
        return LlmOutcome(status=status, text=text, cache_hit=False,
                          latency=time.monotonic() - started)

"""Best-effort URL fetching with failure classification.

Network trouble is data here, not an exception: every outcome is encoded
in the FetchResult status so the corpus build can account for cookie
walls, dead links, geo-blocking, and thin pages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from urllib.parse import urlparse

import httpx

from .extract import extract_main_text

logger = logging.getLogger(__name__)

# Pages whose extracted text is at most this many UTF-8 bytes count as empty.
THIN_CONTENT_BYTES = 100

_BLOCKED_CODES = {401, 403, 407, 451}


class FetchStatus(Enum):
    OK = "ok"
    HTTP_ERROR = "http_error"
    TIMEOUT = "timeout"
    BLOCKED = "blocked"
    EMPTY = "empty"
    INVALID_URL = "invalid_url"


@dataclass(frozen=True)
class FetchPolicy:
    timeout: float = 20.0
    max_bytes: int = 2_000_000
    user_agent: str = "arena-nuggets/0.1 (research corpus builder)"
    retries: int = 1


@dataclass(frozen=True)
class FetchResult:
    url: str
    status: FetchStatus
    body_bytes: int
    extracted_text: str
    fetched_at: str

    def to_json(self) -> dict:
        return {
            "url": self.url,
            "status": self.status.value,
            "body_bytes": self.body_bytes,
            "extracted_text": self.extracted_text,
            "fetched_at": self.fetched_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FetchResult":
        return cls(
            url=obj["url"],
            status=FetchStatus(obj["status"]),
            body_bytes=obj["body_bytes"],
            extracted_text=obj["extracted_text"],
            fetched_at=obj["fetched_at"],
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def classify_body(url: str, body: bytes, content_type: str, fetched_at: str) -> FetchResult:
    """Build the result for a successfully downloaded body (thin pages -> EMPTY)."""
    text = extract_main_text(body, content_type)
    thin = len(text.encode("utf-8")) <= THIN_CONTENT_BYTES
    return FetchResult(
        url=url,
        status=FetchStatus.EMPTY if thin else FetchStatus.OK,
        body_bytes=len(body),
        extracted_text=text,
        fetched_at=fetched_at,
    )


def fetch_url(url: str, policy: FetchPolicy = FetchPolicy()) -> FetchResult:
    """Fetch one URL under the policy. Never raises on network failure."""
    if policy.timeout <= 0:
        raise ValueError("policy timeout must be positive")
    fetched_at = _now()
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        return FetchResult(url, FetchStatus.INVALID_URL, 0, "", fetched_at)

    headers = {"User-Agent": policy.user_agent}
    attempts = 1 + max(0, policy.retries)
    status = FetchStatus.HTTP_ERROR
    for attempt in range(attempts):
        try:
            with httpx.Client(timeout=policy.timeout, follow_redirects=True,
                              headers=headers) as client:
                with client.stream("GET", url) as response:
                    if response.status_code in _BLOCKED_CODES:
                        return FetchResult(url, FetchStatus.BLOCKED, 0, "", fetched_at)
                    if response.status_code >= 400:
                        return FetchResult(url, FetchStatus.HTTP_ERROR, 0, "", fetched_at)
                    body = b""
                    for piece in response.iter_bytes():
                        body += piece
                        if len(body) >= policy.max_bytes:
                            body = body[: policy.max_bytes]
                            break
                    content_type = response.headers.get("content-type", "")
            return classify_body(url, body, content_type, fetched_at)
        except httpx.TimeoutException:
            status = FetchStatus.TIMEOUT
        except Exception as exc:
            logger.debug("fetch %s failed: %s", url, exc)
            status = FetchStatus.HTTP_ERROR
        if attempt + 1 < attempts:
            continue
    return FetchResult(url, status, 0, "", fetched_at)

"""Corpus build orchestration: bounded-parallel fetching into a resumable manifest.

Outputs under the corpus directory:
  manifest.jsonl — one FetchResult per URL
  chunks.jsonl   — every chunk from pages that fetched OK

Re-running skips URLs already present in the manifest, so an interrupted
crawl resumes and a completed corpus triggers zero new fetches.
"""

from __future__ import annotations

import logging
import threading
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence
from urllib.parse import urlparse

from ..util import read_jsonl, stable_json
from .chunking import DEFAULT_OVERLAP, DEFAULT_WINDOW, Chunk, chunk_sentences
from .fetch import FetchPolicy, FetchResult, FetchStatus, fetch_url
from .segment import segment_sentences

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
CHUNKS_NAME = "chunks.jsonl"


@dataclass
class CorpusBuildStats:
    fetched: int = 0
    skipped: int = 0
    chunks_written: int = 0
    status_counts: dict[str, int] = field(default_factory=dict)


def load_manifest(corpus_dir: Path | str) -> dict[str, FetchResult]:
    path = Path(corpus_dir) / MANIFEST_NAME
    if not path.exists():
        return {}
    results = {}
    for obj in read_jsonl(path):
        result = FetchResult.from_json(obj)
        results[result.url] = result
    return results


def load_chunks(corpus_dir: Path | str) -> list[Chunk]:
    path = Path(corpus_dir) / CHUNKS_NAME
    if not path.exists():
        return []
    return [
        Chunk(obj["chunk_id"], obj["url"], obj["start"], obj["end"], obj["text"])
        for obj in read_jsonl(path)
    ]


class _HostLocks:
    """One lock per host so we never hit the same server concurrently."""

    def __init__(self) -> None:
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    def for_url(self, url: str) -> threading.Lock:
        host = urlparse(url).netloc.lower()
        with self._guard:
            return self._locks[host]


def build_corpus(
    urls: Sequence[str],
    corpus_dir: Path | str,
    policy: FetchPolicy = FetchPolicy(),
    concurrency_limit: int = 8,
    fetch_fn: Callable[[str, FetchPolicy], FetchResult] = fetch_url,
    segment_fn: Callable[[str], list[str]] = segment_sentences,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
) -> CorpusBuildStats:
    """Fetch every URL not already in the manifest and append its chunks."""
    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(corpus_dir)
    stats = CorpusBuildStats()

    pending: list[str] = []
    seen: set[str] = set()
    for url in urls:
        url = url.strip()
        if not url or url in seen:
            continue
        seen.add(url)
        if url in manifest:
            stats.skipped += 1
        else:
            pending.append(url)
    if not pending:
        for url in seen:
            if url in manifest:
                value = manifest[url].status.value
                stats.status_counts[value] = stats.status_counts.get(value, 0) + 1
        return stats

    host_locks = _HostLocks()
    write_lock = threading.Lock()
    manifest_path = corpus_dir / MANIFEST_NAME
    chunks_path = corpus_dir / CHUNKS_NAME

    def fetch_one(url: str) -> tuple[FetchResult, list[Chunk]]:
        with host_locks.for_url(url):
            result = fetch_fn(url, policy)
        chunks: list[Chunk] = []
        if result.status is FetchStatus.OK:
            sentences = segment_fn(result.extracted_text)
            chunks = chunk_sentences(sentences, url=url, window=window, overlap=overlap)
        return result, chunks

    with open(manifest_path, "a", encoding="utf-8", newline="\n") as mf, \
            open(chunks_path, "a", encoding="utf-8", newline="\n") as cf:
        with ThreadPoolExecutor(max_workers=concurrency_limit) as pool:
            for result, chunks in pool.map(fetch_one, pending):
                with write_lock:
                    mf.write(stable_json(result.to_json()) + "\n")
                    mf.flush()
                    for chunk in chunks:
                        cf.write(stable_json(chunk.to_json()) + "\n")
                    cf.flush()
                stats.fetched += 1
                stats.chunks_written += len(chunks)
                stats.status_counts[result.status.value] = (
                    stats.status_counts.get(result.status.value, 0) + 1
                )
                logger.info("fetched %s -> %s (%d chunks)", result.url,
                            result.status.value, len(chunks))
    for url in (u for u in seen if u in manifest):
        result = manifest[url]
        stats.status_counts[result.status.value] = (
            stats.status_counts.get(result.status.value, 0) + 1
        )
    return stats

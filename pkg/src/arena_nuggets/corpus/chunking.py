"""Sliding-window sentence chunking: ten-sentence windows, two-sentence overlap."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

DEFAULT_WINDOW = 10
DEFAULT_OVERLAP = 2


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    url: str
    start: int  # sentence span [start, end)
    end: int
    text: str

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "url": self.url,
            "start": self.start,
            "end": self.end,
            "text": self.text,
        }


def chunk_id_for(url: str, start: int, end: int) -> str:
    """Deterministic id from source URL and sentence span."""
    digest = hashlib.sha256(f"{url}\x00{start}\x00{end}".encode("utf-8"))
    return digest.hexdigest()[:16]


def chunk_spans(sentence_count: int, window: int = DEFAULT_WINDOW,
                overlap: int = DEFAULT_OVERLAP) -> list[tuple[int, int]]:
    """Window start/end spans over a sentence list.

    Starts step by window − overlap; emission stops with the first chunk
    whose end reaches the sentence count, so the final chunk may be short
    but every sentence is covered exactly once per pass.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if not 0 <= overlap < window:
        raise ValueError("overlap must satisfy 0 <= overlap < window")
    if sentence_count <= 0:
        return []
    spans: list[tuple[int, int]] = []
    stride = window - overlap
    start = 0
    while True:
        end = min(start + window, sentence_count)
        spans.append((start, end))
        if end >= sentence_count:
            return spans
        start += stride


def chunk_sentences(sentences: Sequence[str], url: str = "",
                    window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP) -> list[Chunk]:
    """Build overlapping chunks from a page's sentence list."""
    spans = chunk_spans(len(sentences), window=window, overlap=overlap)
    return [
        Chunk(
            chunk_id=chunk_id_for(url, start, end),
            url=url,
            start=start,
            end=end,
            text=" ".join(sentences[start:end]),
        )
        for start, end in spans
    ]

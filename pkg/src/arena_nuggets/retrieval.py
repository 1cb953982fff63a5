"""Embedding providers and exact cosine-similarity top-k search.

Search is exact brute force (no ANN): index sizes here stay small enough
that exactness is cheap, and it makes ranking testable against a full
sort. Two providers ship: an HTTP client for an OpenAI-style embeddings
endpoint, and a deterministic character-n-gram hashing provider used in
tests and offline runs.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from .util import atomic_write_text, stable_json

VECTORS_NAME = "vectors.f32"
META_NAME = "vectors.json"


class EmbeddingError(Exception):
    def __init__(self, message: str, failing_indices: Sequence[int] = ()):
        super().__init__(message)
        self.failing_indices = list(failing_indices)


class EmbeddingProvider(Protocol):
    provider_id: str

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors; zero vectors are an error, not NaN."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.sqrt(np.dot(u, u)))
    nv = float(np.sqrt(np.dot(v, v)))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: str
    score: float
    rank: int  # 1-based

    def to_json(self) -> dict:
        return {"chunk_id": self.chunk_id, "score": self.score, "rank": self.rank}


class HashingEmbeddingProvider:
    """Deterministic embeddings from hashed character n-grams.

    Texts sharing character n-grams land near each other, which is enough
    structure for fixtures and offline smoke runs. No randomness, no
    network, identical output on every platform.
    """

    def __init__(self, dim: int = 256):
        if dim < 4:
            raise ValueError("dim must be >= 4")
        self.dim = dim
        self.provider_id = f"hashing:{dim}"

    def _vector(self, text: str) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        normalized = re.sub(r"\s+", " ", text.lower()).strip()
        if not normalized:
            out[0] = 1.0
            return out.astype(np.float32)
        padded = f"\x02{normalized}\x03"
        for size in (3, 4, 5):
            for i in range(max(0, len(padded) - size + 1)):
                gram = padded[i : i + size]
                digest = hashlib.sha256(gram.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dim
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                out[bucket] += sign
        norm = np.sqrt(np.dot(out, out))
        if norm == 0.0:
            out[0] = 1.0
            norm = 1.0
        return (out / norm).astype(np.float32)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._vector(t) for t in texts]


class HttpEmbeddingProvider:
    """Client for an OpenAI-compatible /embeddings endpoint."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, batch_size: int = 32, retries: int = 3,
                 backoff_base: float = 0.5):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.batch_size = max(1, batch_size)
        self.retries = max(1, retries)
        self.backoff_base = backoff_base
        self.provider_id = f"http:{model}"

    def _post_batch(self, batch: list[str]) -> list[np.ndarray]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.model, "input": batch}
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = httpx.post(self.endpoint, json=payload, headers=headers,
                                      timeout=self.timeout)
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = EmbeddingError(f"HTTP {response.status_code}")
                elif response.status_code != 200:
                    raise EmbeddingError(f"HTTP {response.status_code}: {response.text[:200]}")
                else:
                    data = response.json()["data"]
                    return [np.asarray(item["embedding"], dtype=np.float32) for item in data]
            except EmbeddingError:
                raise
            except Exception as exc:
                last_error = exc
            if attempt + 1 < self.retries:
                time.sleep(self.backoff_base * (2 ** attempt))
        raise EmbeddingError(f"embedding request failed after {self.retries} attempts: {last_error}")

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for lo in range(0, len(texts), self.batch_size):
            batch = list(texts[lo : lo + self.batch_size])
            try:
                out.extend(self._post_batch(batch))
            except EmbeddingError as exc:
                raise EmbeddingError(
                    str(exc), failing_indices=range(lo, lo + len(batch))
                ) from exc
        return out


class EmbeddingCache:
    """Content-hash keyed vector cache, one JSON file per entry."""

    def __init__(self, cache_dir: Path | str):
        self.cache_dir = Path(cache_dir)
        self._lock = threading.Lock()

    def key_for(self, provider_id: str, text: str) -> str:
        return hashlib.sha256(f"{provider_id}\x00{text}".encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.json"

    def get(self, key: str) -> np.ndarray | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, "r", encoding="utf-8") as fh:
            return np.asarray(json.load(fh)["values"], dtype=np.float32)

    def put(self, key: str, vector: np.ndarray) -> None:
        with self._lock:
            atomic_write_text(
                self._path(key),
                stable_json({"values": [float(x) for x in vector]}),
            )


def embed_texts(provider: EmbeddingProvider, texts: Sequence[str],
                cache: EmbeddingCache | None = None) -> list[np.ndarray]:
    """Embed texts in order, serving repeats and cached content without provider calls."""
    out: list[np.ndarray | None] = [None] * len(texts)
    missing: list[int] = []
    keys: list[str | None] = [None] * len(texts)
    for i, text in enumerate(texts):
        if cache is not None:
            keys[i] = cache.key_for(provider.provider_id, text)
            hit = cache.get(keys[i])
            if hit is not None:
                out[i] = hit
                continue
        missing.append(i)
    if missing:
        fresh = provider.embed([texts[i] for i in missing])
        if len(fresh) != len(missing):
            raise EmbeddingError(
                f"provider returned {len(fresh)} vectors for {len(missing)} texts",
                failing_indices=missing,
            )
        for i, vector in zip(missing, fresh):
            out[i] = vector
            if cache is not None and keys[i] is not None:
                cache.put(keys[i], vector)
    return [np.asarray(v) for v in out]


class VectorIndex:
    """Immutable exact-search index over chunk embeddings."""

    def __init__(self, chunk_ids: Sequence[str], matrix: np.ndarray):
        if len(chunk_ids) != matrix.shape[0]:
            raise ValueError("chunk_ids and matrix row count differ")
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        self.chunk_ids = list(chunk_ids)
        self.matrix = np.asarray(matrix, dtype=np.float32)
        norms = np.sqrt(np.sum(self.matrix.astype(np.float64) ** 2, axis=1))
        if np.any(norms == 0.0):
            bad = [self.chunk_ids[i] for i in np.nonzero(norms == 0.0)[0][:5]]
            raise ValueError(f"zero vectors in index (e.g. {bad})")
        self._norms = norms

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def search(self, query_vec: np.ndarray, k: int = 50) -> list[ScoredChunk]:
        """Exact top-min(k, n) by cosine; ties broken by chunk_id ascending."""
        if len(self.chunk_ids) == 0:
            raise ValueError("index is empty")
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query_vec, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.dim:
            raise ValueError(f"query dim {q.shape} does not match index dim {self.dim}")
        qnorm = float(np.sqrt(np.dot(q, q)))
        if qnorm == 0.0:
            raise ValueError("cosine undefined for zero query vector")
        scores = (self.matrix.astype(np.float64) @ q) / (self._norms * qnorm)
        ids = np.asarray(self.chunk_ids)
        order = np.lexsort((ids, -scores))
        top = order[: min(k, len(order))]
        return [
            ScoredChunk(chunk_id=str(ids[i]), score=float(scores[i]), rank=rank)
            for rank, i in enumerate(top, start=1)
        ]

    def subset(self, wanted_ids: set[str]) -> "VectorIndex | None":
        """Restrict the index to the given chunk ids (None when empty)."""
        rows = [i for i, cid in enumerate(self.chunk_ids) if cid in wanted_ids]
        if not rows:
            return None
        return VectorIndex([self.chunk_ids[i] for i in rows], self.matrix[rows])

    def save(self, out_dir: Path | str) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        data = np.ascontiguousarray(self.matrix, dtype="<f4").tobytes()
        with open(out_dir / VECTORS_NAME, "wb") as fh:
            fh.write(data)
        atomic_write_text(
            out_dir / META_NAME,
            stable_json({"dim": self.dim, "count": len(self.chunk_ids),
                         "chunk_ids": self.chunk_ids}),
        )

    @classmethod
    def load(cls, in_dir: Path | str) -> "VectorIndex":
        in_dir = Path(in_dir)
        with open(in_dir / META_NAME, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        raw = (in_dir / VECTORS_NAME).read_bytes()
        matrix = np.frombuffer(raw, dtype="<f4").reshape(meta["count"], meta["dim"])
        return cls(meta["chunk_ids"], matrix.copy())

"""Web corpus construction: fetch cited URLs, extract main text, chunk sentences."""

from .chunking import Chunk, chunk_sentences
from .extract import extract_main_text
from .fetch import FetchPolicy, FetchResult, FetchStatus, fetch_url
from .segment import segment_sentences
from .build import build_corpus, load_chunks, load_manifest

__all__ = [
    "Chunk",
    "chunk_sentences",
    "extract_main_text",
    "FetchPolicy",
    "FetchResult",
    "FetchStatus",
    "fetch_url",
    "segment_sentences",
    "build_corpus",
    "load_chunks",
    "load_manifest",
]

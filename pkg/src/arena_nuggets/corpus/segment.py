"""Rule-based multilingual sentence segmentation.

Terminal punctuation (Latin, CJK, Arabic, Devanagari) plus an
abbreviation guard list; newlines from block extraction are hard
boundaries. Deterministic by construction — no model downloads. Callers
that want a different segmenter pass their own callable wherever this
module's function is accepted.
"""

from __future__ import annotations

# Terminals that require trailing whitespace (or end of text) to split.
_SPACED_TERMINALS = set(".!?…")
# Terminals that split unconditionally (scripts without inter-word spaces).
_UNSPACED_TERMINALS = set("。！？；؟।")
# Closers that may trail a terminal and stay attached to the sentence.
_CLOSERS = set("\"'”’`»›)]}」』》〉〕】")

# Lowercased tokens (sans final dot) after which a "." is not a boundary.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "no", "nos", "vs",
    "etc", "fig", "figs", "eq", "cf", "al", "e.g", "i.e", "a.m", "p.m",
    "u.s", "u.k", "inc", "ltd", "co", "corp", "dept", "est", "approx",
    "vol", "pp", "ed", "eds", "ca", "resp",
}


def _token_before(text: str, idx: int) -> str:
    """The word (letters, digits, internal dots) ending just before text[idx]."""
    j = idx
    while j > 0 and (text[j - 1].isalnum() or text[j - 1] == "."):
        j -= 1
    return text[j:idx]


def segment_sentences(text: str, language_hint: str | None = None) -> list[str]:
    """Split text into sentences.

    Joining the result and stripping whitespace reproduces the input
    (whitespace between sentences is dropped, nothing else); empty
    sentences never appear.
    """
    del language_hint  # reserved for pluggable segmenters
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)

    def emit(end: int) -> int:
        nonlocal start
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
        return end

    while i < n:
        ch = text[i]
        if ch == "\n":
            emit(i + 1)
            i += 1
            continue
        if ch in _UNSPACED_TERMINALS:
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            emit(j)
            i = j
            continue
        if ch in _SPACED_TERMINALS:
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            at_break = j >= n or text[j].isspace()
            if at_break:
                guarded = False
                if ch == ".":
                    token = _token_before(text, i).rstrip(".").lower()
                    guarded = token in _ABBREVIATIONS
                if not guarded:
                    emit(j)
                    i = j
                    continue
            i = j if j > i + 1 else i + 1
            continue
        i += 1
    emit(n)
    return sentences

"""Small shared helpers: stable JSON, hashing, JSONL IO, derived RNG seeds."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator


def stable_json(obj: Any) -> str:
    """Serialize with sorted keys and no whitespace, so equal values give equal bytes."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def derive_seed(seed: int, *parts: str) -> int:
    """Derive an independent RNG seed from a root seed and string labels.

    Used so every battle (and every stage within a battle) gets its own
    reproducible stream regardless of processing order.
    """
    digest = hashlib.sha256(("%d\x00%s" % (seed, "\x00".join(parts))).encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "big")


def atomic_write_text(path: Path | str, text: str) -> None:
    """Write via a temp file + rename so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, str(path))
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def read_jsonl(path: Path | str) -> Iterator[Any]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: Path | str, rows: Iterable[Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(stable_json(row))
            fh.write("\n")

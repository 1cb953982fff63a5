"""Prompt template loading with pinned content hashes.

Templates are versioned text assets; cache keys depend on their exact
bytes, so every template's sha256 is frozen here and a checksum test
fails on any edit (bump the pin deliberately when changing a prompt,
and regenerate recorded fixtures).
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from importlib import resources
from typing import Mapping

TEMPLATE_HASHES = {
    "judge_pairwise": "a261c31a5a32e5b2d5187261c1150f0368fd25cf37d17c501601c4e708342db1",
    "nugget_assign": "40cfda931d311566b70fa5a860f6f16636e2caaef266881a42bfa80158a4eb98",
    "nugget_create": "7d854d5f0ef02da01774dc6af8156d9744b9b354bdf9dece01b7e9fd38c7e797",
    "nugget_importance": "77c40ce730ac41f52c00c276edbd5bc0c395516d2a9e2bc7bfd2aaba0d6e8035",
    "query_classify": "47fe0bbc2086e7c9f41ac6631589a0bd4209dd892ac205a8a6a4702fed5fd1ad",
}

_SLOT = re.compile(r"\{(\w+)\}")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_HASHES:
        raise KeyError(f"unknown template {name!r}")
    data = resources.files("arena_nuggets").joinpath(f"templates/{name}.txt").read_bytes()
    return data.decode("utf-8")


def template_hash(name: str) -> str:
    return hashlib.sha256(load_template(name).encode("utf-8")).hexdigest()


def all_template_hashes() -> dict[str, str]:
    return {name: template_hash(name) for name in sorted(TEMPLATE_HASHES)}


def render_slots(template: str, values: Mapping[str, str]) -> str:
    """Fill {name} slots in one pass so slot values are never re-substituted."""
    def repl(match: re.Match) -> str:
        name = match.group(1)
        if name in values:
            return values[name]
        raise KeyError(f"template slot {{{name}}} has no value")
    return _SLOT.sub(repl, template)

"""Query classification: 0-10 ratings on eight categories, argmax classes at threshold 7."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .gateway import Gateway, LlmRequest, OutcomeStatus, RequestTag
from .nuggetizer import NuggetizeError, _complete_with_repair
from .prompts import load_template, render_slots

CATEGORIES = (
    "ambiguous",
    "assumptive",
    "multi_faceted",
    "incompleteness",
    "subjective",
    "knowledge_intensive",
    "reasoning_intensive",
    "harmful",
)

CLASS_THRESHOLD = 7


@dataclass(frozen=True)
class CategoryRatings:
    ratings: dict[str, int]

    def __post_init__(self):
        if set(self.ratings) != set(CATEGORIES):
            raise ValueError(f"ratings must cover exactly {CATEGORIES}")
        for name, value in self.ratings.items():
            if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 10:
                raise ValueError(f"rating {name}={value!r} outside 0..10")

    def to_json(self) -> dict:
        return {name: self.ratings[name] for name in CATEGORIES}


@dataclass(frozen=True)
class QueryClasses:
    classes: frozenset[str]
    max_rating: int

    def to_json(self) -> dict:
        return {"classes": sorted(self.classes), "max_rating": self.max_rating}


def build_classify_prompt(query: str) -> str:
    return render_slots(load_template("query_classify"), {"query": query})


def rate_query(query: str, gateway: Gateway, model_id: str) -> CategoryRatings:
    """Ask for a strict JSON object of eight integer ratings.

    Out-of-range or non-integer values are malformed output (no clamping);
    one repair retry, then the battle drops out of category analysis.
    """
    if not query.strip():
        raise ValueError("query must be nonempty")
    request = LlmRequest(
        model_id=model_id,
        messages=(("user", build_classify_prompt(query)),),
        request_tag=RequestTag.QUERY_CLASSIFY,
    )

    def parse(text: str) -> CategoryRatings | None:
        text = text.strip()
        match = re.match(r"^```[a-zA-Z0-9_-]*\s*\n(.*?)\n?```$", text, re.DOTALL)
        if match:
            text = match.group(1).strip()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            return None
        if not isinstance(obj, dict) or set(obj) != set(CATEGORIES):
            return None
        try:
            return CategoryRatings({k: obj[k] for k in CATEGORIES})
        except ValueError:
            return None

    return _complete_with_repair(
        gateway, request, parse,
        "a JSON object with exactly the eight category keys and integer values 0-10.",
    )


def assign_classes(ratings: CategoryRatings, threshold: int = CLASS_THRESHOLD) -> QueryClasses:
    """Argmax categories when the maximum reaches the threshold, else no classes."""
    max_rating = max(ratings.ratings.values())
    if max_rating >= threshold:
        classes = frozenset(k for k, v in ratings.ratings.items() if v == max_rating)
    else:
        classes = frozenset()
    return QueryClasses(classes=classes, max_rating=max_rating)


__all__ = [
    "CATEGORIES",
    "CLASS_THRESHOLD",
    "CategoryRatings",
    "QueryClasses",
    "NuggetizeError",
    "OutcomeStatus",
    "build_classify_prompt",
    "rate_query",
    "assign_classes",
]

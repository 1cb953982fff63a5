"""Nugget generation, importance labeling, assignment, and scoring.

The two-step procedure: first generate atomic facts from the query,
retrieved chunks, and both responses (responses inserted in seeded random
order to blunt positional bias) and label each fact vital/okay in a
separate pass that never sees the responses; then, per response, label
every fact supported / partially supported / not supported and reduce the
labels to recall-style scores.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .gateway import Gateway, LlmOutcome, LlmRequest, OutcomeStatus, RequestTag
from .ingest import BattleRecord
from .prompts import load_template, render_slots

DEFAULT_MAX_NUGGETS = 30
PARTIAL_SUPPORT_WEIGHT = 0.5


class Importance(Enum):
    VITAL = "vital"
    OKAY = "okay"


class SupportLabel(Enum):
    SUPPORT = "support"
    PARTIAL_SUPPORT = "partial_support"
    NO_SUPPORT = "no_support"


class Metric(Enum):
    ALL = "all"
    VITAL = "vital"
    STRICT_ALL = "strict-all"
    STRICT_VITAL = "strict-vital"


class NuggetizeMode(Enum):
    WITH_URLS = "with-urls"
    RESPONSES_ONLY = "responses-only"


@dataclass(frozen=True)
class Nugget:
    text: str
    importance: Importance

    def to_json(self) -> dict:
        return {"text": self.text, "importance": self.importance.value}


@dataclass(frozen=True)
class RetrievedText:
    """A chunk as handed to prompt construction: id, relevance score, text."""

    chunk_id: str
    score: float
    text: str


@dataclass(frozen=True)
class NuggetizeInput:
    query: str
    chunks: tuple[RetrievedText, ...]  # descending relevance
    response_first: str
    response_second: str
    order: tuple[str, str]  # original sides in presentation order, e.g. ("B", "A")
    mode: NuggetizeMode


@dataclass(frozen=True)
class AssignmentSet:
    battle_id: str
    side: str  # "A" or "B"
    labels: tuple[SupportLabel, ...]

    def to_json(self) -> list[str]:
        return [label.value for label in self.labels]


@dataclass(frozen=True)
class NuggetScores:
    all_score: float
    strict_all_score: float
    vital_score: float | None  # None when the battle has no vital nuggets
    strict_vital_score: float | None
    nugget_count: int
    vital_count: int

    def by_metric(self, metric: Metric) -> float | None:
        return {
            Metric.ALL: self.all_score,
            Metric.STRICT_ALL: self.strict_all_score,
            Metric.VITAL: self.vital_score,
            Metric.STRICT_VITAL: self.strict_vital_score,
        }[metric]

    def to_json(self) -> dict:
        return {
            "all_score": self.all_score,
            "strict_all_score": self.strict_all_score,
            "vital_score": self.vital_score,
            "strict_vital_score": self.strict_vital_score,
            "nugget_count": self.nugget_count,
            "vital_count": self.vital_count,
        }


@dataclass(frozen=True)
class BattleScores:
    score_a: float
    score_b: float
    diff: float  # score_b - score_a
    metric: Metric


class NuggetizeError(Exception):
    """A battle that cannot be nuggetized; carries the outcome class for reporting."""

    def __init__(self, status: OutcomeStatus, detail: str):
        super().__init__(f"{status.value}: {detail}")
        self.status = status
        self.detail = detail


def create_request(battle: BattleRecord, chunks: Sequence[RetrievedText],
                   rng_seed: int, mode: NuggetizeMode) -> NuggetizeInput:
    """Assemble the generation input: ranked chunks plus seeded response order."""
    rng = random.Random(rng_seed)
    flip = rng.random() < 0.5
    order = ("B", "A") if flip else ("A", "B")
    first, second = (
        (battle.response_b, battle.response_a) if flip else (battle.response_a, battle.response_b)
    )
    if mode is NuggetizeMode.RESPONSES_ONLY:
        ranked: tuple[RetrievedText, ...] = ()
    else:
        ranked = tuple(sorted(chunks, key=lambda c: (-c.score, c.chunk_id)))
    return NuggetizeInput(
        query=battle.query,
        chunks=ranked,
        response_first=first,
        response_second=second,
        order=order,
        mode=mode,
    )


def _strip_fences(text: str) -> str:
    text = text.strip()
    match = re.match(r"^```[a-zA-Z0-9_-]*\s*\n(.*?)\n?```$", text, re.DOTALL)
    return match.group(1).strip() if match else text


def _parse_string_array(text: str) -> list[str] | None:
    try:
        value = json.loads(_strip_fences(text))
    except json.JSONDecodeError:
        return None
    if not isinstance(value, list) or any(not isinstance(item, str) for item in value):
        return None
    return value


_REPAIR_REMINDER = (
    "Your previous output could not be parsed. Reply again following the output "
    "format exactly: {0} Output nothing before or after it."
)


def _complete_checked(gateway: Gateway, request: LlmRequest) -> LlmOutcome:
    outcome = gateway.complete(request)
    if outcome.status in (OutcomeStatus.CONTENT_FILTERED, OutcomeStatus.TRANSPORT_ERROR,
                          OutcomeStatus.FORMAT_ERROR):
        raise NuggetizeError(outcome.status, f"gateway returned {outcome.status.value}")
    return outcome


def _complete_with_repair(gateway: Gateway, request: LlmRequest, parse, format_hint: str):
    """Run a request, retrying once with a format reminder before giving up."""
    outcome = _complete_checked(gateway, request)
    parsed = parse(outcome.text)
    if parsed is not None:
        return parsed
    repair = request.with_repair_turn(outcome.text, _REPAIR_REMINDER.format(format_hint))
    outcome = _complete_checked(gateway, repair)
    parsed = parse(outcome.text)
    if parsed is not None:
        return parsed
    raise NuggetizeError(OutcomeStatus.FORMAT_ERROR,
                         f"unparseable {request.request_tag.value} output after repair retry")


def _context_section(chunks: Sequence[RetrievedText]) -> str:
    if not chunks:
        return ""
    lines = [f"[{i}] {chunk.text}" for i, chunk in enumerate(chunks, start=1)]
    return "Retrieved excerpts (most relevant first):\n" + "\n".join(lines) + "\n\n"


def build_generation_prompt(nugget_input: NuggetizeInput,
                            max_nuggets: int = DEFAULT_MAX_NUGGETS) -> str:
    return render_slots(
        load_template("nugget_create"),
        {
            "max_nuggets": str(max_nuggets),
            "query": nugget_input.query,
            "context_section": _context_section(nugget_input.chunks),
            "response_first": nugget_input.response_first,
            "response_second": nugget_input.response_second,
        },
    )


def generate_nuggets(nugget_input: NuggetizeInput, gateway: Gateway, model_id: str,
                     max_nuggets: int = DEFAULT_MAX_NUGGETS) -> list[str]:
    """Step one: atomic fact strings, deduplicated and capped."""
    prompt = build_generation_prompt(nugget_input, max_nuggets)
    request = LlmRequest(
        model_id=model_id,
        messages=(("user", prompt),),
        request_tag=RequestTag.NUGGET_CREATE,
    )
    raw = _complete_with_repair(gateway, request, _parse_string_array,
                                "a JSON array of strings.")
    seen: set[str] = set()
    out: list[str] = []
    for item in raw:
        text = item.strip()
        key = text.casefold()
        if text and key not in seen:
            seen.add(key)
            out.append(text)
    return out[:max_nuggets]


def build_importance_prompt(nugget_texts: Sequence[str], query: str) -> str:
    return render_slots(
        load_template("nugget_importance"),
        {
            "query": query,
            "nuggets_json": json.dumps(list(nugget_texts), ensure_ascii=False),
        },
    )


def label_importance(nugget_texts: Sequence[str], query: str, gateway: Gateway,
                     model_id: str) -> list[Nugget]:
    """Step one, second pass: vital/okay labels; responses never enter this prompt."""
    if not nugget_texts:
        raise ValueError("label_importance requires a nonempty nugget list")
    prompt = build_importance_prompt(nugget_texts, query)
    request = LlmRequest(
        model_id=model_id,
        messages=(("user", prompt),),
        request_tag=RequestTag.NUGGET_IMPORTANCE,
    )

    def parse(text: str) -> list[Importance] | None:
        values = _parse_string_array(text)
        if values is None or len(values) != len(nugget_texts):
            return None
        labels = []
        for value in values:
            normalized = value.strip().lower()
            if normalized not in ("vital", "okay"):
                return None
            labels.append(Importance(normalized))
        return labels

    labels = _complete_with_repair(
        gateway, request, parse,
        f"a JSON array of exactly {len(nugget_texts)} labels, each \"vital\" or \"okay\".",
    )
    return [Nugget(text, label) for text, label in zip(nugget_texts, labels)]


_SUPPORT_ALIASES = {
    "support": SupportLabel.SUPPORT,
    "supported": SupportLabel.SUPPORT,
    "full_support": SupportLabel.SUPPORT,
    "partial_support": SupportLabel.PARTIAL_SUPPORT,
    "partially_supported": SupportLabel.PARTIAL_SUPPORT,
    "partial": SupportLabel.PARTIAL_SUPPORT,
    "no_support": SupportLabel.NO_SUPPORT,
    "not_supported": SupportLabel.NO_SUPPORT,
    "unsupported": SupportLabel.NO_SUPPORT,
}


def build_assignment_prompt(nuggets: Sequence[Nugget], response_text: str, query: str) -> str:
    return render_slots(
        load_template("nugget_assign"),
        {
            "query": query,
            "nuggets_json": json.dumps([n.text for n in nuggets], ensure_ascii=False),
            "response": response_text,
        },
    )


def assign_nuggets(nuggets: Sequence[Nugget], response_text: str, query: str,
                   gateway: Gateway, model_id: str, battle_id: str = "",
                   side: str = "A") -> AssignmentSet:
    """Step two: one support label per nugget for a single response."""
    if not nuggets:
        raise ValueError("assign_nuggets requires a nonempty nugget list")
    prompt = build_assignment_prompt(nuggets, response_text, query)
    request = LlmRequest(
        model_id=model_id,
        messages=(("user", prompt),),
        request_tag=RequestTag.NUGGET_ASSIGN,
    )

    def parse(text: str) -> list[SupportLabel] | None:
        values = _parse_string_array(text)
        if values is None or len(values) != len(nuggets):
            return None
        labels = []
        for value in values:
            normalized = re.sub(r"[\s-]+", "_", value.strip().lower())
            if normalized not in _SUPPORT_ALIASES:
                return None
            labels.append(_SUPPORT_ALIASES[normalized])
        return labels

    labels = _complete_with_repair(
        gateway, request, parse,
        f"a JSON array of exactly {len(nuggets)} labels, each \"support\", "
        f"\"partial_support\", or \"no_support\".",
    )
    return AssignmentSet(battle_id=battle_id, side=side, labels=tuple(labels))


def score_assignments(assignment: AssignmentSet, nuggets: Sequence[Nugget],
                      partial_weight: float = PARTIAL_SUPPORT_WEIGHT) -> NuggetScores:
    """Reduce support labels to the four recall metrics.

    strict counts full support only; non-strict adds partial support at
    partial_weight. The vital variants restrict both numerator and
    denominator to vital nuggets and are undefined (None) when the battle
    has none.
    """
    if len(assignment.labels) != len(nuggets):
        raise ValueError(
            f"{len(assignment.labels)} labels for {len(nuggets)} nuggets"
        )
    if not nuggets:
        raise ValueError("cannot score an empty nugget list")

    def tally(pairs) -> tuple[int, int, int]:
        support = partial = total = 0
        for nugget, label in pairs:
            total += 1
            if label is SupportLabel.SUPPORT:
                support += 1
            elif label is SupportLabel.PARTIAL_SUPPORT:
                partial += 1
        return support, partial, total

    everything = list(zip(nuggets, assignment.labels))
    support, partial, total = tally(everything)
    vital_pairs = [(n, l) for n, l in everything if n.importance is Importance.VITAL]
    v_support, v_partial, v_total = tally(vital_pairs)

    all_score = (support + partial_weight * partial) / total
    strict_all = support / total
    if v_total:
        vital_score = (v_support + partial_weight * v_partial) / v_total
        strict_vital = v_support / v_total
    else:
        vital_score = None
        strict_vital = None
    return NuggetScores(
        all_score=all_score,
        strict_all_score=strict_all,
        vital_score=vital_score,
        strict_vital_score=strict_vital,
        nugget_count=total,
        vital_count=v_total,
    )


class UndefinedScoreError(Exception):
    """Raised when the selected metric is undefined for a battle (no vital nuggets)."""


def score_battle(nuggets: Sequence[Nugget], assignment_a: AssignmentSet,
                 assignment_b: AssignmentSet, metric: Metric = Metric.ALL,
                 partial_weight: float = PARTIAL_SUPPORT_WEIGHT) -> BattleScores:
    """Per-side scores and their difference (positive favors side B)."""
    scores_a = score_assignments(assignment_a, nuggets, partial_weight)
    scores_b = score_assignments(assignment_b, nuggets, partial_weight)
    value_a = scores_a.by_metric(metric)
    value_b = scores_b.by_metric(metric)
    if value_a is None or value_b is None:
        raise UndefinedScoreError(
            f"metric {metric.value} undefined: battle has no vital nuggets"
        )
    return BattleScores(score_a=value_a, score_b=value_b, diff=value_b - value_a,
                        metric=metric)

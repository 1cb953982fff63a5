"""Pairwise LLM-as-a-judge baseline with randomized presentation order.

The judge sees the two answers in a seeded random order and must end with
a bracket verdict ([[A]], [[B]], or [[Tie]] in presented coordinates); a
JSON envelope with a "verdict" field is tolerated, but the bracket rule is
authoritative. Verdicts are mapped back to the original sides.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass

from .gateway import Gateway, LlmRequest, OutcomeStatus, RequestTag
from .ingest import BattleRecord
from .nuggetizer import NuggetizeError, _complete_checked
from .prompts import load_template, render_slots

_MARKER = re.compile(r"\[\[(A|B|Tie)\]\]")


@dataclass(frozen=True)
class Verdict:
    winner: str  # "A", "B", or "TIE", in original battle coordinates
    raw_explanation: str
    presented_order: tuple[str, str]

    def to_json(self) -> dict:
        return {
            "winner": self.winner,
            "presented_order": list(self.presented_order),
            "explanation": self.raw_explanation,
        }


class VerdictParseError(Exception):
    pass


def build_judge_prompt(query: str, answer_first: str, answer_second: str) -> str:
    """Render the pinned pairwise template; answers fill the A/B slots in shown order."""
    if not query.strip() or not answer_first.strip() or not answer_second.strip():
        raise ValueError("judge prompt inputs must be nonempty")
    return render_slots(
        load_template("judge_pairwise"),
        {"query": query, "answer_a": answer_first, "answer_b": answer_second},
    )


def _marker_winner(text: str) -> str | None:
    matches = _MARKER.findall(text)
    return matches[-1] if matches else None


def parse_verdict(model_output: str, presented_order: tuple[str, str]) -> Verdict:
    """Last bracket marker wins; result is expressed in original A/B coordinates."""
    marker = _marker_winner(model_output)
    if marker is None:
        stripped = model_output.strip()
        fenced = re.match(r"^```[a-zA-Z0-9_-]*\s*\n(.*?)\n?```$", stripped, re.DOTALL)
        if fenced:
            stripped = fenced.group(1).strip()
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict) and isinstance(obj.get("verdict"), str):
            value = obj["verdict"].strip()
            marker = _marker_winner(value)
            if marker is None and value in ("A", "B", "Tie"):
                marker = value
    if marker is None:
        raise VerdictParseError("no [[A]]/[[B]]/[[Tie]] marker in judge output")
    if marker == "Tie":
        winner = "TIE"
    elif marker == "A":
        winner = presented_order[0]
    else:
        winner = presented_order[1]
    return Verdict(winner=winner, raw_explanation=model_output,
                   presented_order=presented_order)


_JUDGE_REPAIR = (
    "Your previous reply did not contain a final verdict. Reply again and end with "
    "exactly one of \"[[A]]\", \"[[B]]\", or \"[[Tie]]\"."
)


def judge_battle(battle: BattleRecord, gateway: Gateway, model_id: str,
                 rng_seed: int) -> Verdict:
    """Judge one single-turn battle with order randomization and de-randomization."""
    if battle.turn_count != 1:
        raise ValueError("judge_battle only handles single-turn battles")
    rng = random.Random(rng_seed)
    flip = rng.random() < 0.5
    order = ("B", "A") if flip else ("A", "B")
    first, second = (
        (battle.response_b, battle.response_a) if flip else (battle.response_a, battle.response_b)
    )
    prompt = build_judge_prompt(battle.query, first, second)
    request = LlmRequest(
        model_id=model_id,
        messages=(("user", prompt),),
        request_tag=RequestTag.JUDGE,
    )
    outcome = _complete_checked(gateway, request)
    try:
        return parse_verdict(outcome.text, order)
    except VerdictParseError:
        repair = request.with_repair_turn(outcome.text, _JUDGE_REPAIR)
        outcome = _complete_checked(gateway, repair)
        try:
            return parse_verdict(outcome.text, order)
        except VerdictParseError as exc:
            raise NuggetizeError(OutcomeStatus.FORMAT_ERROR, str(exc)) from exc

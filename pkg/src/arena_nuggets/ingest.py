"""Battle dataset parsing, single-turn filtering, URL collection, and summary stats.

The wire format is JSON lines, one battle per line (a JSON array of the
same objects is also accepted). Vote strings follow the public arena
dump: "model_a", "model_b", "tie", "tie (bothbad)".
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Sequence


class HumanVote(Enum):
    A_WINS = "model_a"
    B_WINS = "model_b"
    TIE = "tie"
    TIE_BOTH_BAD = "tie (bothbad)"


# Label used when a battle carries no usable language tag.
UNTAGGED_LANGUAGE = "Others"

_REQUIRED_FIELDS = ("battle_id", "query", "response_a", "response_b", "human_vote", "turn_count")
_NONEMPTY_FIELDS = ("query", "response_a", "response_b")


@dataclass(frozen=True)
class BattleRecord:
    battle_id: str
    query: str
    response_a: str
    response_b: str
    urls_a: tuple[str, ...]
    urls_b: tuple[str, ...]
    human_vote: HumanVote
    language: str = ""
    turn_count: int = 1
    model_a_name: str = ""
    model_b_name: str = ""

    def all_urls(self) -> tuple[str, ...]:
        return self.urls_a + self.urls_b

    def to_json(self) -> dict:
        return {
            "battle_id": self.battle_id,
            "query": self.query,
            "response_a": self.response_a,
            "response_b": self.response_b,
            "urls_a": list(self.urls_a),
            "urls_b": list(self.urls_b),
            "human_vote": self.human_vote.value,
            "language": self.language,
            "turn_count": self.turn_count,
            "model_a_name": self.model_a_name,
            "model_b_name": self.model_b_name,
        }


@dataclass(frozen=True)
class ParseIssue:
    """One unparseable or invalid input record; never silently dropped."""

    line: int
    field: str | None
    message: str

    def to_json(self) -> dict:
        return {"line": self.line, "field": self.field, "message": self.message}


@dataclass
class ParseReport:
    records: list[BattleRecord] = field(default_factory=list)
    issues: list[ParseIssue] = field(default_factory=list)


@dataclass(frozen=True)
class DatasetSummary:
    total_battles: int
    single_turn_battles: int
    vote_histogram: dict[str, int]
    language_histogram: dict[str, int]
    unique_url_count: int

    def to_json(self) -> dict:
        return {
            "total_battles": self.total_battles,
            "single_turn_battles": self.single_turn_battles,
            "vote_histogram": dict(sorted(self.vote_histogram.items())),
            "language_histogram": dict(sorted(self.language_histogram.items())),
            "unique_url_count": self.unique_url_count,
        }


def _coerce_urls(value, line: int, name: str, issues: list[ParseIssue]) -> tuple[str, ...] | None:
    if value is None:
        return ()
    if not isinstance(value, list) or any(not isinstance(u, str) for u in value):
        issues.append(ParseIssue(line, name, f"{name} must be an array of strings"))
        return None
    return tuple(u.strip() for u in value if u.strip())


def _parse_one(obj, line: int, issues: list[ParseIssue]) -> BattleRecord | None:
    if not isinstance(obj, dict):
        issues.append(ParseIssue(line, None, "record is not a JSON object"))
        return None
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            issues.append(ParseIssue(line, name, f"missing required field '{name}'"))
            return None
    for name in _NONEMPTY_FIELDS:
        value = obj[name]
        if not isinstance(value, str) or not value.strip():
            issues.append(ParseIssue(line, name, f"field '{name}' must be a non-empty string"))
            return None
    try:
        vote = HumanVote(obj["human_vote"])
    except ValueError:
        issues.append(ParseIssue(line, "human_vote", f"unknown vote {obj['human_vote']!r}"))
        return None
    turn_count = obj["turn_count"]
    if not isinstance(turn_count, int) or isinstance(turn_count, bool) or turn_count < 1:
        issues.append(ParseIssue(line, "turn_count", "turn_count must be a positive integer"))
        return None
    urls_a = _coerce_urls(obj.get("urls_a"), line, "urls_a", issues)
    urls_b = _coerce_urls(obj.get("urls_b"), line, "urls_b", issues)
    if urls_a is None or urls_b is None:
        return None
    language = obj.get("language") or ""
    if not isinstance(language, str):
        issues.append(ParseIssue(line, "language", "language must be a string"))
        return None
    return BattleRecord(
        battle_id=str(obj["battle_id"]),
        query=obj["query"],
        response_a=obj["response_a"],
        response_b=obj["response_b"],
        urls_a=urls_a,
        urls_b=urls_b,
        human_vote=vote,
        language=language.strip(),
        turn_count=turn_count,
        model_a_name=str(obj.get("model_a_name") or ""),
        model_b_name=str(obj.get("model_b_name") or ""),
    )


def parse_battles(stream: IO[bytes] | IO[str], fmt: str = "jsonl") -> ParseReport:
    """Parse a battle dataset from a JSON-lines or JSON-array stream.

    Bad records become ParseIssue entries (with line number and offending
    field where known); everything parseable is returned, multi-turn
    battles included.
    """
    if fmt not in ("jsonl", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    raw = stream.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    report = ParseReport()
    seen_ids: set[str] = set()

    def admit(obj, line: int) -> None:
        record = _parse_one(obj, line, report.issues)
        if record is None:
            return
        if record.battle_id in seen_ids:
            report.issues.append(
                ParseIssue(line, "battle_id", f"duplicate battle_id {record.battle_id!r}")
            )
            return
        seen_ids.add(record.battle_id)
        report.records.append(record)

    if fmt == "json":
        try:
            items = json.loads(raw)
        except json.JSONDecodeError as exc:
            report.issues.append(ParseIssue(exc.lineno, None, f"invalid JSON: {exc.msg}"))
            return report
        if not isinstance(items, list):
            report.issues.append(ParseIssue(1, None, "top-level JSON value must be an array"))
            return report
        for i, obj in enumerate(items, start=1):
            admit(obj, i)
        return report

    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.issues.append(
                ParseIssue(lineno, None, f"invalid JSON at column {exc.colno}: {exc.msg}")
            )
            continue
        admit(obj, lineno)
    return report


def filter_single_turn(records: Sequence[BattleRecord]) -> list[BattleRecord]:
    """Keep exactly the battles with one turn, preserving input order."""
    return [r for r in records if r.turn_count == 1]


def collect_urls(records: Iterable[BattleRecord]) -> list[str]:
    """Unique cited URLs across all battles, in first-seen order."""
    seen: set[str] = set()
    out: list[str] = []
    for record in records:
        for url in record.all_urls():
            url = url.strip()
            if url and url not in seen:
                seen.add(url)
                out.append(url)
    return out


def dataset_summary(records: Sequence[BattleRecord]) -> DatasetSummary:
    """Vote and language histograms over the single-turn battles."""
    single = filter_single_turn(records)
    votes = Counter(r.human_vote.value for r in single)
    languages = Counter((r.language or UNTAGGED_LANGUAGE) for r in single)
    return DatasetSummary(
        total_battles=len(records),
        single_turn_battles=len(single),
        vote_histogram=dict(votes),
        language_histogram=dict(languages),
        unique_url_count=len(collect_urls(single)),
    )

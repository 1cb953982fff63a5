"""Statistical analysis of nugget score differences against human preferences.

Conventions used throughout: diff = score_B - score_A; battles voted
"both bad" are excluded from all distributional analyses (densities, K-S,
confusion matrices, inversions) and reported separately; |diff| equal to
the tie threshold counts as a tie.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .ingest import UNTAGGED_LANGUAGE, HumanVote

SQRT_2PI = math.sqrt(2.0 * math.pi)

DEFAULT_TIE_THRESHOLD = 0.07
RESPONSES_ONLY_TIE_THRESHOLD = 0.1
KDE_BANDWIDTH = 0.5
MIN_LANGUAGE_SHARE = 0.03
KS_SERIES_EPS = 1e-12


class Pref(Enum):
    A_WINS = "A_WINS"
    TIE = "TIE"
    B_WINS = "B_WINS"


PREF_ORDER = (Pref.A_WINS, Pref.TIE, Pref.B_WINS)

_VOTE_TO_PREF = {
    HumanVote.A_WINS: Pref.A_WINS,
    HumanVote.TIE: Pref.TIE,
    HumanVote.B_WINS: Pref.B_WINS,
}


class Predictor(Enum):
    NUGGET = "nugget"
    JUDGE = "judge"


class GroupBy(Enum):
    NONE = "none"
    CATEGORY = "category"
    LANGUAGE = "language"


@dataclass(frozen=True)
class PreferenceOutcome:
    """One analyzed battle: human vote, nugget score difference, optional judge verdict."""

    battle_id: str
    human: HumanVote
    diff: float
    judge: Pref | None = None
    classes: frozenset[str] = frozenset()
    language: str = ""


def nugget_preference(diff: float, threshold: float) -> Pref:
    """Tie inside +/- threshold (inclusive); otherwise the sign of diff picks the side."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if abs(diff) <= threshold:
        return Pref.TIE
    return Pref.B_WINS if diff > 0 else Pref.A_WINS


def kde_pdf(samples: Sequence[float], bandwidth: float = KDE_BANDWIDTH,
            grid: Sequence[float] | None = None) -> np.ndarray:
    """Gaussian-kernel density estimate evaluated on the grid."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("kde_pdf requires at least one sample")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if grid is None:
        grid = np.linspace(-1.0, 1.0, 401)
    g = np.asarray(grid, dtype=np.float64)
    z = (g[:, None] - x[None, :]) / bandwidth
    return np.exp(-0.5 * z * z).sum(axis=1) / (x.size * bandwidth * SQRT_2PI)


class Ecdf:
    """Right-continuous empirical CDF: F(x) = #{samples <= x} / n."""

    def __init__(self, samples: Sequence[float]):
        data = np.asarray(samples, dtype=np.float64)
        if data.size == 0:
            raise ValueError("ecdf requires at least one sample")
        self.sorted = np.sort(data)
        self.n = data.size

    def __call__(self, x):
        positions = np.searchsorted(self.sorted, np.asarray(x, dtype=np.float64),
                                    side="right")
        result = positions / self.n
        return float(result) if np.isscalar(x) or np.ndim(x) == 0 else result


def ecdf(samples: Sequence[float]) -> Ecdf:
    return Ecdf(samples)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n1: int
    n2: int

    def to_json(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value,
                "n1": self.n1, "n2": self.n2}


def ks_p_value(d: float, n1: int, n2: int) -> float:
    """Asymptotic two-sample K-S p-value.

    Effective size n_e = n1*n2/(n1+n2); lambda = (sqrt(n_e) + 0.12 +
    0.11/sqrt(n_e)) * D; p = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2),
    truncated once a term drops below 1e-12, clamped into (0, 1].
    """
    if d <= 0.0:
        return 1.0
    ne = n1 * n2 / (n1 + n2)
    sqrt_ne = math.sqrt(ne)
    lam = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d
    total = 0.0
    sign = 1.0
    for j in range(1, 100_000):
        term = math.exp(-2.0 * (j * lam) ** 2)
        total += sign * term
        if term < KS_SERIES_EPS:
            break
        sign = -sign
    p = 2.0 * total
    if p > 1.0:
        return 1.0
    if p <= 0.0:
        return math.ulp(0.0)
    return p


def ks_two_sample(x: Sequence[float], y: Sequence[float]) -> KsResult:
    """Two-sample K-S test; D is the exact sup over pooled sample points."""
    xs = np.sort(np.asarray(x, dtype=np.float64))
    ys = np.sort(np.asarray(y, dtype=np.float64))
    if xs.size == 0 or ys.size == 0:
        raise ValueError("ks_two_sample requires nonempty samples")
    pooled = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, pooled, side="right") / xs.size
    fy = np.searchsorted(ys, pooled, side="right") / ys.size
    d = float(np.max(np.abs(fx - fy)))
    return KsResult(statistic=d, p_value=ks_p_value(d, xs.size, ys.size),
                    n1=int(xs.size), n2=int(ys.size))


def _predicted(outcome: PreferenceOutcome, predictor: Predictor,
               threshold: float | None) -> Pref | None:
    if predictor is Predictor.NUGGET:
        if threshold is None:
            raise ValueError("threshold required for the nugget predictor")
        return nugget_preference(outcome.diff, threshold)
    return outcome.judge


def included_outcomes(outcomes: Sequence[PreferenceOutcome], predictor: Predictor,
                      threshold: float | None) -> list[tuple[PreferenceOutcome, Pref, Pref]]:
    """(outcome, human pref, predicted pref) rows entering the analyses.

    Drops both-bad votes always, and judge-less battles when the judge is
    the predictor.
    """
    rows = []
    for outcome in outcomes:
        if outcome.human is HumanVote.TIE_BOTH_BAD:
            continue
        predicted = _predicted(outcome, predictor, threshold)
        if predicted is None:
            continue
        rows.append((outcome, _VOTE_TO_PREF[outcome.human], predicted))
    return rows


@dataclass(frozen=True)
class ConfusionMatrix3:
    """3x3 counts; rows are human prefs, columns predicted prefs, both in A/TIE/B order."""

    counts: tuple[tuple[int, int, int], ...]
    row_labels: tuple[str, str, str] = ("A_WINS", "TIE", "B_WINS")
    col_labels: tuple[str, str, str] = ("A_WINS", "TIE", "B_WINS")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.counts[i][i] for i in range(3))

    def to_json(self) -> dict:
        return {
            "rows": list(self.row_labels),
            "cols": list(self.col_labels),
            "counts": [list(row) for row in self.counts],
        }


def confusion_matrix(outcomes: Sequence[PreferenceOutcome], predictor: Predictor,
                     threshold: float | None = None) -> ConfusionMatrix3:
    index = {pref: i for i, pref in enumerate(PREF_ORDER)}
    grid = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for _, human, predicted in included_outcomes(outcomes, predictor, threshold):
        grid[index[human]][index[predicted]] += 1
    return ConfusionMatrix3(counts=tuple(tuple(row) for row in grid))


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    n_a: int
    n_tie: int
    n_b: int
    distance: float

    def to_json(self) -> dict:
        return {"threshold": self.threshold, "n_a": self.n_a, "n_tie": self.n_tie,
                "n_b": self.n_b, "distance": self.distance}


@dataclass(frozen=True)
class SweepResult:
    chosen: float
    rows: tuple[SweepRow, ...]

    def to_json(self) -> dict:
        return {"chosen": self.chosen, "rows": [r.to_json() for r in self.rows]}


def _l1_to_uniform(counts: Sequence[int]) -> float:
    total = sum(counts)
    return sum(abs(c / total - 1.0 / 3.0) for c in counts)


def _chi2_to_uniform(counts: Sequence[int]) -> float:
    total = sum(counts)
    expected = total / 3.0
    return sum((c - expected) ** 2 / expected for c in counts)


_OBJECTIVES: dict[str, Callable[[Sequence[int]], float]] = {
    "l1": _l1_to_uniform,
    "chi2": _chi2_to_uniform,
}


def sweep_threshold(outcomes: Sequence[PreferenceOutcome], lo: float = 0.05,
                    hi: float = 0.15, step: float = 0.01,
                    objective: str = "l1") -> SweepResult:
    """Pick the tie threshold whose prediction split on human-tie battles is most uniform.

    Ties in the objective break toward the smallest threshold.
    """
    distance = _OBJECTIVES[objective]
    tie_diffs = [o.diff for o in outcomes if o.human is HumanVote.TIE]
    if not tie_diffs:
        raise ValueError("threshold sweep requires human-tie battles")
    steps = int(round((hi - lo) / step))
    thresholds = [round(lo + i * step, 10) for i in range(steps + 1)]
    rows = []
    best: SweepRow | None = None
    for threshold in thresholds:
        counts = Counter(nugget_preference(d, threshold) for d in tie_diffs)
        row = SweepRow(
            threshold=threshold,
            n_a=counts.get(Pref.A_WINS, 0),
            n_tie=counts.get(Pref.TIE, 0),
            n_b=counts.get(Pref.B_WINS, 0),
            distance=distance([counts.get(p, 0) for p in PREF_ORDER]),
        )
        rows.append(row)
        if best is None or row.distance < best.distance:
            best = row
    assert best is not None
    return SweepResult(chosen=best.threshold, rows=tuple(rows))


@dataclass(frozen=True)
class InversionRow:
    group: str
    inversions: int
    count: int

    @property
    def rate(self) -> float:
        return self.inversions / self.count if self.count else 0.0

    def to_json(self) -> dict:
        return {"group": self.group, "inversions": self.inversions,
                "count": self.count, "rate": self.rate}


def _is_inversion(human: Pref, predicted: Pref) -> bool:
    return (human is Pref.A_WINS and predicted is Pref.B_WINS) or (
        human is Pref.B_WINS and predicted is Pref.A_WINS
    )


def language_groups(outcomes: Sequence[PreferenceOutcome],
                    min_share: float = MIN_LANGUAGE_SHARE) -> dict[str, str]:
    """Map raw language tags to analysis groups.

    Languages holding at least min_share of the analyzed battles keep their
    own row; everything else (untagged included) aggregates into "Others".
    """
    tags = Counter((o.language or UNTAGGED_LANGUAGE) for o in outcomes)
    total = sum(tags.values())
    mapping = {}
    for tag, count in tags.items():
        keep = tag != UNTAGGED_LANGUAGE and total > 0 and count / total >= min_share
        mapping[tag] = tag if keep else UNTAGGED_LANGUAGE
    return mapping


def inversion_rate(outcomes: Sequence[PreferenceOutcome], predictor: Predictor,
                   threshold: float | None = None,
                   group_by: GroupBy = GroupBy.NONE,
                   min_language_share: float = MIN_LANGUAGE_SHARE) -> list[InversionRow]:
    """Share of battles where the predictor picks the opposite side from the human.

    Human-tie battles sit in every denominator but can never be inversions;
    a battle classified into k categories contributes to k category groups.
    """
    rows = included_outcomes(outcomes, predictor, threshold)
    groups: dict[str, list[bool]] = {}
    if group_by is GroupBy.LANGUAGE:
        mapping = language_groups([r[0] for r in rows], min_language_share)
    for outcome, human, predicted in rows:
        inverted = _is_inversion(human, predicted)
        if group_by is GroupBy.NONE:
            names = ["all"]
        elif group_by is GroupBy.CATEGORY:
            names = sorted(outcome.classes)
        else:
            names = [mapping[outcome.language or UNTAGGED_LANGUAGE]]
        for name in names:
            groups.setdefault(name, []).append(inverted)
    ordered = sorted(groups)
    if group_by is GroupBy.LANGUAGE and UNTAGGED_LANGUAGE in groups:
        ordered = [g for g in ordered if g != UNTAGGED_LANGUAGE] + [UNTAGGED_LANGUAGE]
    return [
        InversionRow(group=name, inversions=sum(groups[name]), count=len(groups[name]))
        for name in ordered
    ]


def diffs_by_vote(outcomes: Sequence[PreferenceOutcome]) -> dict[Pref, list[float]]:
    """Score differences grouped by human vote (both-bad excluded)."""
    grouped: dict[Pref, list[float]] = {pref: [] for pref in PREF_ORDER}
    for outcome in outcomes:
        if outcome.human is HumanVote.TIE_BOTH_BAD:
            continue
        grouped[_VOTE_TO_PREF[outcome.human]].append(outcome.diff)
    return grouped

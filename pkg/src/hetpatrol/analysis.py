"""Normalisation, Pareto/knee extraction, bootstrap validation and rank tests."""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Hashable, Iterable, NamedTuple, Optional, Sequence

import numpy as np


class DistributionClass(str, Enum):
    ALL_PATROL = "AllPatrol"
    PATROL_SKEW = "PatrolSkew"
    FIFTY_FIFTY = "FiftyFifty"
    SEARCH_SKEW = "SearchSkew"
    ALL_SEARCH = "AllSearch"


CLASS_ORDER = list(DistributionClass)


def distribution_class(n: int, k: int) -> DistributionClass:
    """Patroller:searcher grouping of a team of ``n`` with ``k`` searchers."""
    if n < 2 or n % 2:
        raise ValueError(f"team size must be even, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if k == 0:
        return DistributionClass.ALL_PATROL
    if k == n:
        return DistributionClass.ALL_SEARCH
    if 2 * k < n:
        return DistributionClass.PATROL_SKEW
    if 2 * k == n:
        return DistributionClass.FIFTY_FIFTY
    return DistributionClass.SEARCH_SKEW


class ObjectivePoint(NamedTuple):
    idleness_norm: float
    ttf_norm: float
    label: Hashable = None


def minmax(values: Sequence[float], what: str = "metric") -> list[float]:
    """Scale to [0, 1]; a constant input maps to all zeros with a warning."""
    lo, hi = min(values), max(values)
    if hi == lo:
        warnings.warn(f"degenerate {what}: all values equal {lo}; set to 0", RuntimeWarning, stacklevel=2)
        return [0.0] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


def record_label(rec: dict) -> tuple[str, str, bool]:
    return (rec["algorithm"], distribution_class(rec["N"], rec["k"]).value, rec["pm"])


def normalize(records: Sequence[dict], label=record_label) -> list[ObjectivePoint]:
    """Min-max normalise idleness and TTF within each ``(map, N)`` group.

    Censored TTFs (``ttf is None``) take the group's largest observed TTF
    before scaling, so they land on 1.0. Output order follows ``records``.
    """
    groups: dict[tuple, list[int]] = defaultdict(list)
    for i, rec in enumerate(records):
        groups[(rec["map"], rec["N"])].append(i)
    out: list[Optional[ObjectivePoint]] = [None] * len(records)
    for key, idx in groups.items():
        idle = [records[i]["avg_idleness"] for i in idx]
        observed = [records[i]["ttf"] for i in idx if records[i]["ttf"] is not None]
        worst = max(observed) if observed else 0.0
        ttf = [records[i]["ttf"] if records[i]["ttf"] is not None else worst for i in idx]
        idle_n = minmax(idle, f"idleness in group {key}")
        ttf_n = minmax(ttf, f"ttf in group {key}")
        for j, i in enumerate(idx):
            out[i] = ObjectivePoint(idle_n[j], ttf_n[j], label(records[i]))
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class ParetoResult:
    front: list[ObjectivePoint]
    knee: ObjectivePoint
    front_index: list[int]
    knee_index: int


def pareto_indices(xs: Sequence[float], ys: Sequence[float]) -> list[int]:
    """Indices of non-dominated points (minimisation in both coordinates)."""
    order = sorted(range(len(xs)), key=lambda i: (xs[i], ys[i]))
    keep = []
    min_prev = math.inf  # lowest y among points with strictly smaller x
    i = 0
    while i < len(order):
        j = i
        x = xs[order[i]]
        while j < len(order) and xs[order[j]] == x:
            j += 1
        group_min = ys[order[i]]
        if group_min < min_prev:
            keep.extend(o for o in order[i:j] if ys[o] == group_min)
            min_prev = group_min
        i = j
    return sorted(keep)


def pareto_front(points: Sequence[ObjectivePoint]) -> ParetoResult:
    """Non-dominated set and its knee (closest member to the origin).

    Knee ties go to the lower ``ttf_norm``, then the lower ``idleness_norm``.
    """
    if not points:
        raise ValueError("pareto_front needs at least one point")
    xs = [p.idleness_norm for p in points]
    ys = [p.ttf_norm for p in points]
    idx = pareto_indices(xs, ys)
    knee = min(idx, key=lambda i: (math.hypot(xs[i], ys[i]), ys[i], xs[i]))
    return ParetoResult([points[i] for i in idx], points[knee], idx, knee)


def label_medians(points: Iterable[ObjectivePoint]) -> dict:
    """Median normalised idleness and TTF per label."""
    by: dict = defaultdict(lambda: ([], []))
    for p in points:
        by[p.label][0].append(p.idleness_norm)
        by[p.label][1].append(p.ttf_norm)
    return {lab: (float(np.median(a)), float(np.median(b))) for lab, (a, b) in by.items()}


@dataclass(frozen=True)
class BootstrapSummary:
    labels: list
    knee_counts: dict
    pareto_counts: dict
    resamples: int

    @property
    def knee_frequency(self) -> dict:
        return {lab: self.knee_counts[lab] / self.resamples for lab in self.labels}

    @property
    def pareto_frequency(self) -> dict:
        return {lab: self.pareto_counts[lab] / self.resamples for lab in self.labels}


def _group_medians(codes: np.ndarray, values: np.ndarray, n_labels: int):
    """Per-code medians via one sort; codes absent from the sample give NaN."""
    order = np.lexsort((values, codes))
    c = codes[order]
    v = values[order]
    counts = np.bincount(c, minlength=n_labels)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    med = np.full(n_labels, np.nan)
    present = counts > 0
    lo = starts + (counts - 1) // 2
    hi = starts + counts // 2
    med[present] = 0.5 * (v[lo[present]] + v[hi[present]])
    return med


def bootstrap(points: Sequence[ObjectivePoint], resamples: int = 10_000, rng=None) -> BootstrapSummary:
    """Resample normalised records with replacement and tally knee and front membership per label.

    Each resample draws ``len(points)`` rows, recomputes per-label medians and
    extracts the Pareto front among the labels present.
    """
    if not points:
        raise ValueError("bootstrap needs records")
    if rng is None:
        rng = np.random.default_rng()
    labels = sorted({p.label for p in points}, key=_label_sort_key)
    code_of = {lab: i for i, lab in enumerate(labels)}
    codes = np.array([code_of[p.label] for p in points])
    xs = np.array([p.idleness_norm for p in points])
    ys = np.array([p.ttf_norm for p in points])
    n, m = len(points), len(labels)
    knee = np.zeros(m, dtype=np.int64)
    front = np.zeros(m, dtype=np.int64)
    for _ in range(resamples):
        idx = rng.integers(0, n, n)
        c = codes[idx]
        mx = _group_medians(c, xs[idx], m)
        my = _group_medians(c, ys[idx], m)
        present = np.flatnonzero(~np.isnan(mx))
        px = mx[present].tolist()
        py = my[present].tolist()
        f = pareto_indices(px, py)
        k = min(f, key=lambda i: (math.hypot(px[i], py[i]), py[i], px[i]))
        front[present[f]] += 1
        knee[present[k]] += 1
    return BootstrapSummary(labels, dict(zip(labels, knee.tolist())), dict(zip(labels, front.tolist())),
                            resamples)


def _label_sort_key(label):
    return str(label)


# --- Mann-Whitney U ----------------------------------------------------------

class MannWhitneyResult(NamedTuple):
    u: float
    p: float
    r: float


def rankdata(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties given their mean rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = mid
        i = j + 1
    return ranks


EXACT_BELOW = 8


def mann_whitney(sample_a: Sequence[float], sample_b: Sequence[float]) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U for ``sample_a`` with rank-biserial effect size.

    ``U`` counts pairs where a exceeds b (ties count one half). ``r = 1 -
    2U/(n_a n_b)`` is positive when a tends to be smaller. The p-value is an
    exact permutation result when the smaller sample has fewer than 8
    values, otherwise a normal approximation with tie and continuity
    corrections.
    """
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    ranks = rankdata(a + b)
    ra = sum(ranks[:na])
    u = ra - na * (na + 1) / 2.0
    r = 1.0 - 2.0 * u / (na * nb)
    if min(na, nb) < EXACT_BELOW:
        p = _mw_exact_p(ranks, na, u)
    else:
        p = _mw_normal_p(ranks, na, nb, u)
    return MannWhitneyResult(u, p, r)


def _mw_normal_p(ranks: list[float], na: int, nb: int, u: float) -> float:
    n = na + nb
    counts: dict[float, int] = defaultdict(int)
    for v in ranks:
        counts[v] += 1
    ties = sum(t ** 3 - t for t in counts.values())
    var = na * nb / 12.0 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = (abs(u - na * nb / 2.0) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def _mw_exact_p(ranks: list[float], na: int, u: float) -> float:
    """P(|U - mean| >= |u - mean|) over all equally likely splits of the pooled ranks."""
    n = len(ranks)
    nb = n - na
    doubled = [int(round(2 * r)) for r in ranks]
    total = sum(doubled)
    # dp[j][s]: number of j-subsets with doubled-rank sum s
    dp = np.zeros((na + 1, total + 1))
    dp[0, 0] = 1.0
    for w in doubled:
        dp[1:, w:] += dp[:-1, : total + 1 - w].copy()
    sums = np.arange(total + 1)
    two_u = sums - na * (na + 1)  # 2U for each doubled rank sum
    dev = np.abs(two_u - na * nb)
    obs = abs(round(2 * u) - na * nb)
    cnt = dp[na]
    p = cnt[dev >= obs].sum() / cnt.sum()
    return float(min(1.0, p))


# --- Fisher exact --------------------------------------------------------------

class FisherResult(NamedTuple):
    odds_ratio: float
    p: float


def fisher_exact(table) -> FisherResult:
    """Two-sided Fisher exact test on a 2x2 table of counts.

    The odds ratio is the sample ratio ``ad / bc`` (``inf`` when ``bc = 0``).
    The p-value sums the hypergeometric probabilities, margins fixed, of every
    table no more likely than the observed one, in exact integer arithmetic.
    """
    (a, b), (c, d) = table
    for v in (a, b, c, d):
        if int(v) != v or v < 0:
            raise ValueError("table entries must be non-negative integers")
    a, b, c, d = int(a), int(b), int(c), int(d)
    r1, r2, c1 = a + b, c + d, a + c
    if min(r1, r2, c1, b + d) == 0:
        raise ValueError("a margin of the table is zero")
    n = r1 + r2
    lo, hi = max(0, c1 - r2), min(r1, c1)
    weights = {x: math.comb(r1, x) * math.comb(r2, c1 - x) for x in range(lo, hi + 1)}
    w_obs = weights[a]
    num = sum(w for w in weights.values() if w <= w_obs)
    p = float(Fraction(num, math.comb(n, c1)))
    odds = math.inf if b * c == 0 else (a * d) / (b * c)
    return FisherResult(odds, min(1.0, p))


# --- success rates ---------------------------------------------------------------

class SuccessRate(NamedTuple):
    rate: float
    successes: int
    trials: int


def success_rate(records: Iterable[dict]) -> SuccessRate:
    recs = list(records)
    if not recs:
        raise ValueError("no records match the filter")
    s = sum(1 for r in recs if r["success"])
    return SuccessRate(s / len(recs), s, len(recs))

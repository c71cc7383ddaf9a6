"""Two-sample Kolmogorov-Smirnov test and cross-source report aggregation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import fmean
from typing import Mapping, Sequence

from .csstest import ZScanReport
from .errors import ParameterRangeError

__all__ = [
    "KsResult",
    "ComparisonReport",
    "SIGNIFICANCE",
    "EXACT_LIMIT",
    "ks_statistic",
    "ks_two_sample",
    "ks_exact_p",
    "ks_bruteforce_p",
    "five_number",
    "aggregate",
]

SIGNIFICANCE = 0.005
EXACT_LIMIT = 10_000


@dataclass(frozen=True)
class KsResult:
    d: float
    p_value: float
    n: int
    m: int
    method: str


def _d_numerator(xs: Sequence[float], ys: Sequence[float]) -> tuple[int, list[tuple[int, int]]]:
    """Return ``n*m*D`` and the (i, j) lattice point after each distinct pooled value.

    ``i``/``j`` count the x/y observations <= that value, so the ECDF gap there
    is ``|i*m - j*n| / (n*m)``.
    """
    n, m = len(xs), len(ys)
    tagged = sorted([(v, 0) for v in xs] + [(v, 1) for v in ys])
    i = j = 0
    best = 0
    boundaries = []
    for idx, (v, which) in enumerate(tagged):
        if which == 0:
            i += 1
        else:
            j += 1
        if idx + 1 == len(tagged) or tagged[idx + 1][0] != v:
            boundaries.append((i, j))
            best = max(best, abs(i * m - j * n))
    return best, boundaries


def ks_statistic(xs: Sequence[float], ys: Sequence[float]) -> float:
    if not xs or not ys:
        raise ParameterRangeError("both samples must be non-empty")
    num, _ = _d_numerator(xs, ys)
    return num / (len(xs) * len(ys))


def ks_exact_p(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Permutation-exact ``P(D >= d_obs)`` conditional on the pooled multiset.

    Under the null every split of the sorted pooled sample into ``n`` x-labels
    and ``m`` y-labels is equally likely.  Within a run of tied values the
    ECDFs move together, so the gap is only checked where a tie block ends;
    counting lattice paths that reach the threshold at some block end gives
    the tail probability.
    """
    n, m = len(xs), len(ys)
    d_num, boundaries = _d_numerator(xs, ys)
    if d_num == 0:
        return 1.0
    ends = {i + j for i, j in boundaries}
    # paths[i] = number of paths to (i, step - i) that have not yet hit the threshold
    paths = [1] + [0] * n
    total = n + m
    for step in range(1, total + 1):
        nxt = [0] * (n + 1)
        lo = max(0, step - m)
        for i in range(lo, min(n, step) + 1):
            v = 0
            if i > 0:
                v += paths[i - 1]
            if i < step:
                v += paths[i]
            nxt[i] = v
        if step in ends:
            for i in range(lo, min(n, step) + 1):
                if abs(i * m - (step - i) * n) >= d_num:
                    nxt[i] = 0
        paths = nxt
    return float(1 - Fraction(paths[n], math.comb(total, n)))


def _asymptotic_p(d: float, n: int, m: int) -> float:
    from scipy.special import kolmogorov

    return float(kolmogorov(math.sqrt(n * m / (n + m)) * d))


def ks_two_sample(xs: Sequence[float], ys: Sequence[float], method: str = "auto") -> KsResult:
    """Two-sided two-sample KS test.

    ``method="auto"`` is exact whenever ``n*m <= 10**4``.
    """
    xs, ys = list(xs), list(ys)
    if not xs or not ys:
        raise ParameterRangeError("both samples must be non-empty")
    n, m = len(xs), len(ys)
    if method == "auto":
        method = "exact" if n * m <= EXACT_LIMIT else "asymptotic"
    d = ks_statistic(xs, ys)
    if method == "exact":
        p = ks_exact_p(xs, ys)
    elif method == "asymptotic":
        p = 1.0 if d == 0 else _asymptotic_p(d, n, m)
    else:
        raise ParameterRangeError(f"unknown method {method!r}")
    return KsResult(d, min(1.0, max(0.0, p)), n, m, method)


def ks_bruteforce_p(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Enumerate every relabelling of the pooled sample; only for tiny inputs."""
    pooled = list(xs) + list(ys)
    n = len(xs)
    d_obs, _ = _d_numerator(xs, ys)
    hits = total = 0
    for chosen in itertools.combinations(range(len(pooled)), n):
        picked = set(chosen)
        a = [pooled[i] for i in chosen]
        b = [pooled[i] for i in range(len(pooled)) if i not in picked]
        hits += _d_numerator(a, b)[0] >= d_obs
        total += 1
    return hits / total


def _median(sorted_vals: Sequence[float]) -> float:
    k = len(sorted_vals)
    mid = k // 2
    return float(sorted_vals[mid]) if k % 2 else (sorted_vals[mid - 1] + sorted_vals[mid]) / 2


def five_number(values: Sequence[float]) -> dict[str, float]:
    """min, q1, median, q3, max; quartiles are medians of the lower/upper halves.

    For an odd count the middle value belongs to neither half.
    """
    if not values:
        raise ParameterRangeError("no values")
    v = sorted(values)
    half = len(v) // 2
    lower, upper = v[:half], v[len(v) - half:]
    if not lower:
        lower = upper = v
    return {"min": float(v[0]), "q1": _median(lower), "median": _median(v),
            "q3": _median(upper), "max": float(v[-1])}


@dataclass
class ComparisonReport:
    per_source: dict[str, list[float]]
    per_composite_mean: dict[str, dict[int, float]]
    pairwise_p: dict[tuple[str, str], KsResult]
    boxplot: dict[str, dict[str, float]]
    composites: list[int]
    threshold: float = SIGNIFICANCE
    significant: list[tuple[str, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "sources": list(self.per_source),
            "composites": self.composites,
            "per_source": self.per_source,
            "table1": {s: {str(n): v for n, v in row.items()} for s, row in self.per_composite_mean.items()},
            "boxplot": self.boxplot,
            "pairwise": [
                {"a": a, "b": b, "d": r.d, "p_value": r.p_value, "method": r.method,
                 "n": r.n, "m": r.m, "significant": r.p_value < self.threshold}
                for (a, b), r in self.pairwise_p.items()
            ],
            "threshold": self.threshold,
            "significant": [list(pair) for pair in self.significant],
        }


def aggregate(reports: Mapping[str, Sequence[ZScanReport]]) -> ComparisonReport:
    """Compare sources on the per-string average Z-liar count."""
    if len(reports) < 2:
        raise ParameterRangeError("need at least two sources")
    composites = None
    for source, group in reports.items():
        if len(group) < 2:
            raise ParameterRangeError(f"source {source!r} needs at least two reports")
        for rep in group:
            if composites is None:
                composites = rep.composites
            elif rep.composites != composites:
                raise ParameterRangeError(
                    f"composite set {rep.composites} in {source!r} differs from {composites}")
    per_source = {s: [rep.average_metric for rep in group] for s, group in reports.items()}
    table = {
        s: {n: fmean(rep.per_composite[n].zliar_count for rep in group) for n in composites}
        for s, group in reports.items()
    }
    pairwise = {}
    for a, b in itertools.combinations(per_source, 2):
        pairwise[(a, b)] = ks_two_sample(per_source[a], per_source[b])
    significant = [pair for pair, r in pairwise.items() if r.p_value < SIGNIFICANCE]
    box = {s: five_number(v) for s, v in per_source.items()}
    return ComparisonReport(per_source, table, pairwise, box, composites, SIGNIFICANCE, significant)

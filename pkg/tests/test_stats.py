import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from incbench.csstest import CompositeCount, ZScanReport
from incbench.errors import ParameterRangeError
from incbench.stats import (
    aggregate,
    five_number,
    ks_bruteforce_p,
    ks_exact_p,
    ks_statistic,
    ks_two_sample,
)


def enumerate_p(xs, ys):
    """Vectorised permutation oracle over every split of the pooled sample."""
    pooled = np.array(list(xs) + list(ys), dtype=float)
    n, m = len(xs), len(ys)
    grid = np.unique(pooled)
    le = (pooled[None, :] <= grid[:, None]).astype(np.int64)  # values x pooled index

    def gap(mask):
        i = le @ mask
        j = le.sum(axis=1)[:, None] - i
        return np.abs(i * m - j * n).max(axis=0)

    combos = np.array(list(itertools.combinations(range(n + m), n)))
    masks = np.zeros((n + m, len(combos)), dtype=np.int64)
    masks[combos.T, np.arange(len(combos))] = 1
    observed = gap(np.r_[np.ones(n, int), np.zeros(m, int)][:, None])[0]
    return float((gap(masks) >= observed).mean())


def test_separated_samples():
    r = ks_two_sample(range(1, 11), range(11, 21))
    assert r.d == 1 and r.method == "exact"
    assert abs(r.p_value - 2 / math.comb(20, 10)) < 1e-12


def test_identical_samples():
    r = ks_two_sample([3, 1, 2, 2], [2, 1, 3, 2])
    assert r.d == 0 and r.p_value == 1


@pytest.mark.parametrize("seed", range(50))
def test_exact_matches_bruteforce_tied_5v5(seed):
    rng = np.random.default_rng(seed)
    xs, ys = rng.integers(0, 4, 5).tolist(), rng.integers(0, 4, 5).tolist()
    assert ks_exact_p(xs, ys) == pytest.approx(ks_bruteforce_p(xs, ys), abs=1e-12)
    assert ks_exact_p(xs, ys) == pytest.approx(enumerate_p(xs, ys), abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_exact_matches_enumeration_10v10(seed):
    rng = np.random.default_rng(100 + seed)
    xs, ys = rng.integers(0, 6, 10).tolist(), (rng.integers(0, 6, 10) + seed % 2).tolist()
    assert ks_exact_p(xs, ys) == pytest.approx(enumerate_p(xs, ys), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=7), st.lists(st.integers(0, 5), min_size=1, max_size=7))
def test_exact_unequal_sizes(xs, ys):
    assert ks_exact_p(xs, ys) == pytest.approx(enumerate_p(xs, ys), abs=1e-12)


def test_statistic_symmetric():
    xs, ys = [0.1, 0.4, 0.4, 0.9], [0.2, 0.4, 0.5]
    assert ks_statistic(xs, ys) == ks_statistic(ys, xs)


def test_asymptotic_close_to_exact_at_100():
    rng = np.random.default_rng(3)
    xs, ys = rng.normal(0, 1, 100), rng.normal(0.3, 1, 100)
    exact = ks_two_sample(xs, ys, method="exact").p_value
    approx = ks_two_sample(xs, ys).p_value
    assert ks_two_sample(xs, ys).method == "exact"
    assert abs(ks_two_sample(xs, ys, method="asymptotic").p_value - exact) < 0.01
    assert approx == exact
    assert ks_two_sample(rng.random(101), rng.random(100)).method == "asymptotic"


def test_empty_sample_rejected():
    with pytest.raises(ParameterRangeError):
        ks_two_sample([], [1])


@pytest.mark.parametrize("values,expected", [
    ([1, 2, 3, 4], (1, 1.5, 2.5, 3.5, 4)),
    ([1, 2, 3, 4, 5], (1, 1.5, 3, 4.5, 5)),
    ([7], (7, 7, 7, 7, 7)),
])
def test_five_number(values, expected):
    s = five_number(values)
    assert (s["min"], s["q1"], s["median"], s["q3"], s["max"]) == expected


def report(counts, source="s"):
    per = {n: CompositeCount(c, 100) for n, c in zip((9, 15, 21), counts)}
    return ZScanReport(source, 1000, 1, per)


def test_aggregate_identical_sources():
    group = [report([i, 0, 1]) for i in range(5)]
    cmp = aggregate({"a": group, "b": list(group)})
    assert cmp.pairwise_p[("a", "b")].p_value == 1
    assert cmp.significant == []
    assert cmp.per_composite_mean["a"] == {9: 2, 15: 0, 21: 1}


def test_aggregate_separated_sources():
    lo = [report([i, 0, 0]) for i in range(10)]
    hi = [report([30 + i, 30, 30]) for i in range(10)]
    mid = [report([i, 0, 1]) for i in range(10)]
    cmp = aggregate({"lo": lo, "hi": hi, "mid": mid})
    assert cmp.pairwise_p[("lo", "hi")].p_value == pytest.approx(2 / math.comb(20, 10))
    assert ("lo", "hi") in cmp.significant and ("lo", "mid") not in cmp.significant
    d = cmp.as_dict()
    assert list(d["table1"]) == ["lo", "hi", "mid"] and len(d["pairwise"]) == 3


def test_aggregate_mismatched_composites():
    other = ZScanReport("b", 1000, 1, {9: CompositeCount(0, 1), 25: CompositeCount(0, 1)})
    with pytest.raises(ParameterRangeError):
        aggregate({"a": [report([0, 0, 0])] * 2, "b": [other] * 2})

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from incbench.csstest import default_composites
from incbench.errors import BitSourceExhausted, NotComposite, ParameterRangeError
from incbench.numth import (
    Verdict,
    euler_liars,
    is_carmichael,
    is_prime,
    jacobi,
    mod_pow,
    solovay_strassen,
    ss_witness,
    totient,
)

PRIMES = [p for p in range(5, 1000) if all(p % d for d in range(2, int(p**0.5) + 1))]


def jacobi_by_factoring(a, n):
    """Product of Legendre symbols (Euler's criterion) over the prime factors of n."""
    result, m, d = 1, n, 3
    while m > 1:
        while d * d <= m and m % d:
            d += 2
        p = m if d * d > m else d
        m //= p
        e = pow(a, (p - 1) // 2, p)
        result *= 0 if a % p == 0 else (1 if e == 1 else -1)
    return result


@pytest.mark.parametrize("a,n,v", [(1, 9, 1), (3, 9, 0), (14, 15, -1)])
def test_jacobi_examples(a, n, v):
    assert jacobi(a, n) == v


@given(st.integers(0, 10**6), st.integers(1, 5000).map(lambda x: 2 * x + 1))
def test_jacobi_matches_factor_oracle(a, n):
    assert jacobi(a, n) == jacobi_by_factoring(a, n)


@given(st.integers(0, 500), st.integers(0, 500), st.integers(1, 500).map(lambda x: 2 * x + 1))
def test_jacobi_multiplicative(a, b, n):
    assert jacobi(a * b, n) == jacobi(a, n) * jacobi(b, n)


@pytest.mark.parametrize("n", [0, -3, 8])
def test_jacobi_rejects_bad_modulus(n):
    with pytest.raises(ParameterRangeError):
        jacobi(1, n)


@given(st.integers(0, 2**80), st.integers(0, 2**40), st.integers(1, 2**64))
def test_mod_pow_matches_builtin(b, e, n):
    assert mod_pow(b, e, n) == pow(b, e, n)


def test_mod_pow_examples():
    assert mod_pow(2, 4, 9) == 7
    assert mod_pow(14, 7, 15) == 14
    assert mod_pow(12345, 0, 7) == 1
    with pytest.raises(ParameterRangeError):
        mod_pow(2, 3, 0)


def test_witness_examples():
    assert not ss_witness(1, 9)
    assert ss_witness(2, 9)
    assert not any(ss_witness(i, 7) for i in range(1, 7))


def test_primes_have_no_witness():
    for p in PRIMES:
        assert not any(ss_witness(i, p) for i in range(1, p))


def test_liar_examples():
    assert euler_liars(9).liars == {1, 8} and euler_liars(9).beta == Fraction(1, 4)
    assert euler_liars(15).liars == {1, 14} and euler_liars(15).beta == Fraction(1, 7)
    with pytest.raises(NotComposite):
        euler_liars(7)
    for bad in (3, 10):
        with pytest.raises(ParameterRangeError):
            euler_liars(bad)


def test_liars_bounded_by_half_totient():
    for n in range(9, 400, 2):
        if is_prime(n):
            continue
        prof = euler_liars(n)
        assert len(prof.liars) <= totient(n) // 2
        assert all(math.gcd(i, n) == 1 for i in prof.liars)
        assert 2 * (n - 1 - len(prof.liars)) >= n - 1


def test_monte_carlo_beta_within_three_sigma():
    draws = random.Random(7)
    for n in default_composites():
        beta = float(euler_liars(n).beta)
        trials = 100_000
        hits = sum(not ss_witness(draws.randint(1, n - 1), n) for _ in range(trials))
        sigma = math.sqrt(beta * (1 - beta) / trials)
        assert abs(hits / trials - beta) <= 3 * sigma + 1e-12


def brute_carmichael(n):
    if n < 3 or is_prime(n):
        return False
    return all(pow(b, n - 1, n) == 1 for b in range(2, n) if math.gcd(b, n) == 1)


def test_carmichael_below_2000():
    found = [n for n in range(2000) if is_carmichael(n)]
    assert found == [561, 1105, 1729]
    assert found == [n for n in range(2000) if brute_carmichael(n)]
    assert not is_carmichael(9) and not is_carmichael(7)


def bits_for_bases(bases, n):
    width = (n - 2).bit_length()
    for b in bases:
        yield from (int(c) for c in format(b - 1, f"0{width}b"))


def test_solovay_strassen_examples():
    rng = random.Random(1)
    noise = iter(lambda: rng.getrandbits(1), 2)
    assert solovay_strassen(13, 20, noise) is Verdict.PROBABLE_PRIME
    assert solovay_strassen(15, 14, bits_for_bases(range(1, 15), 15)) is Verdict.COMPOSITE
    assert solovay_strassen(9, 5, bits_for_bases([1] * 5, 9)) is Verdict.PROBABLE_PRIME


def test_solovay_strassen_exhausted_source():
    with pytest.raises(BitSourceExhausted):
        solovay_strassen(15, 3, iter([0, 0]))

"""Number theory for the Solovay-Strassen predicate and its liars."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import BitSourceExhausted, NotComposite, ParameterRangeError

__all__ = [
    "LiarProfile",
    "Verdict",
    "jacobi",
    "mod_pow",
    "is_prime",
    "totient",
    "ss_witness",
    "euler_liars",
    "is_carmichael",
    "solovay_strassen",
]


def jacobi(i: int, n: int) -> int:
    """Jacobi symbol (i/n) for odd positive ``n``."""
    if n <= 0 or n % 2 == 0:
        raise ParameterRangeError(f"Jacobi symbol needs an odd positive modulus, got {n}")
    if i < 0:
        raise ParameterRangeError("i must be non-negative")
    i %= n
    result = 1
    while i:
        while i % 2 == 0:
            i //= 2
            if n % 8 in (3, 5):
                result = -result
        i, n = n, i
        if i % 4 == 3 and n % 4 == 3:
            result = -result
        i %= n
    return result if n == 1 else 0


def mod_pow(b: int, e: int, n: int) -> int:
    """``b**e mod n`` by left-to-right square-and-multiply."""
    if n <= 0:
        raise ParameterRangeError("modulus must be positive")
    if e < 0:
        raise ParameterRangeError("exponent must be non-negative")
    if n == 1:
        return 0
    b %= n
    result = 1
    for bit in bin(e)[2:]:
        result = result * result % n
        if bit == "1":
            result = result * b % n
    return result


def is_prime(n: int) -> bool:
    """Deterministic trial division; fine for the small moduli used here."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % p for p in range(3, math.isqrt(n) + 1, 2))


def totient(n: int) -> int:
    result = n
    p = 2
    rest = n
    while p * p <= rest:
        if rest % p == 0:
            while rest % p == 0:
                rest //= p
            result -= result // p
        p += 1
    if rest > 1:
        result -= result // rest
    return result


def ss_witness(i: int, n: int) -> bool:
    """True iff ``i`` witnesses the compositeness of ``n``.

    The predicate is ``(i/n) * i**((n-1)/2) != 1 (mod n)``.  Bases sharing a
    factor with ``n`` give a zero Jacobi symbol and are therefore witnesses.
    """
    if n <= 3 or n % 2 == 0:
        raise ParameterRangeError(f"n must be odd and greater than 3, got {n}")
    if not 1 <= i <= n - 1:
        raise ParameterRangeError(f"base {i} outside [1, {n - 1}]")
    return (jacobi(i, n) * mod_pow(i, (n - 1) // 2, n)) % n != 1


@dataclass(frozen=True)
class LiarProfile:
    n: int
    liars: frozenset[int]
    beta: Fraction

    def as_dict(self) -> dict:
        return {"n": self.n, "liars": sorted(self.liars), "beta": float(self.beta)}


def _check_odd_composite(n: int) -> None:
    if n <= 3 or n % 2 == 0:
        raise ParameterRangeError(f"n must be an odd integer greater than 3, got {n}")
    if is_prime(n):
        raise NotComposite(f"{n} is prime")


def euler_liars(n: int) -> LiarProfile:
    """Enumerate every base in [1, n-1] that fails to witness ``n``."""
    _check_odd_composite(n)
    liars = frozenset(i for i in range(1, n) if not ss_witness(i, n))
    return LiarProfile(n, liars, Fraction(len(liars), n - 1))


def is_carmichael(n: int) -> bool:
    """Composite n with b**(n-1) == 1 (mod n) for every coprime b, by brute force."""
    if n <= 3 or is_prime(n):
        return False
    # Carmichael numbers are odd; skip the loop for even n.
    if n % 2 == 0:
        return False
    return all(
        pow(b, n - 1, n) == 1 for b in range(2, n) if math.gcd(b, n) == 1
    )


class Verdict(enum.Enum):
    COMPOSITE = "composite"
    PROBABLE_PRIME = "probable-prime"


def _draw_base(bits: Iterator[int], n: int) -> int:
    """Uniform base in [1, n-1] by rejection sampling MSB-first bit groups."""
    width = (n - 2).bit_length()
    while True:
        v = 0
        for _ in range(width):
            try:
                v = (v << 1) | (next(bits) & 1)
            except StopIteration:
                raise BitSourceExhausted("bit source ran dry while sampling a base") from None
        if v <= n - 2:
            return v + 1


def solovay_strassen(n: int, k: int, rng: Iterable[int]) -> Verdict:
    """Run ``k`` rounds with bases drawn from the bit source ``rng``."""
    if n <= 3 or n % 2 == 0:
        raise ParameterRangeError(f"n must be odd and greater than 3, got {n}")
    if k < 1:
        raise ParameterRangeError("k must be at least 1")
    bits = iter(rng)
    for _ in range(k):
        if ss_witness(_draw_base(bits, n), n):
            return Verdict.COMPOSITE
    return Verdict.PROBABLE_PRIME

"""The fourth Chaitin-Schwartz-Solovay-Strassen (CSS4) test.

For a composite ``n`` with an ``l``-bit binary representation the test fixes
``c = l - 1`` and reads chunks of ``m = l * (l + 2c)`` bits.  Each chunk is
rewritten in base ``n - 1``; the chunk is a *Z-liar* when every digit
``d_0 .. d_{k-1}`` gives a base ``1 + d_j`` that fails to witness ``n``.
``scan`` slides that window over a long bit string and counts Z-liars.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Sequence

import numpy as np

from .bitio import BitString, chunk_to_digits, digit_count
from .errors import NotComposite, ParameterRangeError
from .numth import LiarProfile, euler_liars, is_prime, ss_witness

__all__ = [
    "CompositeProfile",
    "CompositeCount",
    "ZScanReport",
    "composite_profile",
    "z_predicate",
    "scan",
    "default_composites",
    "expected_zliar_rate",
    "window_count",
    "scan_reference",
]

DEFAULT_POSITION_CAP = 1000

# bit-reversal table: stream order (MSB-first) -> little-endian significance
_REVERSE = np.array([int(f"{b:08b}"[::-1], 2) for b in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class CompositeProfile:
    n: int
    l: int
    c: int
    m: int
    k: int
    liar_profile: LiarProfile

    @property
    def allowed_digits(self) -> frozenset[int]:
        """Digits ``d`` whose base ``1 + d`` is a liar."""
        return frozenset(i - 1 for i in self.liar_profile.liars)

    def as_dict(self) -> dict:
        return {"n": self.n, "l": self.l, "c": self.c, "m": self.m, "k": self.k,
                "liars": sorted(self.liar_profile.liars),
                "beta": float(self.liar_profile.beta)}


def composite_profile(n: int, *, allow_prime: bool = False) -> CompositeProfile:
    """Test geometry for ``n``.

    ``allow_prime`` admits prime ``n`` (every base is then a liar); it exists
    so the prime direction of the Z-predicate can be exercised.
    """
    if n % 2 == 0:
        raise ParameterRangeError(f"n must be odd, got {n}")
    if n < 9 and not (allow_prime and n > 3):
        raise ParameterRangeError(f"n must be at least 9, got {n}")
    if is_prime(n):
        if not allow_prime:
            raise NotComposite(f"{n} is prime")
        liars = LiarProfile(n, frozenset(range(1, n)), 1)
    else:
        liars = euler_liars(n)
    l = n.bit_length()
    c = l - 1
    m = l * (l + 2 * c)
    return CompositeProfile(n, l, c, m, digit_count(n, m), liars)


def default_composites() -> list[int]:
    """Odd composites below 50."""
    return [n for n in range(9, 50, 2) if not is_prime(n)]


def z_predicate(s: BitString, profile: CompositeProfile) -> bool:
    if len(s) != profile.m:
        raise ParameterRangeError(f"chunk has {len(s)} bits, n={profile.n} needs {profile.m}")
    digits = chunk_to_digits(s, profile.n)
    n = profile.n
    # d_k is deliberately left out
    return all(not ss_witness(1 + digits[j], n) for j in range(profile.k))


def expected_zliar_rate(profile: CompositeProfile) -> float:
    """Per-window Z-liar probability if ``d_0 .. d_{k-1}`` were i.i.d. uniform."""
    return (len(profile.allowed_digits) / (profile.n - 1)) ** profile.k


@dataclass
class CompositeCount:
    zliar_count: int
    windows: int
    positions: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"zliar_count": self.zliar_count, "windows": self.windows,
                "positions": list(self.positions)}


@dataclass
class ZScanReport:
    source_id: str
    input_length: int
    offset_step: int
    per_composite: dict[int, CompositeCount]

    @property
    def average_metric(self) -> float:
        return fmean(c.zliar_count for c in self.per_composite.values())

    @property
    def composites(self) -> list[int]:
        return sorted(self.per_composite)

    def as_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "input_length": self.input_length,
            "offset_step": self.offset_step,
            "composites": self.composites,
            "per_composite": {str(n): self.per_composite[n].as_dict() for n in self.composites},
            "average_metric": self.average_metric,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ZScanReport":
        per = {
            int(n): CompositeCount(int(v["zliar_count"]), int(v.get("windows", 0)),
                                   list(v.get("positions", [])))
            for n, v in d["per_composite"].items()
        }
        return cls(d.get("source_id", ""), int(d["input_length"]), int(d["offset_step"]), per)


def window_count(length: int, m: int, step: int) -> int:
    return 0 if length < m else (length - m) // step + 1


class _Prepared:
    """Stream views shared by every composite and shard of one scan."""

    def __init__(self, b: BitString):
        packed = np.frombuffer(b.data, dtype=np.uint8)
        self.bits = np.unpackbits(packed, count=b.length)
        # 16 bytes of slack so 8-byte limb loads never run off the end
        self.rbytes = np.concatenate([_REVERSE[packed], np.zeros(16, dtype=np.uint8)])
        self.length = b.length


def _kernel_args(profile: CompositeProfile):
    q = profile.n - 1
    a = (q & -q).bit_length() - 1
    r = q >> a
    allowed = np.zeros(q, dtype=np.uint8)
    for d in profile.allowed_digits:
        allowed[d] = 1
    crt = np.zeros(q, dtype=np.uint8)
    for d in range(q):
        crt[(d & ((1 << a) - 1)) * r + d % r] = allowed[d]
    topc = pow(2, profile.m - 1, r)
    return q, allowed, crt, a, r, topc


def _shard_bounds(windows: int, shards: int) -> list[tuple[int, int]]:
    shards = max(1, min(shards, windows)) if windows else 1
    edges = [windows * i // shards for i in range(shards + 1)]
    return list(zip(edges[:-1], edges[1:]))


def scan(
    input: BitString,
    composites: Sequence[int] | None = None,
    offset_step: int = 1,
    *,
    threads: int = 1,
    shards: int | None = None,
    max_positions: int = DEFAULT_POSITION_CAP,
    source_id: str = "",
) -> ZScanReport:
    """Count Z-liars at offsets ``0, step, 2*step, ...`` for each composite.

    The offset range of each composite is cut into ``shards`` contiguous
    pieces (default: one per thread).  Shard results are merged by summing
    counts and keeping the smallest ``max_positions`` hit offsets, so the
    report does not depend on ``threads`` or ``shards``.
    """
    from ._kernel import count_zliars

    if composites is None:
        composites = default_composites()
    composites = list(composites)
    if not composites:
        raise ParameterRangeError("composite list is empty")
    if offset_step < 1:
        raise ParameterRangeError("offset_step must be at least 1")
    if len(set(composites)) != len(composites):
        raise ParameterRangeError("duplicate composites")
    threads = max(1, int(threads))
    shards = threads if shards is None else max(1, int(shards))
    profiles = [composite_profile(n) for n in composites]
    prep = _Prepared(input)

    tasks = []
    for prof in profiles:
        q, allowed, crt, a, r, topc = _kernel_args(prof)
        windows = window_count(prep.length, prof.m, offset_step)
        for lo, hi in _shard_bounds(windows, shards):
            tasks.append((prof.n, lo, hi, (offset_step, prof.m, q, prof.k, allowed, crt, a, r, topc)))

    def run(task):
        n, lo, hi, args = task
        positions = np.zeros(max_positions, dtype=np.int64)
        if hi <= lo:
            return n, 0, []
        count, stored = count_zliars(prep.bits, prep.rbytes, lo, hi, *args, positions)
        return n, int(count), positions[:stored].tolist()

    if threads == 1:
        results = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))

    per: dict[int, CompositeCount] = {}
    for prof in profiles:
        per[prof.n] = CompositeCount(0, window_count(prep.length, prof.m, offset_step))
    for n, count, positions in results:
        entry = per[n]
        entry.zliar_count += count
        entry.positions.extend(positions)
    for entry in per.values():
        entry.positions = sorted(entry.positions)[:max_positions]
    return ZScanReport(source_id, prep.length, offset_step, per)


def scan_reference(input: BitString, composites: Iterable[int], offset_step: int = 1) -> dict[int, int]:
    """Window-by-window recount through ``z_predicate``; slow, for cross-checks."""
    out = {}
    bits = input.to_array()
    for n in composites:
        prof = composite_profile(n)
        hits = 0
        for p in range(0, len(input) - prof.m + 1, offset_step):
            hits += z_predicate(BitString.from_bits(bits[p:p + prof.m]), prof)
        out[n] = hits
    return out


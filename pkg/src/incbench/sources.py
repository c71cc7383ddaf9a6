"""Deterministic reference bit sources.

Every generator is a pure function of ``(SourceSpec, bit count)`` and the
output for ``m`` bits is a prefix of the output for any longer request.
"""

from __future__ import annotations

import hashlib
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bitio import BitString, champernowne, read_rbf, read_sidecar, write_rbf, write_sidecar
from .errors import ParameterRangeError

__all__ = [
    "SourceSpec",
    "MT19937",
    "mt19937_bits",
    "hashctr_bits",
    "hashctr_words",
    "generate",
    "bits_for",
    "KINDS",
]

KINDS = ("mt19937", "hashctr", "champernowne", "file", "qsim")
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterRangeError(f"unknown source kind {self.kind!r}; expected one of {KINDS}")
        if not 0 <= self.seed <= _U64:
            raise ParameterRangeError("seed must be an unsigned 64-bit integer")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "params": dict(self.params)}


class MT19937:
    """Plain-Python MT19937 (32-bit), straight from the published recurrence.

    Seeds below 2**32 go through ``init_genrand``; wider seeds are split into
    little-endian 32-bit words and fed to ``init_by_array``.
    """

    N, M = 624, 397
    MATRIX_A = 0x9908B0DF
    UPPER, LOWER = 0x80000000, 0x7FFFFFFF

    def __init__(self, seed: int = 5489):
        if seed < (1 << 32):
            self.mt = self._init_genrand(seed)
        else:
            key = []
            while seed:
                key.append(seed & 0xFFFFFFFF)
                seed >>= 32
            self.mt = self._init_by_array(key)
        self.index = self.N

    @classmethod
    def _init_genrand(cls, s: int) -> list[int]:
        mt = [0] * cls.N
        mt[0] = s & 0xFFFFFFFF
        for i in range(1, cls.N):
            mt[i] = (1812433253 * (mt[i - 1] ^ (mt[i - 1] >> 30)) + i) & 0xFFFFFFFF
        return mt

    @classmethod
    def _init_by_array(cls, key: list[int]) -> list[int]:
        mt = cls._init_genrand(19650218)
        n = cls.N
        i, j = 1, 0
        for _ in range(max(n, len(key))):
            mt[i] = ((mt[i] ^ ((mt[i - 1] ^ (mt[i - 1] >> 30)) * 1664525)) + key[j] + j) & 0xFFFFFFFF
            i += 1
            j += 1
            if i >= n:
                mt[0] = mt[n - 1]
                i = 1
            if j >= len(key):
                j = 0
        for _ in range(n - 1):
            mt[i] = ((mt[i] ^ ((mt[i - 1] ^ (mt[i - 1] >> 30)) * 1566083941)) - i) & 0xFFFFFFFF
            i += 1
            if i >= n:
                mt[0] = mt[n - 1]
                i = 1
        mt[0] = 0x80000000
        return mt

    def _twist(self) -> None:
        mt = self.mt
        for i in range(self.N):
            y = (mt[i] & self.UPPER) | (mt[(i + 1) % self.N] & self.LOWER)
            mt[i] = mt[(i + self.M) % self.N] ^ (y >> 1) ^ (self.MATRIX_A if y & 1 else 0)
        self.index = 0

    def next_u32(self) -> int:
        if self.index >= self.N:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= y >> 11
        y ^= (y << 7) & 0x9D2C5680
        y ^= (y << 15) & 0xEFC60000
        y ^= y >> 18
        return y


def _mt_words(seed: int, count: int) -> np.ndarray:
    """``count`` MT19937 outputs; numpy runs the recurrence from our seeded state."""
    state = MT19937(seed)
    bitgen = np.random.MT19937()
    bitgen.state = {"bit_generator": "MT19937",
                    "state": {"key": np.array(state.mt, dtype=np.uint32), "pos": MT19937.N}}
    return bitgen.random_raw(count).astype(">u4")


def _words_to_bits(words_be: np.ndarray, m: int) -> BitString:
    return BitString.from_bytes(words_be.tobytes(), m)


def mt19937_bits(seed: int, m: int) -> BitString:
    """MT19937 output words, each serialised MSB-first, truncated to ``m`` bits."""
    if m < 0:
        raise ParameterRangeError("m must be non-negative")
    return _words_to_bits(_mt_words(seed, (m + 31) // 32), m)


def hashctr_bytes(seed: int, nbytes: int) -> bytes:
    """SHA3-256(seed_be64 || counter_be64) for counter = 0, 1, ... concatenated."""
    prefix = (seed & _U64).to_bytes(8, "big")
    blocks = (nbytes + 31) // 32
    sha3 = hashlib.sha3_256
    out = b"".join(sha3(prefix + ctr.to_bytes(8, "big")).digest() for ctr in range(blocks))
    return out[:nbytes]


def hashctr_bits(seed: int, m: int) -> BitString:
    if m < 0:
        raise ParameterRangeError("m must be non-negative")
    return BitString.from_bytes(hashctr_bytes(seed, (m + 7) // 8), m)


def hashctr_words(seed: int, count: int) -> np.ndarray:
    """``count`` unsigned 32-bit words read big-endian from the hash-counter stream."""
    return np.frombuffer(hashctr_bytes(seed, 4 * count), dtype=">u4").astype(np.uint32)


def bits_for(spec: SourceSpec, m: int) -> BitString:
    """Materialise ``m`` bits of a non-file source."""
    if spec.kind == "mt19937":
        return mt19937_bits(spec.seed, m)
    if spec.kind == "hashctr":
        return hashctr_bits(spec.seed, m)
    if spec.kind == "champernowne":
        return champernowne(m)
    if spec.kind == "qsim":
        from .bitio import morphism_phi
        from .qsim import ConfusionMatrix, ProtocolSpec, sample_trits

        protocol = ProtocolSpec.named(spec.params.get("protocol", "fig2"))
        noise = ConfusionMatrix.parse(spec.params.get("noise", "default"))
        return morphism_phi(sample_trits(protocol, noise, m, spec.seed))
    raise ParameterRangeError(f"source kind {spec.kind!r} needs an input file")


def generate(spec: SourceSpec, m: int | None, out, *, input=None, **sidecar) -> BitString:
    """Write ``m`` bits of ``spec`` to ``out`` (.rbf) with a sidecar describing it.

    ``kind="file"`` copies ``input`` verbatim; ``m`` may then be ``None``.
    """
    out = Path(out)
    if spec.kind == "file":
        if input is None:
            raise ParameterRangeError("kind=file needs an input path")
        full = read_rbf(input)
        if m is not None and m > len(full):
            raise ParameterRangeError(f"{input} holds only {len(full)} bits, {m} requested")
        src = full if m is None else BitString.from_bytes(full.data, m)
        if src.length == full.length:
            shutil.copyfile(input, out)
        else:
            out.write_bytes(src.data)
        meta = {"length_bits": src.length, "source": "file", "seed": None,
                "origin": str(input), "upstream": read_sidecar(input)}
        meta.update(sidecar)
        write_sidecar(out, meta)
        return src
    if m is None or m < 0:
        raise ParameterRangeError("bit count must be a non-negative integer")
    bits = bits_for(spec, m)
    write_rbf(out, bits, source=spec.kind, seed=spec.seed, params=dict(spec.params), **sidecar)
    return bits


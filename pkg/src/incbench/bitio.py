"""Bit/trit containers, on-disk formats and digit extraction.

Bits are packed MSB-first within each byte, both in memory and in ``.rbf``
files.  Trits are kept one per byte in memory and packed two bits per trit
(MSB-first) in ``.rtf`` files.  Both file kinds carry a JSON sidecar
``<file>.json`` holding the exact length and provenance metadata.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import FormatError, ParameterRangeError

__all__ = [
    "BitString",
    "TritString",
    "DigitVector",
    "morphism_phi",
    "champernowne",
    "digit_count",
    "chunk_value",
    "chunk_to_digits",
    "read_rbf",
    "write_rbf",
    "read_rtf",
    "write_rtf",
    "read_sidecar",
    "write_sidecar",
]


@dataclass(frozen=True)
class BitString:
    """Immutable packed bit sequence.

    ``data`` holds ``ceil(length / 8)`` bytes, MSB-first, with the unused
    low bits of the final byte cleared.
    """

    data: bytes
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ParameterRangeError("length must be non-negative")
        nbytes = (self.length + 7) // 8
        if len(self.data) != nbytes:
            raise FormatError(f"{len(self.data)} bytes cannot hold exactly {self.length} bits")
        pad = 8 * nbytes - self.length
        if pad and self.data[-1] & ((1 << pad) - 1):
            raise FormatError("trailing pad bits must be zero")

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> "BitString":
        arr = np.asarray(bits if isinstance(bits, np.ndarray) else list(bits), dtype=np.uint8)
        if arr.ndim != 1:
            raise ParameterRangeError("bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ParameterRangeError("bits must be 0 or 1")
        return cls(np.packbits(arr).tobytes(), int(arr.size))

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        return cls.from_bits(int(ch) for ch in text)

    @classmethod
    def from_bytes(cls, data: bytes, length: int | None = None) -> "BitString":
        """Wrap ``data``; ``length`` defaults to every bit, otherwise the tail is dropped."""
        if length is None:
            length = 8 * len(data)
        if length > 8 * len(data):
            raise FormatError(f"{length} bits requested from {len(data)} bytes")
        nbytes = (length + 7) // 8
        raw = bytearray(data[:nbytes])
        pad = 8 * nbytes - length
        if pad:
            raw[-1] &= 0xFF ^ ((1 << pad) - 1)
        return cls(bytes(raw), length)

    def to_array(self) -> np.ndarray:
        """Unpacked ``uint8`` array of 0/1 values."""
        buf = np.frombuffer(self.data, dtype=np.uint8)
        return np.unpackbits(buf, count=self.length)

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        return iter(self.to_array().tolist())

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return BitString.from_bits(self.to_array()[idx])
        if idx < 0:
            idx += self.length
        if not 0 <= idx < self.length:
            raise IndexError(idx)
        return (self.data[idx >> 3] >> (7 - (idx & 7))) & 1

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.to_array())

    def count_ones(self) -> int:
        return int(np.unpackbits(np.frombuffer(self.data, dtype=np.uint8)).sum())

    def __add__(self, other: "BitString") -> "BitString":
        return BitString.from_bits(np.concatenate([self.to_array(), other.to_array()]))


@dataclass(frozen=True)
class TritString:
    """Immutable sequence over {0, 1, 2}, stored one trit per byte."""

    trits: bytes

    def __post_init__(self):
        if self.trits and max(self.trits) > 2:
            raise FormatError("trit values must be 0, 1 or 2")

    @classmethod
    def from_trits(cls, trits: Iterable[int] | np.ndarray) -> "TritString":
        arr = np.asarray(trits if isinstance(trits, np.ndarray) else list(trits))
        if arr.size and (arr.min() < 0 or arr.max() > 2):
            raise FormatError("trit values must be 0, 1 or 2")
        return cls(arr.astype(np.uint8).tobytes())

    @property
    def length(self) -> int:
        return len(self.trits)

    def __len__(self) -> int:
        return len(self.trits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.trits)

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.trits, dtype=np.uint8)


@dataclass(frozen=True)
class DigitVector:
    """Base-``base`` digits, least significant first (``digits[i]`` is d_i)."""

    digits: tuple[int, ...]
    base: int

    def value(self) -> int:
        total = 0
        for d in reversed(self.digits):
            total = total * self.base + d
        return total

    def __len__(self) -> int:
        return len(self.digits)

    def __getitem__(self, i: int) -> int:
        return self.digits[i]


def morphism_phi(t: TritString) -> BitString:
    """Map trits to bits element-wise: 1 -> 1, and both 0 and 2 -> 0."""
    return BitString.from_bits((t.to_array() == 1).astype(np.uint8))


def champernowne(m: int) -> BitString:
    """First ``m`` bits of the binary Champernowne sequence 0,1,00,01,10,11,000,..."""
    if m < 0:
        raise ParameterRangeError("m must be non-negative")
    parts = []
    total = 0
    width = 1
    while total < m:
        # all strings of this width in lexicographic order, one row per string
        values = np.arange(1 << width, dtype=np.uint64)
        shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
        block = ((values[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()
        parts.append(block[: m - total])
        total += min(block.size, m - total)
        width += 1
    bits = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
    return BitString.from_bits(bits)


def digit_count(n: int, m: int) -> int:
    """Smallest ``k`` with ``(n-1)**(k+1) > 2**m - 1``.

    A chunk of ``m`` bits then has exactly ``k + 1`` base-``(n-1)`` digits.
    """
    if n <= 2:
        raise ParameterRangeError("n must exceed 2")
    if m < 1:
        raise ParameterRangeError("m must be positive")
    base = n - 1
    limit = (1 << m) - 1
    k = 0
    power = base
    while power <= limit:
        power *= base
        k += 1
    return k


def chunk_value(s: BitString) -> int:
    """Integer with stream bit t contributing 2**t (first bit least significant)."""
    bits = s.to_array()[::-1]
    if bits.size == 0:
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="big").tobytes(), "big") >> ((-bits.size) % 8)


def chunk_to_digits(s: BitString, n: int) -> DigitVector:
    """Rewrite the chunk's value in base ``n - 1`` as exactly ``k + 1`` digits."""
    if n <= 2 or n % 2 == 0:
        raise ParameterRangeError("n must be odd and greater than 2")
    if len(s) < 1:
        raise ParameterRangeError("chunk must be non-empty")
    k = digit_count(n, len(s))
    value = chunk_value(s)
    base = n - 1
    digits = []
    for _ in range(k + 1):
        value, d = divmod(value, base)
        digits.append(d)
    return DigitVector(tuple(digits), base)


# --- file formats -----------------------------------------------------------


def _sidecar_path(path: str | os.PathLike) -> Path:
    return Path(f"{os.fspath(path)}.json")


def read_sidecar(path: str | os.PathLike) -> dict | None:
    side = _sidecar_path(path)
    if not side.exists():
        return None
    try:
        return json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable sidecar {side}: {exc}") from exc


def write_sidecar(path, meta: dict) -> None:
    """Write ``<path>.json``; a ``created`` timestamp is added unless present."""
    meta = dict(meta)
    meta.setdefault("created", datetime.now(timezone.utc).isoformat(timespec="seconds"))
    _sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_rbf(path: str | os.PathLike, b: BitString, *, source: str | None = None,
              seed: int | None = None, **extra) -> None:
    """Write headerless packed bits plus the ``<path>.json`` sidecar."""
    Path(path).write_bytes(b.data)
    meta = {"length_bits": b.length, "source": source, "seed": seed}
    meta.update(extra)
    write_sidecar(path, meta)


def read_rbf(path: str | os.PathLike) -> BitString:
    data = Path(path).read_bytes()
    meta = read_sidecar(path)
    if meta is None or "length_bits" not in meta:
        return BitString(data, 8 * len(data))
    length = int(meta["length_bits"])
    if (length + 7) // 8 != len(data):
        raise FormatError(f"{path}: sidecar says {length} bits but file holds {len(data)} bytes")
    return BitString(data, length)


def write_rtf(path: str | os.PathLike, t: TritString, **meta) -> None:
    """Pack trits two bits each, MSB-first; final byte zero-padded."""
    arr = t.to_array()
    pairs = np.zeros((arr.size, 2), dtype=np.uint8)
    pairs[:, 0] = arr >> 1
    pairs[:, 1] = arr & 1
    Path(path).write_bytes(np.packbits(pairs.ravel()).tobytes())
    side = {"length_trits": t.length}
    side.update(meta)
    write_sidecar(path, side)


def read_rtf(path: str | os.PathLike) -> TritString:
    data = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    meta = read_sidecar(path)
    capacity = 4 * data.size
    length = capacity if meta is None else int(meta.get("length_trits", capacity))
    if (2 * length + 7) // 8 != data.size:
        raise FormatError(f"{path}: sidecar says {length} trits but file holds {data.size} bytes")
    bits = np.unpackbits(data, count=2 * length).reshape(-1, 2)
    trits = (bits[:, 0] << 1) | bits[:, 1]
    if trits.size and trits.max() == 3:
        raise FormatError(f"{path}: trit value 3 is invalid")
    return TritString(trits.astype(np.uint8).tobytes())

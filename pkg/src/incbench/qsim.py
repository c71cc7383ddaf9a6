"""Qutrit model of the spin-1 three-outcome QRNG.

Spin states are ordered ``(m = +1, 0, -1)`` in both the S_z and S_x bases, so
``u_x()`` maps S_z amplitudes to S_x amplitudes.  A protocol prepares an S_z
eigenstate, measures S_x, and records a trit.  The transmon realisation sits
in between: each S_x outcome is read out as one of the logical states
|0>, |1>, |2>, and readout errors act on those logical labels.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .bitio import TritString, morphism_phi, write_rbf, write_rtf
from .errors import CalibrationExhausted, FormatError, ParameterRangeError
from .sources import hashctr_words

__all__ = [
    "QutritState",
    "Unitary3",
    "ConfusionMatrix",
    "ProtocolSpec",
    "FIG1",
    "FIG2",
    "u_x",
    "u_x_factors",
    "factor_residual",
    "born_probs",
    "outcome_distribution",
    "sample_trits",
    "DriftParams",
    "GenerationLog",
    "run_generation",
]

SPIN = (+1, 0, -1)
_TOL = 1e-12


@dataclass(frozen=True)
class QutritState:
    amplitudes: tuple[complex, complex, complex]

    def __post_init__(self):
        if len(self.amplitudes) != 3:
            raise ParameterRangeError("a qutrit state has three amplitudes")
        norm = sum(abs(a) ** 2 for a in self.amplitudes)
        if abs(norm - 1) > _TOL:
            raise ParameterRangeError(f"state is not normalised (|psi|^2 = {norm!r})")

    @classmethod
    def basis(cls, index: int) -> "QutritState":
        amps = [0j, 0j, 0j]
        amps[index] = 1 + 0j
        return cls(tuple(amps))

    @classmethod
    def sz(cls, eigenvalue: int) -> "QutritState":
        """S_z eigenstate |z, eigenvalue>."""
        return cls.basis(SPIN.index(eigenvalue))

    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


@dataclass(frozen=True, eq=False)
class Unitary3:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (3, 3):
            raise ParameterRangeError("expected a 3x3 matrix")
        dev = np.abs(m @ m.conj().T - np.eye(3)).max()
        if dev > _TOL:
            raise ParameterRangeError(f"matrix is not unitary (max |UU^+ - I| = {dev:.3g})")
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other: "Unitary3") -> "Unitary3":
        return Unitary3(self.entries @ other.entries)


def u_x() -> Unitary3:
    s = np.sqrt(2)
    return Unitary3(0.5 * np.array([[1, s, 1], [s, 0, -s], [1, -s, 1]], dtype=complex))


def u_x_factors() -> list[Unitary3]:
    """The four two-level factors of ``u_x()``, leftmost first."""
    r3, r23 = 1 / np.sqrt(3), np.sqrt(2 / 3)
    h = np.sqrt(3) / 2
    return [
        Unitary3(np.diag([1, -1j, -1j])),
        Unitary3(np.array([[r3, r23, 0], [1j * r23, -1j * r3, 0], [0, 0, 1]])),
        Unitary3(np.array([[h, 0, -0.5j], [0, 1, 0], [0.5j, 0, -h]])),
        Unitary3(np.array([[1, 0, 0], [0, r3, r23], [0, 1j * r23, -1j * r3]])),
    ]


def factor_residual() -> tuple[float, complex]:
    """Max entry deviation between the factor product and ``u_x()`` modulo global phase.

    Returns ``(residual, phase)`` where ``phase`` is the unit scalar best
    aligning the product to ``u_x()``.
    """
    prod = np.eye(3, dtype=complex)
    for f in u_x_factors():
        prod = prod @ f.entries
    target = u_x().entries
    overlap = np.vdot(prod, target)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.abs(prod * phase - target).max()), complex(phase)


def born_probs(state: QutritState, u: Unitary3) -> np.ndarray:
    amps = u.entries @ state.vector()
    return np.abs(amps) ** 2


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Row-stochastic readout model: ``p[prepared, assigned]`` over logical states."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (3, 3):
            raise ParameterRangeError("confusion matrix must be 3x3")
        if (p < 0).any() or (p > 1).any():
            raise ParameterRangeError("confusion entries must lie in [0, 1]")
        if np.abs(p.sum(axis=1) - 1).max() > _TOL:
            raise ParameterRangeError("confusion rows must sum to 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def identity(cls) -> "ConfusionMatrix":
        return cls(np.eye(3))

    @classmethod
    def from_fidelities(cls, fidelities=(0.95, 0.88, 0.78), adjacent_share: float = 0.8) -> "ConfusionMatrix":
        """Misassigned mass decays to lower states only.

        ``adjacent_share`` of it lands on the next lower state, the rest on the
        states below that; |0> has nowhere lower to go, so its loss is split
        upward in the same proportions.
        """
        p = np.zeros((3, 3))
        for i, f in enumerate(fidelities):
            lost = 1 - f
            p[i, i] = f
            if i == 0:
                p[0, 1] = lost * adjacent_share
                p[0, 2] = lost * (1 - adjacent_share)
            elif i == 1:
                p[1, 0] = lost
            else:
                p[2, 1] = lost * adjacent_share
                p[2, 0] = lost * (1 - adjacent_share)
        return cls(p)

    @classmethod
    def default(cls) -> "ConfusionMatrix":
        return cls.from_fidelities()

    @classmethod
    def parse(cls, value) -> "ConfusionMatrix | None":
        """Accept ``"default"``, ``"none"``, a JSON matrix/path, or a matrix."""
        if value is None or (isinstance(value, str) and value.lower() == "none"):
            return None
        if isinstance(value, ConfusionMatrix):
            return value
        if isinstance(value, str):
            if value.lower() == "default":
                return cls.default()
            text = Path(value).read_text() if Path(value).is_file() else value
            try:
                value = json.loads(text)
            except json.JSONDecodeError as exc:
                raise FormatError(f"cannot parse noise model {value!r}: {exc}") from exc
        if isinstance(value, dict):
            if "fidelities" in value:
                return cls.from_fidelities(value["fidelities"], value.get("adjacent_share", 0.8))
            value = value["p"]
        return cls(np.array(value, dtype=float))

    def as_list(self) -> list[list[float]]:
        return self.p.tolist()


def _is_bijection(mapping: Mapping) -> bool:
    return len(mapping) == 3 and len(set(mapping.values())) == 3


@dataclass(frozen=True)
class ProtocolSpec:
    """One experimental variant.

    ``encoding``: S_z eigenvalue -> logical transmon state.
    ``readout``: logical state read out -> S_x eigenvalue it stands for.
    ``labels``: S_x eigenvalue -> recorded trit.
    ``prepared``: the S_z eigenvalue the source emits.

    ``outcome_map`` (logical state -> trit) is the composition of the last two.
    """

    variant: str
    encoding: Mapping[int, int]
    readout: Mapping[int, int]
    labels: Mapping[int, int]
    prepared: int
    zero_branch_trit: int = field(init=False)

    def __post_init__(self):
        for name in ("encoding", "readout", "labels"):
            if not _is_bijection(getattr(self, name)):
                raise ParameterRangeError(f"{self.variant}: {name} must be a bijection on three elements")
        object.__setattr__(self, "zero_branch_trit", self.labels[0])

    @property
    def outcome_map(self) -> dict[int, int]:
        return {state: self.labels[sx] for state, sx in self.readout.items()}

    @classmethod
    def named(cls, name: str) -> "ProtocolSpec":
        key = name.lower()
        if key in ("fig1", "1"):
            return FIG1
        if key in ("fig2", "2"):
            return FIG2
        raise ParameterRangeError(f"unknown protocol {name!r}; expected fig1 or fig2")

    def ideal_probs(self) -> np.ndarray:
        """Born probabilities over logical readout states 0, 1, 2."""
        sx_probs = born_probs(QutritState.sz(self.prepared), u_x())
        by_sx = dict(zip(SPIN, sx_probs))
        return np.array([by_sx[self.readout[s]] for s in range(3)])


# fig1 protocol: |z,0> prepared by cooling; the S_x = +1 / -1 detectors read 1 / 0.
FIG1 = ProtocolSpec(
    "fig1",
    encoding={-1: 2, 0: 0, +1: 1},
    readout={0: +1, 1: -1, 2: 0},
    labels={+1: 1, -1: 0, 0: 2},
    prepared=0,
)

# fig2 protocol: |z,+1> prepared by cooling; detectors 0, 1, 2 sit on S_x = +1, 0, -1.
FIG2 = ProtocolSpec(
    "fig2",
    encoding={-1: 1, 0: 2, +1: 0},
    readout={0: 0, 1: -1, 2: +1},
    labels={+1: 0, 0: 1, -1: 2},
    prepared=+1,
)


def outcome_distribution(spec: ProtocolSpec, noise: ConfusionMatrix | None = None) -> np.ndarray:
    """Exact probability of each recorded trit 0, 1, 2."""
    p = spec.ideal_probs()
    if noise is not None:
        p = p @ noise.p
    out = np.zeros(3)
    for state, trit in spec.outcome_map.items():
        out[trit] += p[state]
    return out


_SCALE = 1 << 32


def sample_trits(spec: ProtocolSpec, noise: ConfusionMatrix | None, count: int, seed: int) -> TritString:
    """Draw ``count`` trits, one 32-bit hash-counter word per trit.

    Each word selects a cell of the joint (ideal readout state, assigned
    state) table ``p_i * C[i, j]`` by inverse CDF; that is exactly sampling
    the ideal outcome and then pushing it through row ``i`` of the confusion
    matrix.  The assigned state is then relabelled by ``outcome_map``.
    """
    if count < 0:
        raise ParameterRangeError("count must be non-negative")
    p = spec.ideal_probs()
    conf = np.eye(3) if noise is None else noise.p
    joint = (p[:, None] * conf).ravel()
    # integer thresholds keep the draw exact and platform independent
    edges = np.rint(np.cumsum(joint) * _SCALE).astype(np.uint64)
    edges[-1] = _SCALE
    words = hashctr_words(seed, count).astype(np.uint64)
    cell = np.searchsorted(edges, words, side="right")
    assigned = cell % 3
    relabel = np.array([spec.outcome_map[s] for s in range(3)], dtype=np.uint8)
    return TritString(relabel[assigned].astype(np.uint8).tobytes())


# --- generation loop ----------------------------------------------------------

FIDELITY_THRESHOLD = 0.86
LOW_FIDELITY_LIMIT = 20
MAX_CALIBRATIONS = 5
REPETITIONS_PER_FILE = 1 << 26
FILE_LIMIT = 750
REP_TIME_GENERATE_US = 3.2
REP_TIME_IDLE_US = 40.0


@dataclass(frozen=True)
class DriftParams:
    """Scalar stand-in for the readout-classifier accuracy.

    Between files the fidelity takes a seeded random-walk step with mean
    ``-drift`` and spread ``jitter``.  Retraining adds ``retrain_gain``;
    recalibration resets the fidelity to ``calibrated``.
    """

    enabled: bool = True
    initial: float = float(np.mean((0.95, 0.88, 0.78)))
    drift: float = 0.002
    jitter: float = 0.004
    retrain_gain: float = 0.001
    calibrated: float = float(np.mean((0.95, 0.88, 0.78)))
    seed: int = 0

    @classmethod
    def disabled(cls) -> "DriftParams":
        return cls(enabled=False)


@dataclass
class GenerationLog:
    events: list[dict] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    @property
    def recalibrations(self) -> int:
        return sum(e["event"] == "calibrate" for e in self.events)


_FILE_RE = re.compile(r"random_(\d+)\.rtf$")


def run_index(out_dir: Path) -> int:
    """One past the highest existing ``random_<r>.rtf``, or 0."""
    found = [int(m.group(1)) for p in out_dir.glob("random_*.rtf") if (m := _FILE_RE.search(p.name))]
    return max(found) + 1 if found else 0


def _file_seed(seed: int, r: int) -> int:
    digest = hashlib.sha3_256(seed.to_bytes(8, "big") + r.to_bytes(8, "big") + b"qsim-file").digest()
    return int.from_bytes(digest[:8], "big")


def run_generation(
    spec: ProtocolSpec,
    noise: ConfusionMatrix | None,
    drift: DriftParams,
    files: int = FILE_LIMIT,
    bits_per_file: int = REPETITIONS_PER_FILE,
    out_dir=".",
    *,
    seed: int = 0,
    emit_rbf: bool = True,
) -> GenerationLog:
    """Emulate the generate/monitor/recalibrate loop, writing ``random_<r>.rtf``.

    ``files`` is the exclusive upper bound on the run index, so a rerun in a
    directory that already holds files resumes where it stopped.  Each
    recovery episode may recalibrate at most ``MAX_CALIBRATIONS`` times.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ParameterRangeError(f"cannot create output directory {out}: {exc}") from exc
    log = GenerationLog()
    walk = np.random.default_rng(drift.seed)
    f = drift.initial
    r = run_index(out)
    log.events.append({"event": "start", "run_index": r, "fidelity": f})
    while r < files:
        low = 0
        calibrations = 0
        while f < FIDELITY_THRESHOLD:
            if low > LOW_FIDELITY_LIMIT:
                if calibrations >= MAX_CALIBRATIONS:
                    log.events.append({"event": "failed", "run_index": r, "fidelity": f})
                    _write_log(out, log)
                    raise CalibrationExhausted(
                        f"calibrated {MAX_CALIBRATIONS} times before file {r}; fidelity still {f:.4f}")
                f = drift.calibrated
                calibrations += 1
                low = 0
                log.events.append({"event": "calibrate", "run_index": r, "fidelity": f})
            low += 1
            f = min(1.0, f + drift.retrain_gain)
            log.events.append({"event": "retrain", "run_index": r, "fidelity": f})
        trits = sample_trits(spec, noise, bits_per_file, _file_seed(seed, r))
        meta = {"protocol": spec.variant, "seed": seed, "run_index": r, "fidelity": f,
                "rep_time_us": REP_TIME_GENERATE_US, "idle_rep_time_us": REP_TIME_IDLE_US,
                "noise": None if noise is None else noise.as_list()}
        path = out / f"random_{r}.rtf"
        write_rtf(path, trits, **meta)
        log.files.append(path.name)
        if emit_rbf:
            write_rbf(out / f"random_{r}.rbf", morphism_phi(trits), source="qsim", **meta)
        log.events.append({"event": "file", "run_index": r, "fidelity": f})
        if drift.enabled:
            f += walk.normal(-drift.drift, drift.jitter)
        r += 1
    _write_log(out, log)
    return log


def _write_log(out: Path, log: GenerationLog) -> None:
    (out / "generation_log.json").write_text(
        json.dumps({"events": log.events, "files": log.files}, indent=2) + "\n")

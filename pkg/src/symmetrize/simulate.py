"""Dense statevector simulation with coherent per-ion-pair XX miscalibration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateKind, strip_comment

MAX_SIM_QUBITS = 16
NORM_TOL = 1e-9


class SimulationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# seeded streams

STREAMS = {
    "circuit": 1,
    "symmetry": 2,
    "noise": 3,
    "shots": 4,
    "scramble": 5,
    "replica": 6,
    "synthetic": 7,
}


def stream_rng(seed: int, stream: str | int, *index: int) -> np.random.Generator:
    """PCG64 generator for a named sub-stream of ``seed``.

    The sub-stream is ``SeedSequence(seed, spawn_key=(stream_id, *index))``, so
    e.g. the shots of variant 3 never depend on how many other variants ran.
    """
    if isinstance(stream, str) and stream not in STREAMS:
        raise SimulationError(f"unknown RNG stream {stream!r}; known: {sorted(STREAMS)}")
    sid = STREAMS[stream] if isinstance(stream, str) else int(stream)
    ss = np.random.SeedSequence(int(seed), spawn_key=(sid, *map(int, index)))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, stream: str | int, *index: int) -> int:
    return int(stream_rng(seed, stream, *index).integers(0, 2**63 - 1))


# ---------------------------------------------------------------------------
# statistics containers

@dataclass(frozen=True, eq=False)
class Histogram:
    """Normalized frequency distribution over n-bit outcomes; absent entries are zero."""

    n_bits: int
    entries: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in self.entries.items():
            k, v = int(k), float(v)
            if not 0 <= k < (1 << self.n_bits):
                raise SimulationError(f"outcome {k} out of range for {self.n_bits} bits")
            if v < 0:
                if v < -1e-12:
                    raise SimulationError(f"negative frequency {v} for outcome {k}")
                v = 0.0
            if v > 0:
                clean[k] = v
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def from_array(cls, probs: np.ndarray, n_bits: int | None = None, cutoff: float = 0.0) -> Histogram:
        probs = np.asarray(probs, dtype=float)
        if n_bits is None:
            n_bits = int(round(math.log2(len(probs))))
        nz = np.flatnonzero(probs > cutoff)
        return cls(n_bits, {int(i): float(probs[i]) for i in nz})

    @classmethod
    def point(cls, n_bits: int, outcome: int) -> Histogram:
        return cls(n_bits, {outcome: 1.0})

    @classmethod
    def uniform(cls, n_bits: int, support: Iterable[int] | None = None) -> Histogram:
        support = list(range(1 << n_bits)) if support is None else list(support)
        return cls(n_bits, {k: 1.0 / len(support) for k in support})

    def to_array(self) -> np.ndarray:
        out = np.zeros(1 << self.n_bits)
        for k, v in self.entries.items():
            out[k] = v
        return out

    def __getitem__(self, outcome: int) -> float:
        return self.entries.get(int(outcome), 0.0)

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.total() - 1.0) <= tol

    def normalized(self) -> Histogram:
        tot = self.total()
        if tot <= 0:
            raise SimulationError("cannot normalize an empty histogram")
        return Histogram(self.n_bits, {k: v / tot for k, v in self.entries.items()})

    def support(self, cutoff: float = 1e-12) -> list[int]:
        return [k for k, v in self.entries.items() if v > cutoff]

    def argmax(self) -> int:
        return max(self.entries, key=lambda k: (self.entries[k], -k))

    def allclose(self, other: Histogram, atol: float = 1e-10) -> bool:
        return self.n_bits == other.n_bits and bool(
            np.max(np.abs(self.to_array() - other.to_array())) <= atol
        )

    def __eq__(self, other):
        return isinstance(other, Histogram) and self.n_bits == other.n_bits and self.entries == other.entries

    def __repr__(self):
        body = ", ".join(f"{bitstring(k, self.n_bits)}: {v:.6g}" for k, v in self.entries.items())
        return f"Histogram({self.n_bits}, {{{body}}})"


@dataclass(frozen=True, eq=False)
class ShotList:
    """Ordered measurement outcomes, one integer per shot."""

    n_bits: int
    outcomes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.outcomes, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= (1 << self.n_bits)):
            raise SimulationError(f"shot outcome out of range for {self.n_bits} bits")
        arr.setflags(write=False)
        object.__setattr__(self, "outcomes", arr)

    def __len__(self):
        return int(self.outcomes.size)

    def __eq__(self, other):
        return (
            isinstance(other, ShotList)
            and self.n_bits == other.n_bits
            and np.array_equal(self.outcomes, other.outcomes)
        )

    def head(self, n: int) -> ShotList:
        return ShotList(self.n_bits, self.outcomes[:n])


def bitstring(outcome: int, n_bits: int) -> str:
    """Qubit 0 is the rightmost character."""
    return format(int(outcome), f"0{n_bits}b")


def parse_bitstring(text: str) -> int:
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise SimulationError(f"not a bitstring: {text!r}")
    return int(text, 2)


# ---------------------------------------------------------------------------
# noise model

def _pair(p: int, q: int) -> tuple[int, int]:
    return (p, q) if p < q else (q, p)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Multiplicative XX under-rotation per physical ion pair plus output depolarizing."""

    pair_error: Mapping[tuple[int, int], float] = field(default_factory=dict)
    depolarizing_eps: float = 0.0

    def __post_init__(self):
        clean = {}
        for (p, q), delta in self.pair_error.items():
            p, q, delta = int(p), int(q), float(delta)
            if p == q or p < 0 or q < 0:
                raise SimulationError(f"invalid ion pair ({p}, {q})")
            if not abs(delta) < 1:
                raise SimulationError(f"|delta| must be < 1, got {delta} on ({p}, {q})")
            clean[_pair(p, q)] = delta
        if not 0.0 <= self.depolarizing_eps < 1.0:
            raise SimulationError(f"depolarizing eps must lie in [0, 1), got {self.depolarizing_eps}")
        object.__setattr__(self, "pair_error", dict(sorted(clean.items())))
        object.__setattr__(self, "depolarizing_eps", float(self.depolarizing_eps))

    def delta(self, p: int, q: int) -> float:
        return self.pair_error.get(_pair(p, q), 0.0)

    def scaled(self, factor: float, eps: float | None = None) -> NoiseModel:
        return NoiseModel(
            {k: v * factor for k, v in self.pair_error.items()},
            self.depolarizing_eps if eps is None else eps,
        )

    @classmethod
    def random_uniform(
        cls, n_physical: int, low: float, high: float, seed: int, eps: float = 0.0
    ) -> NoiseModel:
        """delta_pq ~ U[low, high] independently for every ion pair (deterministic in seed)."""
        rng = stream_rng(seed, "noise")
        pairs = [(p, q) for p in range(n_physical) for q in range(p + 1, n_physical)]
        draws = rng.uniform(low, high, size=len(pairs))
        return cls(dict(zip(pairs, map(float, draws))), eps)


def parse_noise_model(text: str) -> NoiseModel:
    """Parse ``pair p q delta`` / ``depolarizing eps`` lines (``#`` comments)."""
    pairs: dict[tuple[int, int], float] = {}
    eps = 0.0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "pair" and len(toks) == 4:
                key = _pair(int(toks[1]), int(toks[2]))
                if key in pairs:
                    raise CircuitError(f"duplicate pair {key}", lineno)
                pairs[key] = float(toks[3])
            elif toks[0] == "depolarizing" and len(toks) == 2:
                eps = float(toks[1])
            elif toks[0] == "mode" and len(toks) == 2:
                if toks[1] != "multiplicative":
                    raise CircuitError(f"unsupported error mode {toks[1]!r}", lineno)
            else:
                raise CircuitError(f"unrecognized noise statement {line!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, CircuitError):
                raise
            raise CircuitError(f"bad number in {line!r}", lineno) from None
    try:
        return NoiseModel(pairs, eps)
    except SimulationError as exc:
        raise CircuitError(str(exc)) from None


def serialize_noise_model(nm: NoiseModel) -> str:
    lines = ["mode multiplicative"]
    lines += [f"pair {p} {q} {d:.12g}" for (p, q), d in nm.pair_error.items()]
    if nm.depolarizing_eps:
        lines.append(f"depolarizing {nm.depolarizing_eps:.12g}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# statevector kernels

def _apply_1q(state: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    view = state.reshape(1 << (n - 1 - q), 2, 1 << q)
    return np.einsum("ab,ibj->iaj", u, view).reshape(-1)


def _apply_xx(state: np.ndarray, p: int, q: int, theta: float, n: int) -> np.ndarray:
    flipped = state[np.arange(1 << n) ^ ((1 << p) | (1 << q))]
    return math.cos(theta / 2) * state - 1j * math.sin(theta / 2) * flipped


def _apply_2q(state: np.ndarray, u: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    t = state.reshape([2] * n)
    ax_a, ax_b = n - 1 - a, n - 1 - b
    t = np.moveaxis(t, (ax_a, ax_b), (0, 1))
    shape = t.shape
    t = (u @ t.reshape(4, -1)).reshape(shape)
    return np.moveaxis(t, (0, 1), (ax_a, ax_b)).reshape(-1)


def run_statevector(c: Circuit) -> np.ndarray:
    """Final state of ``c`` applied to |0...0>."""
    n = c.n_qubits
    if n > MAX_SIM_QUBITS:
        raise SimulationError(f"dense simulation limited to {MAX_SIM_QUBITS} qubits, got {n}")
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    for g in c.gates:
        if g.kind is GateKind.XX:
            state = _apply_xx(state, *g.targets, g.angle, n)
        elif len(g.targets) == 1:
            state = _apply_1q(state, g.matrix(), g.targets[0], n)
        else:
            state = _apply_2q(state, g.matrix(), *g.targets, n)
    return state


def _born(state: np.ndarray) -> np.ndarray:
    probs = np.abs(state) ** 2
    return probs / probs.sum()


def simulate_ideal(c: Circuit) -> Histogram:
    """Exact Born-rule outcome distribution of the noiseless circuit."""
    return Histogram.from_array(_born(run_statevector(c)), c.n_qubits, cutoff=1e-15)


def mix_uniform(probs: np.ndarray, eps: float) -> np.ndarray:
    return (1.0 - eps) * probs + eps / probs.size


def noisy_circuit(c: Circuit, physical_map: Sequence[int] | None, nm: NoiseModel) -> Circuit:
    """Copy of ``c`` with each XX angle scaled by (1 - delta) of its mapped ion pair."""
    phys = _check_map(c, physical_map)
    gates = []
    for g in c.gates:
        if g.kind is GateKind.XX:
            p, q = (phys[t] for t in g.targets)
            g = Gate(GateKind.XX, g.targets, g.angle * (1.0 - nm.delta(p, q)))
        gates.append(g)
    return Circuit(c.n_qubits, tuple(gates), c.measure_all)


def _check_map(c: Circuit, physical_map: Sequence[int] | None) -> list[int]:
    if physical_map is None:
        return list(range(c.n_qubits))
    phys = [int(p) for p in physical_map]
    if len(phys) != c.n_qubits:
        raise SimulationError(f"physical map has {len(phys)} entries for {c.n_qubits} qubits")
    if len(set(phys)) != len(phys) or min(phys) < 0:
        raise SimulationError(f"physical map {phys} is not injective")
    return phys


def simulate_noisy(c: Circuit, physical_map: Sequence[int] | None, nm: NoiseModel) -> Histogram:
    """Output distribution with coherent XX under-rotation, then depolarizing mixing."""
    probs = _born(run_statevector(noisy_circuit(c, physical_map, nm)))
    if nm.depolarizing_eps:
        probs = mix_uniform(probs, nm.depolarizing_eps)
    return Histogram.from_array(probs, c.n_qubits, cutoff=1e-15)


# ---------------------------------------------------------------------------
# shots

def sample_shots(h: Histogram, n_shots: int, seed: int | np.random.Generator) -> ShotList:
    """i.i.d. draws from ``h``; an int seed is expanded through ``stream_rng(seed, 'shots')``."""
    if n_shots < 0:
        raise SimulationError("n_shots must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else stream_rng(seed, "shots")
    keys = np.fromiter(h.entries.keys(), dtype=np.int64, count=len(h.entries))
    probs = np.fromiter(h.entries.values(), dtype=float, count=len(h.entries))
    if keys.size == 0:
        raise SimulationError("cannot sample from an empty histogram")
    probs = probs / probs.sum()
    idx = rng.choice(keys.size, size=n_shots, p=probs)
    return ShotList(h.n_bits, keys[idx])


def shots_to_histogram(s: ShotList) -> Histogram:
    if len(s) == 0:
        raise SimulationError("empty shot list")
    values, counts = np.unique(s.outcomes, return_counts=True)
    total = counts.sum()
    return Histogram(s.n_bits, {int(v): c / total for v, c in zip(values, counts)})

"""Computation-preserving circuit symmetries: qubit remappings and XX sign-flip decompositions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .simulate import Histogram, stream_rng

DEFAULT_POOL_SIZE = 200


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class QubitMapping:
    """Injection of logical qubits onto a physical register."""

    n_physical: int
    assignment: tuple[int, ...]

    def __post_init__(self):
        assignment = tuple(int(p) for p in self.assignment)
        object.__setattr__(self, "assignment", assignment)
        if len(assignment) > self.n_physical:
            raise SymmetryError(
                f"cannot map {len(assignment)} logical qubits onto {self.n_physical} physical ones"
            )
        if len(set(assignment)) != len(assignment):
            raise SymmetryError(f"mapping {assignment} is not injective")
        if any(not 0 <= p < self.n_physical for p in assignment):
            raise SymmetryError(f"mapping {assignment} leaves the {self.n_physical}-ion register")

    @property
    def n_logical(self) -> int:
        return len(self.assignment)

    @classmethod
    def identity(cls, n_logical: int, n_physical: int | None = None) -> QubitMapping:
        return cls(n_logical if n_physical is None else n_physical, tuple(range(n_logical)))

    def __getitem__(self, logical: int) -> int:
        return self.assignment[logical]


@dataclass(frozen=True)
class SymmetryTransform:
    mapping: QubitMapping
    decomposition_mask: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "decomposition_mask", frozenset(int(i) for i in self.decomposition_mask))


@dataclass(frozen=True)
class VariantRealization:
    """A physical circuit plus the map that brings its outcomes back to logical order."""

    physical_circuit: Circuit
    mapping: QubitMapping

    def relabel(self, h: Histogram) -> Histogram:
        """Permute physical outcome bits back to logical order, discarding unmapped ions."""
        out: dict[int, float] = {}
        for outcome, freq in h.entries.items():
            key = relabel_outcome(outcome, self.mapping.assignment)
            out[key] = out.get(key, 0.0) + freq
        return Histogram(self.mapping.n_logical, out)

    def relabel_outcomes(self, outcomes: np.ndarray) -> np.ndarray:
        outcomes = np.asarray(outcomes, dtype=np.int64)
        logical = np.zeros_like(outcomes)
        for l, p in enumerate(self.mapping.assignment):
            logical |= ((outcomes >> p) & 1) << l
        return logical


def relabel_outcome(outcome: int, assignment: Sequence[int]) -> int:
    value = 0
    for l, p in enumerate(assignment):
        value |= ((outcome >> p) & 1) << l
    return value


def sign_flip_xx(gate: Gate) -> list[Gate]:
    """XX(t) == RX(pi)⊗RX(pi) · XX(t - pi) up to global phase.

    The XX runs at the opposite sign, so a multiplicative under-rotation of the
    physical gate turns into an over-rotation of the logical one.
    """
    p, q = gate.targets
    return [
        Gate(GateKind.XX, (p, q), gate.angle - math.pi),
        Gate(GateKind.RX, (p,), math.pi),
        Gate(GateKind.RX, (q,), math.pi),
    ]


def apply_symmetry(c: Circuit, t: SymmetryTransform) -> VariantRealization:
    m = t.mapping
    if m.n_logical != c.n_qubits:
        raise SymmetryError(f"mapping covers {m.n_logical} qubits, circuit has {c.n_qubits}")
    xx = set(c.xx_positions())
    bad = sorted(t.decomposition_mask - xx)
    if bad:
        raise SymmetryError(f"mask positions {bad} are not XX gates")
    gates: list[Gate] = []
    for i, g in enumerate(c.gates):
        g = Gate(g.kind, tuple(m[q] for q in g.targets), g.angle)
        gates.extend(sign_flip_xx(g) if i in t.decomposition_mask else [g])
    return VariantRealization(Circuit(m.n_physical, tuple(gates), c.measure_all), m)


def decomposition_mask_every_mth(c: Circuit, m: int, offset: int = 0) -> frozenset[int]:
    """Gate positions of the XX gates whose XX-ordinal is congruent to ``offset`` mod ``m``."""
    if m < 1:
        raise SymmetryError("stride must be >= 1")
    return frozenset(pos for k, pos in enumerate(c.xx_positions()) if k % m == offset % m and k >= offset)


# ---------------------------------------------------------------------------
# sampling

def _check_sizes(n_logical: int, n_physical: int, k: int) -> None:
    if n_logical > n_physical:
        raise SymmetryError(f"no injection of {n_logical} logical qubits into {n_physical} ions")
    if k < 1:
        raise SymmetryError("need at least one mapping")


def sample_mappings_random(
    n_logical: int, n_physical: int, k: int, seed: int | np.random.Generator
) -> list[QubitMapping]:
    """``k`` independent uniformly random injections."""
    _check_sizes(n_logical, n_physical, k)
    rng = seed if isinstance(seed, np.random.Generator) else stream_rng(seed, "symmetry")
    return [
        QubitMapping(n_physical, tuple(int(p) for p in rng.permutation(n_physical)[:n_logical]))
        for _ in range(k)
    ]


def xx_pairs(c: Circuit, mapping: QubitMapping) -> list[frozenset[int]]:
    """Physical ion pair used by each XX gate of ``c`` under ``mapping``."""
    return [frozenset(mapping[q] for q in c.gates[i].targets) for i in c.xx_positions()]


def overlap(c: Circuit, a: QubitMapping, b: QubitMapping) -> int:
    """Number of XX gates that ``a`` places on an ion pair ``b`` also uses for an XX."""
    used = set(xx_pairs(c, b))
    return sum(1 for pair in xx_pairs(c, a) if pair in used)


def total_overlap(c: Circuit, mappings: Sequence[QubitMapping]) -> int:
    return sum(overlap(c, mappings[j], mappings[i]) for j in range(len(mappings)) for i in range(j))


def sample_mappings_dissimilar(
    c: Circuit,
    n_physical: int,
    k: int,
    seed: int | np.random.Generator,
    pool_size: int = DEFAULT_POOL_SIZE,
) -> list[QubitMapping]:
    """Greedy low-overlap selection from a seeded pool of random injections.

    The first pick is the first pool entry; each later pick minimizes the summed
    overlap with all earlier picks (ties go to the earliest pool entry).
    """
    _check_sizes(c.n_qubits, n_physical, k)
    pool = sample_mappings_random(c.n_qubits, n_physical, max(pool_size, k), seed)
    pool_pairs = [xx_pairs(c, m) for m in pool]
    chosen = [0]
    used: dict[frozenset[int], int] = {}
    for pair in set(pool_pairs[0]):
        used[pair] = used.get(pair, 0) + 1
    remaining = list(range(1, len(pool)))
    while len(chosen) < k:
        best = min(remaining, key=lambda i: (sum(used.get(p, 0) for p in pool_pairs[i]), i))
        remaining.remove(best)
        chosen.append(best)
        for pair in set(pool_pairs[best]):
            used[pair] = used.get(pair, 0) + 1
    return [pool[i] for i in chosen]


# ---------------------------------------------------------------------------
# text form

def serialize_transform(t: SymmetryTransform) -> str:
    lines = ["map " + " ".join(f"{l}:{p}" for l, p in enumerate(t.mapping.assignment))]
    if t.decomposition_mask:
        lines.append("mask " + ",".join(str(i) for i in sorted(t.decomposition_mask)))
    return "\n".join(lines)


def parse_transform(text: str, n_physical: int) -> SymmetryTransform:
    assignment: dict[int, int] | None = None
    mask: frozenset[int] = frozenset()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "map":
            assignment = {}
            for tok in rest.split():
                l, _, p = tok.partition(":")
                try:
                    assignment[int(l)] = int(p)
                except ValueError:
                    raise SymmetryError(f"bad map entry {tok!r}") from None
        elif head == "mask":
            try:
                mask = frozenset(int(x) for x in rest.replace(" ", "").split(",") if x)
            except ValueError:
                raise SymmetryError(f"bad mask {rest!r}") from None
        else:
            raise SymmetryError(f"unknown transform statement {line!r}")
    if assignment is None:
        raise SymmetryError("transform needs a 'map' line")
    if sorted(assignment) != list(range(len(assignment))):
        raise SymmetryError("map must cover logical qubits 0..n-1")
    return SymmetryTransform(
        QubitMapping(n_physical, tuple(assignment[l] for l in range(len(assignment)))), mask
    )

"""Desk-scale scenarios: the Bell walk-through and the deviation-vector study."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .aggregate import AggregationResult, VariantBatch, VoteConfig, average_histograms, plurality_vote
from .analysis import PcaProjection, deviation, pca_project
from .circuit import Circuit, gen_bell, gen_random_circuit
from .simulate import NoiseModel, derive_seed, sample_shots, simulate_ideal, simulate_noisy, stream_rng
from .symmetry import (
    SymmetryTransform,
    apply_symmetry,
    decomposition_mask_every_mth,
    sample_mappings_random,
)


@dataclass(frozen=True, eq=False)
class BellWalkthrough:
    batch: VariantBatch
    averaged: AggregationResult
    voted: AggregationResult


def bell_walkthrough(
    seed: int, n_ions: int = 4, variants: int = 4, shots: int = 5,
    delta: tuple[float, float] = (0.0, 0.2), eps: float = 0.2,
) -> BellWalkthrough:
    """Bell pair on randomly mapped ions; each variant records a few shots."""
    c = gen_bell()
    maps = sample_mappings_random(2, n_ions, variants, seed)
    nm = NoiseModel.random_uniform(n_ions, delta[0], delta[1], derive_seed(seed, "noise"), eps)
    recorded = []
    for v, mp in enumerate(maps):
        real = apply_symmetry(c, SymmetryTransform(mp))
        h = real.relabel(simulate_noisy(real.physical_circuit, None, nm))
        recorded.append(sample_shots(h, shots, stream_rng(seed, "shots", v)))
    batch = VariantBatch(shots=tuple(recorded))
    vote = plurality_vote(batch, VoteConfig(seed=derive_seed(seed, "scramble")))
    return BellWalkthrough(batch, average_histograms(batch), vote)


@dataclass(frozen=True, eq=False)
class DeviationStudy:
    circuit: Circuit
    maps_only: np.ndarray  # (variants, 2^n) deviation vectors
    with_decomposition: np.ndarray

    @staticmethod
    def _norms(devs: np.ndarray) -> tuple[float, float]:
        return float(np.linalg.norm(devs.mean(axis=0))), float(np.mean(np.linalg.norm(devs, axis=1)))

    @property
    def maps_mean_norm(self) -> float:
        return self._norms(self.maps_only)[0]

    @property
    def maps_individual_norm(self) -> float:
        return self._norms(self.maps_only)[1]

    @property
    def decomposition_mean_norm(self) -> float:
        return self._norms(self.with_decomposition)[0]

    @property
    def decomposition_individual_norm(self) -> float:
        return self._norms(self.with_decomposition)[1]

    def pca(self) -> PcaProjection:
        # basis fitted on the mapping-only cloud, as in the original analysis
        return pca_project(self.maps_only)


def deviation_study(
    seed: int, n_qubits: int = 4, n_ions: int = 8, n_xx: int = 6, variants: int = 8,
    delta: tuple[float, float] = (0.02, 0.10), stride: int = 2,
) -> DeviationStudy:
    """Exact per-variant deviation vectors for one random circuit on a biased device.

    The same mappings are used twice: plain, and with every ``stride``-th XX
    sign-flipped (the flipped subset rotates with the variant index).
    """
    c = gen_random_circuit(n_qubits, n_xx, derive_seed(seed, "circuit"))
    ideal = simulate_ideal(c)
    maps = sample_mappings_random(n_qubits, n_ions, variants, seed)
    nm = NoiseModel.random_uniform(n_ions, delta[0], delta[1], derive_seed(seed, "noise"))

    def devs(transforms: Sequence[SymmetryTransform]) -> np.ndarray:
        rows = []
        for t in transforms:
            real = apply_symmetry(c, t)
            rows.append(deviation(real.relabel(simulate_noisy(real.physical_circuit, None, nm)), ideal))
        return np.array(rows)

    plain = [SymmetryTransform(m) for m in maps]
    flipped = [
        SymmetryTransform(m, decomposition_mask_every_mth(c, stride, v % stride)) for v, m in enumerate(maps)
    ]
    return DeviationStudy(c, devs(plain), devs(flipped))


def pca_rows_csv(proj: PcaProjection, labels: Sequence[str]) -> str:
    """Plot-ready ``x,y,label`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "label"])
    for (x, y), label in zip(proj.coords[:, :2], labels):
        w.writerow([repr(float(x)), repr(float(y)), label])
    return buf.getvalue()

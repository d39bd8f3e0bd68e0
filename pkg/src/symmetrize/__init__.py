"""Symmetrized execution of trapped-ion circuits with plurality-vote aggregation."""
from __future__ import annotations

from .aggregate import VariantBatch, VoteConfig, average_histograms, plurality_vote
from .analysis import hellinger_fidelity, pca_project, total_variation
from .circuit import Circuit, Gate, GateKind, parse_circuit, serialize_circuit
from .simulate import Histogram, NoiseModel, ShotList, sample_shots, simulate_ideal, simulate_noisy
from .symmetry import QubitMapping, SymmetryTransform, apply_symmetry
from .voting import VotingModel, big_G, small_g

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Gate", "GateKind", "Histogram", "NoiseModel", "QubitMapping", "ShotList",
    "SymmetryTransform", "VariantBatch", "VoteConfig", "VotingModel", "apply_symmetry",
    "average_histograms", "big_G", "hellinger_fidelity", "parse_circuit", "pca_project",
    "plurality_vote", "sample_shots", "serialize_circuit", "simulate_ideal", "simulate_noisy",
    "small_g", "total_variation",
]

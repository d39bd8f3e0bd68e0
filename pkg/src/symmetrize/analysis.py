"""Fidelity, deviation vectors and PCA of per-variant errors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simulate import Histogram


class AnalysisError(ValueError):
    pass


def _aligned(p: Histogram, q: Histogram) -> tuple[np.ndarray, np.ndarray]:
    if p.n_bits != q.n_bits:
        raise AnalysisError(f"histograms over {p.n_bits} and {q.n_bits} bits")
    return p.to_array(), q.to_array()


def hellinger_fidelity(p: Histogram, q: Histogram) -> float:
    """(sum_i sqrt(p_i q_i))^2, the squared Bhattacharyya coefficient."""
    if p.n_bits != q.n_bits:
        raise AnalysisError(f"histograms over {p.n_bits} and {q.n_bits} bits")
    # only the common support contributes; summing in sorted key order keeps it symmetric
    common = sorted(p.entries.keys() & q.entries.keys())
    bc = math.fsum(math.sqrt(p.entries[k] * q.entries[k]) for k in common)
    return min(1.0, bc * bc)


def total_variation(p: Histogram, q: Histogram) -> float:
    a, b = _aligned(p, q)
    return 0.5 * float(np.abs(a - b).sum())


def deviation(observed: Histogram, ideal: Histogram) -> np.ndarray:
    """Entrywise observed - ideal over all 2^n outcomes."""
    a, b = _aligned(observed, ideal)
    return a - b


@dataclass(frozen=True, eq=False)
class PcaProjection:
    coords: np.ndarray  # (n_vectors, 2)
    components: np.ndarray  # (2, dim), unit rows
    explained: np.ndarray  # explained-variance fractions of the two components
    mean: np.ndarray

    def project(self, vectors: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(vectors) - self.mean) @ self.components.T


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # columns: first coordinate that is nonzero (beyond noise) made positive
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, k] = -col
    return out


def pca_eigen(vectors: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full spectrum of the mean-centered covariance: (eigenvalues desc, eigenvectors as columns, mean)."""
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise AnalysisError("PCA needs at least two vectors")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    return vals, _fix_signs(vecs[:, order]), mean


def pca_project(vectors: Sequence[np.ndarray], n_components: int = 2) -> PcaProjection:
    vals, vecs, mean = pca_eigen(vectors)
    x = np.asarray(vectors, dtype=float)
    comps = vecs[:, :n_components].T
    if comps.shape[0] < n_components:
        comps = np.vstack([comps, np.zeros((n_components - comps.shape[0], x.shape[1]))])
    total = vals.sum()
    explained = vals[:n_components] / total if total > 0 else np.zeros(min(n_components, vals.size))
    explained = np.pad(explained, (0, n_components - explained.size))
    coords = (x - mean) @ comps.T
    return PcaProjection(coords, comps, explained, mean)


def rank2_reconstruction_error(vectors: np.ndarray, basis: np.ndarray, mean: np.ndarray) -> float:
    """Squared residual of centered vectors after projecting onto the row span of ``basis``."""
    q, _ = np.linalg.qr(np.asarray(basis, dtype=float).T)
    centered = np.asarray(vectors, dtype=float) - mean
    resid = centered - centered @ q @ q.T
    return float((resid**2).sum())


@dataclass(frozen=True)
class UniformizedReport:
    target: int
    eps: float
    symmetrized: Histogram
    max_deviation: float  # largest |h_err - symmetrized| over outcomes


def uniformized_error_check(h_err: Histogram, target: int) -> UniformizedReport:
    """Average ``h_err`` over all relabelings of the non-target outcomes.

    The result keeps the target mass ``1 - eps`` and spreads ``eps`` evenly
    over the other ``2^n - 1`` outcomes.
    """
    size = 1 << h_err.n_bits
    if not 0 <= target < size:
        raise AnalysisError(f"target {target} out of range")
    eps = max(0.0, 1.0 - h_err[target])
    probs = np.full(size, eps / (size - 1) if size > 1 else 0.0)
    probs[target] = 1.0 - eps
    sym = Histogram.from_array(probs, h_err.n_bits)
    dev = float(np.max(np.abs(h_err.to_array() - probs)))
    return UniformizedReport(target, eps, sym, dev)

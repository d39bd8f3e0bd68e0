from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmetrize.analysis import (
    AnalysisError,
    deviation,
    hellinger_fidelity,
    pca_eigen,
    pca_project,
    rank2_reconstruction_error,
    total_variation,
    uniformized_error_check,
)
from symmetrize.scenarios import pca_rows_csv
from symmetrize.simulate import Histogram

BELL = Histogram(2, {0: 0.5, 3: 0.5})


def hist(probs):
    return Histogram.from_array(np.asarray(probs, dtype=float))


dists = st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8).filter(lambda w: sum(w) > 1e-3).map(
    lambda w: hist(np.asarray(w) / sum(w))
)


class TestFidelity:
    def test_identity(self):
        assert hellinger_fidelity(BELL, BELL) == 1.0

    def test_disjoint(self):
        assert hellinger_fidelity(Histogram(2, {0: 1.0}), Histogram(2, {1: 0.5, 2: 0.5})) == 0.0

    def test_worked_value(self):
        q = hist([0.4, 0.1, 0.1, 0.4])
        assert hellinger_fidelity(BELL, q) == pytest.approx(0.8, abs=1e-12)

    @given(dists, dists)
    @settings(max_examples=200)
    def test_symmetric_and_bounded(self, p, q):
        f = hellinger_fidelity(p, q)
        assert f == hellinger_fidelity(q, p)
        assert 0.0 <= f <= 1.0

    @given(dists)
    def test_self_fidelity(self, p):
        assert hellinger_fidelity(p, p) == pytest.approx(1.0, abs=1e-12)

    def test_width_mismatch(self):
        with pytest.raises(AnalysisError):
            hellinger_fidelity(BELL, Histogram(3, {0: 1.0}))


class TestDeviation:
    def test_zero(self):
        assert not deviation(BELL, BELL).any()

    def test_bell_example(self):
        d = deviation(hist([0.4, 0.1, 0.1, 0.4]), BELL)
        assert d == pytest.approx([-0.1, 0.1, 0.1, -0.1], abs=1e-15)

    @given(dists, dists)
    @settings(max_examples=50)
    def test_sums_to_zero(self, p, q):
        assert abs(deviation(p, q).sum()) < 1e-9

    def test_total_variation(self):
        assert total_variation(BELL, Histogram(2, {0: 1.0})) == pytest.approx(0.5)


class TestPca:
    def test_axis_aligned(self):
        v = np.zeros((2, 4))
        v[0, 0], v[1, 0] = 1.0, -1.0
        proj = pca_project(v)
        assert np.array_equal(np.abs(proj.coords[:, 0]), [1.0, 1.0])
        assert proj.coords[0, 0] == -proj.coords[1, 0]
        assert np.array_equal(proj.coords[:, 1], [0.0, 0.0])
        assert proj.explained[0] == 1.0

    def test_mean_projects_to_origin(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=(8, 16))
        proj = pca_project(v)
        assert np.allclose(proj.project(v.mean(axis=0)), 0.0, atol=1e-12)

    def test_explained_fractions(self):
        rng = np.random.default_rng(2)
        proj = pca_project(rng.normal(size=(8, 16)) * np.arange(1, 17))
        e = proj.explained
        assert np.all((0 <= e) & (e <= 1)) and e[0] >= e[1]

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        _, vecs, _ = pca_eigen(rng.normal(size=(6, 5)))
        for k in range(vecs.shape[1]):
            col = vecs[:, k]
            assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0

    @pytest.mark.parametrize("seed", range(5))
    def test_top2_is_optimal(self, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(8, 16))
        vals, vecs, mean = pca_eigen(v)
        best = rank2_reconstruction_error(v, vecs[:, :2].T, mean)
        # full-spectrum oracle: residual equals the discarded eigenvalue mass
        assert best == pytest.approx(vals[2:].sum() * (len(v) - 1), rel=1e-9)
        for i, j in itertools.combinations(range(vecs.shape[1]), 2):
            assert rank2_reconstruction_error(v, vecs[:, [i, j]].T, mean) >= best - 1e-9
        for _ in range(20):
            assert rank2_reconstruction_error(v, rng.normal(size=(2, 16)), mean) >= best - 1e-9

    def test_order_invariance(self):
        rng = np.random.default_rng(4)
        v = rng.normal(size=(8, 16))
        perm = rng.permutation(8)
        a, b = pca_project(v), pca_project(v[perm])
        assert np.allclose(a.coords[perm], b.coords, atol=1e-10)

    def test_needs_two_vectors(self):
        with pytest.raises(AnalysisError):
            pca_project(np.zeros((1, 4)))

    def test_csv_rows(self):
        proj = pca_project(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        lines = pca_rows_csv(proj, ["a", "b"]).splitlines()
        assert lines[0] == "x,y,label" and lines[1].endswith(",a")


class TestUniformized:
    def test_already_shaped(self):
        h = Histogram(2, {0: 0.1, 1: 0.1, 2: 0.7, 3: 0.1})
        rep = uniformized_error_check(h, 2)
        assert rep.max_deviation == pytest.approx(0.0, abs=1e-15)
        assert rep.eps == pytest.approx(0.3)

    def test_indicator(self):
        assert uniformized_error_check(Histogram(2, {1: 1.0}), 1).eps == 0.0

    def test_equidistribution(self):
        rep = uniformized_error_check(Histogram(2, {0: 0.7, 3: 0.3}), 0)
        assert rep.eps == pytest.approx(0.3)
        for j in (1, 2, 3):
            assert rep.symmetrized[j] == pytest.approx(0.1)

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmetrize.voting import (
    VotingModel,
    VotingModelError,
    big_G,
    brute_force_G,
    brute_force_g,
    check_imbalance,
    check_ratio_suppression,
    g_table_csv,
    imbalance_distribution,
    multinomial_prob,
    small_g,
)


def compositions(m, r):
    for cuts in itertools.combinations(range(m + r - 1), r - 1):
        prev, out = -1, []
        for c in cuts + (m + r - 1,):
            out.append(c - prev - 1)
            prev = c
        yield tuple(out)


@st.composite
def models(draw, max_r=4, max_m=6):
    r = draw(st.integers(2, max_r))
    # exact zeros exercise the zero-state rule; otherwise stay clear of subnormal underflow
    weight = st.one_of(st.just(0.0), st.floats(1e-3, 1.0))
    w = np.array(draw(st.lists(weight, min_size=r, max_size=r)))
    if w.sum() == 0:
        w[0] = 1.0
    m = draw(st.integers(1, max_m))
    t = draw(st.integers(1, m))
    return VotingModel(tuple(w / w.sum()), m, t)


class TestMultinomial:
    def test_examples(self):
        assert multinomial_prob(2, (2, 0), (0.5, 0.5)) == pytest.approx(0.25, abs=1e-15)
        assert multinomial_prob(2, (1, 1), (0.5, 0.5)) == pytest.approx(0.5, abs=1e-15)

    def test_sums_to_one(self):
        h = (0.1, 0.2, 0.3, 0.4)
        total = math.fsum(multinomial_prob(7, x, h) for x in compositions(7, 4))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_count_mismatch(self):
        with pytest.raises(VotingModelError):
            multinomial_prob(3, (1, 1), (0.5, 0.5))

    def test_large_m_is_finite(self):
        assert 0 < multinomial_prob(50, (25, 25), (0.5, 0.5)) < 1


class TestBigG:
    def test_fair_coin(self):
        assert big_G(0, VotingModel((0.5, 0.5), 3, 2)) == pytest.approx(0.5, abs=1e-15)

    def test_biased_coin(self):
        model = VotingModel((0.7, 0.3), 3, 2)
        assert big_G(0, model) == pytest.approx(0.784, abs=1e-12)
        assert big_G(1, model) == pytest.approx(0.216, abs=1e-12)

    @pytest.mark.parametrize("m", [1, 3, 8])
    def test_certain_state(self, m):
        for t in range(1, m + 1):
            model = VotingModel((1.0, 0.0), m, t)
            assert big_G(0, model) == 1.0 and big_G(1, model) == 0.0

    @given(models())
    @settings(max_examples=60, deadline=None)
    def test_matches_enumeration(self, model):
        G = brute_force_G(model)
        for i in range(model.r):
            assert big_G(i, model) == pytest.approx(G[i], abs=1e-12)

    def test_exact_rational_mode(self):
        model = VotingModel((Fraction(1, 2), Fraction(1, 2)), 3, 2)
        assert big_G(0, model) == Fraction(1, 2)
        g = small_g(VotingModel((Fraction(7, 10), Fraction(3, 10)), 3, 2))
        assert g == (Fraction(98, 125), Fraction(27, 125))


class TestSmallG:
    def test_biased_coin(self):
        g = small_g(VotingModel((0.7, 0.3), 3, 2))
        assert g == pytest.approx((0.784, 0.216), abs=1e-12)
        assert g[0] / g[1] > 0.7 / 0.3

    def test_uniform_fixed_point(self):
        h = (0.25,) * 4 + (0.0,) * 4
        assert small_g(VotingModel(h, 5, 2)) == pytest.approx(h, abs=1e-12)

    def test_point_mass(self):
        assert small_g(VotingModel((0.0, 1.0), 4, 3)) == (0.0, 1.0)

    def test_unanimity_always_possible(self):
        # x_i = m always satisfies the win condition, so a valid model is never degenerate
        g = small_g(VotingModel((0.5, 0.5), 2, 2))
        assert g == pytest.approx((0.5, 0.5))

    @given(models())
    @settings(max_examples=60, deadline=None)
    def test_normalized(self, model):
        g = small_g(model)
        assert math.fsum(g) == pytest.approx(1.0, abs=1e-10)
        assert all(x >= 0 for x in g)

    def test_model_validation(self):
        with pytest.raises(VotingModelError):
            VotingModel((0.5, 0.6), 3, 2)
        with pytest.raises(VotingModelError):
            VotingModel((0.5, 0.5), 3, 4)
        with pytest.raises(VotingModelError):
            VotingModel((1.5, -0.5), 3, 2)


class TestBruteForce:
    def test_fair_coin(self):
        assert brute_force_g(VotingModel((0.5, 0.5), 3, 2)) == pytest.approx((0.5, 0.5), abs=1e-15)

    def test_zero_state(self):
        g = brute_force_g(VotingModel((0.6, 0.0, 0.4), 4, 2))
        assert g[1] == 0.0

    def test_limit(self):
        with pytest.raises(VotingModelError):
            brute_force_g(VotingModel((0.25,) * 4, 12, 2))


class TestRatioSuppression:
    def test_example_margin(self):
        rep = check_ratio_suppression((0.7, 0.3), 3, 2)
        (pair,) = rep.margins
        assert (pair.smaller, pair.larger) == (1, 0)
        assert pair.margin == pytest.approx(3 / 7 - 0.216 / 0.784, abs=1e-12)
        assert pair.margin == pytest.approx(0.4286 - 0.2755, abs=1e-4)
        assert not rep.violations

    def test_uniform_is_vacuous(self):
        assert check_ratio_suppression((0.25,) * 4, 5, 2).margins == ()

    @given(models(max_r=4, max_m=7).filter(lambda mo: mo.m >= 2))
    @settings(max_examples=50, deadline=None)
    def test_no_violations(self, model):
        assert not check_ratio_suppression(model.h, model.m, model.t).violations


class TestImbalance:
    def test_leak_example(self):
        h, big, small = imbalance_distribution("leak", 2, 0.1)
        assert h == pytest.approx((0.4, 0.5, 0.1))
        case = check_imbalance(2, 0.1, 5, 2, "leak")
        assert case.ratio_h == pytest.approx(4.0)
        assert case.ratio_g > 4 and case.ok

    def test_shift_example(self):
        h, big, small = imbalance_distribution("shift", 2, 0.2)
        assert h == pytest.approx((0.3, 0.7))
        case = check_imbalance(2, 0.2, 5, 2, "shift")
        # the smaller state loses relative weight: g_small/g_big < 3/7
        assert 1 / case.ratio_g < 3 / 7 and case.ok

    @pytest.mark.parametrize("kind, d", [("leak", 0.25), ("leak", 0.0), ("shift", 0.5), ("shift", -0.1)])
    def test_d_range(self, kind, d):
        with pytest.raises(VotingModelError):
            check_imbalance(2, d, 5, 2, kind)

    def test_small_d_approaches_fixed_point(self):
        case = check_imbalance(3, 1e-9, 5, 2, "shift")
        assert case.ratio_g == pytest.approx(case.ratio_h, rel=1e-6)


def test_g_table_csv():
    text = g_table_csv((0.7, 0.3), 3, [2, 3])
    lines = text.splitlines()
    assert lines[0] == "state,h,g_t2,g_t3"
    assert lines[1].startswith("0,0.7,0.784,")

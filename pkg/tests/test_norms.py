import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from degenash.grid import DegenerateWeightWarning, GridFunction, build_grid
from degenash.norms import (
    WeightConvention,
    embedding_ratio,
    l2_weighted_norm,
    sobolev_ball_condition,
    lq_norm,
    muckenhoupt_ap,
    norms_of,
)


class TestNormsOf:
    def test_zero_field(self, small_grid):
        r = norms_of(GridFunction.zeros(small_grid), include_mixed=True)
        assert r.l2 == r.dx_l2 == r.weighted_dy_l2 == r.w11 == 0.0
        assert r.mixed_l2 == 0.0 and r.v_norm == 0.0

    def test_poly_l2_converges_to_one_thirtieth(self):
        # product structure: ||x(1-x)y(1-y)||_L2 = (1/30 * 1/30)^(1/2)
        errs = []
        for n in (16, 32, 64):
            g = build_grid(n, n, 0.5)
            u = GridFunction.from_callable(g, lambda X, Y: X * (1 - X) * Y * (1 - Y))
            errs.append(abs(norms_of(u).l2 - 1.0 / 30.0))
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-4

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_report_identities(self, seed):
        g = build_grid(9, 8, 0.5)
        u = random_field(g, seed)
        r = norms_of(u, include_mixed=True)
        assert r.w11**2 == pytest.approx(r.l2**2 + r.dx_l2**2 + r.weighted_dy_l2**2, rel=1e-12)
        assert r.v_norm**2 == pytest.approx(r.w11**2 + r.mixed_l2**2, rel=1e-12)

    def test_counterexample_field_stable(self):
        # (x^2+y)^(1/4) has finite weighted norm at alpha = 1/2
        vals = []
        for n in (64, 128):
            g = build_grid(n, n, 0.5)
            u = GridFunction.from_callable(g, lambda X, Y: (X**2 + Y) ** 0.25)
            vals.append(norms_of(u).w11)
        assert all(math.isfinite(v) for v in vals)
        assert abs(vals[1] - vals[0]) / vals[0] < 0.05

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), c=st.floats(0.1, 7.0))
    def test_w11_homogeneous_and_triangle(self, seed, c):
        g = build_grid(8, 8, 0.5)
        u = random_field(g, seed)
        v = random_field(g, seed + 1)
        wu, wv = norms_of(u).w11, norms_of(v).w11
        assert norms_of(c * u).w11 == pytest.approx(c * wu, rel=1e-10)
        assert norms_of(u + v).w11 <= wu + wv + 1e-10 * (wu + wv)


class TestWeightedDataNorm:
    def test_zero(self, small_grid):
        z = GridFunction.zeros(small_grid)
        assert l2_weighted_norm(z, WeightConvention.HALF_EXPONENT) == 0.0
        assert l2_weighted_norm(z, WeightConvention.FULL_EXPONENT) == 0.0

    def test_x_alpha_half_exponent(self):
        # integral of x^-a (x^a)^2 = 1/(1+a)
        for alpha in (0.5, 1.0):
            errs = []
            for n in (16, 32, 64):
                g = build_grid(n, n, alpha)
                f = GridFunction.from_callable(g, lambda X, Y: X**alpha)
                import warnings as _w

                with _w.catch_warnings():
                    _w.simplefilter("ignore", DegenerateWeightWarning)
                    val = l2_weighted_norm(f, "half")
                errs.append(abs(val - math.sqrt(1.0 / (1.0 + alpha))))
            assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_constant_half_exponent_sqrt_two(self):
        g = build_grid(96, 96, 0.5)
        f = GridFunction(g, np.ones(g.n))
        assert l2_weighted_norm(f, "half") == pytest.approx(math.sqrt(2.0), abs=0.08)

    def test_alpha_one_half_exponent_warns(self):
        g = build_grid(8, 8, 1.0)
        f = GridFunction(g, np.ones(g.n))
        with pytest.warns(DegenerateWeightWarning):
            l2_weighted_norm(f, "half")

    def test_full_exponent_is_stronger(self, small_grid):
        # full exponent at alpha=1/2 is -1, which legitimately warns
        f = GridFunction.from_callable(small_grid, lambda X, Y: X)
        with pytest.warns(DegenerateWeightWarning):
            full = l2_weighted_norm(f, "full")
        assert full > l2_weighted_norm(f, "half")


class TestLqNorm:
    def test_zero_and_constant(self, small_grid):
        assert lq_norm(GridFunction.zeros(small_grid), 3.0) == 0.0
        one = GridFunction(small_grid, np.ones(small_grid.n))
        for q in (1.0, 2.0, 4.0):
            assert lq_norm(one, q) == pytest.approx(1.0, abs=4 * small_grid.hx)

    def test_x_fourth_power(self):
        errs = []
        for n in (16, 32, 64):
            g = build_grid(n, n, 0.5)
            u = GridFunction.from_callable(g, lambda X, Y: X)
            errs.append(abs(lq_norm(u, 4.0) - (1.0 / 5.0) ** 0.25))
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_q_below_one_rejected(self, small_grid):
        with pytest.raises(ValueError):
            lq_norm(GridFunction.zeros(small_grid), 0.5)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), c=st.floats(0.1, 5.0), q=st.sampled_from([1.0, 2.0, 3.0]))
    def test_homogeneous_and_triangle(self, seed, c, q):
        g = build_grid(8, 8, 0.5)
        u = random_field(g, seed)
        v = random_field(g, seed + 1)
        assert lq_norm(c * u, q) == pytest.approx(c * lq_norm(u, q), rel=1e-10)
        assert lq_norm(u + v, q) <= (1.0 + 1e-10) * (lq_norm(u, q) + lq_norm(v, q))


class TestEmbeddingRatio:
    def test_l2_ratio_below_one(self, small_grid):
        u = GridFunction.from_callable(small_grid, lambda X, Y: X * (1 - X) * Y * (1 - Y))
        assert embedding_ratio(u, 2.0) <= 1.0

    def test_out_of_range_q(self, small_grid):
        u = GridFunction.from_callable(small_grid, lambda X, Y: X)
        with pytest.raises(ValueError):
            embedding_ratio(u, 5.0)
        with pytest.raises(ValueError):
            embedding_ratio(u, 1.5)

    def test_zero_field_rejected(self, small_grid):
        with pytest.raises(ValueError):
            embedding_ratio(GridFunction.zeros(small_grid), 2.0)


class TestMuckenhoupt:
    def test_unit_weight_constant_one(self):
        est = muckenhoupt_ap(0.0, 2.0, 200, seed=1)
        assert est.constant == pytest.approx(1.0, abs=1e-12)
        assert not est.diverged
        assert est.samples == 200

    def test_admissible_degenerate_weight(self):
        est = muckenhoupt_ap(0.5, 2.0, 500, seed=2)
        assert math.isfinite(est.constant) and not est.diverged
        assert est.constant >= 1.0  # Cauchy-Schwarz on nonconstant weight

    def test_non_integrable_weight_flags_divergence(self):
        est = muckenhoupt_ap(-3.0, 2.0, 500, seed=3)
        assert est.diverged

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            muckenhoupt_ap(0.5, 0.5, 10, seed=0)

    def test_p_one_essential_infimum_branch(self):
        # x^e lies in A_1 exactly for -1 < e <= 0
        good = muckenhoupt_ap(-0.5, 1.0, 300, seed=4)
        assert not good.diverged and math.isfinite(good.constant)
        trivial = muckenhoupt_ap(0.0, 1.0, 100, seed=4)
        assert trivial.constant == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_given_seed(self):
        a = muckenhoupt_ap(0.5, 2.0, 100, seed=9)
        b = muckenhoupt_ap(0.5, 2.0, 100, seed=9)
        assert a == b


class TestSobolevBallCondition:
    def test_admissible_configuration_finite(self):
        value = sobolev_ball_condition(2.0, 2.0, (0.0, 0.5), 300, seed=11)
        assert math.isfinite(value) and value > 0

    def test_unweighted_q4_finite(self):
        value = sobolev_ball_condition(4.0, 2.0, (0.0, 0.0), 300, seed=11)
        assert math.isfinite(value) and value > 0

    def test_vanishing_radius_vanishing_value(self):
        value = sobolev_ball_condition(2.0, 2.0, (0.0, 0.0), 20, seed=5, r_min=1e-6, r_max=2e-6)
        assert value < 1e-4

    def test_p_one_branch(self):
        value = sobolev_ball_condition(2.0, 1.0, (0.0, 0.5), 100, seed=6)
        assert math.isfinite(value)

    def test_invalid_p_q(self):
        with pytest.raises(ValueError):
            sobolev_ball_condition(2.0, 3.0, (0.0, 0.0), 10, seed=0)
        with pytest.raises(ValueError):
            sobolev_ball_condition(2.0, 0.5, (0.0, 0.0), 10, seed=0)

    def test_divergent_weight_returns_inf(self):
        value = sobolev_ball_condition(2.0, 2.0, (3.0, 0.0), 300, seed=12)
        assert value == math.inf

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from degenash.fields import bump_parameter_sets, bump_from_parameters, manufactured_pair
from degenash.grid import GridFunction, build_grid, weighted_inner
from degenash.operators import (
    Scheme,
    assemble,
    dx,
    dy,
    solve_dirichlet,
    theta_weak_form_residual,
    weak_form_residual,
)


def interior_rows(grid, x_margin=1, y_lo=1, y_hi=0):
    """Flat indices of nodes at least x_margin/y_lo/y_hi nodes away from
    the respective boundaries."""
    idx = []
    for i in range(x_margin, grid.nx - x_margin):
        for j in range(y_lo, grid.ny - y_hi):
            idx.append(i * grid.ny + j)
    return np.array(idx)


class TestAssemble:
    @pytest.mark.parametrize("scheme", [Scheme.UPWIND_Y, Scheme.CENTERED_Y])
    def test_five_point_stencil(self, small_grid, scheme):
        op = assemble(small_grid, scheme)
        nnz_per_row = np.diff(op.matrix.indptr)
        assert nnz_per_row.max() <= 5
        assert op.matrix.shape == (small_grid.n, small_grid.n)

    def test_upwind_row_matches_hand_stencil(self):
        g = build_grid(5, 5, 0.5)
        op = assemble(g, Scheme.UPWIND_Y)
        i, j = 2, 2
        row = op.matrix.getrow(i * g.ny + j).toarray().ravel()
        c = g.x[i] ** 0.5
        expected = {
            (i, j): 1.0 / g.hx**2 + c / g.hy,
            (i - 1, j): -0.5 / g.hx**2,
            (i + 1, j): -0.5 / g.hx**2,
            (i, j - 1): -c / g.hy,
        }
        for (ii, jj), val in expected.items():
            assert row[ii * g.ny + jj] == pytest.approx(val, rel=1e-14)
        assert np.count_nonzero(row) == 4

    def test_centered_row_matches_hand_stencil(self):
        g = build_grid(5, 5, 0.5)
        op = assemble(g, Scheme.CENTERED_Y)
        i, j = 1, 3
        row = op.matrix.getrow(i * g.ny + j).toarray().ravel()
        c = g.x[i] ** 0.5
        assert row[i * g.ny + j] == pytest.approx(1.0 / g.hx**2, rel=1e-14)
        assert row[i * g.ny + j - 1] == pytest.approx(-c / (2 * g.hy), rel=1e-14)
        assert row[i * g.ny + j + 1] == pytest.approx(c / (2 * g.hy), rel=1e-14)

    def test_constant_annihilated_away_from_boundary(self, small_grid):
        op = assemble(small_grid, Scheme.UPWIND_Y)
        one = GridFunction(small_grid, np.ones(small_grid.n))
        Au = op.apply(one).values
        assert np.max(np.abs(Au[interior_rows(small_grid)])) < 1e-10

    def test_quadratic_diffusion_exact(self, small_grid):
        # -1/2 (x(1-x))'' = 1, no y-dependence: centered differencing is
        # exact for quadratics
        op = assemble(small_grid, Scheme.UPWIND_Y)
        u = GridFunction.from_callable(small_grid, lambda X, Y: X * (1 - X))
        Au = op.apply(u).values
        assert np.allclose(Au[interior_rows(small_grid)], 1.0, atol=1e-10)

    def test_centered_advection_of_linear_y(self, small_grid):
        # u = y in a single column: 3-point centered formula gives x^alpha * 1
        op = assemble(small_grid, Scheme.CENTERED_Y)
        u = GridFunction.from_callable(small_grid, lambda X, Y: Y)
        Au = op.apply(u).values2d()
        for i in (3, 7):
            expected = small_grid.x[i] ** small_grid.alpha
            assert np.allclose(Au[i, 1:-1], expected, atol=1e-10)


class TestSolve:
    def test_zero_rhs_zero_solution(self, small_grid):
        op = assemble(small_grid)
        u, rep = solve_dirichlet(op, GridFunction.zeros(small_grid))
        assert np.all(u.values == 0.0)
        assert rep.residual_norm == 0.0
        assert rep.iterations == 0

    def test_residual_contract(self, small_grid):
        op = assemble(small_grid)
        f = GridFunction.from_callable(small_grid, lambda X, Y: np.sin(3 * X + Y))
        u, rep = solve_dirichlet(op, f, tol=1e-10)
        scale = max(1.0, float(np.linalg.norm(f.values)))
        assert rep.residual_norm <= 1e-10 * scale

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10**6), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        g = build_grid(10, 10, 0.5)
        op = assemble(g)
        f1 = random_field(g, seed)
        f2 = random_field(g, seed + 1)
        u12, _ = solve_dirichlet(op, a * f1 + b * f2)
        u1, _ = solve_dirichlet(op, f1)
        u2, _ = solve_dirichlet(op, f2)
        scale = abs(a) * np.linalg.norm(f1.values) + abs(b) * np.linalg.norm(f2.values) + 1.0
        diff = np.linalg.norm(u12.values - a * u1.values - b * u2.values)
        assert diff <= 1e-9 * scale

    def test_invalid_tol(self, small_grid):
        op = assemble(small_grid)
        with pytest.raises(ValueError):
            solve_dirichlet(op, GridFunction.zeros(small_grid), tol=0.0)

    @pytest.mark.parametrize("scheme,lo,hi", [(Scheme.UPWIND_Y, 1.5, 2.6), (Scheme.CENTERED_Y, 3.2, 4.6)])
    def test_manufactured_error_shrinks(self, scheme, lo, hi):
        errs = []
        for n in (16, 32):
            g = build_grid(n, n, 0.5)
            u_exact, f = manufactured_pair(g)
            u, _ = solve_dirichlet(assemble(g, scheme), f)
            errs.append(np.max(np.abs(u.values - u_exact.values)))
        assert lo <= errs[0] / errs[1] <= hi

    def test_discrete_maximum_principle_upwind(self):
        g = build_grid(24, 24, 0.5)
        op = assemble(g, Scheme.UPWIND_Y)
        rng = np.random.default_rng(11)
        f = GridFunction(g, -np.abs(rng.standard_normal(g.n)))
        u, _ = solve_dirichlet(op, f)
        assert np.max(u.values) <= 1e-12


class TestWeakForm:
    def test_all_zero(self, small_grid):
        z = GridFunction.zeros(small_grid)
        phi = random_field(small_grid, 5)
        assert weak_form_residual(z, z, phi) == 0.0
        assert theta_weak_form_residual(z, z, phi, 1.0) == 0.0

    def test_manufactured_residual_first_order(self):
        res = []
        for n in (16, 32, 64):
            g = build_grid(n, n, 0.5)
            u, f = manufactured_pair(g)
            phi = GridFunction.from_callable(g, lambda X, Y: np.sin(np.pi * X) * np.sin(2 * np.pi * Y))
            res.append(abs(weak_form_residual(u, f, phi)))
        assert res[1] < res[0] and res[2] < res[1]
        assert res[2] < 0.6 * res[0]

    def test_solved_state_residual_decreases(self):
        params = bump_parameter_sets(10, seed=21)
        worst = []
        for n in (16, 32, 64):
            g = build_grid(n, n, 0.5)
            _, f = manufactured_pair(g)
            u, _ = solve_dirichlet(assemble(g), f)
            worst.append(max(abs(weak_form_residual(u, f, bump_from_parameters(g, p))) for p in params))
        assert worst[1] < worst[0] and worst[2] < worst[1]

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_linear_in_test_function(self, seed):
        g = build_grid(9, 9, 0.5)
        u = random_field(g, seed)
        f = random_field(g, seed + 1)
        p1 = random_field(g, seed + 2)
        p2 = random_field(g, seed + 3)
        lhs = weak_form_residual(u, f, 2.0 * p1 - 5.0 * p2)
        rhs = 2.0 * weak_form_residual(u, f, p1) - 5.0 * weak_form_residual(u, f, p2)
        assert abs(lhs - rhs) <= 1e-11 * (abs(lhs) + abs(rhs) + 1.0)

    def test_theta_zero_matches_dy_test_form(self, small_grid):
        u = random_field(small_grid, 1)
        f = random_field(small_grid, 2)
        phi = random_field(small_grid, 3)
        # independent evaluation of the unweighted d_y-test identity
        alpha = small_grid.alpha
        dphi = dy(phi)
        manual = (
            weighted_inner(dy(u), dphi, alpha)
            + 0.5 * weighted_inner(dx(u), dx(dphi), 0.0)
            - weighted_inner(f, dphi, 0.0)
        )
        assert theta_weak_form_residual(u, f, phi, 0.0) == pytest.approx(manual, rel=1e-14, abs=1e-15)

    def test_theta_manufactured_residual_decreases(self):
        res = []
        for n in (16, 32, 64):
            g = build_grid(n, n, 0.5)
            u, f = manufactured_pair(g)
            phi = GridFunction.from_callable(g, lambda X, Y: np.sin(np.pi * X) * np.sin(2 * np.pi * Y))
            res.append(abs(theta_weak_form_residual(u, f, phi, 1.0)))
        assert res[1] < res[0] and res[2] < res[1]

    def test_negative_theta_rejected(self, small_grid):
        z = GridFunction.zeros(small_grid)
        with pytest.raises(ValueError):
            theta_weak_form_residual(z, z, z, -0.5)

"""Discrete degenerate operator, Dirichlet solver, and weak-form residuals.

The canonical sign convention is

    A u = -1/2 u_xx + x**alpha u_y = f,

which is the operator the weak form actually characterizes (integrating
the x-term by parts gives the +1/2 (u_x, phi_x) pairing).  The advection
coefficient x**alpha is nonnegative, so the upwind variant differences
backward in y and the resulting matrix is an M-matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid, GridFunction, weighted_inner


class Scheme(str, Enum):
    UPWIND_Y = "upwind"
    CENTERED_Y = "centered"


class SolverError(RuntimeError):
    """Linear solve failed; carries the best residual reached."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SparseOperator:
    grid: Grid
    scheme: Scheme
    matrix: sp.csr_matrix
    theta: float | None = None

    def apply(self, u: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.matrix @ u.values)


@dataclass(frozen=True)
class SolveReport:
    residual_norm: float
    iterations: int
    wall_time: float


def assemble(grid: Grid, scheme: Scheme = Scheme.UPWIND_Y) -> SparseOperator:
    """Assemble A = -1/2 d_xx + x**alpha d_y over interior nodes.

    Dirichlet values are zero, so eliminated neighbors need no
    right-hand-side correction.  Flat index is i*ny + j.
    """
    scheme = Scheme(scheme)
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    # -1/2 d_xx: tridiag(-1, 2, -1) / (2 hx^2)
    dxx = sp.diags(
        [np.full(nx - 1, -1.0), np.full(nx, 2.0), np.full(nx - 1, -1.0)],
        offsets=[-1, 0, 1],
    ) / (2.0 * hx * hx)
    if scheme is Scheme.UPWIND_Y:
        dy = sp.diags([np.full(ny - 1, -1.0), np.full(ny, 1.0)], offsets=[-1, 0]) / hy
    else:
        dy = sp.diags([np.full(ny - 1, -1.0), np.full(ny - 1, 1.0)], offsets=[-1, 1]) / (2.0 * hy)
    coeff = sp.diags(grid.x**grid.alpha)
    matrix = sp.kron(dxx, sp.identity(ny), format="csr") + sp.kron(coeff, dy, format="csr")
    return SparseOperator(grid=grid, scheme=scheme, matrix=matrix.tocsr())


class DirichletSolver:
    """Direct sparse factorization of an assembled operator.

    Caches the LU factors; forward solves and transpose (adjoint) solves
    share the same factorization.  Not reentrant across threads.
    """

    def __init__(self, op: SparseOperator):
        self.op = op
        self._lu = spla.splu(op.matrix.tocsc())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=float))

    def solve_adjoint(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(rhs, dtype=float), trans="T")


def solve_dirichlet(
    op: SparseOperator, f: GridFunction, tol: float = 1e-10
) -> tuple[GridFunction, SolveReport]:
    """Solve A u = f with a residual contract.

    Sparse direct factorization first (the matrix is nonsymmetric, so no
    symmetric shortcut), with a few rounds of iterative refinement if
    round-off leaves the residual above tol; preconditioned GMRES as the
    fallback; explicit SolverError carrying the achieved residual if
    neither meets the contract.
    """
    if f.grid != op.grid:
        raise ValueError("right-hand side lives on a different grid")
    if not tol > 0:
        raise ValueError("tol must be positive")
    start = time.perf_counter()
    A = op.matrix
    rhs = f.values
    scale = max(1.0, float(np.linalg.norm(rhs)))
    iterations = 0
    lu = spla.splu(A.tocsc())
    u = lu.solve(rhs)
    residual = float(np.linalg.norm(A @ u - rhs))
    refinements = 0
    while residual > tol * scale and refinements < 3:
        u = u + lu.solve(rhs - A @ u)
        residual = float(np.linalg.norm(A @ u - rhs))
        refinements += 1
    if residual > tol * scale:
        u, iterations, residual = _gmres_fallback(A, rhs, u, tol * scale)
    if residual > tol * scale:
        raise SolverError("solve did not meet the residual tolerance", residual)
    report = SolveReport(
        residual_norm=residual, iterations=iterations, wall_time=time.perf_counter() - start
    )
    return GridFunction(op.grid, u), report


def _gmres_fallback(A, rhs, x0, abs_tol):
    ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
    precond = spla.LinearOperator(A.shape, ilu.solve)
    counter = {"n": 0}

    def count(_):
        counter["n"] += 1

    u, _ = spla.gmres(A, rhs, x0=x0, M=precond, rtol=0.0, atol=abs_tol,
                      maxiter=1000, callback=count, callback_type="legacy")
    residual = float(np.linalg.norm(A @ u - rhs))
    return u, counter["n"], residual


# ---------------------------------------------------------------------------
# Discrete derivatives.
#
# Centered differences at interior nodes, one-sided differences at
# boundary-adjacent nodes using interior values only.  The one-sided rule
# deliberately ignores the implicit zero boundary: nodal samples of
# functions that do not vanish on the boundary (norm studies) must not
# pick up O(1/h) jump artifacts there.
# ---------------------------------------------------------------------------


def _diff_along(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    if v.shape[0] < 2:
        raise ValueError("need at least 2 nodes along the differenced axis")
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (v[1] - v[0]) / h
    out[-1] = (v[-1] - v[-2]) / h
    return np.moveaxis(out, 0, axis)


def dx(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, _diff_along(u.values2d(), u.grid.hx, axis=0).reshape(u.grid.n))


def dy(u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, _diff_along(u.values2d(), u.grid.hy, axis=1).reshape(u.grid.n))


def dxdy(u: GridFunction) -> GridFunction:
    return dx(dy(u))


def weak_form_residual(u: GridFunction, f: GridFunction, phi: GridFunction) -> float:
    """Residual of the weak formulation against the test function phi.

    Returns the quadrature value of
        (x**alpha u_y, phi) + 1/2 (u_x, phi_x) - (f, phi),
    zero (up to consistency error) when u weakly solves A u = f and phi
    vanishes on the x = 0, 1 boundaries.
    """
    alpha = u.grid.alpha
    return (
        weighted_inner(dy(u), phi, alpha)
        + 0.5 * weighted_inner(dx(u), dx(phi), 0.0)
        - weighted_inner(f, phi, 0.0)
    )


def theta_weak_form_residual(u: GridFunction, f: GridFunction, phi: GridFunction, theta: float) -> float:
    """Residual of the exponentially weighted equivalent weak form.

    The test expression is d_y phi and every pairing carries the factor
    exp(-theta*y):
        (x**alpha u_y, phi_y)_theta + 1/2 (u_x, (phi_y)_x)_theta - (f, phi_y)_theta.
    At theta = 0 this is exactly the unweighted d_y-test form.
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    alpha = u.grid.alpha
    yw = lambda y: np.exp(-theta * y)
    dphi = dy(phi)
    return (
        weighted_inner(dy(u), dphi, alpha, y_weight=yw)
        + 0.5 * weighted_inner(dx(u), dx(dphi), 0.0, y_weight=yw)
        - weighted_inner(f, dphi, 0.0, y_weight=yw)
    )

"""Weighted norms, Muckenhoupt class estimates, and embedding ratios.

Discrete derivatives reuse the operator module's difference conventions so
that norm ratios compare like with like.  Ball-average quantities for the
Muckenhoupt checks integrate x-power weights exactly in y (the chord length
of the ball inside the square is closed-form) and by midpoint quadrature
in x, which keeps the x=0 singularity off the evaluation points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import Grid, GridFunction, cell_averages, cell_weights, weighted_inner
from .operators import dx, dxdy, dy

DIAM = math.sqrt(2.0)


@dataclass(frozen=True)
class NormReport:
    """Constituent seminorms of the weighted solution space.

    w11**2 = l2**2 + dx_l2**2 + weighted_dy_l2**2 by construction, and
    v_norm**2 = w11**2 + mixed_l2**2 when the mixed derivative is included.
    """

    l2: float
    dx_l2: float
    weighted_dy_l2: float
    w11: float
    mixed_l2: float | None = None
    v_norm: float | None = None


class WeightConvention(str, Enum):
    # The space definition reads ||x**-alpha f||_L2 while the energy
    # estimate is derived with (integral of x**-alpha f^2)^(1/2); the
    # half-exponent form is the default because it is the one the
    # estimate actually controls.
    HALF_EXPONENT = "half"
    FULL_EXPONENT = "full"


@dataclass(frozen=True)
class ApEstimate:
    p: float
    constant: float
    samples: int
    diverged: bool

    def __post_init__(self):
        if not self.diverged and self.constant < 0:
            raise ValueError("A_p constant cannot be negative")


def norms_of(u: GridFunction, include_mixed: bool = False) -> NormReport:
    """All seminorms of u with the shared derivative/quadrature conventions."""
    alpha = u.grid.alpha
    dxu, dyu = dx(u), dy(u)
    l2 = math.sqrt(max(weighted_inner(u, u, 0.0), 0.0))
    dx_l2 = math.sqrt(max(weighted_inner(dxu, dxu, 0.0), 0.0))
    wdy = math.sqrt(max(weighted_inner(dyu, dyu, alpha), 0.0))
    w11 = math.sqrt(l2**2 + dx_l2**2 + wdy**2)
    mixed = v_norm = None
    if include_mixed:
        m = dxdy(u)
        mixed = math.sqrt(max(weighted_inner(m, m, 0.0), 0.0))
        v_norm = math.sqrt(w11**2 + mixed**2)
    return NormReport(l2=l2, dx_l2=dx_l2, weighted_dy_l2=wdy, w11=w11, mixed_l2=mixed, v_norm=v_norm)


def l2_weighted_norm(
    f: GridFunction, convention: WeightConvention | str = WeightConvention.HALF_EXPONENT
) -> float:
    """Data-space norm of f with the degeneracy weight.

    half: (integral of x**-alpha f^2)^(1/2); full: (integral of
    x**-2alpha f^2)^(1/2).  A DegenerateWeightWarning fires when the
    effective exponent is <= -1 and f carries mass next to x=0.
    """
    convention = WeightConvention(convention)
    alpha = f.grid.alpha
    e = -alpha if convention is WeightConvention.HALF_EXPONENT else -2.0 * alpha
    return math.sqrt(max(weighted_inner(f, f, e), 0.0))


def lq_norm(u: GridFunction, q: float) -> float:
    """Unweighted L^q norm by the shared midpoint-in-cell quadrature."""
    if not (1.0 <= q < math.inf):
        raise ValueError(f"q must lie in [1, inf), got {q}")
    ub = np.abs(cell_averages(u))
    w = cell_weights(u.grid, 0.0)
    return float(np.sum(w * ub**q) ** (1.0 / q))


def embedding_ratio(u: GridFunction, q: float) -> float:
    """||u||_{L^q} / ||u||_{W11}; the embedding constants live in [2,4]."""
    if not (2.0 <= q <= 4.0):
        raise ValueError(f"embedding ratio requires q in [2, 4], got {q}")
    w11 = norms_of(u).w11
    if w11 == 0.0:
        raise ValueError("embedding ratio undefined for u = 0")
    return lq_norm(u, q) / w11


# ---------------------------------------------------------------------------
# Ball-average machinery for the Muckenhoupt conditions.
# ---------------------------------------------------------------------------


def _ball_integral(
    cx: float, cy: float, r: float, exponent: float, n_quad: int
) -> tuple[float, float]:
    """(integral of x**exponent over B((cx,cy),r) cap Omega, area of that set).

    The y-extent of the intersection at abscissa x is a closed-form chord,
    so only the x-integration is numerical (midpoint rule, never at x=0).
    """
    x_lo, x_hi = max(0.0, cx - r), min(1.0, cx + r)
    if x_hi <= x_lo:
        return 0.0, 0.0
    step = (x_hi - x_lo) / n_quad
    x = x_lo + (np.arange(n_quad) + 0.5) * step
    half = np.sqrt(np.maximum(r * r - (x - cx) ** 2, 0.0))
    chord = np.maximum(np.minimum(cy + half, 1.0) - np.maximum(cy - half, 0.0), 0.0)
    area = float(np.sum(chord) * step)
    value = float(np.sum(np.power(x, exponent) * chord) * step)
    return value, area


def _sample_balls(
    n_balls: int, seed: int, r_min: float, r_max: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    cx = rng.uniform(0.0, 1.0, n_balls)
    cy = rng.uniform(0.0, 1.0, n_balls)
    # Log-uniform radii probe the degeneracy scale and the domain scale alike.
    r = np.exp(rng.uniform(math.log(r_min), math.log(r_max), n_balls))
    return cx, cy, r


def muckenhoupt_ap(
    weight_exponent: float,
    p: float,
    n_balls: int,
    seed: int,
    n_quad: int = 2048,
    r_min: float = 1e-3,
    r_max: float = DIAM,
    overflow: float = 1e4,
) -> ApEstimate:
    """Sampled A_p constant of the weight x**weight_exponent.

    Draws n_balls balls with centers uniform in the square and radii
    log-uniform in [r_min, r_max], evaluates the A_p product
    (avg of w) * (avg of w**(-1/(p-1)))**(p-1) over each B cap Omega, and
    returns the sample supremum.  p = 1 switches to the essential-infimum
    form (avg of w) / (essinf of w), with the essinf taken over the
    quadrature abscissas.  Divergence is data, not an error: the flag is
    set when any product exceeds `overflow` or is nonfinite.  `overflow`
    must stay well below the quadrature saturation scale ~n_quad**2.
    """
    if p < 1.0:
        raise ValueError(f"A_p requires p >= 1, got {p}")
    if n_balls < 1:
        raise ValueError("need at least one ball")
    cxs, cys, rs = _sample_balls(n_balls, seed, r_min, r_max)
    products = np.empty(n_balls)
    for k in range(n_balls):
        w_int, area = _ball_integral(cxs[k], cys[k], rs[k], weight_exponent, n_quad)
        if area == 0.0:
            products[k] = 0.0
            continue
        avg_w = w_int / area
        if p == 1.0:
            x_lo = max(0.0, cxs[k] - rs[k]) + 0.5 * (min(1.0, cxs[k] + rs[k]) - max(0.0, cxs[k] - rs[k])) / n_quad
            x_hi = min(1.0, cxs[k] + rs[k])
            essinf = min(x_lo**weight_exponent, x_hi**weight_exponent)
            products[k] = avg_w / essinf if essinf > 0 else math.inf
        else:
            winv_int, _ = _ball_integral(cxs[k], cys[k], rs[k], -weight_exponent / (p - 1.0), n_quad)
            products[k] = avg_w * (winv_int / area) ** (p - 1.0)
    finite = np.isfinite(products)
    diverged = bool(np.any(~finite) or np.any(products[finite] > overflow))
    constant = float(np.max(products)) if np.all(finite) else math.inf
    return ApEstimate(p=float(p), constant=constant, samples=n_balls, diverged=diverged)


def sobolev_ball_condition(
    q: float,
    p: float,
    weights: tuple[float, float],
    n_balls: int,
    seed: int,
    n_quad: int = 2048,
    r_min: float = 1e-3,
    r_max: float = DIAM,
    overflow: float = 1e4,
) -> float:
    """Sample supremum of the weighted-Sobolev-inequality ball condition.

    For each ball evaluates, with v identically 1 and each weight
    w_j = x**e_j,

        |B|**-1 * diam(B) * |B cap Omega|**(1/q)
            * (integral of w_j**(-1/(p-1)) over B cap Omega)**((p-1)/p),

    and returns the largest value over balls and j.  Divergence folds into
    a +inf sentinel.  At p = 1 the exponent (p-1)/p vanishes and the last
    factor is 1.
    """
    if not (1.0 <= p <= q < math.inf):
        raise ValueError(f"need 1 <= p <= q < inf, got p={p}, q={q}")
    cxs, cys, rs = _sample_balls(n_balls, seed, r_min, r_max)
    worst = 0.0
    for k in range(n_balls):
        r = rs[k]
        _, area = _ball_integral(cxs[k], cys[k], r, 0.0, n_quad)
        if area == 0.0:
            continue
        geom = (2.0 * r) / (math.pi * r * r) * area ** (1.0 / q)
        for e in weights:
            if p == 1.0:
                value = geom
            else:
                winv_int, _ = _ball_integral(cxs[k], cys[k], r, -e / (p - 1.0), n_quad)
                value = geom * winv_int ** ((p - 1.0) / p)
            if not math.isfinite(value) or value > overflow:
                return math.inf
            worst = max(worst, value)
    return worst

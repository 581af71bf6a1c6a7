"""Nodal field constructors shared by the studies, the game, and the tests."""

from __future__ import annotations

import numpy as np

from .grid import Grid, GridFunction


def sample(grid: Grid, fn) -> GridFunction:
    return GridFunction.from_callable(grid, fn)


FIELD_KINDS = ("zero", "one", "sinsin", "poly", "xalpha_siny", "right_half")


def named_field(grid: Grid, kind: str, amplitude: float = 1.0) -> GridFunction:
    """Field registry used by config files.

    Kinds: zero, one, sinsin (sin(pi x) sin(pi y)), poly
    (x(1-x)y(1-y)), xalpha_siny (x**alpha sin(pi y)), right_half
    (indicator of x > 1/2).
    """
    a = float(amplitude)
    alpha = grid.alpha
    registry = {
        "zero": lambda X, Y: 0.0 * X,
        "one": lambda X, Y: np.ones_like(X),
        "sinsin": lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y),
        "poly": lambda X, Y: X * (1 - X) * Y * (1 - Y),
        "xalpha_siny": lambda X, Y: X**alpha * np.sin(np.pi * Y),
        "right_half": lambda X, Y: (X > 0.5).astype(float),
    }
    if kind not in registry:
        raise ValueError(f"unknown field kind {kind!r}; known: {sorted(registry)}")
    return a * sample(grid, registry[kind])


def manufactured_pair(grid: Grid, kind: str = "sinsin") -> tuple[GridFunction, GridFunction]:
    """Exact solution u* and forcing f* = -1/2 u*_xx + x**alpha u*_y.

    'sinsin': u* = sin(pi x) sin(pi y);
    'poly':   u* = x(1-x) y(1-y), whose diffusion part is exact under
              centered differencing.
    """
    alpha = grid.alpha
    if kind == "sinsin":
        u_fn = lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y)
        f_fn = lambda X, Y: (np.pi**2 / 2) * np.sin(np.pi * X) * np.sin(np.pi * Y) + X**alpha * np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)
    elif kind == "poly":
        u_fn = lambda X, Y: X * (1 - X) * Y * (1 - Y)
        f_fn = lambda X, Y: Y * (1 - Y) + X**alpha * X * (1 - X) * (1 - 2 * Y)
    else:
        raise ValueError(f"unknown manufactured solution {kind!r}")
    return sample(grid, u_fn), sample(grid, f_fn)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def boundary_cutoff(X: np.ndarray, Y: np.ndarray, lo: float = 0.05, hi: float = 0.15) -> np.ndarray:
    """Smooth window equal to 1 well inside the square and identically 0
    within distance `lo` of the boundary."""

    def ramp(t):
        return _smoothstep((t - lo) / (hi - lo))

    return ramp(X) * ramp(1 - X) * ramp(Y) * ramp(1 - Y)


def random_bump(grid: Grid, rng: np.random.Generator, n_bumps: int = 4) -> GridFunction:
    """Superposition of Gaussian bumps windowed to vanish identically near
    the boundary (so that all trace terms drop out exactly)."""
    centers = rng.uniform(0.25, 0.75, size=(n_bumps, 2))
    widths = rng.uniform(0.05, 0.2, size=n_bumps)
    amps = rng.uniform(-1.0, 1.0, size=n_bumps)

    def fn(X, Y):
        out = np.zeros_like(X)
        for (cx, cy), s, a in zip(centers, widths, amps):
            out += a * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s * s))
        return out * boundary_cutoff(X, Y)

    return sample(grid, fn)


def bump_family(grid: Grid, n: int, seed: int, n_bumps: int = 4) -> list[GridFunction]:
    rng = np.random.default_rng(seed)
    return [random_bump(grid, rng, n_bumps) for _ in range(n)]


def bump_parameter_sets(n: int, seed: int, n_bumps: int = 4) -> list[dict]:
    """Draw bump parameters once so the same smooth functions can be
    re-sampled on several grids (refinement studies)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(
            dict(
                centers=rng.uniform(0.25, 0.75, size=(n_bumps, 2)),
                widths=rng.uniform(0.05, 0.2, size=n_bumps),
                amps=rng.uniform(-1.0, 1.0, size=n_bumps),
            )
        )
    return out


def bump_from_parameters(grid: Grid, params: dict) -> GridFunction:
    def fn(X, Y):
        out = np.zeros_like(X)
        for (cx, cy), s, a in zip(params["centers"], params["widths"], params["amps"]):
            out += a * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s * s))
        return out * boundary_cutoff(X, Y)

    return sample(grid, fn)

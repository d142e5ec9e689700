"""Exponential-decay fitting for accuracy-vs-disorder point clouds.

The model is y = y0 + A * exp(-B * x) with B >= 0.  For any fixed B the
optimal (y0, A) solve a two-parameter linear least-squares problem, so B
is the only nonlinear unknown (variable projection).  B is located by a
coarse log-spaced grid scan followed by golden-section refinement; the
flat fit (A = 0, y0 = mean) is always a candidate, which makes the result
never worse than the constant baseline.  The search is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError

B_BOUNDS = (1e-3, 1e3)
GRID_SIZE = 200
REFINE_RTOL = 1e-9
FLAT_BASIS_EPS = 1e-12
ZERO_VARIANCE_EPS = 1e-15

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FittedCurve:
    """Parameters of one fitted decay curve."""

    y0: float
    A: float
    B: float
    r_squared: float
    n_points: int
    degenerate: bool = False

    def value(self, x):
        return self.y0 + self.A * np.exp(-self.B * np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class ScalingPoint:
    """One experiment cell's outcome: disorder vs accuracy plus its context."""

    apce: float
    map_value: float
    smap_value: float
    network_size: int
    target_length: int
    m: int
    mechanism: str
    topology: str
    model: str
    seed: int


def _to_xy(points):
    xs = np.asarray([p[0] for p in points], dtype=np.float64)
    ys = np.asarray([p[1] for p in points], dtype=np.float64)
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValidationError("points must have finite coordinates")
    return xs, ys


def _solve_linear(xs, ys, b):
    """Best (y0, A, ssr) at fixed decay rate b; None when the basis collapses."""
    e = np.exp(-b * xs)
    if e.max() - e.min() < FLAT_BASIS_EPS:
        return None
    design = np.column_stack([np.ones_like(xs), e])
    coef, _, _, _ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def _ssr_at(xs, ys, b, flat_ssr):
    solved = _solve_linear(xs, ys, b)
    return flat_ssr if solved is None else solved[2]


def fit_exp_decay(points, b_bounds=B_BOUNDS, grid_size=GRID_SIZE) -> FittedCurve:
    """Fit y0 + A*exp(-B*x) to (x, y) points.

    Requires at least three points with three distinct x values.  Flat
    data (or data better explained by a constant) comes back as A = 0
    with B = 0.
    """
    xs, ys = _to_xy(points)
    if xs.size < 3 or np.unique(xs).size < 3:
        raise InsufficientDataError(
            "need at least 3 points with 3 distinct x values to fit the curve"
        )
    y_mean = float(ys.mean())
    flat_resid = ys - y_mean
    flat_ssr = float(flat_resid @ flat_resid)
    sst = flat_ssr
    if sst < ZERO_VARIANCE_EPS:
        return FittedCurve(y0=y_mean, A=0.0, B=0.0, r_squared=1.0,
                           n_points=int(xs.size), degenerate=True)

    grid = np.geomspace(b_bounds[0], b_bounds[1], grid_size)
    ssrs = np.array([_ssr_at(xs, ys, b, flat_ssr) for b in grid])
    k = int(np.argmin(ssrs))

    # Golden-section on log(B) inside the bracket around the best grid point.
    lo = math.log(grid[max(k - 1, 0)])
    hi = math.log(grid[min(k + 1, grid_size - 1)])
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc = _ssr_at(xs, ys, math.exp(c), flat_ssr)
    fd = _ssr_at(xs, ys, math.exp(d), flat_ssr)
    while hi - lo > REFINE_RTOL:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = _ssr_at(xs, ys, math.exp(c), flat_ssr)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = _ssr_at(xs, ys, math.exp(d), flat_ssr)
    b_star = math.exp((lo + hi) / 2.0)

    best = _solve_linear(xs, ys, b_star)
    if best is None or best[2] >= flat_ssr:
        y0, a, b_star, ssr = y_mean, 0.0, 0.0, flat_ssr
    else:
        y0, a, ssr = best
    return FittedCurve(y0=y0, A=a, B=b_star, r_squared=1.0 - ssr / sst,
                       n_points=int(xs.size))


def r_squared(points, curve: FittedCurve) -> float:
    """Coefficient of determination of `curve` on `points`.

    Zero-variance targets return 1.0 by convention (see FittedCurve.degenerate).
    """
    xs, ys = _to_xy(points)
    if xs.size < 2:
        raise ValueError("need at least 2 points")
    resid = ys - curve.value(xs)
    dev = ys - ys.mean()
    sst = float(dev @ dev)
    if sst < ZERO_VARIANCE_EPS:
        return 1.0
    return 1.0 - float(resid @ resid) / sst

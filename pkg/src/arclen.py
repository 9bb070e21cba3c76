from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.curve_core import Curve, SampledSpec, curve_partition, default_tol, gauss_legendre
from src.lib.convergence import RefinementSchedule
from src.lib.errors import ZeroLength

# Absolute chord slack is LIPSCHITZ_SLACK * total length
LIPSCHITZ_SLACK = 1e-9
SPEED_TOL = 1e-3
# Knots turning by more than this (radians) are corners, not discretised smooth arcs
KINK_ANGLE = 0.05


@dataclass(frozen=True, eq=False)
class UnitSpeedCurve:
    """
    Arc-length parametrisation g on [0, total_length].

    g is the polyline through the knot table (s(X_j), f(X_j)) of the refined
    source grid X, so it is exactly 1-Lipschitz and g(s(x)) = f(x) on X.
    """

    total_length: float
    s_grid: np.ndarray
    samples: np.ndarray
    source: Curve = field(repr=False)
    knot_s: np.ndarray = field(repr=False)
    knot_values: np.ndarray = field(repr=False)
    source_grid: np.ndarray = field(repr=False)
    source_s: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.source.dim

    def evaluate(self, s) -> np.ndarray:
        arr = np.asarray(s, dtype=float)
        ss = np.clip(np.atleast_1d(arr).ravel(), 0.0, self.total_length)
        vals = np.column_stack([np.interp(ss, self.knot_s, self.knot_values[:, m]) for m in range(self.dim)])
        return vals[0] if arr.ndim == 0 else vals

    def parameter(self, s) -> np.ndarray:
        """Generalised inverse x(s); on a plateau of the arc-length function picks its left end."""
        ss = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.searchsorted(self.source_s, ss, side="left")
        idx = np.clip(idx, 1, len(self.source_s) - 1)
        s0, s1 = self.source_s[idx - 1], self.source_s[idx]
        x0, x1 = self.source_grid[idx - 1], self.source_grid[idx]
        width = s1 - s0
        frac = np.where(width > 0, (ss - s0) / np.where(width > 0, width, 1.0), 0.0)
        x = x0 + np.clip(frac, 0.0, 1.0) * (x1 - x0)
        x = np.where(ss <= 0.0, self.source_grid[0], x)
        return x

    def as_curve(self) -> Curve:
        return Curve(0.0, self.total_length, self.dim, SampledSpec(self.knot_s, self.knot_values))

    def directions(self) -> np.ndarray:
        """Unit direction of each knot segment (g' where it exists)."""
        steps = np.diff(self.knot_values, axis=0)
        return steps / np.diff(self.knot_s)[:, None]


def reparametrize(curve: Curve, schedule: Optional[RefinementSchedule] = None,
                  tol: Optional[float] = None) -> UnitSpeedCurve:
    schedule = schedule or RefinementSchedule()
    tol = default_tol(curve) if tol is None else tol

    X = curve_partition(curve, schedule.counts()[-1]).points
    values = curve.evaluate(X)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(values, axis=0), axis=1))])
    total = float(s[-1])
    if total <= tol:
        raise ZeroLength(f"Curve {curve.name} has length {total:.3g} <= {tol:.3g}; no arc-length parameter exists")

    keep = np.concatenate([[True], np.diff(s) > 0])
    knot_s, knot_values = s[keep], values[keep]
    knot_s[-1] = total

    s_grid = np.linspace(0.0, total, len(X))
    s_grid[-1] = total
    samples = np.column_stack([np.interp(s_grid, knot_s, knot_values[:, m]) for m in range(curve.dim)])
    return UnitSpeedCurve(total, s_grid, samples, curve, knot_s, knot_values, X, s)


def _kinks(usc: UnitSpeedCurve, angle: float) -> np.ndarray:
    d = usc.directions()
    if len(d) < 2:
        return np.empty(0)
    cos = np.clip(np.sum(d[1:] * d[:-1], axis=1), -1.0, 1.0)
    turning = np.arccos(cos)
    return usc.knot_s[1:-1][turning > angle]


def check_unit_speed(usc: UnitSpeedCurve, h: Optional[float] = None, kink_angle: float = KINK_ANGLE) -> dict:
    """
    Extremal forward difference quotients |g(s+h) - g(s)| / h over the uniform grid.

    Steps that straddle a corner of g are skipped: there the quotient measures
    the corner angle, not the speed.
    """
    if h is None:
        h = 2.0 * (usc.s_grid[1] - usc.s_grid[0])
    start = usc.s_grid[usc.s_grid + h <= usc.total_length]
    q = np.linalg.norm(usc.evaluate(start + h) - usc.evaluate(start), axis=1) / h

    corners = _kinks(usc, kink_angle)
    straddle = np.searchsorted(corners, start + h, side="left") - np.searchsorted(corners, start, side="right")
    q = q[straddle == 0]
    if q.size == 0:
        return {"min_speed": float("nan"), "max_speed": float("nan"), "h": h, "checked": 0,
                "skipped": int(start.size)}
    return {"min_speed": float(q.min()), "max_speed": float(q.max()), "h": float(h),
            "checked": int(q.size), "skipped": int(start.size - q.size)}


def check_chord_bound(usc: UnitSpeedCurve, pairs: int = 2000, seed: int = 0) -> float:
    """Worst excess of |g(v) - g(u)| over v - u on seeded grid pairs; <= slack means 1-Lipschitz."""
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(usc.s_grid), size=pairs)
    j = rng.integers(0, len(usc.s_grid), size=pairs)
    u, v = usc.s_grid[np.minimum(i, j)], usc.s_grid[np.maximum(i, j)]
    # neighbouring pairs too
    u = np.concatenate([u, usc.s_grid[:-1]])
    v = np.concatenate([v, usc.s_grid[1:]])
    excess = np.linalg.norm(usc.evaluate(v) - usc.evaluate(u), axis=1) - (v - u)
    return float(np.max(excess))


def unit_speed_integral(usc: UnitSpeedCurve, F, order: int = 4) -> float:
    """Integral over [0, L] of F(g(s), g'(s)) ds on the unit-speed representation."""
    nodes, weights = gauss_legendre(usc.knot_s, order)
    d = usc.directions()
    seg = np.repeat(np.arange(len(d)), order)
    x = usc.evaluate(nodes.ravel())
    values = np.asarray(F(x, d[seg]), dtype=float).reshape(nodes.shape)
    return float(np.sum(values * weights))

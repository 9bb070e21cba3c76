from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.lib.convergence import ConvergenceReport, RefinementSchedule, summarize
from src.lib.errors import DimensionMismatch, DomainError, MissingDerivative, NonConvergence

# Default tolerances: analytic curves converge at O(h^2), sampled and singular fixtures are looser
DEFAULT_TOL = 1e-6
SAMPLED_TOL = 1e-3
# Relative slack accepted at the domain ends before evaluation is refused
DOMAIN_SLOP = 1e-12
QUADRATURE_PANELS = 256
QUADRATURE_ORDER = 8
DERIVATIVE_REL_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class AnalyticSpec:
    """A named catalog curve. `func` maps an (n,) array of parameters to (n, M) points."""

    name: str
    params: dict
    func: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # False for singular fixtures whose derivative is only the a.e. derivative of the limit
    absolutely_continuous: bool = True
    breakpoints: Union[tuple, np.ndarray] = ()


@dataclass(frozen=True, eq=False)
class SampledSpec:
    nodes: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class Curve:
    domain_lo: float
    domain_hi: float
    dim: int
    body: Union[AnalyticSpec, SampledSpec]

    def __post_init__(self):
        a, b = float(self.domain_lo), float(self.domain_hi)
        if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
            raise DomainError(f"Curve domain needs a < b, got [{a}, {b}]")
        if int(self.dim) < 1:
            raise DimensionMismatch(f"Curve dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "domain_lo", a)
        object.__setattr__(self, "domain_hi", b)
        object.__setattr__(self, "dim", int(self.dim))

        if isinstance(self.body, SampledSpec):
            nodes = np.asarray(self.body.nodes, dtype=float)
            values = np.asarray(self.body.values, dtype=float)
            if values.ndim == 1:
                values = values.reshape(-1, 1)
            if nodes.ndim != 1 or len(nodes) < 2:
                raise DomainError("Sampled curve needs at least two nodes")
            if np.any(np.diff(nodes) <= 0):
                raise DomainError("Sampled curve nodes must be strictly increasing")
            if nodes[0] != a or nodes[-1] != b:
                raise DomainError(f"Sampled nodes span [{nodes[0]}, {nodes[-1]}], domain is [{a}, {b}]")
            if values.shape != (len(nodes), self.dim):
                raise DimensionMismatch(
                    f"Sampled values have shape {values.shape}, expected ({len(nodes)}, {self.dim})"
                )
            object.__setattr__(self, "body", SampledSpec(nodes, values))

    @property
    def name(self) -> str:
        if isinstance(self.body, AnalyticSpec):
            return self.body.name
        return "sampled"

    @property
    def is_sampled(self) -> bool:
        return isinstance(self.body, SampledSpec)

    @property
    def has_derivative(self) -> bool:
        return isinstance(self.body, AnalyticSpec) and self.body.derivative is not None

    @property
    def absolutely_continuous(self) -> bool:
        if isinstance(self.body, SampledSpec):
            return True
        return self.body.absolutely_continuous

    @property
    def breakpoints(self) -> np.ndarray:
        """Parameters where the curve may turn sharply; merged into every partition."""
        if isinstance(self.body, SampledSpec):
            return self.body.nodes
        return np.asarray(self.body.breakpoints, dtype=float)

    def _checked(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        xs = np.atleast_1d(arr).ravel()
        slop = DOMAIN_SLOP * (self.domain_hi - self.domain_lo)
        bad = ~np.isfinite(xs) | (xs < self.domain_lo - slop) | (xs > self.domain_hi + slop)
        if np.any(bad):
            raise DomainError(
                f"{xs[bad][0]!r} is outside the domain [{self.domain_lo}, {self.domain_hi}] of {self.name}"
            )
        return np.clip(xs, self.domain_lo, self.domain_hi), scalar

    def evaluate(self, x) -> np.ndarray:
        xs, scalar = self._checked(x)
        if isinstance(self.body, SampledSpec):
            vals = np.column_stack(
                [np.interp(xs, self.body.nodes, self.body.values[:, m]) for m in range(self.dim)]
            )
        else:
            vals = np.asarray(self.body.func(xs), dtype=float).reshape(len(xs), self.dim)
        return vals[0] if scalar else vals

    def derivative(self, x) -> np.ndarray:
        if not self.has_derivative:
            raise MissingDerivative(f"Curve {self.name} has no exact derivative")
        xs, scalar = self._checked(x)
        vals = np.asarray(self.body.derivative(xs), dtype=float).reshape(len(xs), self.dim)
        return vals[0] if scalar else vals

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)


def evaluate(curve: Curve, x) -> np.ndarray:
    return curve.evaluate(x)


@dataclass(frozen=True, eq=False)
class Partition:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise DomainError("A partition needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("Partition points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "Partition":
        if n < 1:
            raise DomainError(f"A uniform partition needs n >= 1 steps, got {n}")
        pts = np.linspace(a, b, n + 1)
        pts[-1] = b
        return cls(pts)

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    @property
    def n(self) -> int:
        return len(self.points) - 1

    @property
    def norm(self) -> float:
        return float(np.max(np.diff(self.points)))

    def refine(self, extra) -> "Partition":
        """Union with `extra`, restricted to [lo, hi]."""
        extra = np.asarray(extra, dtype=float).ravel()
        extra = extra[(extra > self.lo) & (extra < self.hi)]
        return Partition(np.union1d(self.points, extra))

    def refines(self, other: "Partition") -> bool:
        return bool(np.all(np.isin(other.points, self.points)))

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.points[:-1] + self.points[1:])


def curve_partition(curve: Curve, n: int) -> Partition:
    """Uniform n-step partition of the curve's domain with its breakpoints merged in."""
    P = Partition.uniform(curve.domain_lo, curve.domain_hi, n)
    if len(curve.breakpoints):
        P = P.refine(curve.breakpoints)
    return P


def check_partition(curve: Curve, P: Partition):
    slop = DOMAIN_SLOP * (curve.domain_hi - curve.domain_lo)
    if abs(P.lo - curve.domain_lo) > slop or abs(P.hi - curve.domain_hi) > slop:
        raise DomainError(
            f"Partition spans [{P.lo}, {P.hi}] but the curve domain is [{curve.domain_lo}, {curve.domain_hi}]"
        )


def variation_sum(curve: Curve, P: Partition) -> float:
    check_partition(curve, P)
    values = curve.evaluate(P.points)
    return float(np.sum(np.linalg.norm(np.diff(values, axis=0), axis=1)))


def coordinate_variation(curve: Curve, m: int, P: Partition, part: str = "total") -> float:
    """
    Variation of coordinate m (1-based) over P.

    part="positive" / "negative" sum the positive / negative increments,
    so total = positive + negative.
    """
    if not 1 <= m <= curve.dim:
        raise DimensionMismatch(f"Coordinate index {m} out of range 1..{curve.dim}")
    check_partition(curve, P)
    steps = np.diff(curve.evaluate(P.points)[:, m - 1])
    if part == "total":
        return float(np.sum(np.abs(steps)))
    if part == "positive":
        return float(np.sum(np.maximum(steps, 0.0)))
    if part == "negative":
        return float(np.sum(np.maximum(-steps, 0.0)))
    raise ValueError(f"Unknown variation part: {part!r}")


def default_tol(curve: Curve) -> float:
    if curve.is_sampled or not curve.absolutely_continuous:
        return SAMPLED_TOL
    return DEFAULT_TOL


def length(curve: Curve, schedule: Optional[RefinementSchedule] = None, tol: Optional[float] = None,
           extrapolate: bool = False) -> ConvergenceReport:
    schedule = schedule or RefinementSchedule()
    tol = default_tol(curve) if tol is None else tol

    samples = []
    for n in schedule.counts():
        P = curve_partition(curve, n)
        samples.append((P.norm, variation_sum(curve, P)))

    report = summarize(samples, tol, extrapolate=extrapolate, label=f"length({curve.name})")
    report.meta.update(quantity="length", curve=curve.name)
    return report


@dataclass(frozen=True, eq=False)
class ArcLengthFunction:
    """Tabulated s on a grid; calling it interpolates linearly (s is monotone)."""

    grid: Partition
    values: np.ndarray
    report: ConvergenceReport = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.values[-1])

    def masses(self) -> np.ndarray:
        return np.diff(self.values)

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.grid.points, self.values)


def arc_length_function(curve: Curve, grid: Partition, schedule: Optional[RefinementSchedule] = None,
                        tol: Optional[float] = None) -> ArcLengthFunction:
    schedule = schedule or RefinementSchedule()
    tol = default_tol(curve) if tol is None else tol
    check_partition(curve, grid)

    samples = []
    previous = current = None
    for n in schedule.counts():
        fine = curve_partition(curve, n).refine(grid.points)
        chords = np.linalg.norm(np.diff(curve.evaluate(fine.points), axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(chords)])
        # grid points are part of the refined partition
        idx = np.minimum(np.searchsorted(fine.points, grid.points), len(fine.points) - 1)
        previous, current = current, s[idx]
        samples.append((fine.norm, float(current[-1])))

    report = summarize(samples, tol, label=f"arc length({curve.name})")
    if previous is not None:
        gap = float(np.max(np.abs(current - previous)))
        report = replace(report, error_estimate=gap, converged=gap <= tol)
    report.meta.update(quantity="arc_length", curve=curve.name)
    if not report.converged:
        raise NonConvergence(
            f"arc length of {curve.name} moved by {report.error_estimate:.3g} at the last refinement", report=report
        )
    return ArcLengthFunction(grid, current, report)


def gauss_legendre(edges: np.ndarray, order: int = QUADRATURE_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels [edges[i], edges[i+1]]."""
    t, w = leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * t[None, :]
    weights = half * w[None, :]
    return nodes, weights


def derivative_quadrature(curve: Curve, panels: int = QUADRATURE_PANELS, order: int = QUADRATURE_ORDER) -> float:
    """Integral of |f'| over the domain; equals the length exactly for absolutely continuous curves."""
    if not curve.has_derivative:
        raise MissingDerivative(f"Curve {curve.name} has no exact derivative")
    edges = curve_partition(curve, panels).points
    nodes, weights = gauss_legendre(edges, order)
    speed = np.linalg.norm(curve.derivative(nodes.ravel()), axis=1).reshape(nodes.shape)
    return float(np.sum(speed * weights))


def check_derivative(curve: Curve, points: int = 64, seed: int = 0, rel_tol: float = DERIVATIVE_REL_TOL) -> dict:
    """Compare the exact derivative against central differences at seeded points."""
    if not curve.has_derivative:
        raise MissingDerivative(f"Curve {curve.name} has no exact derivative")
    if not curve.absolutely_continuous:
        # the a.e. derivative of a singular limit does not match its approximant
        return {"curve": curve.name, "points": 0, "max_rel_error": 0.0, "passed": True, "skipped": True}

    a, b = curve.domain_lo, curve.domain_hi
    h = 1e-6 * (b - a)
    rng = np.random.default_rng(seed)
    x = rng.uniform(a + 2 * h, b - 2 * h, size=points)
    bps = curve.breakpoints
    if len(bps):
        near = np.min(np.abs(x[:, None] - bps[None, :]), axis=1) <= 2 * h
        x = x[~near]

    fd = (curve.evaluate(x + h) - curve.evaluate(x - h)) / (2 * h)
    exact = curve.derivative(x)
    scale = np.maximum(np.linalg.norm(exact, axis=1), 1.0)
    rel = np.linalg.norm(fd - exact, axis=1) / scale
    worst = float(np.max(rel)) if rel.size else 0.0
    return {"curve": curve.name, "points": int(rel.size), "max_rel_error": worst,
            "passed": worst <= rel_tol, "skipped": False}


def polygonal_interpolant(curve: Curve, n: int) -> Curve:
    """Inscribed polygon through n equal parameter steps."""
    if n < 1:
        raise DomainError(f"Polygonal interpolant needs n >= 1, got {n}")
    nodes = np.linspace(curve.domain_lo, curve.domain_hi, n + 1)
    nodes[-1] = curve.domain_hi
    return Curve(curve.domain_lo, curve.domain_hi, curve.dim, SampledSpec(nodes, curve.evaluate(nodes)))


def sampled_curve(nodes, values) -> Curve:
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if nodes.ndim != 1 or len(nodes) < 2:
        raise DomainError("Sampled curve needs at least two nodes")
    return Curve(nodes[0], nodes[-1], values.shape[1], SampledSpec(nodes, values))

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from src.arclen import reparametrize
from src.curve_core import (Curve, Partition, arc_length_function, curve_partition, default_tol,
                            gauss_legendre, length, variation_sum, check_partition)
from src.lib.console import console
from src.lib.convergence import ConvergenceReport, RefinementSchedule, summarize
from src.lib.errors import (DimensionMismatch, DomainError, HomogeneityError, HypothesisViolated, MissingDerivative,
                            UnknownIntegrand)

HOMOGENEITY_TOL = 1e-9
ZERO_TOL = 1e-12
# theta is defined where |f'| exceeds this
SPEED_FLOOR = 1e-12
BOUND_SLACK = 1e-9
XI_RULES = ("left", "mid", "right", "random")


@dataclass(frozen=True, eq=False)
class ParametricIntegrand:
    """F(x, t), vectorised over rows: x and t of shape (n, M) give shape (n,)."""

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    min_dim: int = 1

    def __call__(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        single = x.ndim == 1
        xs, ts = np.atleast_2d(x), np.atleast_2d(t)
        if xs.shape[1] < self.min_dim:
            raise DimensionMismatch(f"Integrand {self.name} needs dimension >= {self.min_dim}, got {xs.shape[1]}")
        out = np.asarray(self.evaluator(xs, ts), dtype=float).reshape(len(xs))
        return out[0] if single else out


def _norm(x, t):
    return np.linalg.norm(t, axis=1)


def _area2d(x, t):
    return x[:, 0] * t[:, 1] - x[:, 1] * t[:, 0]


def _zero(x, t):
    return np.zeros(len(t))


def _xt(x, t):
    return x[:, 0] * t[:, 0]


def _normsq(x, t):
    return np.sum(t * t, axis=1)


integrand_evaluators = {
    "norm": (_norm, 1),
    "area2d": (_area2d, 2),
    "zero": (_zero, 1),
    "xt": (_xt, 1),
    "normsq": (_normsq, 1),
}


def integrand_names():
    return sorted(integrand_evaluators) + ["coordinate:m"]


def get_integrand(name: str) -> ParametricIntegrand:
    key = str(name).strip().lower()
    if key.startswith("coordinate:"):
        try:
            m = int(key.split(":", 1)[1])
        except ValueError as e:
            raise UnknownIntegrand(f"Bad coordinate index in {name!r}") from e
        if m < 1:
            raise UnknownIntegrand(f"Coordinate index must be >= 1 in {name!r}")
        return ParametricIntegrand(key, lambda x, t: t[:, m - 1], min_dim=m)
    if key not in integrand_evaluators:
        raise UnknownIntegrand(f"Unknown integrand {name!r}; known: {', '.join(integrand_names())}")
    fn, min_dim = integrand_evaluators[key]
    return ParametricIntegrand(key, fn, min_dim)


@dataclass
class HomogeneityReport:
    integrand: str
    max_defect: float
    zero_defect: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_defect <= HOMOGENEITY_TOL and self.zero_defect <= ZERO_TOL


def check_homogeneity(F: ParametricIntegrand, dim: int = 2, samples: int = 256, seed: int = 0) -> HomogeneityReport:
    if samples < 1:
        raise ValueError("check_homogeneity needs at least one sample")
    dim = max(dim, F.min_dim)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(samples, dim))
    t = rng.normal(size=(samples, dim))
    K = rng.uniform(0.1, 10.0, size=samples)

    base = F(x, t)
    scaled = F(x, K[:, None] * t)
    defect = np.abs(scaled - K * base) / ((1.0 + np.abs(base)) * K)
    zero = np.abs(F(x, np.zeros_like(t)))
    return HomogeneityReport(F.name, float(np.max(defect)), float(np.max(zero)), samples)


def _xi_points(P: Partition, rule: str, seed: int) -> np.ndarray:
    a, b = P.points[:-1], P.points[1:]
    if rule == "left":
        return a
    if rule == "right":
        return b
    if rule == "mid":
        return 0.5 * (a + b)
    if rule == "random":
        u = np.random.default_rng(seed).uniform(size=a.size)
        return a + u * (b - a)
    raise DomainError(f"Unknown xi rule {rule!r}; known: {', '.join(XI_RULES)}")


def riemann_cesari_sum(curve: Curve, F: ParametricIntegrand, P: Partition, xi_rule: str = "mid",
                       seed: int = 0) -> float:
    check_partition(curve, P)
    values = curve.evaluate(P.points)
    x = curve.evaluate(_xi_points(P, xi_rule, seed))
    return float(np.sum(F(x, np.diff(values, axis=0))))


def _sums(curve, F, schedule, xi_rule, seed):
    partitions = [curve_partition(curve, n) for n in schedule.counts()]
    return [(P.norm, riemann_cesari_sum(curve, F, P, xi_rule, seed)) for P in partitions]


def line_integral(curve: Curve, F: ParametricIntegrand, schedule: Optional[RefinementSchedule] = None,
                  tol: Optional[float] = None, xi_rule: str = "mid", seed: int = 0,
                  cross_rule: Optional[str] = None, extrapolate: bool = False) -> ConvergenceReport:
    """
    Mesh-refined limit of the Riemann-Cesari sums.

    A second xi rule is run alongside; its limit is kept in meta so callers
    can confirm the limit does not depend on where the integrand is sampled.
    """
    gate = check_homogeneity(F, dim=curve.dim, seed=seed)
    if not gate.passed:
        console.log(f"integrand {F.name} rejected: homogeneity defect {gate.max_defect:.3g}")
        raise HomogeneityError(f"Integrand {F.name} is not positively homogeneous of degree 1 "
                               f"(defect {gate.max_defect:.3g})", report=gate)
    schedule = schedule or RefinementSchedule()
    tol = default_tol(curve) if tol is None else tol
    if cross_rule is None:
        cross_rule = "left" if xi_rule != "left" else "right"

    report = summarize(_sums(curve, F, schedule, xi_rule, seed), tol, extrapolate=extrapolate,
                       label=f"line integral {F.name} over {curve.name}")
    cross = summarize(_sums(curve, F, schedule, cross_rule, seed), tol, extrapolate=extrapolate,
                      label=f"line integral {F.name} over {curve.name} ({cross_rule})")
    report.meta.update(quantity="line_integral", curve=curve.name, integrand=F.name, xi_rule=xi_rule,
                       cross_rule=cross_rule, cross_limit=cross.limit_estimate,
                       cross_gap=float(abs(np.asarray(report.limit_estimate) - np.asarray(cross.limit_estimate)).max()))
    return report


def line_integral_ac(curve: Curve, F: ParametricIntegrand, panels: int = 256, order: int = 8) -> float:
    """Integral of F(f(x), f'(x)) dx by composite Gauss-Legendre quadrature."""
    if not curve.has_derivative:
        raise MissingDerivative(f"Curve {curve.name} has no exact derivative")
    nodes, weights = gauss_legendre(curve_partition(curve, panels).points, order)
    flat = nodes.ravel()
    values = F(curve.evaluate(flat), curve.derivative(flat)).reshape(nodes.shape)
    return float(np.sum(values * weights))


@dataclass(frozen=True, eq=False)
class TangentField:
    source: Curve = field(repr=False)

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Unit tangents at x and a mask of where they are defined (zero elsewhere)."""
        d = np.atleast_2d(self.source.derivative(np.atleast_1d(x)))
        speed = np.linalg.norm(d, axis=1)
        defined = speed > SPEED_FLOOR
        theta = np.zeros_like(d)
        theta[defined] = d[defined] / speed[defined, None]
        return theta, defined

    def unit_defect(self, samples: int = 256, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        x = rng.uniform(self.source.domain_lo, self.source.domain_hi, size=samples)
        theta, defined = self.evaluate(x)
        if not np.any(defined):
            return 0.0
        return float(np.max(np.abs(np.linalg.norm(theta[defined], axis=1) - 1.0)))


def tangent_field(curve: Curve) -> TangentField:
    if not curve.has_derivative:
        raise MissingDerivative(f"Curve {curve.name} has no exact derivative")
    return TangentField(curve)


@dataclass(frozen=True, eq=False)
class DiscreteTangent:
    partition: Partition
    values: np.ndarray
    mu_masses: np.ndarray


def _eta(chords: np.ndarray, masses: np.ndarray) -> np.ndarray:
    eta = np.zeros_like(chords)
    positive = masses > 0
    eta[positive] = chords[positive] / masses[positive, None]
    return eta


def discrete_tangent(curve: Curve, P: Partition, schedule: Optional[RefinementSchedule] = None) -> DiscreteTangent:
    s = arc_length_function(curve, P, schedule)
    masses = np.maximum(s.masses(), 0.0)
    chords = np.diff(curve.evaluate(P.points), axis=0)
    return DiscreteTangent(P, _eta(chords, masses), masses)


def _deviation(curve: Curve, P: Partition, order: int) -> tuple[float, float]:
    nodes, weights = gauss_legendre(P.points, order)
    flat = nodes.ravel()
    d = curve.derivative(flat)
    speed = np.linalg.norm(d, axis=1)
    theta, _ = TangentField(curve).evaluate(flat)

    w = weights * speed.reshape(nodes.shape)
    masses = np.sum(w, axis=1)
    chords = np.diff(curve.evaluate(P.points), axis=0)
    eta = _eta(chords, masses)
    gap = theta.reshape(nodes.shape + (curve.dim,)) - eta[:, None, :]
    lhs = float(np.sum(np.sum(gap * gap, axis=2) * w))
    rhs = 2.0 * (float(np.sum(masses)) - variation_sum(curve, P))
    return lhs, rhs


def tangent_deviation_bound_check(curve: Curve, P: Partition, order: int = 8) -> tuple[float, float]:
    """
    (lhs, rhs) of the L2 tangent bound: lhs = sum_i of the integral of |theta - eta_i|^2 dmu_C
    over the i-th subinterval, rhs = 2 (length - variation sum). The bound holds when
    lhs <= rhs + BOUND_SLACK.
    """
    if not curve.has_derivative:
        raise MissingDerivative(f"Curve {curve.name} has no exact derivative")
    check_partition(curve, P)
    return _deviation(curve, P, order)


def l2_tangent_convergence(curve: Curve, schedule: Optional[RefinementSchedule] = None,
                           tol: float = 1e-6) -> ConvergenceReport:
    if not curve.has_derivative:
        raise MissingDerivative(f"Curve {curve.name} has no exact derivative")
    schedule = schedule or RefinementSchedule()
    partitions = [curve_partition(curve, n) for n in schedule.counts()]
    samples = [(P.norm, _deviation(curve, P, 8)[0]) for P in partitions]
    report = summarize(samples, tol, criterion="value", label=f"L2 tangent deviation on {curve.name}")
    report.meta.update(quantity="l2_tangent", curve=curve.name)
    return report


def invariance_under_reparam(curve: Curve, F: ParametricIntegrand, schedule: Optional[RefinementSchedule] = None,
                             tol: Optional[float] = None) -> tuple[float, float]:
    usc = reparametrize(curve, schedule)
    I_C = line_integral(curve, F, schedule, tol).limit_estimate
    I_D = line_integral(usc.as_curve(), F, schedule, tol).limit_estimate
    return float(I_C), float(I_D)


@dataclass
class ContinuityReport:
    integrand: str
    base_length: float
    base_integral: float
    lengths: list
    integrals: list
    differences: list
    decreasing: bool
    converged: bool
    tol: float


def continuity_of_integral(family: Sequence[Curve], base: Curve, F: ParametricIntegrand,
                           schedule: Optional[RefinementSchedule] = None, tol: float = 1e-3,
                           length_tol: Optional[float] = None) -> ContinuityReport:
    """
    Integrals along a family C_k -> C_0 (uniformly, with lengths converging).

    Raises HypothesisViolated when the family's lengths do not approach the
    base length within length_tol: the continuity theorem says nothing then.
    """
    if not family:
        raise HypothesisViolated("continuity_of_integral needs a nonempty family")
    length_tol = tol if length_tol is None else length_tol
    base_len = float(length(base, schedule).limit_estimate)
    base_int = float(line_integral(base, F, schedule).limit_estimate)

    lengths = [float(length(c, schedule).limit_estimate) for c in family]
    if abs(lengths[-1] - base_len) > length_tol:
        raise HypothesisViolated(
            f"family lengths end at {lengths[-1]:.6g}, base length is {base_len:.6g} (tolerance {length_tol:.3g})"
        )
    integrals = [float(line_integral(c, F, schedule).limit_estimate) for c in family]
    diffs = [abs(v - base_int) for v in integrals]
    decreasing = all(b <= a + 1e-12 for a, b in zip(diffs, diffs[1:]))
    return ContinuityReport(F.name, base_len, base_int, lengths, integrals, diffs, decreasing,
                            diffs[-1] <= tol, tol)

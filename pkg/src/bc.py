"""
Quasi-additive interval functions over abstract interval spaces.

An IntervalSpace bundles intervals, a seeded generator of nonoverlapping
systems with a requested mesh, and the mesh function itself. Limits over
systems of vanishing mesh are estimated along a RefinementSchedule, the same
way curve lengths are.
"""
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Optional, Sequence, Union
from urllib.parse import parse_qsl, urlparse

import numpy as np
import pandas as pd
import sympy as sp

from src.arclen import reparametrize, unit_speed_integral
from src.curve_core import Curve, gauss_legendre, length
from src.integrand import ParametricIntegrand, check_homogeneity, get_integrand, line_integral, line_integral_ac
from src.lib.catalog import constant, get_curve
from src.lib.console import console
from src.lib.convergence import ConvergenceReport, RefinementSchedule, summarize
from src.lib.errors import (CertificationFailed, DomainError, HomogeneityError, RectifyError, UnknownExample,
                            ZeroLength, ZetaConditionViolated)
from src.lib.numbers import compile_function
from src.lib.surd import is_rational, sigma, surd

CONTAIN_TOL = 1e-12
BC_TOL = 1e-9
BC_SCHEDULE = RefinementSchedule(4, 12)
ZETA_SCHEDULE = RefinementSchedule(2, 6)
CERTIFY_HALVINGS = 8
CERTIFY_TRIALS = 2
BOX_SAMPLE = 64
OWNER_CHUNK = 2_000_000
# Empty subset: every system sum over it is zero
EMPTY = frozenset()


# ---------------------------------------------------------------------------
# Intervals and systems

@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; endpoints may be float, Fraction or an exact sympy number."""

    lo: Any
    hi: Any

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"Interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def length(self):
        return self.hi - self.lo

    def __float__(self):
        return float(self.hi - self.lo)


@dataclass(frozen=True)
class Box:
    """Closed box prod [lo_r, hi_r] in R^m."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or any(not a < b for a, b in zip(self.lo, self.hi)):
            raise DomainError(f"Box needs lo < hi in every coordinate, got {self.lo}, {self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo, dtype=float) + np.asarray(self.hi, dtype=float))


@dataclass(frozen=True)
class System:
    intervals: tuple

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if not self.intervals:
            raise DomainError("A system needs at least one interval")

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


def _le(x, y, tol=CONTAIN_TOL) -> bool:
    if isinstance(x, float) or isinstance(y, float):
        return x <= y + tol
    return x <= y


def contains(outer, inner, tol: float = CONTAIN_TOL) -> bool:
    """inner is a subset of outer (closed containment, float endpoints get `tol` slack)."""
    if isinstance(outer, Box):
        return all(_le(a, b, tol) for a, b in zip(outer.lo, inner.lo)) and \
            all(_le(b, a, tol) for a, b in zip(outer.hi, inner.hi))
    return _le(outer.lo, inner.lo, tol) and _le(inner.hi, outer.hi, tol)


def _bounds(intervals) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(intervals[0], Box):
        lo = np.array([b.lo for b in intervals], dtype=float)
        hi = np.array([b.hi for b in intervals], dtype=float)
        return lo, hi
    lo = np.array([float(i.lo) for i in intervals])
    hi = np.array([float(i.hi) for i in intervals])
    return lo[:, None], hi[:, None]


def check_system(D: System, tol: float = CONTAIN_TOL) -> bool:
    """Pairwise interiors are disjoint."""
    items = D.intervals
    if isinstance(items[0], Interval):
        ordered = sorted(items, key=lambda i: float(i.lo))
        return all(_le(a.hi, b.lo, tol) for a, b in zip(ordered, ordered[1:]))
    lo, hi = _bounds(items)
    # boxes: test a seeded sample against the whole system
    picked = np.random.default_rng(0).choice(len(items), size=min(len(items), BOX_SAMPLE), replace=False)
    for k in picked:
        overlap = np.all((lo < hi[k] - tol) & (hi > lo[k] + tol), axis=1)
        if np.count_nonzero(overlap) > 1:
            return False
    return True


# ---------------------------------------------------------------------------
# Interval functions

@dataclass(frozen=True, eq=False)
class IntervalFunctionPhi:
    name: str
    evaluator: Callable[[Any], Any]
    dim: int = 1
    batch: Optional[Callable[[Sequence], np.ndarray]] = None

    def __call__(self, I) -> np.ndarray:
        return np.asarray(self.evaluator(I), dtype=float).reshape(self.dim)

    def values(self, intervals: Sequence) -> np.ndarray:
        if not len(intervals):
            return np.zeros((0, self.dim))
        if self.batch is not None:
            return np.asarray(self.batch(intervals), dtype=float).reshape(len(intervals), self.dim)
        return np.array([self(I) for I in intervals]).reshape(len(intervals), self.dim)


def phi_norm(phi: IntervalFunctionPhi) -> IntervalFunctionPhi:
    return IntervalFunctionPhi(
        f"|{phi.name}|",
        lambda I: np.linalg.norm(phi(I)),
        1,
        lambda items: np.linalg.norm(phi.values(items), axis=1),
    )


def phi_part(phi: IntervalFunctionPhi, r: int, sign: str = "+") -> IntervalFunctionPhi:
    """phi_r^+ = max(phi_r, 0) or phi_r^- = max(-phi_r, 0); r is 1-based."""
    if not 1 <= r <= phi.dim:
        raise DomainError(f"Component {r} out of range 1..{phi.dim}")
    s = 1.0 if sign == "+" else -1.0
    return IntervalFunctionPhi(
        f"{phi.name}_{r}{sign}",
        lambda I: max(s * phi(I)[r - 1], 0.0),
        1,
        lambda items: np.maximum(s * phi.values(items)[:, r - 1], 0.0),
    )


# ---------------------------------------------------------------------------
# Interval spaces

@dataclass(frozen=True, eq=False)
class IntervalSpace:
    name: str
    carrier: str
    interval_kind: dict
    system_generator: Callable[[float, int], System]
    mesh: Callable[[System], Any]

    def generate(self, target_mesh: float, seed: int = 0) -> System:
        D = self.system_generator(target_mesh, seed)
        if not check_system(D):
            raise RectifyError(f"{self.name}: generator produced overlapping intervals")
        return D

    def mesh_value(self, D: System) -> float:
        return float(self.mesh(D))

    def achieves(self, targets: Sequence[float], seed: int = 0) -> bool:
        """Every requested mesh is reached: 0 < mesh(D) < target."""
        meshes = [self.mesh_value(self.generate(t, seed + k)) for k, t in enumerate(targets)]
        return all(0 < m < t for m, t in zip(meshes, targets))


def _selector(S):
    if S is None:
        return lambda I: True
    if isinstance(S, frozenset) and not S:
        return lambda I: False
    if isinstance(S, (Interval, Box)):
        return lambda I: contains(S, I)
    if callable(S):
        return S
    raise DomainError(f"Cannot use {S!r} as a subset")


def system_sum(phi: IntervalFunctionPhi, S, D: System) -> np.ndarray:
    """Sum of phi(I) over the I in D contained in S (S=None is the whole carrier)."""
    keep = _selector(S)
    chosen = [I for I in D if keep(I)]
    if not chosen:
        return np.zeros(phi.dim)
    return np.sum(phi.values(chosen), axis=0)


def bc_integral(space: IntervalSpace, phi: IntervalFunctionPhi, S=None,
                schedule: Optional[RefinementSchedule] = None, tol: float = BC_TOL,
                seed: int = 0) -> ConvergenceReport:
    schedule = schedule or BC_SCHEDULE
    samples = []
    for k, target in enumerate(schedule.mesh_targets()):
        D = space.generate(target, seed + k)
        samples.append((space.mesh_value(D), system_sum(phi, S, D)))
    report = summarize(samples, tol, label=f"BC integral of {phi.name} on {space.name}")
    report.meta.update(quantity="bc_integral", space=space.name, phi=phi.name, seed=seed)
    return report


def variation(space: IntervalSpace, phi: IntervalFunctionPhi, S=None,
              schedule: Optional[RefinementSchedule] = None, seed: int = 0, budget: int = 2) -> float:
    """
    Largest observed sum of |phi(I)|: a lower bound of the variation.

    Level k samples seed+k (the systems bc_integral sees) plus `budget` more seeds.
    """
    schedule = schedule or BC_SCHEDULE
    norm = phi_norm(phi)
    best = 0.0
    for k, target in enumerate(schedule.mesh_targets()):
        for s in [seed + k] + [seed + 1000 * (e + 1) + k for e in range(budget)]:
            best = max(best, float(system_sum(norm, S, space.generate(target, s))[0]))
    return best


# ---------------------------------------------------------------------------
# Quasi additivity

@dataclass
class QaReport:
    mesh_D0: float
    mesh_D: float
    qa1_deficit: float
    qa2_deficit: float
    qsa_deficit: Optional[float] = None

    def to_record(self) -> dict:
        return {"mesh_D0": self.mesh_D0, "mesh_D": self.mesh_D, "qa1": self.qa1_deficit,
                "qa2": self.qa2_deficit, "qsa": self.qsa_deficit}


def _owners(D0: Sequence, D: Sequence, tol: float = CONTAIN_TOL) -> np.ndarray:
    """Index of the member of D0 containing each member of D, -1 if none."""
    owners = np.full(len(D), -1, dtype=int)
    if not len(D0) or not len(D):
        return owners
    if isinstance(D0[0], Box):
        lo0, hi0 = _bounds(D0)
        lo, hi = _bounds(D)
        step = max(1, OWNER_CHUNK // len(D0))
        for start in range(0, len(D), step):
            blo, bhi = lo[start:start + step], hi[start:start + step]
            inside = np.all(lo0[None] <= blo[:, None] + tol, axis=2) & np.all(bhi[:, None] <= hi0[None] + tol, axis=2)
            hit = inside.any(axis=1)
            owners[start:start + step][hit] = np.argmax(inside[hit], axis=1)
        return owners

    order = sorted(range(len(D0)), key=lambda i: float(D0[i].lo))
    starts = [float(D0[i].lo) for i in order]
    for n, I in enumerate(D):
        pos = bisect_right(starts, float(I.lo) + tol) - 1
        # neighbours cover float ties at shared endpoints
        for cand in (pos, pos - 1, pos + 1):
            if 0 <= cand < len(order) and contains(D0[order[cand]], I, tol):
                owners[n] = order[cand]
                break
    return owners


def qa_deficits(space: IntervalSpace, phi: IntervalFunctionPhi, D0: System, D: System, S=None) -> QaReport:
    keep = _selector(S)
    outer = [I for I in D0 if keep(I)]
    inner = [I for I in D if keep(I)]
    v0 = phi.values(outer)
    v = phi.values(inner)

    owners = _owners(outer, inner)
    sums = np.zeros_like(v0)
    placed = owners >= 0
    np.add.at(sums, owners[placed], v[placed])
    diff = sums - v0

    qa1 = float(np.sum(np.linalg.norm(diff, axis=1)))
    qa2 = float(np.sum(np.linalg.norm(v[~placed], axis=1)))
    qsa = float(np.sum(np.maximum(-diff[:, 0], 0.0))) if phi.dim == 1 else None
    return QaReport(space.mesh_value(D0), space.mesh_value(D), qa1, qa2, qsa)


@dataclass
class CertificationReport:
    phi: str
    space: str
    rows: list
    passed: bool

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def qa_certify(space: IntervalSpace, phi: IntervalFunctionPhi, epsilon_schedule: Sequence, seed: int = 0,
               S=None, trials: int = CERTIFY_TRIALS, max_halvings: int = CERTIFY_HALVINGS,
               raise_on_failure: bool = True) -> CertificationReport:
    """
    Empirical quasi-additivity check.

    Each entry is (epsilon, eta) or (epsilon, eta, lambda). Systems D0 are
    drawn at mesh below eta; lambda starts at the candidate (eta/2 if absent)
    and is halved until every sampled pair (D0, D) with mesh(D) < lambda has
    both deficits below epsilon.
    """
    rows = []
    for p, target in enumerate(epsilon_schedule):
        eps, eta = float(target[0]), float(target[1])
        lam = float(target[2]) if len(target) > 2 and target[2] is not None else eta / 2
        D0s = [space.generate(eta, seed + 100 * p + r) for r in range(trials)]

        certified, worst = False, None
        for h in range(max_halvings + 1):
            worst = None
            for r, D0 in enumerate(D0s):
                for t in range(trials):
                    D = space.generate(lam, seed + 7919 * (h + 1) + 31 * r + t + 100 * p)
                    rep = qa_deficits(space, phi, D0, D, S)
                    if rep.qa1_deficit >= eps or rep.qa2_deficit >= eps:
                        worst = (D0, D, rep)
                        break
                if worst:
                    break
            if worst is None:
                certified = True
                break
            lam /= 2

        row = {"epsilon": eps, "eta": eta, "lambda": lam if certified else None, "certified": certified}
        if worst is not None:
            row.update(qa1=worst[2].qa1_deficit, qa2=worst[2].qa2_deficit)
        rows.append(row)
        if not certified:
            console.log(f"{phi.name} on {space.name}: no lambda down to {lam:.3g} certifies epsilon={eps}")
            report = CertificationReport(phi.name, space.name, rows, False)
            if raise_on_failure:
                raise CertificationFailed(
                    f"{phi.name} is not certified quasi additive at epsilon={eps} (eta={eta})",
                    table=rows, pair=(worst[0], worst[1]),
                )
            return report
    return CertificationReport(phi.name, space.name, rows, True)


def zeta_oscillations(space: IntervalSpace, zeta: IntervalFunctionPhi,
                      schedule: Optional[RefinementSchedule] = None, seed: int = 0) -> list:
    """max over I0 in D0, I in D with I inside I0 of |zeta(I) - zeta(I0)|, for D0 along the schedule."""
    schedule = schedule or ZETA_SCHEDULE
    targets = schedule.mesh_targets()
    oscillations = []
    for k, target in enumerate(targets):
        D0 = space.generate(target, seed + k)
        D = space.generate(target / 8, seed + 500 + k)
        owners = _owners(D0.intervals, D.intervals)
        placed = owners >= 0
        if not np.any(placed):
            oscillations.append(0.0)
            continue
        z0 = zeta.values(D0.intervals)
        z = zeta.values(D.intervals)
        gaps = np.linalg.norm(z[placed] - z0[owners[placed]], axis=1)
        oscillations.append(float(gaps.max()))
    return oscillations


def compose_integrand(space: IntervalSpace, phi: IntervalFunctionPhi, zeta: IntervalFunctionPhi,
                      F: ParametricIntegrand, schedule: Optional[RefinementSchedule] = None,
                      seed: int = 0, check: bool = True) -> IntervalFunctionPhi:
    """Phi(I) = F(zeta(I), phi(I)), after checking that zeta oscillates less on finer systems."""
    osc = zeta_oscillations(space, zeta, schedule, seed) if check else []
    if len(osc) > 1 and osc[-1] > CONTAIN_TOL and osc[-1] > 0.5 * osc[0]:
        raise ZetaConditionViolated(
            f"oscillation of {zeta.name} does not shrink along the schedule: {osc}", oscillations=osc
        )
    return IntervalFunctionPhi(
        f"{F.name}({zeta.name}, {phi.name})",
        lambda I: F(zeta(I), phi(I)),
        1,
        lambda items: F(zeta.values(items), phi.values(items)),
    )


# ---------------------------------------------------------------------------
# System generators

def _dyadic_level(target: float) -> int:
    """Smallest k >= 1 with 2^-k <= target / 2."""
    k = 1
    while 2.0 ** -k > target / 2:
        k += 1
    return k


def _subdivision_points(target: float, rng) -> list:
    """
    0 = a_0 < ... < a_N = 1: the dyadic grid of mesh <= target/2 with about half
    its cells split once more at a random point of the grid three levels finer.
    """
    N = 2 ** _dyadic_level(target)
    split = np.flatnonzero(rng.random(N) < 0.5)
    offsets = rng.integers(1, 8, size=split.size)
    extra = [Fraction(8 * int(i) + int(o), 8 * N) for i, o in zip(split, offsets)]
    return sorted([Fraction(i, N) for i in range(N + 1)] + extra)


def _gapped_cells(target: float, rng, first_gap: Optional[bool] = None) -> list:
    """
    Exact rational intervals covering [0,1] up to gaps whose total stays below target^3.
    first_gap=True forces a gap at 0, False forbids it.
    """
    pts = _subdivision_points(target, rng)
    cells = list(zip(pts[:-1], pts[1:]))
    gapped = rng.random(len(cells)) < 0.25
    if first_gap is not None:
        gapped[0] = first_gap
    count = max(int(np.count_nonzero(gapped)), 1)
    t = Fraction(target)
    narrowest = min(b - a for a, b in cells)
    g = min(t ** 3 / count, narrowest / 4)
    return [(a + g, b) if gapped[i] else (a, b) for i, (a, b) in enumerate(cells)]


def _irrational(cells: list, target: float) -> list:
    """Shift every endpoint by r*sqrt(2) (r > 0 tiny), pulling the right end of 1 inward."""
    r = Fraction(target) ** 3 / 16
    out = []
    for a, b in cells:
        lo = surd(a, r)
        hi = surd(b, -r) if b == 1 else surd(b, r)
        out.append((lo, hi))
    return out


def _line_system(cells) -> System:
    return System(tuple(Interval(a, b) for a, b in cells))


def _coverage_mesh(D: System):
    lengths = [I.length for I in D]
    zero = lengths[0] * 0
    return (1 - sum(lengths, zero)) + max(lengths)


def _length_phi() -> IntervalFunctionPhi:
    return IntervalFunctionPhi("|I|", lambda I: float(I.length), 1,
                               lambda items: np.array([float(I.length) for I in items]))


def _both_irrational(I) -> bool:
    return not is_rational(I.lo) and not is_rational(I.hi)


def _signed_phi() -> IntervalFunctionPhi:
    def value(I):
        return float(I.length) if _both_irrational(I) else float(I.lo - I.hi)
    return IntervalFunctionPhi("|I| or a-b", value, 1, lambda items: np.array([value(I) for I in items]))


def coverage_space(variant: int = 1) -> IntervalSpace:
    """
    Intervals of [0,1] with mesh (1 - sum |I|) + max |I| and its penalised variants:
    2 adds 1 when some I starts at 0, 3 adds 1 when none does,
    4 adds the rational penalties sigma(a) + sigma(b) of every endpoint.
    """
    def generate(target, seed):
        rng = np.random.default_rng(seed)
        if variant == 2:
            cells = _gapped_cells(target, rng, first_gap=True)
        elif variant == 3:
            cells = _gapped_cells(target, rng, first_gap=False)
        else:
            cells = _gapped_cells(target, rng)
        if variant == 4:
            cells = _irrational(cells, target)
        return _line_system(cells)

    def mesh(D):
        base = _coverage_mesh(D)
        if variant == 2:
            return base + (1 if any(I.lo == 0 for I in D) else 0)
        if variant == 3:
            return base + (0 if any(I.lo == 0 for I in D) else 1)
        if variant == 4:
            return base + sp.Add(*(sigma(I.lo) + sigma(I.hi) for I in D))
        return base

    return IntervalSpace(f"coverage-{variant}", "[0,1]", {"kind": "line", "exact": True}, generate, mesh)


def endpoint_space(rational: bool) -> IntervalSpace:
    """Mesh is (1 - sum |I|) + max |I| only when every endpoint is irrational (or rational), else 1."""
    def generate(target, seed):
        cells = _gapped_cells(target, np.random.default_rng(seed))
        return _line_system(cells if rational else _irrational(cells, target))

    def mesh(D):
        kind = all(is_rational(I.lo) and is_rational(I.hi) for I in D) if rational else \
            all(_both_irrational(I) for I in D)
        return _coverage_mesh(D) if kind else Fraction(1)

    name = "rational-endpoints" if rational else "irrational-endpoints"
    return IntervalSpace(name, "[0,1]", {"kind": "line", "exact": True}, generate, mesh)


def _curve_on_unit(curve: Curve) -> Callable[[np.ndarray], np.ndarray]:
    a, b = curve.domain_lo, curve.domain_hi
    return lambda t: curve.evaluate(a + np.asarray(t, dtype=float) * (b - a))


def _subdivision_system(target: float, seed: int, extra: Sequence[float] = ()) -> System:
    pts = sorted({float(p) for p in _subdivision_points(target, np.random.default_rng(seed))} |
                 {float(e) for e in extra})
    return System(tuple(Interval(a, b) for a, b in zip(pts[:-1], pts[1:])))


def jordan_space() -> IntervalSpace:
    """Subdivisions 0 = a_0 < ... < a_N = 1 with mesh max |I|."""
    return IntervalSpace(
        "jordan", "[0,1]", {"kind": "line", "exact": False},
        lambda target, seed: _subdivision_system(target, seed),
        lambda D: max(float(I.length) for I in D),
    )


def jordan_phi(curve: Curve) -> IntervalFunctionPhi:
    """phi(I) = x(b) - x(a) for the curve reparametrised affinely onto [0,1]."""
    x = _curve_on_unit(curve)

    def batch(items):
        lo = np.array([float(I.lo) for I in items])
        hi = np.array([float(I.hi) for I in items])
        return x(hi) - x(lo)

    return IntervalFunctionPhi(f"increment({curve.name})", lambda I: batch([I])[0], curve.dim, batch)


def tau_point(curve: Curve, tau: str = "mid") -> IntervalFunctionPhi:
    """zeta(I) = x(tau_I) with tau_I the left end, midpoint or right end of I."""
    x = _curve_on_unit(curve)
    weight = {"left": 0.0, "mid": 0.5, "right": 1.0}.get(tau)
    if weight is None:
        raise DomainError(f"Unknown tau rule {tau!r}; known: left, mid, right")

    def batch(items):
        lo = np.array([float(I.lo) for I in items])
        hi = np.array([float(I.hi) for I in items])
        return x(lo + weight * (hi - lo))

    return IntervalFunctionPhi(f"x(tau={tau})", lambda I: batch([I])[0], curve.dim, batch)


@dataclass(frozen=True, eq=False)
class JumpCurve:
    """
    x(t) on [0,1] given by pieces: pieces[j] applies on [jumps[j-1], jumps[j]),
    the last one on [jumps[-1], 1]. point_values overrides x at listed points.
    """

    jumps: tuple
    pieces: tuple
    point_values: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.pieces) != len(self.jumps) + 1:
            raise DomainError(f"{len(self.jumps)} jumps need {len(self.jumps) + 1} pieces")
        if any(not 0 < t < 1 for t in self.jumps) or list(self.jumps) != sorted(self.jumps):
            raise DomainError("Jump locations must be sorted and inside (0, 1)")

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def _piece_values(self, j: int, t: np.ndarray) -> np.ndarray:
        return _curve_on_unit(self.pieces[j])(t)

    def evaluate(self, t) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        which = np.searchsorted(np.asarray(self.jumps, dtype=float), ts, side="right")
        out = np.zeros((len(ts), self.dim))
        for j in range(len(self.pieces)):
            m = which == j
            if np.any(m):
                out[m] = self._piece_values(j, ts[m])
        for p, v in self.point_values.items():
            out[ts == float(p)] = np.asarray(v, dtype=float)
        return out

    def special_points(self) -> list:
        return sorted(set(float(t) for t in self.jumps) | set(float(p) for p in self.point_values))

    def jump_size(self, t0: float) -> float:
        """s(t0) = s+(t0) + s-(t0) from one-sided limits of the pieces."""
        here = self.evaluate(t0)[0]
        j = int(np.searchsorted(np.asarray(self.jumps, dtype=float), t0, side="right"))
        right = self._piece_values(j, np.array([t0]))[0] if t0 < 1 else here
        if t0 <= 0:
            left = here
        elif t0 in self.jumps:
            left = self._piece_values(j - 1, np.array([t0]))[0]
        else:
            left = self._piece_values(j, np.array([t0]))[0]
        return float(np.linalg.norm(right - here) + np.linalg.norm(left - here))

    def total_jump(self) -> float:
        return float(sum(self.jump_size(t) for t in self.special_points()))


def step_curve() -> JumpCurve:
    """x(t) = 0 for t < 1/2 and 1 for t >= 1/2."""
    return JumpCurve((0.5,), (constant((0.0,)), constant((1.0,))))


def jump_space(curve: JumpCurve) -> IntervalSpace:
    """Subdivisions with mesh max |I| + sigma - sum of s(a_i) over the division points."""
    sigma_total = curve.total_jump()
    special = curve.special_points()

    def mesh(D):
        pts = {float(I.lo) for I in D} | {float(I.hi) for I in D}
        return max(float(I.length) for I in D) + sigma_total - sum(curve.jump_size(p) for p in pts if p in special)

    return IntervalSpace(
        "jordan-jumps", "[0,1]", {"kind": "line", "exact": False},
        lambda target, seed: _subdivision_system(target, seed, special),
        mesh,
    )


def jump_phi(curve: JumpCurve) -> IntervalFunctionPhi:
    def batch(items):
        lo = np.array([float(I.lo) for I in items])
        hi = np.array([float(I.hi) for I in items])
        return curve.evaluate(hi) - curve.evaluate(lo)

    return IntervalFunctionPhi("increment(jump curve)", lambda I: batch([I])[0], curve.dim, batch)


def cube_space(m: int = 1) -> IntervalSpace:
    """Subdivisions of [0,1]^m into boxes, mesh = largest diameter."""
    def generate(target, seed):
        rng = np.random.default_rng(seed)
        axes = []
        for _ in range(m):
            pts = [float(p) for p in _subdivision_points(target / np.sqrt(m), rng)]
            axes.append(list(zip(pts[:-1], pts[1:])))
        boxes = [Box(tuple(c[0] for c in cell), tuple(c[1] for c in cell)) for cell in product(*axes)]
        return System(tuple(boxes))

    return IntervalSpace(f"cube-{m}", f"[0,1]^{m}", {"kind": "box", "dim": m}, generate,
                         lambda D: max(B.diameter for B in D))


def riemann_phi(f: Callable[[np.ndarray], np.ndarray], m: int = 1, tag: str = "mid") -> IntervalFunctionPhi:
    """phi(I) = f(tag point of I) * |I|, the tag being the centre or the lower / upper corner."""
    if tag not in ("mid", "lower", "upper"):
        raise DomainError(f"Unknown tag rule {tag!r}; known: mid, lower, upper")

    def batch(items):
        lo, hi = _bounds(items)
        points = {"mid": 0.5 * (lo + hi), "lower": lo, "upper": hi}[tag]
        return np.asarray(f(points), dtype=float) * np.prod(hi - lo, axis=1)

    return IntervalFunctionPhi(f"f*|I| ({tag})", lambda I: batch([I])[0], 1, batch)


def cube_integral(f: Callable[[np.ndarray], np.ndarray], m: int = 1) -> float:
    """Tensor Gauss-Legendre reference value of the integral of f over [0,1]^m."""
    panels = {1: 64, 2: 32}.get(m, 8)
    nodes, weights = gauss_legendre(np.linspace(0.0, 1.0, panels + 1), 8 if m <= 2 else 4)
    x, w = nodes.ravel(), weights.ravel()
    grids = np.meshgrid(*([x] * m), indexing="ij")
    wgrid = np.prod(np.meshgrid(*([w] * m), indexing="ij"), axis=0)
    points = np.column_stack([g.ravel() for g in grids])
    return float(np.sum(np.asarray(f(points)) * wgrid.ravel()))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """mu = sum of weights[i] * (point mass at points[i]); f is evaluated at the points."""

    points: np.ndarray
    weights: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]

    def values(self) -> np.ndarray:
        return np.asarray(self.f(np.asarray(self.points, dtype=float).reshape(-1, 1)), dtype=float)

    def integral(self) -> float:
        return float(np.sum(self.values() * self.weights))

    def band_mass(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """mu of {p < f <= q}, vectorised."""
        vals = self.values()
        order = np.argsort(vals)
        sv, cw = vals[order], np.concatenate([[0.0], np.cumsum(np.asarray(self.weights)[order])])
        return cw[np.searchsorted(sv, q, side="right")] - cw[np.searchsorted(sv, p, side="right")]

    def level_mass(self, p: float) -> float:
        return float(np.sum(np.asarray(self.weights)[self.values() == p]))


def level_space(measure: DiscreteMeasure) -> IntervalSpace:
    """
    Level bands I(p, q) = {p < f <= q} for 0 = p_0 < ... < p_{n-1} < p_n = inf, as
    intervals (p, q] of values. Mesh: max spacing + 1/p_{n-1} + sum p_i mu(f = p_i).
    """
    atoms = np.unique(measure.values())

    def generate(target, seed):
        rng = np.random.default_rng(seed)
        h = target / 4
        top = max(4.0 / target, float(atoms.max()) + h if atoms.size else 0.0)
        count = int(np.ceil(top / h))
        cuts = (np.arange(1, count + 1) - 0.5 * rng.random(count)) * h
        # hug each positive atom from below
        hug = atoms[atoms > 0] - target ** 3 * (1.0 + rng.random(np.count_nonzero(atoms > 0)))
        cuts = np.union1d(cuts, hug[hug > 0])
        cuts = cuts[~np.isin(cuts, atoms)]
        cuts = np.concatenate([[0.0], cuts, [np.inf]])
        return System(tuple(Interval(float(p), float(q)) for p, q in zip(cuts[:-1], cuts[1:])))

    def mesh(D):
        if len(D) == 1:
            return 1.0
        cuts = [float(I.lo) for I in D]
        spacing = max(b - a for a, b in zip(cuts[:-1], cuts[1:]))
        return spacing + 1.0 / cuts[-1] + sum(p * measure.level_mass(p) for p in cuts[1:])

    return IntervalSpace("level-bands", "finite measure space", {"kind": "line", "exact": False},
                         generate, mesh)


def level_phi(measure: DiscreteMeasure) -> IntervalFunctionPhi:
    def batch(items):
        p = np.array([float(I.lo) for I in items])
        q = np.array([float(I.hi) for I in items])
        return p * measure.band_mass(p, q)

    return IntervalFunctionPhi("p*mu(I(p,q))", lambda I: batch([I])[0], 1, batch)


# ---------------------------------------------------------------------------
# Weierstrass integral

def weierstrass_integral(curve: Curve, F: ParametricIntegrand, schedule: Optional[RefinementSchedule] = None,
                         tol: float = 1e-3, tau: str = "mid", seed: int = 0,
                         cross_check: bool = False) -> ConvergenceReport:
    """
    BC integral of Phi(I) = F(x(tau_I), x(b) - x(a)) over subdivisions of the
    parameter interval. cross_check adds the line integral and the unit-speed
    Lebesgue form to meta.
    """
    gate = check_homogeneity(F, dim=curve.dim, seed=seed)
    if not gate.passed:
        raise HomogeneityError(f"Integrand {F.name} is not positively homogeneous of degree 1", report=gate)
    space = jordan_space()
    Phi = compose_integrand(space, jordan_phi(curve), tau_point(curve, tau), F, seed=seed)
    report = bc_integral(space, Phi, None, schedule, tol, seed)
    report.meta.update(quantity="weierstrass", curve=curve.name, integrand=F.name, tau=tau)
    if cross_check:
        report.meta["line_integral"] = float(line_integral(curve, F).limit_estimate)
        try:
            report.meta["unit_speed_integral"] = unit_speed_integral(reparametrize(curve), F)
        except ZeroLength:
            report.meta["unit_speed_integral"] = 0.0
    return report


# ---------------------------------------------------------------------------
# Example catalog

@dataclass
class CatalogEntry:
    id: int
    title: str
    space: IntervalSpace
    phi: IntervalFunctionPhi
    expected: Union[float, np.ndarray]
    provenance: str
    schedule: RefinementSchedule = BC_SCHEDULE
    tol: float = BC_TOL
    S: Any = None
    extras: dict = field(default_factory=dict)

    def run(self, seed: int = 0) -> ConvergenceReport:
        return bc_integral(self.space, self.phi, self.S, self.schedule, self.tol, seed)


def _as_curve(curve) -> Curve:
    return curve if isinstance(curve, Curve) else get_curve(str(curve))


def _as_function(f, m: int):
    return f if callable(f) else compile_function(f, m)


def _example_1(**_):
    return CatalogEntry(1, "coverage mesh", coverage_space(1), _length_phi(), 1.0, "quasi additive, integral 1")


def _example_2(**_):
    return CatalogEntry(2, "coverage mesh penalising a = 0", coverage_space(2), _length_phi(), 1.0,
                        "small mesh forbids an interval at 0; V = 1")


def _example_3(**_):
    return CatalogEntry(3, "coverage mesh requiring a = 0", coverage_space(3), _length_phi(), 1.0,
                        "small mesh forces an interval at 0; V = 1")


def _example_4(**_):
    return CatalogEntry(4, "rational endpoint penalty", coverage_space(4), _length_phi(), 1.0,
                        "mesh not monotone under refinement; integral 1")


def _example_5(**_):
    return CatalogEntry(5, "irrational endpoints", endpoint_space(rational=False), _signed_phi(), 1.0,
                        "small mesh forces irrational endpoints; integral 1")


def _example_6(**_):
    return CatalogEntry(6, "rational endpoints", endpoint_space(rational=True), _signed_phi(), -1.0,
                        "small mesh forces rational endpoints; integral -1")


def _example_7(curve="circle", **_):
    c = _as_curve(curve)
    phi = jordan_phi(c)
    return CatalogEntry(7, "Jordan length (continuous)", jordan_space(), phi_norm(phi),
                        float(length(c).limit_estimate), "Jordan length equals the curve length",
                        tol=1e-3, extras={"increment": phi, "curve": c})


def _jump_expected(jc: JumpCurve) -> Optional[float]:
    if all(p.name == "constant" for p in jc.pieces):
        return jc.total_jump()
    return None


def _example_8(curve=None, **_):
    jc = curve if isinstance(curve, JumpCurve) else step_curve()
    phi = jump_phi(jc)
    return CatalogEntry(8, "Jordan length (with jumps)", jump_space(jc), phi_norm(phi), _jump_expected(jc),
                        "variation of a piecewise constant curve equals its total jump", extras={"increment": phi, "curve": jc})


def _example_9(f="x^2", m=1, tag="mid", **_):
    m = int(m)
    fn = _as_function(f, m)
    schedule = {1: BC_SCHEDULE, 2: RefinementSchedule(2, 5)}.get(m, RefinementSchedule(2, 3))
    return CatalogEntry(9, "Cauchy integral on the unit cube", cube_space(m), riemann_phi(fn, m, tag),
                        cube_integral(fn, m), "Riemann integral of f", schedule=schedule,
                        tol=1e-4 if m == 1 else 1e-3, extras={"f": fn, "m": m})


def _example_10(points=None, weights=None, f="x", **_):
    pts = np.arange(1, 10) / 10.0 if points is None else np.asarray(points, dtype=float)
    w = np.full(len(pts), 1.0 / len(pts)) if weights is None else np.asarray(weights, dtype=float)
    measure = DiscreteMeasure(pts, w, _as_function(f, 1))
    return CatalogEntry(10, "Lebesgue-Stieltjes integral", level_space(measure), level_phi(measure),
                        measure.integral(), "finite weighted sum of f", schedule=RefinementSchedule(2, 5),
                        tol=1e-3, extras={"measure": measure})


def _example_11(curve="circle", integrand="area2d", tau="mid", **_):
    c = _as_curve(curve)
    F = integrand if isinstance(integrand, ParametricIntegrand) else get_integrand(integrand)
    space = jordan_space()
    Phi = compose_integrand(space, jordan_phi(c), tau_point(c, tau), F)
    expected = line_integral_ac(c, F) if c.has_derivative else float(line_integral(c, F).limit_estimate)
    return CatalogEntry(11, "Weierstrass integral", space, Phi, expected,
                        "line integral of F along the curve", tol=1e-3,
                        extras={"curve": c, "integrand": F, "tau": tau})


example_builders = {
    1: _example_1, 2: _example_2, 3: _example_3, 4: _example_4, 5: _example_5, 6: _example_6,
    7: _example_7, 8: _example_8, 9: _example_9, 10: _example_10, 11: _example_11,
}


def example_catalog(id: int, **params) -> CatalogEntry:
    try:
        builder = example_builders[int(id)]
    except (KeyError, ValueError, TypeError):
        raise UnknownExample(f"Unknown example {id!r}; known ids are 1..11") from None
    return builder(**params)


def parse_example_uri(uri: str) -> tuple[int, dict]:
    """bc://example/<id>?param=value&... -> (id, params)."""
    parts = urlparse(uri)
    path = parts.path.strip("/").split("/")
    if parts.scheme != "bc" or parts.netloc != "example" or len(path) != 1 or not path[0].isdigit():
        raise UnknownExample(f"Not an example URI: {uri!r}")
    return int(path[0]), dict(parse_qsl(parts.query))


def example_from_uri(uri: str) -> CatalogEntry:
    id, params = parse_example_uri(uri)
    return example_catalog(id, **params)

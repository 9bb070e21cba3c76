from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from src.curve_core import Curve, Partition
from src.lib.convergence import ConvergenceReport, RefinementSchedule, summarize
from src.lib.errors import DimensionMismatch, RectifyError

FRECHET_TOL = 1e-3
# Frechet tables are quadratic in the vertex count
FRECHET_SCHEDULE = RefinementSchedule(4, 12)
PREMETRIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2 or len(v) < 1:
            raise DimensionMismatch(f"Polyline needs vertices of shape (p, M), got {v.shape}")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class FrechetResult:
    distance: float
    coupling: list

    def to_record(self) -> dict:
        return {"distance": self.distance, "coupling": [list(pair) for pair in self.coupling]}

    def coupling_frame(self, P: Polyline, Q: Polyline) -> pd.DataFrame:
        idx = np.asarray(self.coupling, dtype=int).reshape(-1, 2)
        gaps = np.linalg.norm(P.vertices[idx[:, 0]] - Q.vertices[idx[:, 1]], axis=1)
        return pd.DataFrame({"i": idx[:, 0], "j": idx[:, 1], "distance": gaps})


def _check_dims(P: Polyline, Q: Polyline):
    if P.dim != Q.dim:
        raise DimensionMismatch(f"Polylines live in R^{P.dim} and R^{Q.dim}")


def _coupling_table(d: np.ndarray) -> np.ndarray:
    """ca[i, j]: smallest max-distance over monotone couplings of P[:i+1] and Q[:j+1]."""
    p, q = d.shape
    ca = np.full((p, q), np.inf)
    ca[0, 0] = d[0, 0]
    for k in range(1, p + q - 1):
        i = np.arange(max(0, k - q + 1), min(p, k + 1))
        j = k - i
        best = np.full(i.shape, np.inf)
        m = (i > 0) & (j > 0)
        best[m] = ca[i[m] - 1, j[m] - 1]
        m = i > 0
        best[m] = np.minimum(best[m], ca[i[m] - 1, j[m]])
        m = j > 0
        best[m] = np.minimum(best[m], ca[i[m], j[m] - 1])
        ca[i, j] = np.maximum(d[i, j], best)
    return ca


def discrete_frechet(P: Polyline, Q: Polyline) -> FrechetResult:
    _check_dims(P, Q)
    d = cdist(P.vertices, Q.vertices)
    ca = _coupling_table(d)

    # walk back from the end; ties prefer the diagonal, then advancing P, then advancing Q
    i, j = len(P) - 1, len(Q) - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        options = []
        if i > 0 and j > 0:
            options.append((i - 1, j - 1))
        if i > 0:
            options.append((i - 1, j))
        if j > 0:
            options.append((i, j - 1))
        best = min(ca[c] for c in options)
        i, j = next(c for c in options if ca[c] == best)
        path.append((i, j))
    path.reverse()
    return FrechetResult(float(ca[-1, -1]), path)


def frechet_distance(P: Polyline, Q: Polyline) -> float:
    """Distance only; keeps two anti-diagonals instead of the full table."""
    _check_dims(P, Q)
    A, B = P.vertices, Q.vertices
    p, q = len(A), len(B)
    prev2 = np.full(p, np.inf)
    prev1 = np.full(p, np.inf)
    prev1[0] = float(np.linalg.norm(A[0] - B[0]))
    for k in range(1, p + q - 1):
        lo, hi = max(0, k - q + 1), min(p, k + 1)
        i = np.arange(lo, hi)
        d = np.linalg.norm(A[i] - B[k - i], axis=1)
        # predecessors: (i-1, j-1) on diagonal k-2, (i-1, j) and (i, j-1) on diagonal k-1
        shifted1 = np.concatenate([[np.inf], prev1[:-1]])
        shifted2 = np.concatenate([[np.inf], prev2[:-1]])
        best = np.minimum(np.minimum(shifted2[i], shifted1[i]), prev1[i])
        current = np.full(p, np.inf)
        current[i] = np.maximum(d, best)
        prev2, prev1 = prev1, current
    return float(prev1[p - 1])


def sample_polyline(curve: Curve, n: int) -> Polyline:
    return Polyline(curve.evaluate(Partition.uniform(curve.domain_lo, curve.domain_hi, n).points))


def frechet_distance_curves(C: Curve, D: Curve, schedule: Optional[RefinementSchedule] = None,
                            tol: float = FRECHET_TOL) -> ConvergenceReport:
    schedule = schedule or FRECHET_SCHEDULE
    if C.dim != D.dim:
        raise DimensionMismatch(f"Curves live in R^{C.dim} and R^{D.dim}")
    samples = []
    for n in schedule.counts():
        mesh = Partition.uniform(C.domain_lo, C.domain_hi, n).norm
        samples.append((mesh, frechet_distance(sample_polyline(C, n), sample_polyline(D, n))))
    report = summarize(samples, tol, label=f"frechet({C.name}, {D.name})")
    report.meta.update(quantity="frechet", curves=[C.name, D.name])
    return report


def insert_midpoints(P: Polyline) -> Polyline:
    v = P.vertices
    if len(v) < 2:
        return P
    out = np.empty((2 * len(v) - 1, v.shape[1]))
    out[0::2] = v
    out[1::2] = 0.5 * (v[:-1] + v[1:])
    return Polyline(out)


@dataclass
class PremetricReport:
    distances: np.ndarray
    worst_negativity: float
    worst_asymmetry: float
    worst_triangle: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def premetric_check(sample: Sequence[Polyline], tol: float = PREMETRIC_TOL) -> PremetricReport:
    if len(sample) < 3:
        raise RectifyError(f"premetric_check needs at least 3 polylines, got {len(sample)}")
    n = len(sample)
    dist = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            dist[a, b] = discrete_frechet(sample[a], sample[b]).distance

    negativity = float(max(0.0, -dist.min()))
    asymmetry = float(np.max(np.abs(dist - dist.T)))
    triangle = 0.0
    for a, b, c in permutations(range(n), 3):
        # |C,D| <= |C,C0| + |C0,D| with C0 = sample[c]
        triangle = max(triangle, dist[a, b] - dist[a, c] - dist[c, b])

    violations = int(negativity > tol) + int(asymmetry > tol) + int(triangle > tol)
    return PremetricReport(dist, negativity, asymmetry, float(triangle), violations)

import os
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from src.lib.console import console
from src.lib.errors import NonConvergence

# Dyadic uniform partitions n = 2^4 ... 2^16
MIN_DEPTH = 4
MAX_DEPTH = 16
SCHEDULE_ENV = "RECTIFY_SCHEDULE_MAX"


def schedule_cap() -> Optional[int]:
    raw = os.environ.get(SCHEDULE_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        console.log(f"Ignoring {SCHEDULE_ENV}={raw!r}: not an integer")
        return None


@dataclass(frozen=True)
class RefinementSchedule:
    """Nested dyadic refinement levels 2^min_depth ... 2^max_depth."""

    min_depth: int = MIN_DEPTH
    max_depth: int = MAX_DEPTH

    def __post_init__(self):
        if self.min_depth < 0 or self.max_depth < self.min_depth:
            raise ValueError(f"Bad schedule bounds [{self.min_depth}, {self.max_depth}]")

    def depths(self) -> list[int]:
        """Levels to run, capped by RECTIFY_SCHEDULE_MAX. Never fewer than two."""
        hi = self.max_depth
        cap = schedule_cap()
        if cap is not None and cap < hi:
            hi = max(cap, 1)
        hi = max(hi, 1)
        lo = min(self.min_depth, hi - 1)
        return list(range(lo, hi + 1))

    def counts(self) -> list[int]:
        return [2 ** d for d in self.depths()]

    def mesh_targets(self) -> list[float]:
        """Target meshes 2^-d, for schedules over abstract interval spaces."""
        return [2.0 ** -d for d in self.depths()]


def _as_value(v):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    return float(arr[0]) if arr.size == 1 else arr


@dataclass
class ConvergenceReport:
    samples: list[tuple[float, Any]]
    limit_estimate: Any
    error_estimate: float
    converged: bool
    tol: float
    meta: dict = field(default_factory=dict)

    @property
    def meshes(self) -> np.ndarray:
        return np.array([m for m, _ in self.samples], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([np.atleast_1d(v) for _, v in self.samples], dtype=float)

    def require(self):
        """Return the limit, raising NonConvergence if the schedule ran out first."""
        if not self.converged:
            raise NonConvergence(
                f"error estimate {self.error_estimate:.3g} exceeds tolerance {self.tol:.3g}",
                report=self,
            )
        return self.limit_estimate

    def to_frame(self) -> pd.DataFrame:
        vals = self.values
        width = vals.shape[1] if vals.size else 1
        names = ["value"] + [f"value_{k}" for k in range(2, width + 1)]
        frame = pd.DataFrame(vals, columns=names)
        frame.insert(0, "mesh", self.meshes)
        errors = np.full(len(self.samples), np.nan)
        if len(self.samples) > 1:
            errors[1:] = np.linalg.norm(np.diff(vals, axis=0), axis=1)
        frame["error"] = errors
        frame["converged"] = [False] * (len(self.samples) - 1) + [self.converged] if self.samples else []
        return frame

    def to_csv(self, path_or_buf=None):
        return self.to_frame().to_csv(path_or_buf, index=False, float_format="%.17g")


def summarize(samples: Sequence[tuple[float, Any]], tol: float, extrapolate: bool = False,
              order: int = 2, label: str = "", criterion: str = "difference") -> ConvergenceReport:
    """
    Build a report from (mesh, value) pairs.

    criterion="difference": error = |v_last - v_prev| (rate agnostic)
    criterion="value": error = |v_last|, for sequences that must decrease to zero
    extrapolate: Richardson step assuming error O(mesh^order) under halving
    """
    # coarsest first; equal meshes keep schedule order
    cleaned = sorted(((float(m), _as_value(v)) for m, v in samples), key=lambda s: -s[0])
    if not cleaned:
        raise ValueError("Cannot summarize an empty sample list")

    last = np.atleast_1d(cleaned[-1][1])
    if criterion == "value":
        error = float(np.linalg.norm(last))
        limit = cleaned[-1][1]
    elif len(cleaned) == 1:
        error = float("inf")
        limit = cleaned[-1][1]
    else:
        prev = np.atleast_1d(cleaned[-2][1])
        error = float(np.linalg.norm(last - prev))
        limit = cleaned[-1][1]
        ratio = cleaned[-2][0] / cleaned[-1][0]
        if extrapolate and ratio > 1:
            limit = _as_value(richardson(prev, last, ratio, order))

    converged = bool(error <= tol)
    if not converged:
        console.log(f"{label or 'schedule'} ended unconverged: error {error:.3g} > tol {tol:.3g}")
    return ConvergenceReport(cleaned, limit, error, converged, tol)


def richardson(coarse, fine, ratio: float = 2.0, order: int = 2):
    """One Richardson step: eliminates the leading mesh^order error term."""
    factor = ratio ** order
    return np.asarray(fine) + (np.asarray(fine) - np.asarray(coarse)) / (factor - 1.0)

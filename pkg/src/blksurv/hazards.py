"""Time partition and piecewise-constant-hazard probability kit.

A grid of boundaries 0 = tau_0 < tau_1 < ... < tau_{r-1} defines r intervals
R_j = [tau_{j-1}, tau_j), with the last interval unbounded. Raw survival
records reduce to per-interval sufficient statistics: an event indicator
delta and the exposure (time at risk) inside each interval the individual
entered. Density, survival and likelihood follow from a constant hazard per
interval. Interval indices are 1-based throughout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "EventStatus",
    "IntervalGrid",
    "SurvivalRecord",
    "IntervalObservation",
    "log_grid",
    "log_grid_midpoints",
    "decompose",
    "decompose_all",
    "survival_function",
    "log_likelihood",
]


class EventStatus(enum.IntEnum):
    CENSORED = 0
    DEATH = 1


@dataclass(frozen=True)
class IntervalGrid:
    """Interval boundaries; ``boundaries[j]`` is tau_j, tau_0 must be 0."""

    boundaries: tuple[float, ...]

    def __post_init__(self):
        b = self.boundaries
        if len(b) < 1 or b[0] != 0.0:
            raise DomainError("grid must start at tau_0 = 0")
        if any(not math.isfinite(x) for x in b):
            raise DomainError("grid boundaries must be finite")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise DomainError("grid boundaries must be strictly increasing")

    @property
    def r(self) -> int:
        """Number of intervals (the last one is unbounded)."""
        return len(self.boundaries)

    def lower(self, j: int) -> float:
        return self.boundaries[j - 1]

    def upper(self, j: int) -> float:
        return self.boundaries[j] if j < self.r else math.inf

    def length(self, j: int) -> float:
        return self.upper(j) - self.lower(j)

    def interval_of(self, t: float) -> int:
        """1-based index of the half-open interval containing time t >= 0."""
        if not (math.isfinite(t) and t >= 0.0):
            raise DomainError(f"time must be finite and >= 0, got {t}")
        return int(np.searchsorted(self.boundaries, t, side="right"))


@dataclass(frozen=True)
class SurvivalRecord:
    """One raw observation: positive time, event status, covariate vector."""

    id: str | int
    time: float
    status: EventStatus
    covariates: tuple[float, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time > 0.0):
            raise InputError(f"survival time must be finite and > 0, got {self.time}")
        if any(not math.isfinite(x) for x in self.covariates):
            raise InputError(f"covariates must be finite for record {self.id!r}")


@dataclass(frozen=True)
class IntervalObservation:
    """Sufficient statistic of one person-interval."""

    individual: int
    interval: int
    delta: int
    exposure: float


def log_grid(nu: float, kappa: float, r: int) -> IntervalGrid:
    """Boundaries tau_j = -nu*log(1 - kappa*j) for j = 0..r-1.

    Packs events roughly evenly when lifetimes look exponential with mean nu.
    Requires kappa*(r-1) < 1 so every boundary is finite.
    """
    if not (nu > 0 and kappa > 0):
        raise DomainError("nu and kappa must be > 0")
    if r < 2:
        raise DomainError("need at least two intervals")
    if kappa * (r - 1) >= 1.0:
        raise DomainError(f"kappa*(r-1) = {kappa * (r - 1)} must be < 1")
    js = np.arange(r, dtype=np.float64)
    taus = -nu * np.log1p(-kappa * js)
    return IntervalGrid(tuple(float(t) for t in taus))


def log_grid_midpoints(nu: float, kappa: float, r: int) -> np.ndarray:
    """Plotting positions tau*_j = -nu*log(1 - kappa*(j - 0.5)), j = 1..r."""
    js = np.arange(1, r + 1, dtype=np.float64)
    inner = 1.0 - kappa * (js - 0.5)
    if np.any(inner <= 0.0):
        raise DomainError("kappa*(r-0.5) must be < 1 for midpoints")
    return -nu * np.log(inner)


def decompose(record: SurvivalRecord, grid: IntervalGrid,
              individual: int = 0) -> list[IntervalObservation]:
    """Split one record into per-interval observations.

    Every interval started before the recorded time contributes: fully
    survived intervals with delta 0 and the whole interval length as
    exposure, and the terminal interval with the partial exposure and
    delta 1 only for a death. A time exactly on a boundary belongs to the
    next interval (half-open convention), yielding exposure 0 there.
    """
    t = record.time
    terminal = grid.interval_of(t)
    out = []
    for j in range(1, terminal):
        out.append(IntervalObservation(individual, j, 0, grid.length(j)))
    delta = 1 if record.status == EventStatus.DEATH else 0
    out.append(IntervalObservation(individual, terminal, delta, t - grid.lower(terminal)))
    return out


def decompose_all(records, grid: IntervalGrid) -> list[IntervalObservation]:
    """Decompose records in order, using list position as individual index."""
    out = []
    for i, rec in enumerate(records):
        out.extend(decompose(rec, grid, individual=i))
    return out


def survival_function(grid: IntervalGrid, hazards, t):
    """S(t) = exp(-integrated hazard) under per-interval hazards.

    ``hazards`` holds one positive rate per interval; ``t`` may be a scalar
    or an array of times >= 0.
    """
    lam = np.asarray(hazards, dtype=np.float64)
    if lam.shape != (grid.r,):
        raise DomainError(f"need {grid.r} hazards, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise DomainError("hazards must be finite and > 0")
    ts = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(ts)) or np.any(ts < 0.0):
        raise DomainError("times must be finite and >= 0")
    bounds = np.asarray(grid.boundaries)
    # cumulative hazard at each lower boundary
    widths = np.diff(bounds)
    cum = np.concatenate([[0.0], np.cumsum(lam[:-1] * widths)])
    idx = np.searchsorted(bounds, ts, side="right") - 1
    integrated = cum[idx] + lam[idx] * (ts - bounds[idx])
    out = np.exp(-integrated)
    return float(out) if ts.ndim == 0 else out


def log_likelihood(observations, hazards) -> float:
    """Sum of delta*log(lambda) - lambda*exposure over observations.

    ``hazards`` is indexed [individual, interval-1]. Matches, up to the
    delta*log(exposure) term, the log-likelihood of independent Poisson
    counts delta with means lambda*exposure.
    """
    lam = np.asarray(hazards, dtype=np.float64)
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise DomainError("hazards must be finite and > 0")
    total = 0.0
    for obs in observations:
        rate = lam[obs.individual, obs.interval - 1]
        total += obs.delta * math.log(rate) - rate * obs.exposure
    return total

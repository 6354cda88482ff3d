"""Turn expert hazard-ratio judgements into coefficient prior moments.

Under proportional hazards, two individuals differing only by ``gap`` in one
covariate have hazard ratio exp(gap * beta). An expert's central 95% range
(low, high) for that ratio, read as a +/-2 sd normal range on the log scale,
pins down the coefficient's mean and variance. The intercept is handled the
same way through a plausible range for the mean lifetime of a baseline
individual under a constant hazard.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "RatioJudgement",
    "moments_from_ratios",
    "partial_likelihood_to_ratio",
    "ratio_to_partial_likelihood",
    "baseline_range",
]


@dataclass(frozen=True)
class RatioJudgement:
    """95% range (low, high) for the hazard ratio across a covariate gap."""

    gap: float
    low: float
    high: float

    def __post_init__(self):
        if not (math.isfinite(self.gap) and self.gap != 0.0):
            raise DomainError(f"covariate gap must be finite and nonzero, got {self.gap}")
        if not (0.0 < self.low < self.high) or not math.isfinite(self.high):
            raise DomainError(
                f"need 0 < low < high, got ({self.low}, {self.high})")


def moments_from_ratios(judgement: RatioJudgement) -> tuple[float, float]:
    """Coefficient (mean, variance) implied by a hazard-ratio range.

    mean = (log low + log high) / (2 * gap) and
    sd = (log high - log low) / (4 * |gap|), so mapping mean +/- 2 sd back
    through exp(gap * beta) recovers the stated range exactly.
    """
    ll, lh = math.log(judgement.low), math.log(judgement.high)
    mean = (ll + lh) / (2.0 * judgement.gap)
    sd = (lh - ll) / (4.0 * abs(judgement.gap))
    return mean, sd * sd


def partial_likelihood_to_ratio(p: float) -> float:
    """Hazard ratio from the probability that the first of a pair dies first.

    With p = h_i / (h_i + h_j), the ratio h_i / h_j is p / (1 - p).
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return p / (1.0 - p)


def ratio_to_partial_likelihood(ratio: float) -> float:
    """Inverse of :func:`partial_likelihood_to_ratio`: r -> r / (1 + r)."""
    if not (math.isfinite(ratio) and ratio > 0.0):
        raise DomainError(f"ratio must be finite and > 0, got {ratio}")
    return ratio / (1.0 + ratio)


def baseline_range(low_days: float, high_days: float) -> tuple[float, float]:
    """Intercept (mean, sd) from a mean-lifetime range for baseline patients.

    Under a constant hazard the log baseline hazard is minus the log mean
    lifetime, so the range maps to mean = -(log low + log high)/2 and
    sd = (log high - log low)/4.
    """
    if not (0.0 < low_days < high_days) or not math.isfinite(high_days):
        raise DomainError(f"need 0 < low < high, got ({low_days}, {high_days})")
    ll, lh = math.log(low_days), math.log(high_days)
    return -(ll + lh) / 2.0, (lh - ll) / 4.0

"""Guide transforms between gamma hazard beliefs and log-hazard moments.

A hazard carries a conjugate gamma belief Ga(alpha, theta). The guide
relationship log(lambda) ~ eta translates that belief into a mean/variance
pair (f, q) for eta and back. Three translation methods are supported:

* ``log-moment``: f and q are the exact mean and variance of log(lambda),
  so h1 = digamma and h2 = trigamma.
* ``log-mode``: f is the mode of the log-scale density and q the inverse
  curvature there, giving h1 = log(alpha), h2 = 1/alpha.
* ``lognormal``: (f, q) are the parameters of the lognormal with the same
  mean and variance as the gamma, giving h1 = log(alpha*sqrt(alpha/(alpha+1)))
  and h2 = log(1 + 1/alpha).

In every case f = h1(alpha) - log(theta) and q = h2(alpha), with h2 strictly
decreasing, so observing a death (shape + 1) always reduces q and any other
observation leaves q unchanged.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError

__all__ = [
    "GuideMethod",
    "GammaBelief",
    "LinkMoments",
    "forward",
    "inverse",
    "observe",
    "DEFAULT_METHOD",
]


class GuideMethod(enum.Enum):
    """Which translation backs the guide relationship."""

    LOG_MOMENT = "log-moment"
    LOG_MODE = "log-mode"
    LOGNORMAL = "lognormal"

    @classmethod
    def parse(cls, name: str) -> "GuideMethod":
        for method in cls:
            if method.value == name:
                return method
        valid = ", ".join(m.value for m in cls)
        raise DomainError(f"unknown guide method {name!r} (expected one of: {valid})")


DEFAULT_METHOD = GuideMethod.LOG_MODE


@dataclass(frozen=True)
class GammaBelief:
    """Shape/rate pair for one hazard; rate has units 1/time."""

    alpha: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"gamma shape must be finite and > 0, got {self.alpha}")
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise DomainError(f"gamma rate must be finite and > 0, got {self.theta}")

    @property
    def mean(self) -> float:
        return self.alpha / self.theta

    @property
    def variance(self) -> float:
        return self.alpha / self.theta ** 2

    @property
    def sd(self) -> float:
        return math.sqrt(self.alpha) / self.theta


@dataclass(frozen=True)
class LinkMoments:
    """Mean and variance of a transformed hazard eta = log(lambda)."""

    f: float
    q: float

    def __post_init__(self):
        if not math.isfinite(self.f):
            raise DomainError(f"link mean must be finite, got {self.f}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise DomainError(f"link variance must be finite and > 0, got {self.q}")


# ----------------------------------------------------------------------
# array-valued h transforms (hot path for the fit engine)
# ----------------------------------------------------------------------

def h1(method: GuideMethod, alpha):
    """Location transform h1(alpha); alpha may be scalar or array."""
    if method is GuideMethod.LOG_MOMENT:
        return specfun.digamma(alpha)
    if method is GuideMethod.LOG_MODE:
        return np.log(alpha)
    return np.log(alpha) - 0.5 * np.log1p(1.0 / np.asarray(alpha, dtype=np.float64))


def h2(method: GuideMethod, alpha):
    """Variance transform h2(alpha), strictly decreasing on (0, inf)."""
    if method is GuideMethod.LOG_MOMENT:
        return specfun.trigamma(alpha)
    if method is GuideMethod.LOG_MODE:
        return 1.0 / np.asarray(alpha, dtype=np.float64)
    return np.log1p(1.0 / np.asarray(alpha, dtype=np.float64))


def h2_inverse(method: GuideMethod, q):
    """Shape recovering h2(alpha) = q; all three h2 map onto (0, inf)."""
    arr = np.asarray(q, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("link variance must be finite and > 0")
    if method is GuideMethod.LOG_MOMENT:
        return specfun.inverse_trigamma(q)
    if method is GuideMethod.LOG_MODE:
        out = 1.0 / arr
    else:
        out = 1.0 / np.expm1(arr)
    return float(out) if arr.ndim == 0 else out


def forward_arrays(method: GuideMethod, alpha, theta):
    """(f, q) = (h1(alpha) - log(theta), h2(alpha)) elementwise."""
    return h1(method, alpha) - np.log(theta), h2(method, alpha)


def inverse_arrays(method: GuideMethod, f, q):
    """(alpha, theta) recovering the given link moments elementwise."""
    alpha = h2_inverse(method, q)
    theta = np.exp(h1(method, alpha) - np.asarray(f, dtype=np.float64))
    return alpha, theta


# ----------------------------------------------------------------------
# single-belief operations
# ----------------------------------------------------------------------

def forward(method: GuideMethod, belief: GammaBelief) -> LinkMoments:
    """Translate a gamma belief into moments of eta under the given method."""
    f, q = forward_arrays(method, belief.alpha, belief.theta)
    return LinkMoments(float(f), float(q))


def inverse(method: GuideMethod, moments: LinkMoments) -> GammaBelief:
    """Recover the gamma belief whose guide moments are ``moments``.

    Round-trips with :func:`forward` to better than 1e-8 relative.
    """
    alpha, theta = inverse_arrays(method, moments.f, moments.q)
    return GammaBelief(float(alpha), float(theta))


def observe(method: GuideMethod, prior: GammaBelief, delta: int,
            exposure: float) -> tuple[GammaBelief, LinkMoments]:
    """Conjugate update for one person-interval observation.

    ``delta`` is 1 for a death, 0 for survival/censoring; ``exposure`` is the
    time at risk within the interval. Exposure 0 is allowed (event exactly at
    the interval start) and degenerates to a shape-only increment.
    """
    if delta not in (0, 1):
        raise DomainError(f"delta must be 0 or 1, got {delta}")
    if not (math.isfinite(exposure) and exposure >= 0.0):
        raise DomainError(f"exposure must be finite and >= 0, got {exposure}")
    posterior = GammaBelief(prior.alpha + delta, prior.theta + exposure)
    return posterior, forward(method, posterior)

"""Temporally correlated prior over per-interval coefficient vectors.

Coefficients evolve between intervals through an autoregressive-style system
relation around a global component: centred on that component, the interval-j
vector is the matrix ``G_j`` image of the interval-(j-1) vector plus an
independent innovation with covariance ``E_j``. This induces

    C_j       = C_0 + G_j (C_{j-1} - C_0) G_j' + E_j
    C_{j,j+l} = C_0 + (C_j - C_0) (G_{j+l} ... G_{j+1})'

for the per-interval covariances and the cross-covariances between interval
coefficient vectors. The stationary special case (identical mean, C_j = C,
G_j = rho*I, C_0 = c0*C, E derived as (1-rho^2)(C-C0)) gives lag-k blocks
Gamma_k = C_0 + rho^k (C - C_0).

From the coefficient prior and a design matrix, moments of every linear
predictor eta_{i,j} = x_i' beta_j and the joint belief state over
(eta, beta) follow by exact linearity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bayeslin import SecondOrderSpec
from .errors import DomainError

__all__ = [
    "EvolutionSpec",
    "StationarySpec",
    "CoefficientPrior",
    "propagate_cov",
    "stationary_cov",
    "design_matrix",
    "eta_moments",
    "eta_cross_cov",
    "eta_beta_cov",
    "assemble_omega",
    "eta_label",
    "beta_label",
]

_PSD_RTOL = 1e-10


def _as_psd(name: str, m, dim: int) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (dim, dim):
        raise DomainError(f"{name} must be {dim}x{dim}, got {arr.shape}")
    if np.abs(arr - arr.T).max() > 1e-12 * max(1.0, np.abs(arr).max()):
        raise DomainError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(arr)
    if eigs.size and eigs[0] < -_PSD_RTOL * max(eigs[-1], 1.0):
        raise DomainError(f"{name} must be PSD (min eigenvalue {eigs[0]})")
    return 0.5 * (arr + arr.T)


@dataclass(frozen=True)
class EvolutionSpec:
    """General system evolution: per-interval means, covariance recursion inputs.

    ``transitions[j-2]`` and ``innovations[j-2]`` are G_j and E_j for
    j = 2..r. ``means`` may be a single vector (constant mean) or one row
    per interval.
    """

    means: np.ndarray           # (r, d) after normalization
    global_cov: np.ndarray      # C_0
    first_cov: np.ndarray       # C_1
    transitions: tuple          # r-1 matrices G_2..G_r
    innovations: tuple          # r-1 matrices E_2..E_r
    intervals: int

    @classmethod
    def build(cls, means, global_cov, first_cov, transitions, innovations,
              intervals: int) -> "EvolutionSpec":
        r = int(intervals)
        if r < 1:
            raise DomainError("need at least one interval")
        m = np.asarray(means, dtype=np.float64)
        if m.ndim == 1:
            m = np.tile(m, (r, 1))
        d = m.shape[1]
        if m.shape != (r, d) or not np.all(np.isfinite(m)):
            raise DomainError(f"means must be ({r}, d) and finite, got {m.shape}")
        c0 = _as_psd("global covariance", global_cov, d)
        c1 = _as_psd("first-interval covariance", first_cov, d)
        _as_psd("first-interval centred covariance", c1 - c0, d)

        def norm_seq(name, seq, check_psd):
            seq = list(seq)
            if len(seq) == 1 and r > 2:
                seq = seq * (r - 1)
            if len(seq) != r - 1:
                raise DomainError(f"need {r - 1} {name} matrices, got {len(seq)}")
            out = []
            for k, s in enumerate(seq):
                arr = np.asarray(s, dtype=np.float64)
                if arr.shape != (d, d) or not np.all(np.isfinite(arr)):
                    raise DomainError(f"{name}[{k}] must be finite {d}x{d}")
                out.append(_as_psd(f"{name}[{k}]", arr, d) if check_psd else arr)
            return tuple(out)

        gs = norm_seq("transition", transitions, check_psd=False) if r > 1 else ()
        es = norm_seq("innovation", innovations, check_psd=True) if r > 1 else ()
        return cls(m, c0, c1, gs, es, r)

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class StationarySpec:
    """Stationary shorthand: constant mean, C_j = C, G = rho*I, C_0 = c0*C."""

    mean: np.ndarray
    cov: np.ndarray
    rho: float
    c0: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        d = mean.shape[0]
        cov = _as_psd("coefficient covariance", self.cov, d)
        eigs = np.linalg.eigvalsh(cov)
        if eigs[0] <= 0.0:
            raise DomainError("coefficient covariance must be positive definite")
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise DomainError("mean must be a finite vector")
        if not (0.0 < self.rho < 1.0):
            raise DomainError(f"rho must lie in (0, 1), got {self.rho}")
        if not (0.0 <= self.c0 <= 1.0):
            raise DomainError(f"c0 must lie in [0, 1], got {self.c0}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def lag_correlation(self, k: int) -> float:
        """rho_k with Gamma_k = rho_k * C: c0 + (1 - c0) * rho^k."""
        return self.c0 + (1.0 - self.c0) * self.rho ** k

    def to_evolution(self, intervals: int) -> EvolutionSpec:
        """Equivalent general evolution (used to cross-check the recursion)."""
        d = self.dim
        c0 = self.c0 * self.cov
        innovation = (1.0 - self.rho ** 2) * (self.cov - c0)
        return EvolutionSpec.build(
            self.mean, c0, self.cov,
            [self.rho * np.eye(d)] * max(intervals - 1, 1),
            [innovation] * max(intervals - 1, 1),
            intervals)


@dataclass(frozen=True)
class CoefficientPrior:
    """Means and full joint covariance of the stacked coefficient vectors."""

    means: np.ndarray   # (r, d)
    cov: np.ndarray     # (r*d, r*d)

    @property
    def r(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def mean_stack(self) -> np.ndarray:
        return self.means.reshape(-1)

    def block(self, j: int, l: int) -> np.ndarray:
        """Cross-covariance block Cov(beta_j, beta_l); 1-based indices."""
        d = self.d
        return self.cov[(j - 1) * d:j * d, (l - 1) * d:l * d]


def propagate_cov(spec: EvolutionSpec) -> CoefficientPrior:
    """Run the covariance recursion and assemble the full joint prior."""
    r, d = spec.intervals, spec.dim
    c0 = spec.global_cov
    diag = [spec.first_cov]
    for j in range(2, r + 1):
        g = spec.transitions[j - 2]
        e = spec.innovations[j - 2]
        diag.append(c0 + g @ (diag[-1] - c0) @ g.T + e)
    full = np.zeros((r * d, r * d))
    for j in range(1, r + 1):
        full[(j - 1) * d:j * d, (j - 1) * d:j * d] = diag[j - 1]
        centred = diag[j - 1] - c0
        for l in range(j + 1, r + 1):
            centred = centred @ spec.transitions[l - 2].T
            blk = c0 + centred
            full[(j - 1) * d:j * d, (l - 1) * d:l * d] = blk
            full[(l - 1) * d:l * d, (j - 1) * d:j * d] = blk.T
    full = 0.5 * (full + full.T)
    eigs = np.linalg.eigvalsh(full)
    if eigs[0] < -_PSD_RTOL * max(eigs[-1], 1.0):
        raise DomainError(
            f"assembled coefficient covariance is not PSD (min eigenvalue {eigs[0]})")
    return CoefficientPrior(spec.means.copy(), full)


def stationary_cov(spec: StationarySpec, intervals: int) -> CoefficientPrior:
    """Joint prior under the stationary shorthand: lag-k blocks Gamma_k."""
    r = int(intervals)
    if r < 1:
        raise DomainError("need at least one interval")
    d = spec.dim
    c0 = spec.c0 * spec.cov
    full = np.zeros((r * d, r * d))
    for j in range(1, r + 1):
        for l in range(j, r + 1):
            gamma = c0 + spec.rho ** (l - j) * (spec.cov - c0)
            full[(j - 1) * d:j * d, (l - 1) * d:l * d] = gamma
            full[(l - 1) * d:l * d, (j - 1) * d:j * d] = gamma.T
    means = np.tile(spec.mean, (r, 1))
    return CoefficientPrior(means, 0.5 * (full + full.T))


def design_matrix(covariates) -> np.ndarray:
    """Prepend the intercept column of ones to raw covariate rows."""
    raw = np.asarray(covariates, dtype=np.float64)
    if raw.ndim != 2:
        raise DomainError(f"covariates must be 2-d, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise DomainError("covariates must be finite")
    return np.hstack([np.ones((raw.shape[0], 1)), raw])


def _check_design(design: np.ndarray, d: int) -> np.ndarray:
    x = np.asarray(design, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != d:
        raise DomainError(f"design must have {d} columns, got shape {x.shape}")
    if not np.all(x[:, 0] == 1.0):
        raise DomainError("design matrix must carry an intercept column of ones")
    return x


def eta_moments(prior: CoefficientPrior, design) -> tuple[np.ndarray, np.ndarray]:
    """Prior mean f[i, j-1] = x_i' m_j and variance q[i, j-1] = x_i' C_j x_i."""
    x = _check_design(design, prior.d)
    f = x @ prior.means.T
    q = np.empty_like(f)
    for j in range(1, prior.r + 1):
        cj = prior.block(j, j)
        q[:, j - 1] = np.einsum("pi,ij,pj->p", x, cj, x)
    return f, q


def eta_cross_cov(prior: CoefficientPrior, design, ij, kl) -> float:
    """Cov(eta_{i,j}, eta_{k,l}) = x_i' C_{j,l} x_k."""
    x = _check_design(design, prior.d)
    (i, j), (k, l) = ij, kl
    return float(x[i] @ prior.block(j, l) @ x[k])


def eta_beta_cov(prior: CoefficientPrior, design, i: int, j: int) -> np.ndarray:
    """Cov(eta_{i,j}, stacked beta) as a length r*d vector."""
    x = _check_design(design, prior.d)
    return np.concatenate(
        [x[i] @ prior.block(j, l) for l in range(1, prior.r + 1)])


def eta_label(i: int, j: int) -> tuple:
    return ("eta", i, j)


def beta_label(j: int, c: int) -> tuple:
    return ("beta", j, c)


def assemble_omega(prior: CoefficientPrior, design) -> SecondOrderSpec:
    """Joint belief state over all eta_{i,j} followed by all coefficients.

    Labels run eta row-major by (individual, interval), then coefficients by
    (interval, component). The covariance is structurally singular: eta is an
    exact linear image of beta, so the rank never exceeds r*d.
    """
    x = _check_design(design, prior.d)
    p, d = x.shape
    r = prior.r
    rd = r * d
    amap = np.zeros((p * r, rd))
    labels = []
    for i in range(p):
        for j in range(1, r + 1):
            amap[i * r + (j - 1), (j - 1) * d:j * d] = x[i]
            labels.append(eta_label(i, j))
    for j in range(1, r + 1):
        for c in range(d):
            labels.append(beta_label(j, c))
    ak = amap @ prior.cov
    top = np.hstack([ak @ amap.T, ak])
    bottom = np.hstack([ak.T, prior.cov])
    cov = np.vstack([top, bottom])
    mean = np.concatenate([amap @ prior.mean_stack, prior.mean_stack])
    return SecondOrderSpec(tuple(labels), mean, 0.5 * (cov + cov.T))

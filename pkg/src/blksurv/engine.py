"""Production inference path: pooled commutative updates in coefficient space.

Every person-interval observation revises one transformed hazard's moments
(f0, q0) -> (f1, q1) via the conjugate gamma update and the guide transform.
Because each transformed hazard is an exact linear image a'beta of the
stacked coefficients, the joint pooled update collapses onto coefficient
space: each observation contributes a rank-one precision increment
dP * a a' with dP = 1/q1 - 1/q0 and an information increment db * a with
db = dP * f0 + (f1 - f0)/q1. Accumulating those into the prior's natural
precision/information pair and solving once reproduces, exactly, the pooled
update over the full (eta, beta) belief state while staying
O(n_obs * d^2) instead of inverting structurally singular matrices of
dimension p*r + r*d.

Increment accumulation runs in a deterministic sorted order so results are
bit-identical under permutations of the input records, not merely equal in
exact arithmetic.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _accel
from . import guide as guide_mod
from .bayeslin import KinematicSource, pool_naive
from .dynprior import (CoefficientPrior, StationarySpec, assemble_omega,
                       beta_label, design_matrix, eta_label, eta_moments,
                       stationary_cov)
from .errors import DomainError, InputError, PoolingValidityError
from .guide import GuideMethod, DEFAULT_METHOD
from .hazards import (EventStatus, IntervalGrid, SurvivalRecord,
                      decompose_all, survival_function)

__all__ = [
    "ObservationIncrement",
    "PosteriorSummary",
    "increments",
    "pool_fast",
    "fit",
    "predict_survival",
    "simulate",
]

_NAIVE_LIMIT = 4000  # joint-state dimension cap for the reference path


@dataclass(frozen=True)
class ObservationIncrement:
    """Rank-one contribution of one observation in coefficient space."""

    individual: int
    interval: int
    x: tuple[float, ...]          # design row, lives in the interval block
    precision_gain: float         # dP = 1/q1 - 1/q0
    information_shift: float      # db = dP*f0 + (f1 - f0)/q1

    def dense_row(self, r: int) -> np.ndarray:
        """The length r*d row mapping stacked coefficients to this eta."""
        d = len(self.x)
        row = np.zeros(r * d)
        row[(self.interval - 1) * d:self.interval * d] = self.x
        return row


@dataclass(frozen=True)
class PosteriorSummary:
    """Adjusted moments for coefficients and the observed person-intervals."""

    method: GuideMethod
    coef_means: np.ndarray        # (r, d)
    coef_sds: np.ndarray          # (r, d)
    coef_cov: np.ndarray          # (r*d, r*d)
    eta_individual: np.ndarray    # per observed person-interval, sorted
    eta_interval: np.ndarray
    eta_f: np.ndarray
    eta_q: np.ndarray
    eta_alpha: np.ndarray
    eta_theta: np.ndarray
    grid: IntervalGrid | None = None
    record_ids: tuple = ()
    notes: tuple[str, ...] = ()

    @property
    def r(self) -> int:
        return self.coef_means.shape[0]

    @property
    def d(self) -> int:
        return self.coef_means.shape[1]


# ----------------------------------------------------------------------
# increment construction
# ----------------------------------------------------------------------

def _observation_arrays(observations):
    n = len(observations)
    ii = np.empty(n, dtype=np.int64)
    jj = np.empty(n, dtype=np.int64)
    delta = np.empty(n, dtype=np.int64)
    expo = np.empty(n, dtype=np.float64)
    for k, obs in enumerate(observations):
        ii[k], jj[k] = obs.individual, obs.interval
        delta[k], expo[k] = obs.delta, obs.exposure
    if np.any((delta != 0) & (delta != 1)):
        raise InputError("delta must be 0 or 1")
    if not np.all(np.isfinite(expo)) or np.any(expo < 0):
        raise InputError("exposures must be finite and >= 0")
    return ii, jj, delta, expo


def _revised_moments(method, prior, design, ii, jj, delta, expo):
    """Per-observation (f0, q0, f1, q1) through the conjugate+guide update."""
    f_all, q_all = eta_moments(prior, design)
    f0 = f_all[ii, jj - 1]
    q0 = q_all[ii, jj - 1]
    alpha0 = guide_mod.h2_inverse(method, q0)
    theta0 = np.exp(guide_mod.h1(method, alpha0) - f0)
    alpha1 = alpha0 + delta
    theta1 = theta0 + expo
    f1 = guide_mod.h1(method, alpha1) - np.log(theta1)
    # survivals and censorings leave the shape untouched, so q is unchanged
    # by construction; pin it to avoid round-trip noise in dP
    q1 = np.where(delta == 1, guide_mod.h2(method, alpha1), q0)
    return f0, q0, f1, q1


def increments(observations, method: GuideMethod, prior: CoefficientPrior,
               design) -> list[ObservationIncrement]:
    """Reduce observations to rank-one increments under one guide method.

    Each (individual, interval) pair may appear at most once; exposure-0
    survivals produce exact null increments.
    """
    ii, jj, delta, expo = _observation_arrays(observations)
    keys = ii * (jj.max() + 1 if len(jj) else 1) + jj
    if len(np.unique(keys)) != len(keys):
        raise InputError("duplicate (individual, interval) observation")
    x = np.asarray(design, dtype=np.float64)
    f0, q0, f1, q1 = _revised_moments(method, prior, x, ii, jj, delta, expo)
    dP = np.where(delta == 1, 1.0 / q1 - 1.0 / q0, 0.0)
    db = dP * f0 + (f1 - f0) / q1
    return [
        ObservationIncrement(int(ii[k]), int(jj[k]), tuple(x[ii[k]]),
                             float(dP[k]), float(db[k]))
        for k in range(len(ii))
    ]


# ----------------------------------------------------------------------
# accumulation kernels
# ----------------------------------------------------------------------

def _accumulate_np(prec, info, rows, block, dP, db):
    for j in np.unique(block):
        m = block == j
        xj = rows[m]
        lo, hi = j * xj.shape[1], (j + 1) * xj.shape[1]
        prec[lo:hi, lo:hi] += np.einsum("n,ni,nj->ij", dP[m], xj, xj)
        info[lo:hi] += db[m] @ xj


if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _accumulate_nb(prec, info, rows, block, dP, db):
        n, d = rows.shape
        for k in range(n):
            base = block[k] * d
            for a in range(d):
                xa = rows[k, a]
                info[base + a] += db[k] * xa
                w = dP[k] * xa
                for b in range(d):
                    prec[base + a, base + b] += w * rows[k, b]


# ----------------------------------------------------------------------
# pooled solve
# ----------------------------------------------------------------------

def pool_fast(prior: CoefficientPrior, incs, method: GuideMethod = DEFAULT_METHOD,
              grid: IntervalGrid | None = None,
              record_ids: tuple = (), notes: tuple = ()) -> PosteriorSummary:
    """One-pass pooled update from rank-one increments.

    Requires a positive definite prior coefficient covariance. Agrees with
    the joint-state reference pooling on every instance; increments are
    summed in sorted (individual, interval) order for bit-reproducibility.
    """
    r, d = prior.r, prior.d
    rd = r * d
    try:
        cho0 = cho_factor(prior.cov, lower=True)
    except LinAlgError as exc:
        raise DomainError("prior coefficient covariance must be positive definite") from exc
    prec = cho_solve(cho0, np.eye(rd))
    prec = 0.5 * (prec + prec.T)
    info = cho_solve(cho0, prior.mean_stack)

    n = len(incs)
    rows = np.empty((n, d))
    block = np.empty(n, dtype=np.int64)
    ii = np.empty(n, dtype=np.int64)
    dP = np.empty(n)
    db = np.empty(n)
    for k, inc in enumerate(incs):
        rows[k] = inc.x
        block[k] = inc.interval - 1
        ii[k] = inc.individual
        dP[k] = inc.precision_gain
        db[k] = inc.information_shift
    order = np.lexsort((block, ii))
    rows, block, ii, dP, db = rows[order], block[order], ii[order], dP[order], db[order]

    if n:
        if _accel.USE_NUMBA:
            _accumulate_nb(prec, info, rows, block, dP, db)
        else:
            _accumulate_np(prec, info, rows, block, dP, db)
    prec = 0.5 * (prec + prec.T)

    try:
        cho1 = cho_factor(prec, lower=True)
    except LinAlgError as exc:
        raise PoolingValidityError(
            "pooled precision is not positive definite") from exc
    cov = cho_solve(cho1, np.eye(rd))
    cov = 0.5 * (cov + cov.T)
    mean = cho_solve(cho1, info)

    eta_f = np.empty(n)
    eta_q = np.empty(n)
    for k in range(n):
        lo, hi = block[k] * d, (block[k] + 1) * d
        eta_f[k] = rows[k] @ mean[lo:hi]
        eta_q[k] = rows[k] @ cov[lo:hi, lo:hi] @ rows[k]
    if n:
        eta_alpha, eta_theta = guide_mod.inverse_arrays(method, eta_f, eta_q)
        eta_alpha = np.atleast_1d(eta_alpha)
        eta_theta = np.atleast_1d(eta_theta)
    else:
        eta_alpha = np.empty(0)
        eta_theta = np.empty(0)

    sds = np.sqrt(np.clip(np.diag(cov), 0.0, None)).reshape(r, d)
    return PosteriorSummary(
        method=method,
        coef_means=mean.reshape(r, d),
        coef_sds=sds,
        coef_cov=cov,
        eta_individual=ii,
        eta_interval=block + 1,
        eta_f=eta_f,
        eta_q=eta_q,
        eta_alpha=eta_alpha,
        eta_theta=eta_theta,
        grid=grid,
        record_ids=tuple(record_ids),
        notes=tuple(notes),
    )


def _pool_reference(prior, design, observations, method, grid, record_ids, notes):
    """Joint-state pooling used by --naive runs and as an exactness oracle."""
    x = np.asarray(design, dtype=np.float64)
    p = x.shape[0]
    r, d = prior.r, prior.d
    if p * r + r * d > _NAIVE_LIMIT:
        raise InputError(
            f"joint state has dimension {p * r + r * d}; the reference pooling "
            f"path is limited to {_NAIVE_LIMIT}")
    ii, jj, delta, expo = _observation_arrays(observations)
    order = np.lexsort((jj, ii))
    ii, jj, delta, expo = ii[order], jj[order], delta[order], expo[order]
    f0, q0, f1, q1 = _revised_moments(method, prior, x, ii, jj, delta, expo)
    omega = assemble_omega(prior, x)
    sources = [
        KinematicSource(eta_label(int(ii[k]), int(jj[k])),
                        float(f0[k]), float(q0[k]), float(f1[k]), float(q1[k]))
        for k in range(len(ii))
    ]
    pooled = pool_naive(omega, sources)
    bidx = np.array([pooled.index(beta_label(j, c))
                     for j in range(1, r + 1) for c in range(d)])
    mean = pooled.mean[bidx]
    cov = pooled.cov[np.ix_(bidx, bidx)]
    eta_f = np.empty(len(ii))
    eta_q = np.empty(len(ii))
    for k in range(len(ii)):
        eta_f[k], eta_q[k] = pooled.marginal(eta_label(int(ii[k]), int(jj[k])))
    if len(ii):
        eta_alpha, eta_theta = guide_mod.inverse_arrays(method, eta_f, eta_q)
        eta_alpha = np.atleast_1d(eta_alpha)
        eta_theta = np.atleast_1d(eta_theta)
    else:
        eta_alpha = np.empty(0)
        eta_theta = np.empty(0)
    sds = np.sqrt(np.clip(np.diag(cov), 0.0, None)).reshape(r, d)
    return PosteriorSummary(
        method=method,
        coef_means=mean.reshape(r, d),
        coef_sds=sds,
        coef_cov=0.5 * (cov + cov.T),
        eta_individual=ii,
        eta_interval=jj,
        eta_f=eta_f,
        eta_q=eta_q,
        eta_alpha=eta_alpha,
        eta_theta=eta_theta,
        grid=grid,
        record_ids=tuple(record_ids),
        notes=tuple(notes),
    )


# ----------------------------------------------------------------------
# end-to-end fit
# ----------------------------------------------------------------------

def _canonical_order(records):
    """Content-based ordering, so shuffled inputs yield identical output."""
    return sorted(records, key=lambda rec: (str(rec.id), rec.time,
                                            int(rec.status), rec.covariates))


def fit(records, grid: IntervalGrid, prior_spec: StationarySpec,
        method: GuideMethod = DEFAULT_METHOD, naive: bool = False) -> PosteriorSummary:
    """Full pipeline: decompose, form increments, pool, summarize.

    Deterministic and independent of record order. A dataset with zero
    deaths still yields the (prior-mean-shifted) result but is flagged,
    since only a variance-reducing contribution guarantees uniqueness of
    the commutative update.
    """
    records = list(records)
    if not records:
        raise InputError("dataset is empty")
    ncov = len(records[0].covariates)
    if any(len(rec.covariates) != ncov for rec in records):
        raise InputError("covariate vectors must have uniform length")
    if prior_spec.dim != ncov + 1:
        raise InputError(
            f"prior has dimension {prior_spec.dim} but data implies {ncov + 1}")
    records = _canonical_order(records)
    design = design_matrix([rec.covariates for rec in records])
    prior = stationary_cov(prior_spec, grid.r)
    observations = decompose_all(records, grid)
    notes = []
    if not any(obs.delta for obs in observations):
        msg = ("no deaths observed: uniqueness of the commutative update "
               "is not guaranteed")
        warnings.warn(msg)
        notes.append(msg)
    record_ids = tuple(rec.id for rec in records)
    if naive:
        return _pool_reference(prior, design, observations, method, grid,
                               record_ids, tuple(notes))
    incs = increments(observations, method, prior, design)
    return pool_fast(prior, incs, method, grid, record_ids, tuple(notes))


# ----------------------------------------------------------------------
# prediction and simulation
# ----------------------------------------------------------------------

def predict_survival(summary: PosteriorSummary, covariates, t,
                     plugin: str = "mean"):
    """Plug-in survival estimate with a +/-2 sd band for a covariate vector.

    Hazards are exp(f* + q*/2) per interval under the default lognormal-mean
    plug-in (``plugin="median"`` uses exp(f*)), with (f*, q*) the adjusted
    moments of the linear predictor. The band applies the same plug-in at
    f* +/- 2*sqrt(q*). Returns (estimate, lower, upper).
    """
    if summary.grid is None:
        raise DomainError("summary carries no interval grid")
    if plugin not in ("mean", "median"):
        raise DomainError(f"unknown plugin {plugin!r}")
    x = np.concatenate([[1.0], np.asarray(covariates, dtype=np.float64)])
    if x.shape != (summary.d,):
        raise DomainError(f"expected {summary.d - 1} covariates")
    r, d = summary.r, summary.d
    f = summary.coef_means @ x
    q = np.empty(r)
    for j in range(r):
        blockc = summary.coef_cov[j * d:(j + 1) * d, j * d:(j + 1) * d]
        q[j] = x @ blockc @ x
    q = np.clip(q, 0.0, None)
    half = 0.5 * q if plugin == "mean" else 0.0
    lam = np.exp(f + half)
    lam_lo = np.exp(f - 2.0 * np.sqrt(q) + half)
    lam_hi = np.exp(f + 2.0 * np.sqrt(q) + half)
    est = survival_function(summary.grid, lam, t)
    lower = survival_function(summary.grid, lam_hi, t)
    upper = survival_function(summary.grid, lam_lo, t)
    return est, lower, upper


if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _piecewise_times_nb(bounds, widths, lam, targets, out):
        p, r = lam.shape
        for i in range(p):
            e = targets[i]
            acc = 0.0
            j = 0
            while j < r - 1:
                step = lam[i, j] * widths[j]
                if acc + step > e:
                    break
                acc += step
                j += 1
            out[i] = bounds[j] + (e - acc) / lam[i, j]


def _piecewise_times_np(bounds, widths, lam, targets):
    cum = np.cumsum(lam[:, :-1] * widths, axis=1) if lam.shape[1] > 1 \
        else np.zeros((lam.shape[0], 0))
    j = (cum <= targets[:, None]).sum(axis=1)
    padded = np.hstack([np.zeros((lam.shape[0], 1)), cum])
    before = np.take_along_axis(padded, j[:, None], 1)[:, 0]
    rate = np.take_along_axis(lam, j[:, None], 1)[:, 0]
    return bounds[j] + (targets - before) / rate


def simulate(grid: IntervalGrid, beta, design, censor_rate: float,
             seed: int) -> list[SurvivalRecord]:
    """Draw survival records under known coefficients.

    Death times come from exact piecewise-exponential inverse-CDF sampling;
    each record is then independently censored with probability
    ``censor_rate`` at a uniform time in (0, death time]. Reproducible for
    a fixed seed regardless of the acceleration backend.
    """
    beta = np.asarray(beta, dtype=np.float64)
    x = np.asarray(design, dtype=np.float64)
    r = grid.r
    if beta.shape != (r, x.shape[1]):
        raise DomainError(f"beta must be ({r}, {x.shape[1]}), got {beta.shape}")
    if not (0.0 <= censor_rate <= 1.0):
        raise DomainError(f"censor rate must lie in [0, 1], got {censor_rate}")
    lam = np.exp(x @ beta.T)
    if not np.all(np.isfinite(lam)):
        raise DomainError("hazards overflow for these coefficients")
    p = x.shape[0]
    rng = np.random.default_rng(seed)
    targets = rng.exponential(1.0, size=p)
    bounds = np.asarray(grid.boundaries)
    widths = np.diff(bounds)
    if _accel.USE_NUMBA:
        times = np.empty(p)
        _piecewise_times_nb(bounds, widths, lam, targets, times)
    else:
        times = _piecewise_times_np(bounds, widths, lam, targets)
    censored = rng.random(p) < censor_rate
    # 1 - random() lies in (0, 1], keeping censoring times strictly positive
    fractions = 1.0 - rng.random(p)
    out = []
    for i in range(p):
        if censored[i]:
            rec = SurvivalRecord(i, float(times[i] * fractions[i]),
                                 EventStatus.CENSORED, tuple(x[i, 1:]))
        else:
            rec = SurvivalRecord(i, float(times[i]), EventStatus.DEATH,
                                 tuple(x[i, 1:]))
        out.append(rec)
    return out

"""Second-order belief specifications and their revisions.

A belief state is a mean vector and symmetric PSD covariance over a labelled
quantity set. Three revision mechanisms are provided:

* ``adjust``: classical update by linear fitting on observed quantities.
* ``kinematic_single`` / ``kinematic_block``: propagate an externally-caused
  revision of one quantity's (or block's) moments through the joint structure,
  keeping the regression representation on the revised quantities fixed.
* ``pool_naive`` / ``pool_revised``: combine several single-source revisions
  into the unique commutative joint revision via precision pooling,
  sum_j P_j - (J-1) * P_0 on precisions and the matching information sum on
  means.

The joint covariance here is typically structurally singular (transformed
hazards are exact linear images of the coefficients), so pooling works in
the eigenbasis of the prior covariance restricted to its range, and
``pseudo_inverse`` provides Moore-Penrose inverses with a relative
eigenvalue cutoff everywhere else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError, PoolingValidityError

__all__ = [
    "SecondOrderSpec",
    "KinematicSource",
    "pseudo_inverse",
    "adjust",
    "kinematic_single",
    "kinematic_block",
    "pool_revised",
    "pool_naive",
]

# eigenvalues below RANK_RTOL * max are structural zeros
RANK_RTOL = 1e-10
SYM_ATOL = 1e-12
MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class SecondOrderSpec:
    """Mean vector and symmetric PSD covariance over an ordered label set."""

    labels: tuple
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        n = len(labels)
        if len(set(labels)) != n:
            raise DomainError("labels must be distinct")
        if mean.shape != (n,) or cov.shape != (n, n):
            raise DomainError(
                f"dimension mismatch: {n} labels, mean {mean.shape}, cov {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise DomainError("mean and covariance must be finite")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > SYM_ATOL * scale:
            raise DomainError("covariance must be symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (cov + cov.T))
        if eigs.size and eigs[0] < -RANK_RTOL * max(eigs[-1], 0.0) - SYM_ATOL:
            raise DomainError(f"covariance must be PSD (min eigenvalue {eigs[0]})")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"unknown label {label!r}") from None

    def marginal(self, label) -> tuple[float, float]:
        k = self.index(label)
        return float(self.mean[k]), float(self.cov[k, k])

    def restrict(self, labels) -> "SecondOrderSpec":
        idx = np.array([self.index(lab) for lab in labels], dtype=int)
        return SecondOrderSpec(tuple(labels), self.mean[idx], self.cov[np.ix_(idx, idx)])


@dataclass(frozen=True)
class KinematicSource:
    """Externally revised moments (f0, q0) -> (f1, q1) for one quantity."""

    label: object
    f0: float
    q0: float
    f1: float
    q1: float

    def __post_init__(self):
        for name in ("f0", "f1"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        for name in ("q0", "q1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v}")


def pseudo_inverse(m, rtol: float = RANK_RTOL) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via eigendecomposition.

    Eigenvalues with magnitude below ``rtol`` times the largest magnitude are
    treated as exact zeros.
    """
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError("pseudo_inverse needs a square matrix")
    scale = max(1.0, float(np.abs(arr).max()))
    if np.abs(arr - arr.T).max() > SYM_ATOL * scale:
        raise DomainError("pseudo_inverse needs a symmetric matrix")
    w, v = np.linalg.eigh(0.5 * (arr + arr.T))
    cutoff = rtol * np.abs(w).max() if w.size else 0.0
    inv = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    out = (v * inv) @ v.T
    return 0.5 * (out + out.T)


def adjust(spec: SecondOrderSpec, observed, values) -> SecondOrderSpec:
    """Revise beliefs after observing the quantities in ``observed``.

    Returns the full adjusted spec; observed components become degenerate at
    their observed values when the observed covariance block is invertible.
    """
    vals = np.asarray(values, dtype=np.float64)
    obs = list(observed)
    if vals.shape != (len(obs),):
        raise DomainError(f"{len(obs)} observed labels but values shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise DomainError("observed values must be finite")
    idx = np.array([spec.index(lab) for lab in obs], dtype=int)
    vaa = spec.cov[np.ix_(idx, idx)]
    vxa = spec.cov[:, idx]
    gain = vxa @ pseudo_inverse(vaa)
    mean = spec.mean + gain @ (vals - spec.mean[idx])
    cov = spec.cov - gain @ vxa.T
    return SecondOrderSpec(spec.labels, mean, 0.5 * (cov + cov.T))


def _check_marginal(spec: SecondOrderSpec, source: KinematicSource) -> int:
    k = spec.index(source.label)
    f, q = float(spec.mean[k]), float(spec.cov[k, k])
    tol_f = MARGINAL_TOL * max(1.0, abs(source.f0))
    tol_q = MARGINAL_TOL * max(1.0, abs(source.q0))
    if abs(f - source.f0) > tol_f or abs(q - source.q0) > tol_q:
        raise ConsistencyError(
            f"source for {source.label!r} claims prior ({source.f0}, {source.q0}) "
            f"but the spec carries ({f}, {q})")
    return k


def kinematic_single(spec: SecondOrderSpec, source: KinematicSource) -> SecondOrderSpec:
    """Propagate a single-quantity moment revision through the joint belief.

    The source quantity's marginal afterwards is exactly (f1, q1); every
    other quantity moves through its prior covariance with the source.
    """
    k = _check_marginal(spec, source)
    col = spec.cov[:, k]
    mean = spec.mean + col * ((source.f1 - source.f0) / source.q0)
    shrink = 1.0 / source.q0 - source.q1 / (source.q0 * source.q0)
    cov = spec.cov - np.outer(col, col) * shrink
    # the closed form gives exactly (f1, q1) up to rounding; pin it bitwise
    mean[k] = source.f1
    cov[k, k] = source.q1
    return SecondOrderSpec(spec.labels, mean, 0.5 * (cov + cov.T))


def kinematic_block(spec: SecondOrderSpec, labels, revised_mean,
                    revised_cov) -> SecondOrderSpec:
    """Vector version of :func:`kinematic_single` for a block of quantities."""
    idx = np.array([spec.index(lab) for lab in labels], dtype=int)
    m1 = np.asarray(revised_mean, dtype=np.float64)
    v1 = np.asarray(revised_cov, dtype=np.float64)
    k = idx.size
    if m1.shape != (k,) or v1.shape != (k, k):
        raise DomainError("revised moments have wrong shape for the block")
    vkk = spec.cov[np.ix_(idx, idx)]
    cxk = spec.cov[:, idx]
    gain = cxk @ pseudo_inverse(vkk)
    mean = spec.mean + gain @ (m1 - spec.mean[idx])
    cov = spec.cov - gain @ cxk.T + gain @ v1 @ gain.T
    return SecondOrderSpec(spec.labels, mean, 0.5 * (cov + cov.T))


def _range_basis(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    cutoff = RANK_RTOL * max(w.max(), 0.0) if w.size else 0.0
    keep = w > cutoff
    return w[keep], v[:, keep]


def pool_revised(prior: SecondOrderSpec,
                 revised: list[SecondOrderSpec]) -> SecondOrderSpec:
    """Commutative pooling of full revised belief states against a prior.

    Precisions are taken on the range of the prior covariance (its eigenbasis
    restricted to nonzero eigenvalues), where the pooled precision
    sum_j P_j - (J-1) * P_0 must come out positive semidefinite; otherwise a
    :class:`PoolingValidityError` flags that no commutative update exists.
    """
    n = len(prior.labels)
    w, vr = _range_basis(prior.cov)
    p0 = 1.0 / w  # prior precision is diagonal in its own eigenbasis
    prec_sum = np.diag(p0) * (1 - len(revised))
    info_sum = np.zeros(w.size)
    scale = max(1.0, float(np.abs(prior.cov).max()))
    for spec in revised:
        if spec.labels != prior.labels:
            raise ConsistencyError("revised specs must carry the prior's labels")
        vj = vr.T @ spec.cov @ vr
        # revised states must live on the prior's range
        resid = spec.cov - vr @ vj @ vr.T
        if np.abs(resid).max() > 1e-8 * scale:
            raise ConsistencyError("revised covariance leaves the prior's range")
        pj = pseudo_inverse(vj)
        prec_sum += pj
        info_sum += pj @ (vr.T @ (spec.mean - prior.mean))
    prec_sum = 0.5 * (prec_sum + prec_sum.T)
    eigs = np.linalg.eigvalsh(prec_sum)
    if eigs.size and eigs[0] < -RANK_RTOL * max(abs(eigs[-1]), 1.0):
        raise PoolingValidityError(
            f"pooled precision has negative eigenvalue {eigs[0]}; "
            "no commutative update exists for these sources")
    pooled_cov_r = pseudo_inverse(prec_sum)
    mean = prior.mean + vr @ (pooled_cov_r @ info_sum)
    cov = vr @ pooled_cov_r @ vr.T
    return SecondOrderSpec(prior.labels, mean, 0.5 * (cov + cov.T))


def pool_naive(prior: SecondOrderSpec,
               sources: list[KinematicSource]) -> SecondOrderSpec:
    """Pool single-quantity kinematic sources into one commutative update.

    Reference implementation: applies :func:`kinematic_single` per source
    and pools the revised states. The result is invariant under permutation
    of the sources.
    """
    labels = [s.label for s in sources]
    if len(set(labels)) != len(labels):
        raise DomainError("source labels must be distinct")
    revised = [kinematic_single(prior, s) for s in sources]
    return pool_revised(prior, revised)

"""Shared generators for randomized small-model tests."""
import numpy as np

from blksurv.dynprior import StationarySpec
from blksurv.engine import simulate
from blksurv.guide import GuideMethod
from blksurv.hazards import IntervalGrid

METHOD_CYCLE = list(GuideMethod)


def make_instance(rng, max_individuals=6, max_intervals=3, max_covariates=2,
                  index=0):
    """One random small model plus a simulated dataset drawn from its prior."""
    p = int(rng.integers(1, max_individuals + 1))
    r = int(rng.integers(1, max_intervals + 1))
    q = int(rng.integers(0, max_covariates + 1))
    d = q + 1
    boundaries = (0.0, *np.sort(rng.uniform(0.2, 3.0, size=r - 1))) if r > 1 \
        else (0.0,)
    grid = IntervalGrid(tuple(float(b) for b in boundaries))
    mean = np.concatenate([[rng.uniform(-1.0, 0.2)],
                           rng.uniform(-0.5, 0.5, size=q)])
    variances = rng.uniform(0.05, 0.8, size=d)
    spec = StationarySpec(mean, np.diag(variances),
                          float(rng.uniform(0.5, 0.95)),
                          float(rng.uniform(0.0, 0.8)))
    # truth drawn from the prior keeps hazards in a sane range
    from blksurv.dynprior import stationary_cov
    prior = stationary_cov(spec, r)
    chol = np.linalg.cholesky(prior.cov + 1e-12 * np.eye(r * d))
    beta = (prior.mean_stack + chol @ rng.standard_normal(r * d)).reshape(r, d)
    design = np.hstack([np.ones((p, 1)), rng.uniform(-1.0, 1.0, size=(p, q))])
    records = simulate(grid, beta, design, censor_rate=float(rng.uniform(0, 0.4)),
                       seed=int(rng.integers(0, 2 ** 31)))
    method = METHOD_CYCLE[index % len(METHOD_CYCLE)]
    return records, grid, spec, method

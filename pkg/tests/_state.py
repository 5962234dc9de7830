"""Shared construction of small sampler instances for the test suite."""

import numpy as np

from circssm.mcmc import GibbsSampler
from circssm.model import (
    GridOps,
    LookupGrid,
    PriorConfig,
    Variances,
    generate_grid,
    sample_observations,
    sample_prior_state,
)


def make_sampler(seed, T=4, n=3, observed=None, prior=None, variances=None):
    """A sampler whose state is an exact joint-prior draw with matching data.

    Surface and transition scales stay in [0.6, 1.1] so dense-matrix
    oracles are well conditioned.
    """
    rng = np.random.default_rng(seed)
    if prior is None:
        prior = PriorConfig(
            beta_f_cov=0.7 * np.eye(4),
            beta_g_mean=np.array([0.1, 0.05, 0.9, 0.8]),
            beta_g_cov=np.diag([0.6, 0.4, 0.0, 0.0]),
        )
    if variances is None:
        variances = Variances(
            sigma_f=0.8, sigma_eps=0.6, sigma_g=0.9, sigma_eta=0.7
        )
    if n > 0:
        grid = generate_grid(rng, n, 6.0)
    else:
        grid = LookupGrid(np.empty(0), np.empty(0))
    state = sample_prior_state(rng, T, grid, prior, variances=variances)
    y, N = sample_observations(rng, state)
    sampler = GibbsSampler(
        y[1:],
        grid,
        prior=prior,
        variances=variances,
        observed=observed,
        rng=np.random.default_rng(seed + 1),
    )
    sampler.state = state
    sampler.state.N = N
    sampler.go = GridOps(grid, state.variances.sigma_g, jitter=sampler.jitter)
    return sampler


def clone_rng(rng):
    out = np.random.default_rng()
    out.bit_generator.state = rng.bit_generator.state
    return out

"""Reference implementation of the latent-path scan.

One full sweep over x_1..x_{T+1} with symmetric mixture proposals whose
increments and acceptance uniforms are drawn by the caller.  The target of
each site combines the transition into the site, the transition out of it
(whose moments and normalizer depend on the site through the look-up grid),
and the joint Gaussian density of all surface values f* at the current
latent locations, which ties every site to the full (T+1)-point kernel
matrix.

Keep this module signature-compatible with ``_sweepcore``: array arguments
are float64/int64 and the time parts of both kernels arrive precomputed
(``Ef`` for the surface process over times 1..T+1, ``Eg`` rows indexed by
integer time against the grid).
"""

import math

import numpy as np
from scipy.linalg import solve_triangular

from ..circular import TWO_PI, wrap
from ..gp import chol_with_jitter

LOG_2PI = math.log(2.0 * math.pi)


def _surface_loglik(z, times, fstar_vals, Ef, beta_f, var_f, jitter):
    """Joint log density of the surface values at angles z, times 1..T+1."""
    A = Ef * np.cos(np.abs(z[:, None] - z[None, :]))
    L, _ = chol_with_jitter(A, jitter=None if jitter < 0.0 else jitter)
    H = np.column_stack([np.ones_like(times), times, np.cos(z), np.sin(z)])
    r = solve_triangular(L, fstar_vals - H @ beta_f, lower=True)
    m = z.shape[0]
    logdet = 2.0 * float(np.sum(np.log(L.diagonal())))
    return -0.5 * (
        m * (LOG_2PI + math.log(var_f)) + logdet + float(r @ r) / var_f
    )


def _transition(t, z_prev, Eg, grid_angles, Ainv, w, beta_g, var_eta, var_g):
    """Transition moments into integer time t from previous angle z_prev."""
    s = Eg[t] * np.cos(np.abs(z_prev - grid_angles))
    mu = (
        beta_g[0]
        + beta_g[1] * t
        + beta_g[2] * math.cos(z_prev)
        + beta_g[3] * math.sin(z_prev)
        + float(s @ w)
    )
    q = float(s @ (Ainv @ s))
    var = var_eta + var_g * max(1.0 - q, 0.0)
    return mu, var


def latent_scan(
    x,
    K,
    fstar,
    Ef,
    beta_f,
    var_f,
    gstar,
    var_eta,
    var_g,
    beta_g,
    grid_angles,
    Eg,
    Ainv,
    w,
    incr,
    logu,
    jitter,
):
    """Sequential Metropolis pass over the latent path; mutates x in place.

    ``incr[t-1]`` and ``logu[t-1]`` drive the proposal at site t.  ``jitter``
    fixes the surface-kernel ridge; a negative value selects the escalating
    ladder.  Returns the number of accepted sites.
    """
    T = x.shape[0] - 2
    times = np.arange(1.0, T + 2.0)
    cur_gp = _surface_loglik(x[1:], times, fstar[1:], Ef, beta_f, var_f, jitter)
    accepted = 0
    for t in range(1, T + 2):
        x_prop = wrap(x[t] + incr[t - 1])
        if t == 1:
            mu_in, var_in = gstar, var_eta
        else:
            mu_in, var_in = _transition(
                t, x[t - 1], Eg, grid_angles, Ainv, w, beta_g, var_eta, var_g
            )
        v_cur = x[t] + TWO_PI * K[t] - mu_in
        v_prop = x_prop + TWO_PI * K[t] - mu_in
        delta = -0.5 * (v_prop * v_prop - v_cur * v_cur) / var_in
        if t <= T:
            mu_c, var_c = _transition(
                t + 1, x[t], Eg, grid_angles, Ainv, w, beta_g, var_eta, var_g
            )
            mu_p, var_p = _transition(
                t + 1, x_prop, Eg, grid_angles, Ainv, w, beta_g, var_eta, var_g
            )
            v_out = x[t + 1] + TWO_PI * K[t + 1]
            delta += -0.5 * (
                (v_out - mu_p) ** 2 / var_p
                - (v_out - mu_c) ** 2 / var_c
                + math.log(var_p)
                - math.log(var_c)
            )
        z = x[1:].copy()
        z[t - 1] = x_prop
        try:
            prop_gp = _surface_loglik(
                z, times, fstar[1:], Ef, beta_f, var_f, jitter
            )
        except Exception:
            # Proposal lands on a numerically singular surface kernel
            # (near-duplicate angles): treat as zero density and reject.
            continue
        delta += prop_gp - cur_gp
        if logu[t - 1] < delta:
            x[t] = x_prop
            cur_gp = prop_gp
            accepted += 1
    return accepted

"""Model blocks for the circular state-space sampler.

State layout is t-aligned: for a series of length T the latent path is
``x[0..T+1]`` (x[0] is the initial angle, x[T+1] the one-step-ahead state),
``K[t]`` is the wrap count of the transition into x_t (t = 1..T+1, K[0]
unused), ``N[t]`` the wrap count of observation y_t (t = 1..T, N[0] unused),
and ``fstar[t]`` the observation-surface value at (t, x_t) for t = 1..T+1
(fstar[0] unused).  Observation times are the integers 1..T+1; grid times are
real.

The latent transition conditions on a fixed look-up grid of time-angle points
with process values D_z: given x_{t-1},

    mu_t    = h(t, x_{t-1})'beta_g + s'A^{-1}(D_z - H beta_g)
    sigma^2_t = sigma_eta^2 + sigma_g^2 (1 - s'A^{-1}s)

with s the correlation vector between (t, x_{t-1}) and the grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import gp
from .circular import TWO_PI, split_turns, von_mises_logpdf, von_mises_sample
from .errors import NumericalSingularityError

__all__ = [
    "PriorConfig",
    "Variances",
    "LookupGrid",
    "ChainState",
    "GridOps",
    "generate_grid",
    "log_latent_transition",
    "log_likelihood_obs",
    "log_prior",
    "joint_grid_gstar_logpdf",
    "sample_prior_state",
    "sample_observations",
]

LOG_2PI = math.log(2.0 * math.pi)


def _as_cov(mat):
    out = np.array(mat, dtype=float)
    if out.shape != (4, 4):
        raise ValueError("beta covariance must be 4x4")
    if not np.allclose(out, out.T):
        raise ValueError("beta covariance must be symmetric")
    return out


@dataclass
class PriorConfig:
    """Hyperparameters of every prior block.

    ``kappa0`` is the concentration of the initial-angle von Mises prior; set
    ``x0_prior_as_variance=True`` to reinterpret the same number as a
    variance (concentration 1/kappa0).  Zero rows/columns of ``beta_g_cov``
    pin the corresponding coefficients at their prior mean.  The inverse
    gamma parameters follow the kernel convention
    (sigma^2)^(-(alpha+2)/2) exp(-gamma / (2 sigma^2)).
    """

    mu0: float = math.pi
    kappa0: float = 3.0
    x0_prior_as_variance: bool = False
    alpha_eps: float = 2.0
    gamma_eps: float = 1.0
    alpha_eta: float = 2.0
    gamma_eta: float = 1.0
    alpha_f: float = 2.0
    gamma_f: float = 1.0
    alpha_g: float = 2.0
    gamma_g: float = 1.0
    beta_f_mean: np.ndarray = field(default_factory=lambda: np.zeros(4))
    beta_f_cov: np.ndarray = field(default_factory=lambda: np.eye(4))
    beta_g_mean: np.ndarray = field(default_factory=lambda: np.ones(4))
    beta_g_cov: np.ndarray = field(
        default_factory=lambda: np.diag([1.0, 1.0, 0.0, 0.0])
    )

    def __post_init__(self):
        self.beta_f_mean = np.asarray(self.beta_f_mean, dtype=float)
        self.beta_g_mean = np.asarray(self.beta_g_mean, dtype=float)
        self.beta_f_cov = _as_cov(self.beta_f_cov)
        self.beta_g_cov = _as_cov(self.beta_g_cov)
        if self.beta_f_mean.shape != (4,) or self.beta_g_mean.shape != (4,):
            raise ValueError("beta means must have length 4")
        if self.effective_kappa0 <= 0:
            raise ValueError("x0 prior concentration must be positive")

    @property
    def effective_kappa0(self):
        if self.x0_prior_as_variance:
            return 1.0 / self.kappa0
        return self.kappa0

    @property
    def beta_g_free(self):
        """Boolean mask of the non-degenerate beta_g coordinates."""
        return np.diag(self.beta_g_cov) > 0.0


@dataclass
class Variances:
    """The four scale parameters, stored as standard deviations."""

    sigma_f: float = 1.0
    sigma_eps: float = 1.0
    sigma_g: float = 1.0
    sigma_eta: float = 1.0

    def __post_init__(self):
        for name in ("sigma_f", "sigma_eps", "sigma_g", "sigma_eta"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite")
            setattr(self, name, v)

    @property
    def var_f(self):
        return self.sigma_f**2

    @property
    def var_eps(self):
        return self.sigma_eps**2

    @property
    def var_g(self):
        return self.sigma_g**2

    @property
    def var_eta(self):
        return self.sigma_eta**2

    def as_array(self):
        return np.array(
            [self.sigma_f, self.sigma_eps, self.sigma_g, self.sigma_eta]
        )

    @classmethod
    def from_array(cls, arr):
        return cls(*map(float, arr))

    def copy(self):
        return Variances(self.sigma_f, self.sigma_eps, self.sigma_g, self.sigma_eta)


@dataclass
class LookupGrid:
    """Fixed time-angle grid carrying the transition-surface values."""

    times: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.times.shape != self.angles.shape or self.times.ndim != 1:
            raise ValueError("grid times and angles must be 1-d and equal length")

    @property
    def n(self):
        return self.times.shape[0]


def generate_grid(rng, n, time_span):
    """Stratified grid: one uniform draw per angle and time stratum.

    Stratum i contributes an angle from [2*pi*i/n, 2*pi*(i+1)/n) and a time
    from [i*time_span/n, (i+1)*time_span/n), so the points are ordered in
    both coordinates.
    """
    if n < 1:
        raise ValueError("grid size must be at least 1")
    i = np.arange(n, dtype=float)
    angles = (i + rng.random(n)) * (TWO_PI / n)
    times = (i + rng.random(n)) * (float(time_span) / n)
    return LookupGrid(times=times, angles=angles)


@dataclass
class ChainState:
    """Complete sampler state for a series of length T."""

    x: np.ndarray  # (T+2,) canonical angles, x[0] = initial state
    K: np.ndarray  # (T+2,) int64 transition wrap counts, K[0] unused
    N: np.ndarray  # (T+1,) int64 observation wrap counts, N[0] unused
    fstar: np.ndarray  # (T+2,) surface values at (t, x_t), fstar[0] unused
    gstar: float  # transition-surface value at (1, x_0)
    dz: np.ndarray  # (n,) surface values on the look-up grid
    beta_f: np.ndarray  # (4,)
    beta_g: np.ndarray  # (4,)
    variances: Variances

    @property
    def T(self):
        return self.x.shape[0] - 2

    def copy(self):
        return ChainState(
            x=self.x.copy(),
            K=self.K.copy(),
            N=self.N.copy(),
            fstar=self.fstar.copy(),
            gstar=float(self.gstar),
            dz=self.dz.copy(),
            beta_f=self.beta_f.copy(),
            beta_g=self.beta_g.copy(),
            variances=self.variances.copy(),
        )


class GridOps:
    """Per-(grid, sigma_g) kernel factorization and transition helpers.

    Rebuild whenever sigma_g changes; the grid itself never moves.  Derived
    vectors that depend on (D_z, beta_g) are passed in explicitly so a stale
    cache cannot survive a Gibbs update of those blocks.
    """

    def __init__(self, grid, sigma_g, jitter=None):
        self.grid = grid
        self.sigma_g = float(sigma_g)
        self.km = gp.build_kernel_matrices(
            grid.times, grid.angles, sigma_g, jitter=jitter
        )
        n = grid.n
        if n:
            eye = np.eye(n)
            self.Ainv = cho_solve((self.km.chol, True), eye)
            # Symmetrize: cho_solve output drifts at roundoff level.
            self.Ainv = 0.5 * (self.Ainv + self.Ainv.T)
            self.G = self.Ainv @ self.km.H
        else:
            self.Ainv = np.zeros((0, 0))
            self.G = np.zeros((0, 4))

    @property
    def n(self):
        return self.grid.n

    def s_vec(self, t, z):
        """Correlation vector between (t, z) and the grid."""
        return gp.kernel(t, z, self.grid.times, self.grid.angles, self.sigma_g)

    def resid_weights(self, dz, beta_g):
        """A^{-1}(D_z - H beta_g); recompute after any D_z or beta_g move."""
        return self.Ainv @ (dz - self.km.H @ beta_g)

    def transition(self, t, z_prev, w, beta_g, variances):
        """Mean and variance of the transition into time t from angle z_prev."""
        h = gp.design_vector(t, z_prev)
        if self.n == 0:
            return float(h @ beta_g), variances.var_eta + variances.var_g
        s = self.s_vec(t, z_prev)
        mu = float(h @ beta_g) + float(s @ w)
        q = float(s @ (self.Ainv @ s))
        var = variances.var_eta + variances.var_g * max(1.0 - q, 0.0)
        return mu, var

    def transition_parts(self, ts, z_prevs, w, beta_g):
        """Vectorized (mean, uncorrected 1 - s'A^{-1}s complement) pairs.

        Returns the transition means and the raw quadratic forms q so a
        caller can assemble variances under several variance candidates.
        """
        ts = np.asarray(ts, dtype=float)
        z_prevs = np.asarray(z_prevs, dtype=float)
        H = gp.design_matrix(ts, z_prevs)
        if self.n == 0:
            mu = H @ beta_g
            return mu, np.zeros_like(mu)
        S = gp.kernel(
            ts[:, None],
            z_prevs[:, None],
            self.grid.times[None, :],
            self.grid.angles[None, :],
            self.sigma_g,
        )
        mu = H @ beta_g + S @ w
        q = np.einsum("ij,jk,ik->i", S, self.Ainv, S)
        return mu, q

    def transition_batch(self, ts, z_prevs, w, beta_g, variances):
        """Vectorized transition moments for aligned time/angle arrays."""
        mu, q = self.transition_parts(ts, z_prevs, w, beta_g)
        var = variances.var_eta + variances.var_g * np.maximum(1.0 - q, 0.0)
        return mu, var


def log_latent_transition(x_t, K_t, mu, var):
    """Joint log density of (x_t, K_t) given the transition moments.

    The pair (angle, wrap count) carries the plain normal density of the
    linear value x_t + 2*pi*K_t; the truncation normalizers of the two
    conditional factors cancel analytically.
    """
    value = x_t + TWO_PI * K_t
    return -0.5 * ((value - mu) ** 2 / var + math.log(2.0 * math.pi * var))


def log_likelihood_obs(y, N, fstar, var_eps, observed=None):
    """Sum of observation log densities over observed times.

    Arrays are t-aligned with index 0 unused for ``y``/``N``; ``fstar`` is
    the full (T+2,) surface array.  ``observed`` masks times 1..T.
    """
    T = y.shape[0] - 1
    resid = y[1:] + TWO_PI * N[1:] - fstar[1 : T + 1]
    terms = -0.5 * (resid**2 / var_eps + LOG_2PI + math.log(var_eps))
    if observed is not None:
        terms = terms[observed[1:]]
    return float(np.sum(terms))


def _mvn_logpdf(x, mean, cov):
    L = np.linalg.cholesky(cov)
    r = solve_triangular(L, x - mean, lower=True)
    return -0.5 * (
        len(x) * LOG_2PI + 2.0 * np.sum(np.log(L.diagonal())) + float(r @ r)
    )


def _invgamma_logpdf(sigma2, alpha, gamma):
    a = 0.5 * alpha
    b = 0.5 * gamma
    return (
        a * math.log(b)
        - math.lgamma(a)
        - (a + 1.0) * math.log(sigma2)
        - b / sigma2
    )


def log_prior(state, prior, include_variances=False):
    """Log prior of (x_0, beta_f, beta_g) and optionally the variances.

    beta_g contributes only through its free coordinates (the pinned ones
    are deterministic).  Variance terms use the normalized inverse gamma
    density in the kernel convention.
    """
    lp = von_mises_logpdf(state.x[0], prior.mu0, prior.effective_kappa0)
    lp += _mvn_logpdf(state.beta_f, prior.beta_f_mean, prior.beta_f_cov)
    free = prior.beta_g_free
    if np.any(free):
        lp += _mvn_logpdf(
            state.beta_g[free],
            prior.beta_g_mean[free],
            prior.beta_g_cov[np.ix_(free, free)],
        )
    if include_variances:
        v = state.variances
        lp += _invgamma_logpdf(v.var_eps, prior.alpha_eps, prior.gamma_eps)
        lp += _invgamma_logpdf(v.var_eta, prior.alpha_eta, prior.gamma_eta)
        lp += _invgamma_logpdf(v.var_f, prior.alpha_f, prior.gamma_f)
        lp += _invgamma_logpdf(v.var_g, prior.alpha_g, prior.gamma_g)
    return lp


def joint_grid_gstar_logpdf(grid_ops, dz, gstar, x0, beta_g, var_g):
    """Joint log density of (D_z, g*(1, x_0)) given x_0, beta_g, sigma_g.

    The (n+1)-point set couples the grid with the point (1, x_0); the
    covariance is sigma_g^2 times the bordered correlation matrix
    [[A, s0], [s0', 1]], evaluated through the cached grid factor.
    """
    h0 = gp.design_vector(1.0, x0)
    w_resid = float(gstar - h0 @ beta_g)
    n = grid_ops.n
    if n == 0:
        return -0.5 * (LOG_2PI + math.log(var_g) + w_resid**2 / var_g)
    L = grid_ops.km.chol
    s0 = grid_ops.s_vec(1.0, x0)
    u = dz - grid_ops.km.H @ beta_g
    v = solve_triangular(L, s0, lower=True)
    bu = solve_triangular(L, u, lower=True)
    d2 = 1.0 - float(v @ v)
    if d2 <= 0.0:
        raise NumericalSingularityError(
            "initial point is numerically inside the look-up grid"
        )
    quad = float(bu @ bu) + (w_resid - float(v @ bu)) ** 2 / d2
    logdet = grid_ops.km.logdet + math.log(d2)
    return -0.5 * (
        (n + 1) * (LOG_2PI + math.log(var_g)) + logdet + quad / var_g
    )


def _draw_mvn(rng, mean, cov):
    L = np.linalg.cholesky(cov)
    return mean + L @ rng.standard_normal(len(mean))


def sample_prior_state(rng, T, grid, prior, variances=None, sample_variances=False):
    """One exact draw of the full state from the hierarchical prior.

    Draw order is fixed (variances, beta_f, beta_g, x_0, g*, D_z, latent
    path, surface values) so that equal seeds give equal states.
    """
    if sample_variances:
        draws = []
        for alpha, gamma_ in (
            (prior.alpha_f, prior.gamma_f),
            (prior.alpha_eps, prior.gamma_eps),
            (prior.alpha_g, prior.gamma_g),
            (prior.alpha_eta, prior.gamma_eta),
        ):
            var = 1.0 / rng.gamma(0.5 * alpha, 2.0 / gamma_)
            draws.append(math.sqrt(var))
        variances = Variances(*draws)
    elif variances is None:
        raise ValueError("variances required unless sample_variances=True")

    beta_f = _draw_mvn(rng, prior.beta_f_mean, prior.beta_f_cov)
    beta_g = prior.beta_g_mean.copy()
    free = prior.beta_g_free
    if np.any(free):
        beta_g[free] = _draw_mvn(
            rng, prior.beta_g_mean[free], prior.beta_g_cov[np.ix_(free, free)]
        )

    x = np.zeros(T + 2)
    K = np.zeros(T + 2, dtype=np.int64)
    N = np.zeros(T + 1, dtype=np.int64)
    x[0] = von_mises_sample(rng, prior.mu0, prior.effective_kappa0)

    go = GridOps(grid, variances.sigma_g)
    h0 = gp.design_vector(1.0, x[0])
    gstar = float(h0 @ beta_g) + variances.sigma_g * rng.standard_normal()

    n = grid.n
    if n:
        s0 = go.s_vec(1.0, x[0])
        mean_dz = go.km.H @ beta_g + s0 * (gstar - float(h0 @ beta_g))
        cov_dz = variances.var_g * (
            go.km.A + go.km.jitter * np.eye(n) - np.outer(s0, s0)
        )
        try:
            dz = _draw_mvn(rng, mean_dz, cov_dz)
        except np.linalg.LinAlgError as exc:
            raise NumericalSingularityError(
                "conditional grid covariance not positive definite"
            ) from exc
    else:
        dz = np.empty(0)

    w = go.resid_weights(dz, beta_g)
    lin = gstar + variances.sigma_eta * rng.standard_normal()
    x[1], K[1] = split_turns(lin)
    for t in range(2, T + 2):
        mu, var = go.transition(float(t), x[t - 1], w, beta_g, variances)
        lin = mu + math.sqrt(var) * rng.standard_normal()
        x[t], K[t] = split_turns(lin)

    km_f = gp.build_kernel_matrices(
        np.arange(1.0, T + 2.0), x[1:], variances.sigma_f
    )
    fstar = np.zeros(T + 2)
    fstar[1:] = gp.gp_prior_draw(rng, km_f, beta_f, variances.var_f)

    return ChainState(
        x=x,
        K=K,
        N=N,
        fstar=fstar,
        gstar=gstar,
        dz=dz,
        beta_f=beta_f,
        beta_g=beta_g,
        variances=variances,
    )


def initial_chain_state(rng, T, grid, prior, variances=None, sample_variances=False):
    """Overdispersed starting state for the sampler.

    Unlike :func:`sample_prior_state` the latent path is iid von Mises
    around the prior location rather than a sequential draw, all wrap
    counts start at zero, and both coefficient vectors sit at their prior
    means.  The surface values and grid values are exact conditional prior
    draws given that path so the state is internally consistent.
    """
    if sample_variances:
        draws = []
        for alpha, gamma_ in (
            (prior.alpha_f, prior.gamma_f),
            (prior.alpha_eps, prior.gamma_eps),
            (prior.alpha_g, prior.gamma_g),
            (prior.alpha_eta, prior.gamma_eta),
        ):
            var = 1.0 / rng.gamma(0.5 * alpha, 2.0 / gamma_)
            draws.append(math.sqrt(var))
        variances = Variances(*draws)
    elif variances is None:
        raise ValueError("variances required unless sample_variances=True")

    beta_f = prior.beta_f_mean.copy()
    beta_g = prior.beta_g_mean.copy()

    x = np.zeros(T + 2)
    K = np.zeros(T + 2, dtype=np.int64)
    N = np.zeros(T + 1, dtype=np.int64)
    for t in range(T + 2):
        x[t] = von_mises_sample(rng, prior.mu0, prior.effective_kappa0)

    go = GridOps(grid, variances.sigma_g)
    h0 = gp.design_vector(1.0, x[0])
    gstar = float(h0 @ beta_g) + variances.sigma_g * rng.standard_normal()

    n = grid.n
    if n:
        s0 = go.s_vec(1.0, x[0])
        mean_dz = go.km.H @ beta_g + s0 * (gstar - float(h0 @ beta_g))
        cov_dz = variances.var_g * (
            go.km.A + go.km.jitter * np.eye(n) - np.outer(s0, s0)
        )
        try:
            dz = _draw_mvn(rng, mean_dz, cov_dz)
        except np.linalg.LinAlgError as exc:
            raise NumericalSingularityError(
                "conditional grid covariance not positive definite"
            ) from exc
    else:
        dz = np.empty(0)

    km_f = gp.build_kernel_matrices(
        np.arange(1.0, T + 2.0), x[1:], variances.sigma_f
    )
    fstar = np.zeros(T + 2)
    fstar[1:] = gp.gp_prior_draw(rng, km_f, beta_f, variances.var_f)

    return ChainState(
        x=x,
        K=K,
        N=N,
        fstar=fstar,
        gstar=gstar,
        dz=dz,
        beta_f=beta_f,
        beta_g=beta_g,
        variances=variances,
    )


def sample_observations(rng, state):
    """Draw (y, N) jointly given the surface values; t-aligned arrays."""
    T = state.T
    y = np.zeros(T + 1)
    lin = state.fstar[1 : T + 1] + state.variances.sigma_eps * rng.standard_normal(T)
    y[1:], counts = split_turns(lin)
    N = np.zeros(T + 1, dtype=np.int64)
    N[1:] = counts
    return y, N

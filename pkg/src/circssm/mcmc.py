"""Metropolis-within-Gibbs sampler for the circular state-space model.

One sweep visits, in a fixed order: the latent path x_1..x_{T+1}, the
transition wrap counts, the observation wrap counts, the observation-surface
values (length-T block, then the forecast point), the transition-surface
value g* at the initial state, the look-up grid values, both coefficient
vectors, the initial angle, and finally the four variances when they are
being sampled.  All randomness flows through one generator in a fixed call
order, so a (seed, backend) pair pins the chain exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import gp
from ._hot import backend_name, get_backend
from .circular import TWO_PI, von_mises_logpdf, von_mises_sample
from .errors import NumericalSingularityError
from .model import (
    GridOps,
    PriorConfig,
    Variances,
    initial_chain_state,
    joint_grid_gstar_logpdf,
)
from .posterior import PosteriorSamples

LOG_2PI = math.log(2.0 * math.pi)

__all__ = [
    "ProposalConfig",
    "ChainConfig",
    "AcceptanceLog",
    "GibbsSampler",
    "run_chain",
    "sample_columns",
]


@dataclass
class ProposalConfig:
    """Tuning constants of every Metropolis family.

    The latent-path proposal perturbs each site by a von Mises increment
    whose concentration mixes a tight and a diffuse component
    (``mix_weight_wide`` is the probability of the diffuse one); wrap-count
    proposals add a rounded normal step and stay within ``k_bound`` turns;
    variance proposals are random walks on the log variance with one shared
    step size.
    """

    kappa_x_narrow: float = 3.0
    kappa_x_wide: float = 0.5
    mix_weight_wide: float = 0.5
    kappa_x0: float = 3.0
    wrap_rw_sd: float = 1.0
    k_bound: int = 50
    var_rw_logstep: float = 0.1


@dataclass
class ChainConfig:
    """Default run lengths for production runs; tests pass much smaller ones."""

    n_iter: int = 250_000
    burn_in: int = 200_000
    thin: int = 1
    seed: int = 0
    sample_variances: bool = False


class AcceptanceLog:
    """Accepted/attempted counters per proposal family."""

    WARN_FAMILIES = ("latent_path", "x0", "sigma_f", "sigma_eta", "sigma_g")

    def __init__(self):
        self.counts = {}

    def add(self, family, accepted, attempted):
        acc, att = self.counts.get(family, (0, 0))
        self.counts[family] = (acc + int(accepted), att + int(attempted))

    def rate(self, family):
        acc, att = self.counts.get(family, (0, 0))
        return acc / att if att else float("nan")

    def rates(self):
        return {fam: self.rate(fam) for fam in self.counts}

    def warnings(self, lo=0.05, hi=0.95):
        """Flag continuous-proposal families with extreme acceptance rates."""
        out = []
        for fam in self.WARN_FAMILIES:
            _, att = self.counts.get(fam, (0, 0))
            if not att:
                continue
            r = self.rate(fam)
            if r < lo or r > hi:
                out.append(
                    f"acceptance rate {r:.3f} for {fam} outside "
                    f"[{lo:.2f}, {hi:.2f}]; adjust its proposal scale"
                )
        return out


def _chol_or_raise(mat, what):
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalSingularityError(f"{what} not positive definite") from exc


def _draw_gaussian_from_precision(rng, Q, r, what):
    """Sample N(Q^{-1} r, Q^{-1}) through one Cholesky of Q."""
    L = _chol_or_raise(Q, what)
    mean = cho_solve((L, True), r)
    xi = rng.standard_normal(len(r))
    return mean + solve_triangular(L, xi, lower=True, trans="T")


class GibbsSampler:
    """Stateful sampler bound to one observed series and look-up grid.

    ``y`` holds the observed angles (length T, radians in [0, 2*pi));
    ``observed`` optionally masks held-out times.  By default the four
    variances stay fixed at the supplied plug-in values; pass
    ``sample_variances=True`` for the fully Bayesian variant, in which case
    ``variances=None`` initializes them from their priors.  The fully
    Bayesian variances rest on diffuse scale priors that leave the
    posterior close to improper, so treat those draws with care.
    """

    def __init__(
        self,
        y,
        grid,
        prior=None,
        variances=None,
        proposals=None,
        observed=None,
        sample_variances=False,
        backend="auto",
        jitter=None,
        seed=0,
        rng=None,
    ):
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.shape[0] < 1:
            raise ValueError("y must be a nonempty 1-d array")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        if np.any(y < 0.0) or np.any(y >= TWO_PI):
            raise ValueError("y must lie in [0, 2*pi); convert units first")
        T = y.shape[0]
        self.T = T
        self.y = np.zeros(T + 1)
        self.y[1:] = y
        if observed is None:
            observed = np.ones(T, dtype=bool)
        observed = np.asarray(observed, dtype=bool)
        if observed.shape != (T,):
            raise ValueError("observed mask must match the series length")
        self.observed = np.zeros(T + 1, dtype=bool)
        self.observed[1:] = observed

        self.grid = grid
        self.prior = prior if prior is not None else PriorConfig()
        self.props = proposals if proposals is not None else ProposalConfig()
        if variances is None and not sample_variances:
            raise ValueError("fixed-variance runs need explicit variances")
        self.sample_variances = bool(sample_variances)
        self.jitter = jitter
        self._jitter_arg = -1.0 if jitter is None else float(jitter)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self._backend = get_backend(backend)
        self.backend = backend_name(self._backend)
        self.accept = AcceptanceLog()

        self._times_f = np.arange(1.0, T + 2.0)
        dt = self._times_f[:, None] - self._times_f[None, :]
        self._dtf2 = dt**2
        self._grid_rows = np.arange(T + 2, dtype=float)

        Vf = self.prior.beta_f_cov
        Lf = _chol_or_raise(Vf, "surface coefficient prior covariance")
        self._Vf_inv = cho_solve((Lf, True), np.eye(4))
        self._Vf_inv_m = self._Vf_inv @ self.prior.beta_f_mean
        free = self.prior.beta_g_free
        self._g_free = free
        if np.any(free):
            Vg = self.prior.beta_g_cov[np.ix_(free, free)]
            Lg = _chol_or_raise(Vg, "transition coefficient prior covariance")
            self._Vg_inv = cho_solve((Lg, True), np.eye(int(free.sum())))
            self._Vg_inv_m = self._Vg_inv @ self.prior.beta_g_mean[free]

        self.state = initial_chain_state(
            self.rng,
            T,
            grid,
            self.prior,
            variances=None if variances is None else variances.copy(),
            sample_variances=variances is None,
        )
        self.go = GridOps(grid, self.state.variances.sigma_g, jitter=jitter)

    # -- helpers ---------------------------------------------------------

    def _xstar(self):
        """Linear latent values x_t + 2*pi*K_t, t-aligned (entry 0 unused)."""
        return self.state.x + TWO_PI * self.state.K

    def _ystar(self):
        """Linear observed values over t = 1..T."""
        return self.y[1:] + TWO_PI * self.state.N[1:]

    def _weights(self):
        return self.go.resid_weights(self.state.dz, self.state.beta_g)

    def _trans_moments(self):
        """Transition moments into t = 1..T+1 as padded (T+2,) arrays."""
        st = self.state
        mus = np.zeros(self.T + 2)
        vars_ = np.ones(self.T + 2)
        mus[1] = st.gstar
        vars_[1] = st.variances.var_eta
        if self.T >= 1:
            ts = np.arange(2.0, self.T + 2.0)
            w = self._weights()
            mu, var = self.go.transition_batch(
                ts, st.x[1 : self.T + 1], w, st.beta_g, st.variances
            )
            mus[2:] = mu
            vars_[2:] = var
        return mus, vars_

    # -- updates ---------------------------------------------------------

    def _update_latent_path(self):
        st = self.state
        T = self.T
        pr = self.props
        v = st.variances
        wide = self.rng.random(T + 1) < pr.mix_weight_wide
        kappa = np.where(wide, pr.kappa_x_wide, pr.kappa_x_narrow)
        incr = self.rng.vonmises(0.0, kappa)
        logu = np.log(self.rng.random(T + 1))
        Ef = np.exp(-(v.sigma_f**4) * self._dtf2)
        Eg = np.exp(
            -(v.sigma_g**4)
            * (self._grid_rows[:, None] - self.grid.times[None, :]) ** 2
        )
        acc = self._backend.latent_scan(
            st.x,
            st.K,
            st.fstar,
            Ef,
            st.beta_f,
            v.var_f,
            st.gstar,
            v.var_eta,
            v.var_g,
            st.beta_g,
            self.grid.angles,
            Eg,
            self.go.Ainv,
            self._weights(),
            incr,
            logu,
            self._jitter_arg,
        )
        self.accept.add("latent_path", acc, T + 1)

    def _update_latent_wraps(self):
        st = self.state
        T = self.T
        steps = np.rint(
            self.rng.standard_normal(T + 1) * self.props.wrap_rw_sd
        ).astype(np.int64)
        logu = np.log(self.rng.random(T + 1))
        prop = st.K[1:] + steps
        mus, vars_ = self._trans_moments()
        v_cur = st.x[1:] + TWO_PI * st.K[1:] - mus[1:]
        v_prop = st.x[1:] + TWO_PI * prop - mus[1:]
        delta = -0.5 * (v_prop**2 - v_cur**2) / vars_[1:]
        ok = (logu < delta) & (np.abs(prop) <= self.props.k_bound)
        st.K[1:][ok] = prop[ok]
        self.accept.add("latent_wraps", int(ok.sum()), T + 1)

    def _update_obs_wraps(self):
        st = self.state
        idx = np.flatnonzero(self.observed)
        m = idx.size
        if m == 0:
            return
        steps = np.rint(
            self.rng.standard_normal(m) * self.props.wrap_rw_sd
        ).astype(np.int64)
        logu = np.log(self.rng.random(m))
        prop = st.N[idx] + steps
        f_vals = st.fstar[idx]
        v_cur = self.y[idx] + TWO_PI * st.N[idx] - f_vals
        v_prop = self.y[idx] + TWO_PI * prop - f_vals
        delta = -0.5 * (v_prop**2 - v_cur**2) / st.variances.var_eps
        ok = (logu < delta) & (np.abs(prop) <= self.props.k_bound)
        st.N[idx[ok]] = prop[ok]
        self.accept.add("obs_wraps", int(ok.sum()), m)

    def _fstar_block_system(self):
        """Precision system (Q, r) of the length-T surface block, plus the
        kernel matrices it conditions on."""
        st = self.state
        T = self.T
        v = st.variances
        km = gp.build_kernel_matrices(
            np.arange(1.0, T + 1.0), st.x[1 : T + 1], v.sigma_f, jitter=self.jitter
        )
        Ainv = cho_solve((km.chol, True), np.eye(T))
        Ainv = 0.5 * (Ainv + Ainv.T)
        obs_prec = self.observed[1:].astype(float) / v.var_eps
        Q = Ainv / v.var_f + np.diag(obs_prec)
        r = Ainv @ (km.H @ st.beta_f) / v.var_f + obs_prec * self._ystar()
        return Q, r, km

    def _update_fstar(self):
        """Draw the length-T surface block with the forecast point
        marginalized out, then the forecast point from its conditional."""
        st = self.state
        T = self.T
        v = st.variances
        Q, r, km = self._fstar_block_system()
        st.fstar[1 : T + 1] = _draw_gaussian_from_precision(
            self.rng, Q, r, "observation-surface posterior precision"
        )
        cond = gp.gp_conditional(
            float(T + 1), st.x[T + 1], km, st.fstar[1 : T + 1], st.beta_f, v.var_f
        )
        st.fstar[T + 1] = cond.mean + math.sqrt(
            cond.variance
        ) * self.rng.standard_normal()

    def _gstar_moments(self):
        """Posterior mean/variance of g* given grid values and x*_1."""
        st = self.state
        v = st.variances
        cond = gp.gp_conditional(
            1.0, st.x[0], self.go.km, st.dz, st.beta_g, v.var_g
        )
        xstar1 = st.x[1] + TWO_PI * st.K[1]
        if cond.variance <= 0.0:
            return float(cond.mean), 0.0
        post_var = 1.0 / (1.0 / cond.variance + 1.0 / v.var_eta)
        post_mean = post_var * (
            cond.mean / cond.variance + xstar1 / v.var_eta
        )
        return post_mean, post_var

    def _update_gstar(self):
        xi = self.rng.standard_normal()
        mean, var = self._gstar_moments()
        self.state.gstar = mean + math.sqrt(var) * xi

    def _dz_system(self):
        """Precision system (Q, r) of the grid values D_z."""
        st = self.state
        n = self.grid.n
        T = self.T
        v = st.variances
        go = self.go
        h0 = gp.design_vector(1.0, st.x[0])
        s0 = go.s_vec(1.0, st.x[0])
        A_j = go.km.A + go.km.jitter * np.eye(n)
        Sigma = A_j - np.outer(s0, s0)
        Ls = _chol_or_raise(Sigma, "grid covariance given the initial point")
        P0 = cho_solve((Ls, True), np.eye(n)) / v.var_g
        P0 = 0.5 * (P0 + P0.T)
        mu0 = go.km.H @ st.beta_g + s0 * (st.gstar - float(h0 @ st.beta_g))

        ts = np.arange(2.0, T + 2.0)
        zprev = st.x[1 : T + 1]
        S = gp.kernel(
            ts[:, None],
            zprev[:, None],
            self.grid.times[None, :],
            self.grid.angles[None, :],
            v.sigma_g,
        )
        B = S @ go.Ainv
        Hrows = gp.design_matrix(ts, zprev)
        q = np.einsum("ij,ij->i", B, S)
        vars_t = v.var_eta + v.var_g * np.maximum(1.0 - q, 0.0)
        xs = self._xstar()
        e = xs[2:] - Hrows @ st.beta_g + B @ (go.km.H @ st.beta_g)
        Bw = B / vars_t[:, None]
        Q = P0 + B.T @ Bw
        r = P0 @ mu0 + Bw.T @ e
        return Q, r

    def _update_dz(self):
        if self.grid.n == 0:
            return
        Q, r = self._dz_system()
        self.state.dz = _draw_gaussian_from_precision(
            self.rng, Q, r, "grid-value posterior precision"
        )

    def _beta_f_system(self):
        """Precision system (Q, r) of the surface coefficients."""
        st = self.state
        v = st.variances
        km = gp.build_kernel_matrices(
            self._times_f, st.x[1:], v.sigma_f, jitter=self.jitter
        )
        AinvH = cho_solve((km.chol, True), km.H)
        Q = self._Vf_inv + km.H.T @ AinvH / v.var_f
        r = self._Vf_inv_m + AinvH.T @ st.fstar[1:] / v.var_f
        return Q, r

    def _update_beta_f(self):
        Q, r = self._beta_f_system()
        self.state.beta_f = _draw_gaussian_from_precision(
            self.rng, Q, r, "surface coefficient posterior precision"
        )

    def _beta_g_system(self):
        """Precision system (Q, r) of the free transition coefficients."""
        st = self.state
        free = self._g_free
        T = self.T
        n = self.grid.n
        v = st.variances
        go = self.go
        h0 = gp.design_vector(1.0, st.x[0])
        s0 = go.s_vec(1.0, st.x[0])

        # Joint (D_z, g*) block: design M, value u, covariance var_g * C.
        C = np.empty((n + 1, n + 1))
        C[:n, :n] = go.km.A + go.km.jitter * np.eye(n)
        C[:n, n] = s0
        C[n, :n] = s0
        C[n, n] = 1.0
        M = np.vstack([go.km.H, h0])
        u = np.append(st.dz, st.gstar)
        Lc = _chol_or_raise(C, "bordered grid correlation matrix")
        Mw = solve_triangular(Lc, M, lower=True) / v.sigma_g
        uw = solve_triangular(Lc, u, lower=True) / v.sigma_g

        # Transition rows t = 2..T+1, already whitened by their own sd.
        ts = np.arange(2.0, T + 2.0)
        zprev = st.x[1 : T + 1]
        S = gp.kernel(
            ts[:, None],
            zprev[:, None],
            self.grid.times[None, :],
            self.grid.angles[None, :],
            v.sigma_g,
        )
        B = S @ go.Ainv
        Hrows = gp.design_matrix(ts, zprev)
        q = np.einsum("ij,ij->i", B, S)
        sd_t = np.sqrt(v.var_eta + v.var_g * np.maximum(1.0 - q, 0.0))
        xs = self._xstar()
        R = (Hrows - B @ go.km.H) / sd_t[:, None]
        o = (xs[2:] - B @ st.dz) / sd_t

        X = np.vstack([Mw, R])
        val = np.concatenate([uw, o])
        pinned = ~free
        resid = val - X[:, pinned] @ st.beta_g[pinned]
        Xf = X[:, free]
        Q = self._Vg_inv + Xf.T @ Xf
        r = self._Vg_inv_m + Xf.T @ resid
        return Q, r

    def _update_beta_g(self):
        free = self._g_free
        if not np.any(free):
            return
        Q, r = self._beta_g_system()
        draw = _draw_gaussian_from_precision(
            self.rng, Q, r, "transition coefficient posterior precision"
        )
        beta = self.prior.beta_g_mean.copy()
        beta[free] = draw
        self.state.beta_g = beta

    def _update_x0(self):
        st = self.state
        v = st.variances
        prop = von_mises_sample(self.rng, st.x[0], self.props.kappa_x0)
        logu = math.log(self.rng.random())

        def target(x0):
            lp = von_mises_logpdf(x0, self.prior.mu0, self.prior.effective_kappa0)
            lp += joint_grid_gstar_logpdf(
                self.go, st.dz, st.gstar, x0, st.beta_g, v.var_g
            )
            return lp

        cur = target(st.x[0])
        try:
            delta = target(prop) - cur
        except NumericalSingularityError:
            delta = -math.inf
        ok = logu < delta
        if ok:
            st.x[0] = prop
        self.accept.add("x0", int(ok), 1)

    def _update_sigma_eps(self):
        st = self.state
        resid = self._ystar() - st.fstar[1 : self.T + 1]
        resid = resid[self.observed[1:]]
        shape = 0.5 * (self.prior.alpha_eps + resid.size)
        rate = 0.5 * (self.prior.gamma_eps + float(resid @ resid))
        var = 1.0 / self.rng.gamma(shape, 1.0 / rate)
        st.variances.sigma_eps = math.sqrt(var)

    def _ig_kernel(self, var, alpha, gamma):
        return -0.5 * (alpha + 2.0) * math.log(var) - 0.5 * gamma / var

    def _update_sigma_f(self):
        st = self.state
        pr = self.prior
        cur = st.variances.var_f
        prop = cur * math.exp(
            self.props.var_rw_logstep * self.rng.standard_normal()
        )
        logu = math.log(self.rng.random())

        def target(var):
            km = gp.build_kernel_matrices(
                self._times_f, st.x[1:], math.sqrt(var), jitter=self.jitter
            )
            return gp.gp_logpdf(st.fstar[1:], km, st.beta_f, var) + self._ig_kernel(
                var, pr.alpha_f, pr.gamma_f
            )

        lp_cur = target(cur)
        try:
            delta = target(prop) - lp_cur + math.log(prop) - math.log(cur)
        except NumericalSingularityError:
            delta = -math.inf
        ok = logu < delta
        if ok:
            st.variances.sigma_f = math.sqrt(prop)
        self.accept.add("sigma_f", int(ok), 1)

    def _update_sigma_eta(self):
        st = self.state
        pr = self.prior
        T = self.T
        cur = st.variances.var_eta
        prop = cur * math.exp(
            self.props.var_rw_logstep * self.rng.standard_normal()
        )
        logu = math.log(self.rng.random())
        xs = self._xstar()
        ts = np.arange(2.0, T + 2.0)
        mu, q = self.go.transition_parts(
            ts, st.x[1 : T + 1], self._weights(), st.beta_g
        )
        gp_part = st.variances.var_g * np.maximum(1.0 - q, 0.0)

        def target(var):
            lp = self._ig_kernel(var, pr.alpha_eta, pr.gamma_eta)
            lp += -0.5 * ((xs[1] - st.gstar) ** 2 / var + math.log(var))
            vart = var + gp_part
            lp += float(
                np.sum(-0.5 * ((xs[2:] - mu) ** 2 / vart + np.log(vart)))
            )
            return lp

        delta = target(prop) - target(cur) + math.log(prop) - math.log(cur)
        ok = logu < delta
        if ok:
            st.variances.sigma_eta = math.sqrt(prop)
        self.accept.add("sigma_eta", int(ok), 1)

    def _update_sigma_g(self):
        st = self.state
        pr = self.prior
        T = self.T
        cur = st.variances.var_g
        prop = cur * math.exp(
            self.props.var_rw_logstep * self.rng.standard_normal()
        )
        logu = math.log(self.rng.random())
        xs = self._xstar()
        ts = np.arange(2.0, T + 2.0)

        def target(var):
            go = (
                self.go
                if var == cur
                else GridOps(self.grid, math.sqrt(var), jitter=self.jitter)
            )
            w = go.resid_weights(st.dz, st.beta_g)
            mu, q = go.transition_parts(ts, st.x[1 : T + 1], w, st.beta_g)
            vart = st.variances.var_eta + var * np.maximum(1.0 - q, 0.0)
            lp = float(
                np.sum(-0.5 * ((xs[2:] - mu) ** 2 / vart + np.log(vart)))
            )
            lp += joint_grid_gstar_logpdf(
                go, st.dz, st.gstar, st.x[0], st.beta_g, var
            )
            lp += self._ig_kernel(var, pr.alpha_g, pr.gamma_g)
            return lp, go

        lp_cur, _ = target(cur)
        try:
            lp_prop, go_prop = target(prop)
            delta = lp_prop - lp_cur + math.log(prop) - math.log(cur)
        except NumericalSingularityError:
            delta = -math.inf
            go_prop = None
        ok = logu < delta
        if ok:
            st.variances.sigma_g = math.sqrt(prop)
            self.go = go_prop
        self.accept.add("sigma_g", int(ok), 1)

    # -- driver ----------------------------------------------------------

    def sweep(self):
        """One full scan over every block in the fixed update order."""
        self._update_latent_path()
        self._update_latent_wraps()
        self._update_obs_wraps()
        self._update_fstar()
        self._update_gstar()
        self._update_dz()
        self._update_beta_f()
        self._update_beta_g()
        self._update_x0()
        if self.sample_variances:
            self._update_sigma_eps()
            self._update_sigma_f()
            self._update_sigma_eta()
            self._update_sigma_g()

    def run(self, n_iter, burn_in=0, thin=1, store_dz=False, store_fstar=False):
        """Run the chain and collect kept draws into a PosteriorSamples."""
        if n_iter <= burn_in:
            raise ValueError("n_iter must exceed burn_in")
        if thin < 1:
            raise ValueError("thin must be at least 1")
        names = sample_columns(
            self.T, self.grid.n if store_dz else 0, store_fstar
        )
        kept = range(burn_in, n_iter, thin)
        draws = np.empty((len(kept), len(names)))
        row = 0
        for it in range(n_iter):
            try:
                self.sweep()
            except NumericalSingularityError as exc:
                raise NumericalSingularityError(
                    f"sweep {it}: {exc}"
                ) from exc
            if it >= burn_in and (it - burn_in) % thin == 0:
                draws[row] = self._snapshot(store_dz, store_fstar)
                row += 1
        meta = {
            "model": "circular state-space posterior draws",
            "T": self.T,
            "grid_size": self.grid.n,
            "n_iter": n_iter,
            "burn_in": burn_in,
            "thin": thin,
            "backend": self.backend,
            "sample_variances": self.sample_variances,
            "acceptance": {k: round(v, 6) for k, v in self.accept.rates().items()},
        }
        return PosteriorSamples(names=names, draws=draws, meta=meta)

    def _snapshot(self, store_dz, store_fstar):
        st = self.state
        v = st.variances
        parts = [
            st.x,
            st.beta_f,
            st.beta_g,
            [st.fstar[self.T + 1], st.gstar, v.var_f, v.var_eps, v.var_g, v.var_eta],
        ]
        if store_dz:
            parts.append(st.dz)
        if store_fstar:
            parts.append(st.fstar[1 : self.T + 1])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def sample_columns(T, n_dz=0, store_fstar=False):
    """Column names of the draw matrix, in storage order."""
    names = [f"x_{t}" for t in range(T + 2)]
    names += [f"beta_f_{i}" for i in range(1, 5)]
    names += [f"beta_g_{i}" for i in range(1, 5)]
    names += ["fstar_T1", "gstar", "sigma2_f", "sigma2_eps", "sigma2_g", "sigma2_eta"]
    names += [f"Dz_{i}" for i in range(1, n_dz + 1)]
    if store_fstar:
        names += [f"fstar_{t}" for t in range(1, T + 1)]
    return names


def run_chain(
    y,
    grid,
    n_iter,
    burn_in=0,
    thin=1,
    seed=0,
    prior=None,
    variances=None,
    sample_variances=False,
    proposals=None,
    observed=None,
    backend="auto",
    jitter=None,
    store_dz=False,
    store_fstar=False,
):
    """Convenience wrapper: build a sampler, run it, return the draws."""
    sampler = GibbsSampler(
        y,
        grid,
        prior=prior,
        variances=variances,
        proposals=proposals,
        observed=observed,
        sample_variances=sample_variances,
        backend=backend,
        jitter=jitter,
        seed=seed,
    )
    samples = sampler.run(
        n_iter,
        burn_in=burn_in,
        thin=thin,
        store_dz=store_dz,
        store_fstar=store_fstar,
    )
    samples.meta["seed"] = seed
    samples.meta["acceptance_warnings"] = sampler.accept.warnings()
    return samples

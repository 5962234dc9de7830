import math

import numpy as np
import pytest

from circssm.circular import TWO_PI, von_mises_sample
from circssm.errors import NumericalSingularityError
from circssm.gp import design_vector
from circssm.model import (
    GridOps,
    LookupGrid,
    PriorConfig,
    Variances,
    generate_grid,
    joint_grid_gstar_logpdf,
    log_latent_transition,
    log_likelihood_obs,
    log_prior,
    sample_observations,
    sample_prior_state,
    initial_chain_state,
)
from tests._oracles import (
    bordered_joint_logpdf,
    normal_logpdf,
    transition_moments_direct,
)


def small_grid(seed=0, n=4, span=5.0):
    return generate_grid(np.random.default_rng(seed), n, span)


class TestPriorConfig:
    def test_defaults(self):
        p = PriorConfig()
        assert p.mu0 == math.pi
        assert p.effective_kappa0 == 3.0
        np.testing.assert_array_equal(p.beta_g_free, [True, True, False, False])

    def test_variance_reading_inverts_kappa(self):
        p = PriorConfig(kappa0=3.0, x0_prior_as_variance=True)
        assert p.effective_kappa0 == pytest.approx(1.0 / 3.0)

    def test_bad_mean_length_rejected(self):
        with pytest.raises(ValueError):
            PriorConfig(beta_f_mean=np.zeros(3))

    def test_nonpositive_concentration_rejected(self):
        with pytest.raises(ValueError):
            PriorConfig(kappa0=0.0)

    def test_fully_pinned_beta_g_allowed(self):
        p = PriorConfig(beta_g_cov=np.zeros((4, 4)))
        assert not np.any(p.beta_g_free)


class TestVariances:
    def test_squares_exposed(self):
        v = Variances(sigma_f=2.0, sigma_eps=0.5, sigma_g=3.0, sigma_eta=0.1)
        assert v.var_f == 4.0
        assert v.var_eps == 0.25
        assert v.var_g == 9.0
        assert v.var_eta == pytest.approx(0.01)

    def test_array_roundtrip_preserves_order(self):
        v = Variances(0.9, 0.8, 0.7, 0.6)
        arr = v.as_array()
        np.testing.assert_array_equal(arr, [0.9, 0.8, 0.7, 0.6])
        v2 = Variances.from_array(arr)
        assert v2 == v

    def test_copy_is_independent(self):
        v = Variances()
        c = v.copy()
        c.sigma_f = 2.0
        assert v.sigma_f == 1.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Variances(sigma_eps=0.0)
        with pytest.raises(ValueError):
            Variances(sigma_g=-1.0)


class TestGenerateGrid:
    def test_stratified_in_both_coordinates(self):
        grid = generate_grid(np.random.default_rng(5), 8, 12.0)
        assert grid.n == 8
        for i in range(8):
            assert TWO_PI * i / 8 <= grid.angles[i] < TWO_PI * (i + 1) / 8
            assert 12.0 * i / 8 <= grid.times[i] < 12.0 * (i + 1) / 8

    def test_deterministic_under_seed(self):
        a = generate_grid(np.random.default_rng(6), 5, 7.0)
        b = generate_grid(np.random.default_rng(6), 5, 7.0)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.angles, b.angles)

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="at least 1"):
            generate_grid(np.random.default_rng(0), 0, 5.0)

    def test_lookup_grid_shape_validation(self):
        with pytest.raises(ValueError):
            LookupGrid(times=np.zeros(3), angles=np.zeros(4))


class TestGridOps:
    def test_transition_matches_direct_formula(self):
        rng = np.random.default_rng(7)
        grid = small_grid(1, n=4)
        var = Variances(sigma_f=0.8, sigma_eps=0.4, sigma_g=0.9, sigma_eta=0.5)
        go = GridOps(grid, var.sigma_g)
        beta_g = np.array([0.4, 0.2, 1.0, 1.0])
        for _ in range(50):
            dz = rng.normal(0.0, 1.0, 4)
            z_prev = float(rng.uniform(0.0, TWO_PI))
            t = float(rng.integers(2, 9))
            w = go.resid_weights(dz, beta_g)
            mu, v = go.transition(t, z_prev, w, beta_g, var)
            want_mu, want_v = transition_moments_direct(
                t, z_prev, grid.times, grid.angles, dz, beta_g,
                var.var_eta, var.var_g, var.sigma_g, jitter=go.km.jitter,
            )
            assert mu == pytest.approx(want_mu, abs=1e-9)
            assert v == pytest.approx(want_v, abs=1e-9)

    def test_batch_agrees_with_scalar_transition(self):
        rng = np.random.default_rng(8)
        grid = small_grid(2, n=5)
        var = Variances(sigma_f=0.8, sigma_eps=0.4, sigma_g=0.7, sigma_eta=0.3)
        go = GridOps(grid, var.sigma_g)
        beta_g = np.array([0.1, 0.3, 1.0, 1.0])
        dz = rng.normal(0.0, 1.0, 5)
        w = go.resid_weights(dz, beta_g)
        ts = np.array([2.0, 3.0, 4.0])
        zs = rng.uniform(0.0, TWO_PI, 3)
        mu_b, var_b = go.transition_batch(ts, zs, w, beta_g, var)
        for i in range(3):
            mu, v = go.transition(ts[i], zs[i], w, beta_g, var)
            assert mu_b[i] == pytest.approx(mu, abs=1e-12)
            assert var_b[i] == pytest.approx(v, abs=1e-12)

    def test_empty_grid_falls_back_to_parametric_mean(self):
        grid = LookupGrid(times=np.empty(0), angles=np.empty(0))
        var = Variances(sigma_g=0.7, sigma_eta=0.3)
        go = GridOps(grid, var.sigma_g)
        beta_g = np.array([0.5, 0.1, 1.0, 1.0])
        mu, v = go.transition(3.0, 1.2, np.empty(0), beta_g, var)
        assert mu == pytest.approx(float(design_vector(3.0, 1.2) @ beta_g))
        assert v == pytest.approx(var.var_eta + var.var_g)

    def test_variance_never_below_noise_floor(self):
        # interpolation can push 1 - s'A^{-1}s slightly negative; the clamp
        # keeps the transition variance at least var_eta
        grid = small_grid(3, n=6)
        var = Variances(sigma_g=0.9, sigma_eta=0.2)
        go = GridOps(grid, var.sigma_g)
        beta_g = np.ones(4)
        dz = np.zeros(6)
        w = go.resid_weights(dz, beta_g)
        for i in range(6):
            _, v = go.transition(
                grid.times[i], grid.angles[i], w, beta_g, var
            )
            assert v >= var.var_eta - 1e-15


class TestDensityHelpers:
    def test_latent_transition_is_normal_in_linear_value(self):
        lp = log_latent_transition(1.0, 2, 13.0, 0.5)
        want = normal_logpdf(1.0 + 2 * TWO_PI, 13.0, 0.5)
        assert lp == pytest.approx(want, abs=1e-12)

    def test_obs_likelihood_sums_observed_terms(self):
        T = 3
        y = np.array([0.0, 1.0, 2.0, 3.0])
        N = np.array([0, 0, 1, -1])
        fstar = np.array([0.0, 1.1, 8.0, -3.0, 0.0])
        lp = log_likelihood_obs(y, N, fstar, 0.25)
        want = sum(
            normal_logpdf(y[t] + TWO_PI * N[t], fstar[t], 0.25)
            for t in (1, 2, 3)
        )
        assert lp == pytest.approx(want, abs=1e-12)

    def test_obs_likelihood_respects_mask(self):
        T = 3
        y = np.array([0.0, 1.0, 2.0, 3.0])
        N = np.array([0, 0, 0, 0])
        fstar = np.array([0.0, 1.0, 2.0, 3.0, 0.0])
        observed = np.array([False, True, False, True])
        lp = log_likelihood_obs(y, N, fstar, 1.0, observed=observed)
        want = normal_logpdf(1.0, 1.0, 1.0) + normal_logpdf(3.0, 3.0, 1.0)
        assert lp == pytest.approx(want, abs=1e-12)


class TestJointGridGstar:
    def test_matches_bordered_dense_oracle(self):
        rng = np.random.default_rng(9)
        for trial in range(30):
            n = int(rng.integers(1, 5))
            grid = small_grid(100 + trial, n=n)
            sigma_g = float(rng.uniform(0.5, 1.1))
            var_g = sigma_g**2
            go = GridOps(grid, sigma_g)
            beta_g = np.array([0.2, 0.1, 1.0, 1.0])
            x0 = float(rng.uniform(0.0, TWO_PI))
            dz = rng.normal(0.0, 1.0, n)
            gstar = float(rng.normal(0.0, 1.0))
            got = joint_grid_gstar_logpdf(go, dz, gstar, x0, beta_g, var_g)
            want = bordered_joint_logpdf(
                dz, gstar, x0, grid.times, grid.angles, beta_g,
                var_g, sigma_g, jitter=go.km.jitter,
            )
            assert got == pytest.approx(want, abs=1e-8)

    def test_empty_grid_reduces_to_scalar_normal(self):
        grid = LookupGrid(times=np.empty(0), angles=np.empty(0))
        go = GridOps(grid, 0.8)
        beta_g = np.array([0.5, 0.0, 1.0, 1.0])
        x0 = 2.0
        gstar = 1.3
        got = joint_grid_gstar_logpdf(go, np.empty(0), gstar, x0, beta_g, 0.64)
        mean = float(design_vector(1.0, x0) @ beta_g)
        assert got == pytest.approx(normal_logpdf(gstar, mean, 0.64), abs=1e-12)

    def test_x0_on_grid_point_raises(self):
        # placing the initial point exactly on a grid node makes the
        # bordered matrix singular
        grid = LookupGrid(times=np.array([1.0]), angles=np.array([2.0]))
        go = GridOps(grid, 0.8, jitter=0.0)
        beta_g = np.ones(4)
        with pytest.raises(NumericalSingularityError):
            joint_grid_gstar_logpdf(go, np.zeros(1), 0.0, 2.0, beta_g, 0.64)


class TestSamplePriorState:
    def test_deterministic_and_consistent(self):
        grid = small_grid(10, n=4)
        prior = PriorConfig()
        var = Variances(0.8, 0.4, 0.8, 0.4)
        a = sample_prior_state(np.random.default_rng(3), 4, grid, prior, variances=var)
        b = sample_prior_state(np.random.default_rng(3), 4, grid, prior, variances=var)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.K, b.K)
        np.testing.assert_array_equal(a.fstar, b.fstar)
        assert a.gstar == b.gstar
        assert a.T == 4
        assert a.x.shape == (6,)
        assert np.all((a.x >= 0.0) & (a.x < TWO_PI))
        assert a.N.shape == (5,)
        np.testing.assert_array_equal(a.N, 0)

    def test_pinned_coefficients_at_prior_mean(self):
        grid = small_grid(11, n=3)
        state = sample_prior_state(
            np.random.default_rng(4), 3, grid, PriorConfig(),
            variances=Variances(),
        )
        assert state.beta_g[2] == 1.0
        assert state.beta_g[3] == 1.0

    def test_requires_variances_or_flag(self):
        grid = small_grid(12, n=3)
        with pytest.raises(ValueError):
            sample_prior_state(np.random.default_rng(0), 3, grid, PriorConfig())

    def test_variance_draws_follow_prior(self):
        # inverse gamma kernel (sigma2)^(-(a+2)/2) exp(-g/2sigma2) means
        # 1/sigma2 ~ Gamma(a/2, rate g/2); check the mean of the precision
        grid = small_grid(13, n=2)
        prior = PriorConfig(alpha_eps=6.0, gamma_eps=2.0)
        rng = np.random.default_rng(5)
        precs = []
        for _ in range(4000):
            st = sample_prior_state(rng, 1, grid, prior, sample_variances=True)
            precs.append(1.0 / st.variances.var_eps)
        assert np.mean(precs) == pytest.approx(3.0 / 1.0, rel=0.1)

    def test_path_follows_transition_law(self):
        # with a fixed state prefix the next linear value is normal around
        # the transition mean; check by z-scoring many fresh draws
        grid = small_grid(14, n=4)
        prior = PriorConfig()
        var = Variances(0.8, 0.4, 0.8, 0.4)
        rng = np.random.default_rng(6)
        zs = []
        for _ in range(2000):
            st = sample_prior_state(rng, 2, grid, prior, variances=var)
            go = GridOps(grid, var.sigma_g)
            w = go.resid_weights(st.dz, st.beta_g)
            mu, v = go.transition(2.0, st.x[1], w, st.beta_g, var)
            lin = st.x[2] + TWO_PI * st.K[2]
            zs.append((lin - mu) / math.sqrt(v))
        zs = np.array(zs)
        assert abs(zs.mean()) < 0.1
        assert zs.std() == pytest.approx(1.0, abs=0.06)


class TestInitialChainState:
    def test_wraps_zero_and_betas_at_prior_mean(self):
        grid = small_grid(15, n=4)
        prior = PriorConfig()
        state = initial_chain_state(
            np.random.default_rng(7), 5, grid, prior, variances=Variances()
        )
        np.testing.assert_array_equal(state.K, 0)
        np.testing.assert_array_equal(state.N, 0)
        np.testing.assert_array_equal(state.beta_f, prior.beta_f_mean)
        np.testing.assert_array_equal(state.beta_g, prior.beta_g_mean)

    def test_path_replays_iid_von_mises(self):
        grid = small_grid(16, n=3)
        prior = PriorConfig()
        state = initial_chain_state(
            np.random.default_rng(8), 4, grid, prior, variances=Variances()
        )
        rng = np.random.default_rng(8)
        want = [
            von_mises_sample(rng, prior.mu0, prior.effective_kappa0)
            for _ in range(6)
        ]
        np.testing.assert_array_equal(state.x, want)

    def test_sampled_variances_consume_rng_first(self):
        grid = small_grid(17, n=3)
        prior = PriorConfig()
        a = initial_chain_state(
            np.random.default_rng(9), 3, grid, prior, sample_variances=True
        )
        b = initial_chain_state(
            np.random.default_rng(9), 3, grid, prior, sample_variances=True
        )
        assert a.variances == b.variances
        assert a.variances != Variances()


class TestSampleObservations:
    def test_alignment_and_reconstruction(self):
        grid = small_grid(18, n=3)
        state = sample_prior_state(
            np.random.default_rng(11), 4, grid, PriorConfig(),
            variances=Variances(0.8, 0.4, 0.8, 0.4),
        )
        rng = np.random.default_rng(12)
        y, N = sample_observations(rng, state)
        assert y.shape == (5,)
        assert N.shape == (5,)
        assert y[0] == 0.0 and N[0] == 0
        rng2 = np.random.default_rng(12)
        lin = state.fstar[1:5] + state.variances.sigma_eps * rng2.standard_normal(4)
        np.testing.assert_allclose(y[1:] + TWO_PI * N[1:], lin, atol=5e-16)


class TestLogPrior:
    def test_decomposes_into_blocks(self):
        grid = small_grid(19, n=3)
        prior = PriorConfig()
        state = sample_prior_state(
            np.random.default_rng(13), 2, grid, prior,
            variances=Variances(0.8, 0.4, 0.8, 0.4),
        )
        base = log_prior(state, prior)
        with_var = log_prior(state, prior, include_variances=True)
        # variance terms only add (negative log density) mass
        assert with_var != base
        state2 = state.copy()
        state2.beta_f = state.beta_f + 1.0
        assert log_prior(state2, prior) != base

import math
import warnings

import numpy as np
import pytest

from lcsample import _ulmc
from lcsample import gaussian_oracle as go
from lcsample.model import QuadraticPotential
from lcsample.rng import split, stream
from lcsample.samplers import (
    MalaParams,
    ProxParams,
    UlmcParams,
    lambda_min_bar_sigma,
    lmc_run,
    lmc_step,
    mala_accept_logratio,
    mala_run,
    mala_step,
    proximal_sampler_run,
    rgo_exact_quadratic,
    ulmc_bias_bound,
    ulmc_contraction_measured,
    ulmc_kernel_forms,
    ulmc_mix_iters,
    ulmc_step,
)
from lcsample.samplers.prox import exact_rgo, forward_contraction_factor, prox_gibbs_kernel
from lcsample.samplers.ulmc import ulmc_run, ulmc_spectral_radius


def test_rng_streams_are_reproducible_and_distinct():
    a = stream(5, 1).standard_normal(4)
    assert np.array_equal(a, stream(5, 1).standard_normal(4))
    assert not np.array_equal(a, stream(5, 2).standard_normal(4))
    kids = split(stream(5), 3)
    draws = [k.random() for k in kids]
    assert len(set(draws)) == 3


# -- LMC ----------------------------------------------------------------------


def test_lmc_deterministic_part():
    p = QuadraticPotential.isotropic(2, center=[1.0, 2.0])
    k = go.lmc_kernel(p, 0.3)
    assert np.allclose(k.apply(go.Gaussian.dirac(p.center)).mean, p.center)
    p = QuadraticPotential.isotropic(2)
    law = go.lmc_kernel(p, 0.1).apply(go.Gaussian.dirac([1.0, 0.0]))
    assert np.allclose(law.mean, [0.9, 0.0])
    with pytest.raises(ValueError):
        lmc_step(p, [0.0, 0.0], 0.0, stream(0))


def test_lmc_run_batch_shape():
    p = QuadraticPotential.isotropic(3)
    x = lmc_run(p, np.zeros((10, 3)), 0.1, 5, stream(1))
    assert x.shape == (10, 3)


# -- ULMC ---------------------------------------------------------------------


def test_bar_sigma_matches_explicit_matrix():
    rng = np.random.default_rng(0)
    for _ in range(50):
        gamma = rng.uniform(0.1, 5.0)
        h = rng.uniform(0.01, 2.0) / gamma
        a = math.exp(-gamma * h)
        t = gamma * h
        ref = np.array([[2 * t + 4 * a - a**2 - 3, 2 * t + a**2 - 1],
                        [2 * t + a**2 - 1, 2 * t + 5 - a**2 - 4 * a]]) / gamma**2
        assert np.allclose(_ulmc.ulmc_bar_sigma(gamma, h), ref, rtol=1e-9, atol=1e-15)


def test_sigma_limits():
    assert _ulmc.ulmc_sigma(1.3, 0.2)[1, 1] == pytest.approx(1 - math.exp(-2 * 1.3 * 0.2))
    assert np.all(_ulmc.ulmc_sigma(1.3, 0.0) == 0.0)


def test_lambda_min():
    assert lambda_min_bar_sigma(1.0, 1e-3) == pytest.approx(1e-9 / 6, rel=1e-3)
    assert lambda_min_bar_sigma(1.0, 0.0) == 0.0
    hs = np.linspace(1e-4, 0.1, 200)
    vals = [lambda_min_bar_sigma(1.0, h) for h in hs]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValueError):
        lambda_min_bar_sigma(1.0, 20.0)


def test_mean_map_fixed_point_and_small_h():
    p = QuadraticPotential.from_spectrum([1.0, 3.0], center=[0.5, -0.5])
    forms = ulmc_kernel_forms(p, UlmcParams.default(p.beta, 0.1))
    x, y = forms.F(p.center, np.zeros(2))
    assert np.allclose(x, p.center) and np.allclose(y, 0)
    forms = ulmc_kernel_forms(p, UlmcParams.default(p.beta, 1e-12))
    z = np.array([1.0, 2.0])
    x, y = forms.F(z, z)
    assert np.allclose(x, z) and np.allclose(y, z)
    u, v = forms.barF(z, z)
    assert np.allclose(u, z, atol=1e-9) and np.allclose(v, z, atol=1e-9)


def test_ulmc_one_step_monte_carlo():
    p = QuadraticPotential.from_spectrum([1.0, 2.0], center=[0.3, -0.3])
    params = UlmcParams.default(p.beta, 0.2)
    x0, y0 = np.array([1.0, 0.0]), np.array([0.5, -1.0])
    n = 200_000
    x, y = ulmc_step(p, np.tile(x0, (n, 1)), np.tile(y0, (n, 1)), params, stream(3))
    z = np.hstack([x, y])
    law = go.ulmc_kernel(p, params.h, params.gamma).apply(go.Gaussian.dirac(np.concatenate([x0, y0])))
    se = np.sqrt(np.diag(law.cov) / n)
    assert np.all(np.abs(z.mean(0) - law.mean) <= 4 * se)
    scale = np.sqrt(np.outer(np.diag(law.cov), np.diag(law.cov)))
    assert np.max(np.abs(np.cov(z.T) - law.cov) / scale) <= 0.02
    a = math.exp(-params.gamma * params.h)
    assert np.allclose(law.cov[2:, 2:], (1 - a**2) * np.eye(2))


def test_ulmc_run_fixed_point_mean():
    p = QuadraticPotential.isotropic(2, center=[1.0, 1.0])
    params = UlmcParams.default(1.0, 0.1)
    x, y = ulmc_run(p, np.tile(p.center, (50_000, 1)), np.zeros((50_000, 2)), params, 1, stream(4))
    assert np.allclose(x.mean(0), p.center, atol=0.01)
    assert np.allclose(y.mean(0), 0, atol=0.02)


def test_contraction_examples():
    p = QuadraticPotential.isotropic(1)
    h = 0.01
    lip = ulmc_contraction_measured(p, UlmcParams(math.sqrt(2), h))
    assert lip <= 1 - h / math.sqrt(2) + h**2
    p = QuadraticPotential(np.diag([1.0, 10.0]))
    assert ulmc_contraction_measured(p, UlmcParams(math.sqrt(20), 1e-3)) < 1
    assert ulmc_contraction_measured(p, UlmcParams(math.sqrt(20), 1e-14)) == pytest.approx(1.0, abs=1e-9)
    assert ulmc_spectral_radius(p, UlmcParams(math.sqrt(20), 1e-3)) < 1


def test_mix_iters():
    n = ulmc_mix_iters(1.0, 1.0, 0.1, 2.0, 1.0, 0.1)
    assert 10 * math.log(2e5) == pytest.approx(122.06, abs=0.01)
    assert n == math.ceil(10 * math.log(2e5))
    n1 = ulmc_mix_iters(1.0, 1.0, 0.1, 2.0, 3.0, 0.1, C=2.0)
    n2 = ulmc_mix_iters(1.0, 1.0, 0.1, 2.0, 6.0, 0.1, C=2.0)
    assert abs((n2 - n1) - 2.0 * 10 * math.log(4)) <= 1
    with pytest.raises(ValueError, match="exceeds"):
        ulmc_mix_iters(1.0, 1.0, 0.1, 2.0, 1.0, 0.9)
    with pytest.raises(ValueError, match="exceeds"):
        ulmc_mix_iters(1.0, 4.0, 0.2, 2.0, 1.0, 0.1)


def test_bias_bound():
    assert ulmc_bias_bound(1.0, 1, 0.01, 2.0, 1.0) == pytest.approx(2e-4)
    assert ulmc_bias_bound(1.0, 1, 0.0, 2.0, 1.0) == 0.0
    assert ulmc_bias_bound(2.0, 3, 0.02, 2.0, 1.0) / ulmc_bias_bound(2.0, 3, 0.01, 2.0, 1.0) == pytest.approx(4.0)
    with pytest.warns(RuntimeWarning, match="outside"):
        ulmc_bias_bound(1.0, 100, 0.5, 2.0, 10.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ulmc_bias_bound(1.0, 1, 0.01, 2.0, 1.0)


# -- MALA ---------------------------------------------------------------------


def test_mala_logratio_examples():
    p = QuadraticPotential.isotropic(1)
    assert mala_accept_logratio(p, [0.3], [0.3], 0.2) == pytest.approx(0.0)
    r = float(mala_accept_logratio(p, [0.0], [1.0], 0.5))
    assert r == pytest.approx(-0.125, abs=1e-14)
    assert math.exp(r) == pytest.approx(0.882497, abs=1e-6)
    rng = np.random.default_rng(5)
    x, y = rng.standard_normal((100, 3)), rng.standard_normal((100, 3))
    p3 = QuadraticPotential.from_spectrum([1, 2, 3], center=[1, 0, -1])
    assert np.allclose(mala_accept_logratio(p3, x, y, 0.1), -mala_accept_logratio(p3, y, x, 0.1),
                       atol=1e-12)


def test_mala_logratio_matches_density_formula():
    # independent evaluation with explicit Gaussian proposal densities
    from scipy import stats
    p = QuadraticPotential.isotropic(1)
    x, y, h = 0.4, -0.7, 0.3
    pi = stats.norm.logpdf
    q = lambda a, b: stats.norm.logpdf(b, loc=a - h * a, scale=math.sqrt(2 * h))
    ref = pi(y) + q(y, x) - pi(x) - q(x, y)
    assert float(mala_accept_logratio(p, [x], [y], h)) == pytest.approx(ref, abs=1e-12)


def test_mala_params_guard():
    with pytest.raises(ValueError):
        MalaParams(0.1, laziness=1.0)
    with pytest.raises(ValueError):
        MalaParams(-0.1)


def test_mala_step_single_and_batch():
    p = QuadraticPotential.isotropic(2)
    x, acc = mala_step(p, np.zeros(2), MalaParams(0.1), stream(6))
    assert x.shape == (2,) and isinstance(acc, bool)
    xs, accs = mala_step(p, np.zeros((5, 2)), MalaParams(0.1), stream(6))
    assert xs.shape == (5, 2) and accs.shape == (5,)


def test_mala_acceptance_rate_warm_regime():
    d, beta = 16, 1.0
    p = QuadraticPotential.isotropic(d, beta)
    x0 = stream(7).standard_normal((2000, d))
    run = mala_run(p, x0, MalaParams(0.5 / (beta * math.sqrt(d))), 20, stream(8))
    assert run.acceptance_rate >= 0.3
    assert 0.4 < run.proposed / (2000 * 20) < 0.6


def test_mala_stationarity_small():
    p = QuadraticPotential.isotropic(1)
    n = 100_000
    run = mala_run(p, stream(9).standard_normal((n, 1)), MalaParams(0.1), 10, stream(10))
    x = run.x[:, 0]
    assert abs(x.mean()) <= 4 * x.std() / math.sqrt(n)
    assert abs(x.var() - 1) <= 0.03


# -- proximal sampler ---------------------------------------------------------


def test_rgo_exact_examples():
    p = QuadraticPotential.isotropic(2)
    law = rgo_exact_quadratic(p, 1.0, [2.0, 0.0])
    assert np.allclose(law.mean, [1.0, 0.0]) and np.allclose(law.cov, 0.5 * np.eye(2))
    p = QuadraticPotential.from_spectrum([1.0, 4.0], center=[1.0, -1.0])
    far = rgo_exact_quadratic(p, 1e9, [5.0, 5.0])
    assert np.allclose(far.mean, p.center, atol=1e-7)
    assert np.allclose(far.cov, np.linalg.inv(p.precision), atol=1e-7)
    near = rgo_exact_quadratic(p, 1e-9, [5.0, 5.0])
    assert np.allclose(near.mean, [5.0, 5.0], atol=1e-6) and np.allclose(near.cov, 0, atol=1e-8)


def test_gibbs_step_preserves_target():
    p = QuadraticPotential.from_spectrum([0.5, 2.0, 5.0], center=[1.0, 0.0, -1.0])
    pi = go.target_gaussian(p)
    for h in (0.01, 0.1, 1.0):
        assert go.renyi_gaussian(2, prox_gibbs_kernel(p, h).apply(pi), pi) <= 1e-10


def test_forward_contraction():
    assert forward_contraction_factor(1.0, 1.0, 2.0) == pytest.approx(2**-0.5)
    p = QuadraticPotential.isotropic(2, 1.5)
    pi = go.target_gaussian(p)
    h = 0.4
    rng = np.random.default_rng(11)
    for _ in range(50):
        mu = go.Gaussian(pi.mean + rng.standard_normal(2) * 0.5, pi.cov * rng.uniform(0.6, 1.2))
        before = go.renyi_gaussian(2, mu, pi)
        after = go.renyi_gaussian(2, go.convolve(mu, h * np.eye(2)), go.convolve(pi, h * np.eye(2)))
        assert after <= forward_contraction_factor(p.alpha, h, 2) * before + 1e-12


def test_proximal_sampler_exact_rgo_moments():
    p = QuadraticPotential.from_spectrum([1.0, 4.0], center=[1.0, -1.0])
    params = ProxParams.default(p.beta, 30)
    run = proximal_sampler_run(p, params, exact_rgo(p, params.h), p.center, stream(12), n_chains=40_000)
    se = np.sqrt(np.diag(np.linalg.inv(p.precision)) / 40_000)
    assert np.all(np.abs(run.x.mean(0) - p.center) <= 4 * se)
    assert np.allclose(np.cov(run.x.T), np.linalg.inv(p.precision), atol=0.03)


def test_proximal_sampler_wraps_rgo_errors():
    p = QuadraticPotential.isotropic(1)

    def broken(y, rng):
        raise FloatingPointError("boom")

    with pytest.raises(RuntimeError, match="outer iteration 0"):
        proximal_sampler_run(p, ProxParams(0.5, 2), broken, [0.0], stream(13))
    with pytest.raises(ValueError):
        ProxParams(0.5, 1, rgo_mode="bogus")

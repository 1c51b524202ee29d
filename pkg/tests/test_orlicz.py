import math

import numpy as np
import pytest

from lcsample import orlicz
from lcsample.model import QuadraticPotential
from lcsample.samplers.prox import rgo_exact_quadratic

LOG2 = math.log(2)


def test_scalar_gaussian_norm():
    assert orlicz.orlicz_norm_gaussian([0.0], [[1.0]]).lam == pytest.approx(math.sqrt(8 / 3), rel=1e-9)
    assert math.sqrt(8 / 3) == pytest.approx(1.632993, abs=1e-6)


@pytest.mark.parametrize("d,sigma2", [(1, 1.0), (2, 0.5), (4, 1.0), (16, 3.0), (64, 0.25)])
def test_isotropic_gaussian_norm(d, sigma2):
    exact = math.sqrt(2 * sigma2 / (1 - 2 ** (-2 / d)))
    got = orlicz.orlicz_norm_gaussian(np.zeros(d), sigma2 * np.eye(d))
    assert got.lam == pytest.approx(exact, rel=1e-9)
    assert got.residual < 1e-8


def test_dirac_and_constant():
    assert orlicz.orlicz_norm_gaussian([0.0, 0.0], np.zeros((2, 2))).lam == 0.0
    c = 2.5
    assert orlicz.orlicz_norm_empirical(np.full(10, c)).lam == pytest.approx(c / math.sqrt(LOG2), rel=1e-9)
    # a deterministic shift of size c has the same norm
    assert orlicz.orlicz_norm_gaussian([c], [[0.0]]).lam == pytest.approx(c / math.sqrt(LOG2), rel=1e-9)


def test_empirical_norm_of_gaussian_draws():
    x = np.random.default_rng(0).standard_normal(200_000)
    assert orlicz.orlicz_norm_empirical(x).lam == pytest.approx(math.sqrt(8 / 3), rel=0.03)


def test_infinite_norm_detection():
    with pytest.raises(orlicz.NormInfiniteError, match="norm infinite"):
        orlicz.orlicz_norm_mgf(lambda lam: math.inf)
    # empirical norms of heavy tails stay finite; the tail slope flags them
    rng = np.random.default_rng(1)
    lap = rng.laplace(size=200_000)
    gau = rng.standard_normal(200_000)
    assert np.isfinite(orlicz.orlicz_norm_empirical(lap).lam)
    assert orlicz.tail_slope(lap) < 1.4 < orlicz.tail_slope(gau)


def test_w_orlicz_diracs():
    v = orlicz.w_orlicz_diracs([0.0, 0.0], [1.0, 0.0])
    assert v.value == pytest.approx(1 / math.sqrt(LOG2))
    assert v.value == pytest.approx(1.201122, abs=1e-6)
    assert orlicz.w_orlicz_diracs([3.0], [3.0]).value == 0.0
    assert orlicz.w_orlicz_gaussian_dirac([1.0], [1.0], [[0.0]]).value == 0.0


def test_w_orlicz_gaussian_dirac_d4():
    v = orlicz.w_orlicz_gaussian_dirac(np.zeros(4), np.zeros(4), np.eye(4)).value
    assert v == pytest.approx(math.sqrt(2 / (1 - 2 ** -0.5)), rel=1e-9)
    assert v == pytest.approx(2.6131, abs=1e-4)
    assert v <= orlicz.init_bound_slc(1.0, 4)


def test_shift_bound_dominates_exact():
    rng = np.random.default_rng(2)
    for _ in range(20):
        cov = np.diag(rng.uniform(0.1, 2.0, 3))
        s = rng.standard_normal(3)
        base = orlicz.w_orlicz_gaussian_dirac(np.zeros(3), np.zeros(3), cov).value
        shifted = orlicz.w_orlicz_gaussian_dirac(np.zeros(3), s, cov).value
        assert shifted <= orlicz.w_orlicz_shift_bound(base, s).value + 1e-9


def test_init_bounds():
    assert orlicz.init_bound_slc(1.0, 4) == 12.0
    assert orlicz.init_bound_slc(4.0, 1) == 3.0
    assert orlicz.rgo_init_bound(1.0, 0.5, 0.0, 1) == pytest.approx(9 / math.sqrt(2))
    assert orlicz.rgo_init_bound(1.0, 0.0, 5.0, 3) == 0.0
    with pytest.raises(ValueError, match="h too large"):
        orlicz.rgo_init_bound(1.0, 0.6, 0.0, 1)


def test_rgo_init_bound_dominates_exact_example():
    p = QuadraticPotential.isotropic(2)
    y = np.array([2.0, 0.0])
    law = rgo_exact_quadratic(p, 0.5, y)
    exact = orlicz.w_orlicz_gaussian_dirac(y, law.mean, law.cov).value
    assert exact <= orlicz.rgo_init_bound(1.0, 0.5, 2.0, 2)

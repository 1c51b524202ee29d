import math

import numpy as np
import pytest

from lcsample import shifted as sh
from lcsample.bench.experiments import lmc_exact_kl

LOG2 = math.log(2)


def test_pabi_bound_example():
    spec = sh.CniSpec(c=0.9, sigma=1.0, n_steps=20, order=2.0, w0=1.0)
    assert sh.pabi_min_steps(spec) == 0.0
    assert sh.pabi_orlicz_bound(spec) == pytest.approx(0.9**40, rel=1e-14)
    assert sh.pabi_orlicz_bound(spec) == pytest.approx(0.0147809, abs=1e-7)
    assert sh.pabi_orlicz_bound(sh.CniSpec(0.9, 1.0, 20, 2.0, 0.0)) == 0.0


def test_pabi_condition_error():
    spec = sh.CniSpec(c=0.9, sigma=1.0, n_steps=5, order=4.0, w0=10.0)
    assert not sh.pabi_condition_holds(spec)
    with pytest.raises(sh.ConditionError, match="N too small"):
        sh.pabi_orlicz_bound(spec)
    n_min = math.ceil(sh.pabi_min_steps(spec))
    assert sh.pabi_condition_holds(sh.CniSpec(0.9, 1.0, n_min, 4.0, 10.0))


def test_condition_equivalent_to_bound_below_inverse_order():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        spec = sh.CniSpec(rng.uniform(0.3, 0.99), rng.uniform(0.2, 3.0), int(rng.integers(1, 60)),
                          rng.uniform(1.01, 6.0), rng.uniform(0.0, 10.0))
        value = spec.c ** (2 * spec.n_steps) * spec.order * spec.w0**2 / (2 * spec.sigma**2)
        below = value <= 1 / (spec.order - 1)
        if abs(value * (spec.order - 1) - 1) > 1e-9:
            assert below == sh.pabi_condition_holds(spec)


def test_cni_exact_examples():
    spec = sh.CniSpec(1.0, 1.0, 1, 2.0, 1.0)
    assert sh.cni_exact_gaussian(spec, [1.0]) == pytest.approx(1.0, rel=1e-12)
    assert sh.cni_exact_gaussian(spec, [0.0]) == 0.0
    spec = sh.CniSpec(0.8, 1.3, 7, 3.0, 1.0)
    u = np.array([0.3, -0.4])
    assert sh.cni_exact_gaussian(spec, u) == pytest.approx(sh.cni_exact_closed_form(spec, 0.5), rel=1e-10)


def test_cni_exact_below_pabi_bound():
    for c in (0.5, 0.8, 0.95):
        for n in range(5, 101, 5):
            for q in (1.5, 2, 4):
                for u in (0.1, 1, 10):
                    spec = sh.CniSpec(c, 1.0, n, q, u / math.sqrt(LOG2))
                    if sh.pabi_condition_holds(spec):
                        assert sh.cni_exact_gaussian(spec, [u]) <= sh.pabi_orlicz_bound(spec)


def test_shift_reduction():
    step = sh.shift_reduction_step(2.0, 1.0, 1.0, 0.1, lam=0.5)
    assert step.order_out == 3.0
    assert step.penalty == pytest.approx(3 * 0.01 * LOG2 / 2, rel=1e-14)
    assert step.penalty == pytest.approx(0.0103972, abs=1e-7)
    zero = sh.shift_reduction_step(2.0, 1.0, 1.0, 0.0, lam=0.3)
    assert zero.penalty == 0.0
    holder = sh.shift_reduction_step(2.0, 1.0, 1.0, 0.1, lam=0.0)
    assert holder.order_out == math.inf
    assert holder.penalty == pytest.approx(2 * 0.01 * LOG2 / 2)
    with pytest.raises(ValueError, match="shift too large"):
        sh.shift_reduction_step(2.0, 1.0, 1.0, 10.0)


def test_contraction_reduction():
    assert sh.contraction_reduction_step(1.0, 0.5) == 2.0
    assert sh.contraction_reduction_step(0.7, 1.0) == 0.7
    w, c, n = 0.3, 0.9, 12
    for _ in range(n):
        w = sh.contraction_reduction_step(w, c)
    assert w == pytest.approx(0.3 / c**n)


def test_lmc_regularity_examples():
    inp = sh.RegularityInputs(1.0, 1.0, 0.1, 1)
    assert sh.lmc_regularity_coeff(inp) == pytest.approx(0.9**2 / 0.4, rel=1e-12)
    assert sh.lmc_regularity_coeff(sh.RegularityInputs(1.0, 1.0, 0.1, 10_000)) < 1e-300
    with pytest.raises(sh.ConditionError, match="not contractive"):
        sh.lmc_regularity_coeff(sh.RegularityInputs(-0.5, -0.5, 0.1, 3))


@pytest.mark.parametrize("lam", [-0.5, 0.5, 1.0, 2.0])
def test_lmc_regularity_against_exact_kl(lam):
    for h in (0.05, 0.1, 0.2, 0.4):
        r = sh.gradient_step_rate(lam, lam, h)
        if lam > 0 and r <= 1:
            continue
        for n in range(1, 51):
            coeff = sh.lmc_regularity_coeff(sh.RegularityInputs(lam, lam, h, n), allow_expansive=True)
            assert lmc_exact_kl(lam, h, n) <= coeff * (1 + 1e-12)


def test_ld_coefficient():
    # 1/(2(e^2 - 1)) = 0.07825882...
    assert sh.ld_regularity_coeff(1.0, 1.0) == pytest.approx(1 / (2 * (math.e**2 - 1)), rel=1e-14)
    assert sh.ld_regularity_coeff(1.0, 1.0) == pytest.approx(0.0782588, abs=1e-7)
    assert sh.ld_regularity_coeff(0.0, 2.0) == 0.25 / 2
    assert sh.ld_regularity_coeff(1e-9, 2.0) == pytest.approx(1 / 8, rel=1e-6)
    rng = np.random.default_rng(1)
    for a, t in rng.uniform(0.01, 5.0, (100, 2)):
        assert sh.ld_regularity_coeff_old(a, t) == pytest.approx(2 * sh.ld_regularity_coeff(a, t))


def test_discrete_coefficient_converges_to_continuous():
    for alpha in (0.5, 1.0, 2.0):
        n = 10_000
        c = sh.lmc_regularity_coeff(sh.RegularityInputs(alpha, alpha, 1.0 / n, n))
        assert abs(c / sh.ld_regularity_coeff(alpha, 1.0) - 1) <= 0.01


def test_biased_mixing_weights():
    r, w2 = 1.3, 0.7
    a, ss = sh.biased_mixing_weights(r, 1, w2)
    assert a[0] == pytest.approx(w2 / r)
    assert ss == pytest.approx(w2**2 / r**2)
    h = 0.1
    coeff = sh._geo_coeff(r, 1, h)
    assert ss == pytest.approx(coeff * 4 * h * w2**2)
    a, ss = sh.biased_mixing_weights(r, 5, 0.0)
    assert np.all(a == 0) and ss == 0
    rng = np.random.default_rng(2)
    for _ in range(200):
        r = rng.uniform(1.001, 3.0)
        n = int(rng.integers(1, 80))
        w2 = rng.uniform(0.1, 5.0)
        a, ss = sh.biased_mixing_weights(r, n, w2)
        assert np.sum(r ** (np.arange(n) + 1) * a) == pytest.approx(w2, rel=1e-10)
        assert np.sum(a**2) == pytest.approx(ss, rel=1e-10)

"""Composed samplers: ULMC warm start, ULMC + MALA, and the proximal pipeline.

Every hidden constant is a field of a constants dataclass (default 1 unless
noted) so runs can be reproduced exactly and pinned in tests.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from lcsample import orlicz
from lcsample.divergence import warm_boost_chi2
from lcsample.model import Potential, QuadraticPotential, condition_number, restricted
from lcsample.samplers.mala import MalaParams, mala_run
from lcsample.samplers.prox import ProxParams, exact_rgo, proximal_sampler_run
from lcsample.samplers.ulmc import UlmcParams, ulmc_mix_iters, ulmc_run

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class WarmConstants:
    h_scale: float = 1.0     # multiplies eps sqrt(alpha) / (beta sqrt(d q))
    iter_scale: float = 1.0  # C in the mixing iteration count
    w_scale: float = 2.0     # slack on the initial Orlicz-Wasserstein distance


@dataclass(frozen=True)
class WeakConstants:
    warm: WarmConstants = field(default_factory=WarmConstants)
    c_mala: float = 0.5      # h_MALA = c_mala / (beta sqrt d)
    mala_scale: float = 1.0  # C in C kappa sqrt(d) log^p(8 chi2_0 / tv^2)
    log_power: float = 3.0
    laziness: float = 0.5


@dataclass(frozen=True)
class FullConstants:
    weak: WeakConstants = field(default_factory=WeakConstants)
    prox_scale: float = 1.0  # C_p in n_prox
    rgo_scale: float = 1.0   # C_r in eps_rgo
    order: float = 2.0


def _batch(start, n_samples: Optional[int], d: int) -> np.ndarray:
    x = np.array(start, dtype=float)
    if x.ndim == 1:
        if x.size != d:
            raise ValueError("start has the wrong dimension")
        x = np.tile(x, (n_samples or 1, 1))
    return x


def warm_start_ulmc(p: Potential, q: float, eps: float, start, rng: np.random.Generator,
                    constants: WarmConstants = WarmConstants(), n_samples: Optional[int] = None,
                    w_init: Optional[float] = None):
    """ULMC from (start, N(0, I)) targeting R_q(output || pi) <= eps^2.

    Uses gamma = sqrt(2 beta), h = h_scale eps sqrt(alpha)/(beta sqrt(d q))
    (capped at the mixing theorem's 1/(kappa sqrt(beta))), and the mixing
    iteration count at order 2q and accuracy eps/2. The initial distance is
    6 sqrt(d/alpha) + |start - x*|/sqrt(log 2) unless ``w_init`` is given.

    Returns ``(x, info)`` where ``x`` has shape (n, d).
    """
    if p.alpha <= 0:
        raise ValueError("warm start needs alpha > 0")
    if not 0 < eps <= 1.0 / math.sqrt(q) * (1 + 1e-12):
        raise ValueError(f"eps out of range: need 0 < eps <= 1/sqrt(q) = {1 / math.sqrt(q):g}")
    d, alpha, beta = p.dim, p.alpha, p.beta
    x0 = _batch(start, n_samples, d)
    if w_init is None:
        if p.minimizer is None:
            raise ValueError("minimizer unknown: pass w_init")
        far = float(np.linalg.norm(x0 - p.minimizer, axis=1).max())
        w_init = orlicz.init_bound_slc(alpha, d) + far / math.sqrt(LOG2)
    w = constants.w_scale * w_init
    params = UlmcParams.default(beta, 1.0)
    h = constants.h_scale * eps * math.sqrt(alpha) / (beta * math.sqrt(d * q))
    h = min(h, 1.0 / (condition_number(p) * math.sqrt(beta)))
    params = UlmcParams(params.gamma, h)
    n_iter = ulmc_mix_iters(alpha, beta, h, 2 * q, w, eps / 2, C=constants.iter_scale)
    y0 = rng.standard_normal(x0.shape)
    x, _ = ulmc_run(p, x0, y0, params, n_iter, rng)
    info = {"gamma": params.gamma, "h": h, "n_iter": n_iter, "w_psi2": w}
    return x, info


def mala_iters(kappa: float, d: int, chi2_0: float, tv: float, constants: WeakConstants) -> int:
    """C kappa sqrt(d) log^p(8 chi2_0 / tv^2), at least one step."""
    lg = math.log(8.0 * chi2_0 / tv**2) if tv > 0 else math.inf
    if lg <= 0:
        return 1
    n = constants.mala_scale * kappa * math.sqrt(d) * lg**constants.log_power
    return max(int(math.ceil(n)), 1)


# R_3 <= log 2 certifies chi^2 <= 1; the ULMC accuracy eps_w satisfies eps_w^2 <= log 2
# and eps_w <= 1/sqrt(3).
WARM_ORDER = 3.0
WARM_EPS = min(math.sqrt(LOG2), 1.0 / math.sqrt(WARM_ORDER))


def pipeline_weak(p: Potential, eps: float, start, rng: np.random.Generator,
                  constants: WeakConstants = WeakConstants(), n_samples: Optional[int] = None,
                  w_init: Optional[float] = None):
    """ULMC warm start in R_3 followed by lazy MALA to TV eps^4/5.

    Returns ``(x, report)``; the report carries the chi^2 certificate
    obtained by boosting the TV target with the warm start.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x, warm = warm_start_ulmc(p, WARM_ORDER, WARM_EPS, start, rng, constants.warm,
                              n_samples=n_samples, w_init=w_init)
    d = p.dim
    r3 = WARM_EPS**2
    chi2_0 = math.expm1(r3)
    tv = min(eps**4 / 5.0, 1.0)
    if eps**2 >= chi2_0:
        n_mala = 1  # warm start already meets the chi^2 target
    else:
        n_mala = mala_iters(condition_number(p), d, chi2_0, tv, constants)
    mp = MalaParams(constants.c_mala / (p.beta * math.sqrt(d)), constants.laziness)
    run = mala_run(p, x, mp, n_mala, rng)
    report = {
        "ulmc_steps": warm["n_iter"],
        "ulmc_h": warm["h"],
        "mala_steps": n_mala,
        "mala_h": mp.h,
        "acceptance_rate": run.acceptance_rate,
        "tv_target": tv,
        "chi2_certificate": warm_boost_chi2(tv, r3),
        "work": warm["n_iter"] + n_mala,
    }
    return run.x, report


def mean_distance_to_minimizer(p: QuadraticPotential) -> float:
    """E|X - x*| under pi for a quadratic target, by one-dimensional quadrature.

    Uses E|Z| = (1/(2 sqrt(pi))) int_0^inf (1 - E e^{-t|Z|^2}) t^{-3/2} dt.
    """
    var = 1.0 / p.eigenvalues

    def integrand(t):
        if t == 0:
            return 0.0
        return -math.expm1(-0.5 * np.sum(np.log1p(2 * t * var))) * t**-1.5

    val, _ = integrate.quad(integrand, 0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val / (2 * math.sqrt(math.pi))


def renyi_gaussian_init_bound(beta: float, m: float, d: int, gap: float = 0.0) -> float:
    """2 + gap + (d/2) log(2 beta m^2): R_inf of N(x0, I/(2 beta)) against pi."""
    return 2.0 + gap + 0.5 * d * math.log(2 * beta * m * m)


def pipeline_full(p: Potential, eps: float, rng: np.random.Generator,
                  constants: FullConstants = FullConstants(), n_samples: int = 1,
                  start=None, rgo_mode: str = "inner-sampler"):
    """Proximal sampler with h = 1/(2 beta) and an inexact RGO.

    Each RGO call runs :func:`pipeline_weak` on f + |x - y|^2/(2h) started
    at y, at accuracy eps_rgo = C_r eps / sqrt(kappa q).
    """
    if p.alpha <= 0:
        raise ValueError("pipeline needs alpha > 0")
    center = p.minimizer if start is None else np.asarray(start, dtype=float)
    if center is None:
        raise ValueError("minimizer unknown: supply start")
    d, alpha, beta = p.dim, p.alpha, p.beta
    kappa = condition_number(p)
    q = constants.order
    h = 1.0 / (2.0 * beta)
    if isinstance(p, QuadraticPotential):
        m = mean_distance_to_minimizer(p)
    else:
        m = math.sqrt(d / alpha)
    r0 = renyi_gaussian_init_bound(beta, m, d)
    n_prox = max(int(math.ceil(constants.prox_scale * kappa * q * math.log(max(r0 / eps**2, math.e)))), 1)
    eps_rgo = constants.rgo_scale * eps / math.sqrt(kappa * q)
    params = ProxParams(h, n_prox, eps_rgo, rgo_mode)
    inner_work = []

    if rgo_mode == "exact-quadratic":
        rgo = exact_rgo(p, h)
    else:
        def rgo(y, rng_):
            sub = restricted(p, y, h)
            dist = float(np.linalg.norm(y - center, axis=1).max())
            w0 = orlicz.rgo_init_bound(beta, h, dist, d)
            x, rep = pipeline_weak(sub, eps_rgo, y, rng_, constants.weak, w_init=w0)
            inner_work.append(rep["work"])
            return x, rep

    init = center + rng.standard_normal((n_samples, d)) / math.sqrt(2 * beta)
    run = proximal_sampler_run(p, params, rgo, init, rng)
    report = {
        "n_prox": n_prox,
        "h": h,
        "eps_rgo": eps_rgo,
        "r0_bound": r0,
        "rgo_budget": run.rgo_budget,
        "inner_work": int(sum(inner_work)),
        "work": int(sum(inner_work)) + n_prox,
        "constants": asdict(constants),
    }
    return run.x, report

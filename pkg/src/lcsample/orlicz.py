"""Sub-Gaussian Orlicz norms and Dirac-anchored Orlicz-Wasserstein distances.

The psi_2 norm of X is the smallest lambda with E exp(|X|^2 / lambda^2) <= 2.
Only couplings with a point mass are evaluated exactly (the coupling is then
unique); everything else is handled through upper bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

INF = math.inf
LOG2 = math.log(2.0)
_CEILING = 1e12
_MAX_ITER = 200
_RTOL = 1e-9


class NormInfiniteError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OrliczNorm:
    lam: float
    residual: float


@dataclass(frozen=True)
class OrliczWassersteinValue:
    value: float
    certificate: str  # "dirac" or "shift-bound"


def _solve(excess: Callable[[float], float]) -> tuple[float, float]:
    """Root of the nonincreasing map ``lam -> excess(lam)`` (excess = log E psi - log 2).

    Returns ``(lam, |E psi_2 - 1|)``.
    """
    hi = 1.0
    while excess(hi) >= 0:
        hi *= 2
        if hi > _CEILING:
            raise NormInfiniteError("norm infinite: E exp(|X|^2/lam^2) >= 2 up to lam = 1e12")
    lo = hi / 2
    while excess(lo) < 0:
        hi = lo
        lo /= 2
        if lo < 1e-150:  # lam^2 must stay representable
            return 0.0, 0.0
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _RTOL * hi * 1e-3:
            break
    lam = hi
    return lam, abs(math.expm1(excess(lam) + LOG2) - 1.0)


def orlicz_norm_mgf(mgf_eval: Callable[[float], float]) -> OrliczNorm:
    """Solve ``mgf_eval(lam) = 2`` where ``mgf_eval(lam) = E exp(|X|^2 / lam^2)``.

    ``mgf_eval`` may return ``inf`` for lam below the integrability threshold.
    """

    def excess(lam):
        v = mgf_eval(lam)
        if not v > 0:
            raise ValueError("mgf_eval must be positive")
        return math.log(v) - LOG2 if math.isfinite(v) else INF

    lam, res = _solve(excess)
    return OrliczNorm(lam, res)


def orlicz_norm_empirical(norms) -> OrliczNorm:
    """psi_2 norm of the empirical law of the nonnegative values ``norms``."""
    r = np.abs(np.asarray(norms, dtype=float).ravel())
    if r.size == 0:
        raise ValueError("empty samples")
    r2 = r * r
    logn = math.log(r.size)

    def excess(lam):
        return float(logsumexp(r2 / (lam * lam))) - logn - LOG2

    lam, res = _solve(excess)
    return OrliczNorm(lam, res)


def tail_slope(norms, quantiles=(0.9, 0.999)) -> float:
    """Diagnostic exponent p in log P(|X| > t) ~ -t^p, fitted on two upper quantiles.

    About 2 for sub-Gaussian tails, about 1 for exponential tails. Empirical
    psi_2 norms are always finite, so this is the only heavy-tail signal.
    """
    r = np.sort(np.abs(np.asarray(norms, dtype=float).ravel()))
    qa, qb = quantiles
    ta, tb = np.quantile(r, [qa, qb])
    la, lb = -math.log(1 - qa), -math.log(1 - qb)
    return math.log(lb / la) / math.log(tb / ta)


def gaussian_sq_norm_mgf(mean, cov) -> Callable[[float], float]:
    """lam -> E exp(|X|^2 / lam^2) for X ~ N(mean, cov); inf where it diverges."""
    m = np.asarray(mean, dtype=float).reshape(-1)
    s = np.asarray(cov, dtype=float).reshape(m.size, m.size)
    w, v = np.linalg.eigh(s)
    w = np.clip(w, 0, None)
    mu2 = (v.T @ m) ** 2
    live, shift = w > 0, mu2 > 0

    def mgf(lam):
        t = 1.0 / (lam * lam)
        with np.errstate(over="ignore"):
            one = 1.0 - 2.0 * t * w[live]
            if np.any(one <= 0):
                return INF
            one_all = np.ones_like(w)
            one_all[live] = one
            logv = -0.5 * np.sum(np.log(one)) + np.sum(t * mu2[shift] / one_all[shift])
        return math.exp(logv) if logv < 700 else INF

    return mgf


def orlicz_norm_gaussian(mean, cov) -> OrliczNorm:
    """psi_2 norm of |X| for X ~ N(mean, cov)."""
    return orlicz_norm_mgf(gaussian_sq_norm_mgf(mean, cov))


def w_orlicz_dirac(norm_of_shifted: OrliczNorm) -> OrliczWassersteinValue:
    """W_psi2(delta_x, mu) given the psi_2 norm of |X - x| under mu."""
    return OrliczWassersteinValue(norm_of_shifted.lam, "dirac")


def w_orlicz_gaussian_dirac(x, mean, cov) -> OrliczWassersteinValue:
    x = np.asarray(x, dtype=float).reshape(-1)
    return w_orlicz_dirac(orlicz_norm_gaussian(np.asarray(mean, dtype=float) - x, cov))


def w_orlicz_diracs(a, b) -> OrliczWassersteinValue:
    """W_psi2(delta_a, delta_b) = |a - b| / sqrt(log 2)."""
    dist = float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return OrliczWassersteinValue(dist / math.sqrt(LOG2), "dirac")


def w_orlicz_shift_bound(w_base: float, shift) -> OrliczWassersteinValue:
    """Upper bound after translating one argument deterministically by ``shift``."""
    s = float(np.linalg.norm(np.asarray(shift, dtype=float)))
    return OrliczWassersteinValue(w_base + s / math.sqrt(LOG2), "shift-bound")


def init_bound_slc(alpha: float, d: int) -> float:
    """Bound on W_psi2(delta_{x*}, pi) for alpha-strongly log-concave pi."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return 6.0 * math.sqrt(d / alpha)


def rgo_init_bound(beta: float, h: float, dist_to_min: float, d: int) -> float:
    """Bound on W_psi2(delta_y, pi^{X|Y=y}) when h <= 1/(2 beta)."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    if h > 1.0 / (2.0 * beta) * (1 + 1e-12):
        raise ValueError(f"h too large: need h <= 1/(2 beta) = {1 / (2 * beta):g}")
    return 9.0 * math.sqrt(d * h) + 3.0 * beta * h * dist_to_min

"""Shifted-divergence bound calculus and regularity coefficients.

The shifted Renyi divergence itself is an infimum over couplings and is
never evaluated. This module manipulates the bounds, and
:func:`cni_exact_gaussian` provides a closed-form Gaussian contractive noisy
iteration against which they are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lcsample import gaussian_oracle as go

INF = math.inf
LOG2 = math.log(2.0)


class ConditionError(ValueError):
    """A theorem's hypothesis is not met, so its bound is not claimed."""


@dataclass(frozen=True)
class CniSpec:
    """Contractive noisy iteration: N steps of a c-Lipschitz map plus N(0, sigma^2 I)."""

    c: float
    sigma: float
    n_steps: int
    order: float
    w0: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not self.order >= 1:
            raise ValueError("order must be >= 1")
        if not self.w0 >= 0:
            raise ValueError("w0 must be nonnegative")


def pabi_min_steps(spec: CniSpec) -> float:
    """Smallest N allowed by the step condition; 0 when it is vacuous.

    The condition reads c^N sqrt(q(q-1)) w0 <= sqrt(2) sigma. At q = 1 we treat
    it as vacuous.
    """
    q = spec.order
    arg = math.sqrt(q * (q - 1)) * spec.w0 / (spec.sigma * math.sqrt(2.0))
    if arg <= 1:
        return 0.0
    if spec.c >= 1:
        return INF
    return math.log(arg) / math.log(1.0 / spec.c)


def pabi_condition_holds(spec: CniSpec) -> bool:
    q = spec.order
    lhs = spec.c ** spec.n_steps * math.sqrt(q * (q - 1)) * spec.w0
    return lhs <= math.sqrt(2.0) * spec.sigma * (1 + 1e-12)


def pabi_orlicz_bound(spec: CniSpec) -> float:
    """c^{2N} q w0^2 / (2 sigma^2), valid once the step condition holds."""
    if not pabi_condition_holds(spec):
        raise ConditionError(
            f"N too small for the shifted Orlicz bound: need N >= {pabi_min_steps(spec):.6g}, "
            f"got {spec.n_steps}")
    return spec.c ** (2 * spec.n_steps) * spec.order * spec.w0**2 / (2 * spec.sigma**2)


@dataclass(frozen=True)
class ShiftStep:
    w: float
    delta: float
    lam: float
    order_out: float
    penalty: float


def max_shift(q: float, sigma: float, lam: float) -> float:
    """Largest delta allowed by the shift-reduction step (inf when q = 1)."""
    if q == 1:
        return INF
    return (1 - lam) * sigma * math.sqrt(2.0 / ((q - 1) * (q - lam)))


def shift_reduction_step(q: float, sigma: float, w: float, delta: float,
                         lam: float = 0.5) -> ShiftStep:
    """Trade ``delta`` of shift for an order increase and an additive penalty.

    The output order is (q + lam - 1)/lam (infinite at lam = 0) and the
    penalty is (q - lam) delta^2 log 2 / (2 (1 - lam) sigma^2).
    """
    if not q >= 1:
        raise ValueError("order must be >= 1")
    if not 0 <= lam < 1:
        raise ValueError("lambda must lie in [0, 1)")
    if delta < 0 or sigma <= 0:
        raise ValueError("need delta >= 0 and sigma > 0")
    if delta > max_shift(q, sigma, lam) * (1 + 1e-12):
        raise ValueError(f"shift too large: delta={delta:g} exceeds {max_shift(q, sigma, lam):g}")
    order = INF if lam == 0 else (q + lam - 1) / lam
    penalty = (q - lam) * delta**2 * LOG2 / (2 * (1 - lam) * sigma**2)
    return ShiftStep(w, delta, lam, order, penalty)


def contraction_reduction_step(w: float, c: float) -> float:
    """Shift needed before a c-Lipschitz map to guarantee shift w after it."""
    if not c > 0:
        raise ValueError("c must be positive")
    return w / c


def cni_exact_gaussian(spec: CniSpec, u) -> float:
    """Exact R_q between the time-N laws of x -> c x + N(0, sigma^2 I) from delta_u and delta_0."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    d = u.size
    k = go.AffineGaussianKernel(spec.c * np.eye(d), np.zeros(d), spec.sigma**2 * np.eye(d))
    g1 = k.apply(go.Gaussian.dirac(u), spec.n_steps)
    g0 = k.apply(go.Gaussian.dirac(np.zeros(d)), spec.n_steps)
    return go.renyi_gaussian(spec.order, g1, g0)


def cni_exact_closed_form(spec: CniSpec, u_norm: float) -> float:
    """q c^{2N} |u|^2 / (2 sigma^2 sum_{k<N} c^{2k})."""
    c2 = spec.c**2
    n = spec.n_steps
    geo = float(n) if c2 == 1 else (1 - c2**n) / (1 - c2)
    return spec.order * c2**n * u_norm**2 / (2 * spec.sigma**2 * geo)


# -- regularity -------------------------------------------------------------


@dataclass(frozen=True)
class RegularityInputs:
    alpha: float
    beta: float
    h: float
    n_steps: int
    w2: float = 1.0

    def __post_init__(self):
        if self.beta < self.alpha:
            raise ValueError("need alpha <= beta")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")


def gradient_step_rate(alpha: float, beta: float, h: float) -> float:
    """r = 1 / max(|1 - h alpha|, |1 - h beta|), the inverse Lipschitz constant."""
    lip = max(abs(1 - h * alpha), abs(1 - h * beta))
    return INF if lip == 0 else 1.0 / lip


def _geo_coeff(r: float, n: int, h: float) -> float:
    # (1 - r^-2) / (4 h (r^{2N} - 1)), with the r -> 1 limit 1/(4 h N)
    if r == INF:
        return 0.0
    lr = math.log(r)
    if abs(lr) < 1e-300:
        return 1.0 / (4 * h * n)
    if lr > 0:
        # divide through by r^{2N} so large N underflows instead of overflowing
        return -math.expm1(-2 * lr) * math.exp(-2 * n * lr) / (4 * h * -math.expm1(-2 * n * lr))
    return -math.expm1(-2 * lr) / (4 * h * math.expm1(2 * n * lr))


def lmc_regularity_coeff(inp: RegularityInputs, allow_expansive: bool = False) -> float:
    """KL(mu P^N || nu P^N) per unit W_2^2 for N LMC steps.

    The coefficient is (1 - r^-2) / (4 h (r^{2N} - 1)). By default r > 1 is
    required. With ``allow_expansive`` the same expression is returned for
    r <= 1, where it stays a valid (but growing) bound.
    """
    r = gradient_step_rate(inp.alpha, inp.beta, inp.h)
    if r <= 1 and not allow_expansive:
        raise ConditionError("gradient step not contractive; bound vacuous")
    return _geo_coeff(r, inp.n_steps, inp.h)


def ld_regularity_coeff(alpha: float, horizon: float) -> float:
    """alpha / (2 (e^{2 alpha T} - 1)); equals 1/(4T) at alpha = 0."""
    if not horizon > 0:
        raise ValueError("T must be positive")
    x = 2 * alpha * horizon
    if x == 0:
        return 1.0 / (4 * horizon)
    return alpha / (2 * math.expm1(x))


def ld_regularity_coeff_old(alpha: float, horizon: float) -> float:
    """The earlier coefficient alpha / (e^{2 alpha T} - 1), twice the improved one."""
    return 2.0 * ld_regularity_coeff(alpha, horizon)


def biased_mixing_weights(r: float, n: int, w2: float) -> tuple[np.ndarray, float]:
    """Minimal-energy shifts a_0..a_{N-1} with sum r^{n+1} a_n = w2.

    a_n = r^{n-1} (r^2 - 1) / (r^{2N} - 1) w2, with sum of squares
    (1 - r^-2) / (r^{2N} - 1) w2^2.
    """
    if not r > 1:
        raise ValueError("need r > 1")
    if n < 1:
        raise ValueError("need N >= 1")
    k = np.arange(n, dtype=float)
    lr = math.log(r)
    # scaled by r^{-2N} throughout to stay finite for large N
    denom = -math.expm1(-2 * n * lr)
    a = np.exp((k - 1 - 2 * n) * lr) * math.expm1(2 * lr) / denom * w2
    ss = -math.expm1(-2 * lr) * math.exp(-2 * n * lr) / denom * w2**2
    return a, ss

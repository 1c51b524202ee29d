"""Underdamped Langevin with the exponential integrator.

State is ``(x, y)`` with position ``x`` and velocity ``y``. One step samples
exactly from N(F(x, y), Sigma (x) I_d), where the gradient is frozen at the
start of the step. The twisted coordinates ``(x, x + 2y/gamma)`` are where
the mean map contracts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from lcsample import _ulmc
from lcsample.gaussian_oracle import psd_sqrt, spectral_radius, ulmc_linear_parts
from lcsample.model import Potential, QuadraticPotential

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class UlmcParams:
    gamma: float
    h: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.h > 0):
            raise ValueError("need gamma > 0 and h > 0")

    @classmethod
    def default(cls, beta: float, h: float) -> "UlmcParams":
        """Friction sqrt(2 beta)."""
        return cls(math.sqrt(2 * beta), h)


@dataclass(frozen=True)
class UlmcKernelForms:
    F: Callable
    sigma: np.ndarray
    M: np.ndarray
    barF: Callable
    bar_sigma: np.ndarray
    a: float


def _mean_map(p: Potential, gamma: float, h: float):
    c = _ulmc.ulmc_scalars(gamma, h)

    def F(x, y):
        g = p.grad_at(x)
        return (x + c["c_v"] * y - c["c_g"] * g,
                c["a"] * y - c["c_v"] * g)

    return F, c


def ulmc_kernel_forms(p: Potential, params: UlmcParams) -> UlmcKernelForms:
    F, c = _mean_map(p, params.gamma, params.h)
    gamma = params.gamma

    def barF(u, v):
        # back to (x, y), apply F, twist again
        x = u
        y = 0.5 * gamma * (v - u)
        nx, ny = F(x, y)
        return nx, nx + 2.0 * ny / gamma

    return UlmcKernelForms(
        F=F,
        sigma=_ulmc.ulmc_sigma(gamma, params.h),
        M=_ulmc.twist_matrix(gamma),
        barF=barF,
        bar_sigma=_ulmc.ulmc_bar_sigma(gamma, params.h),
        a=c["a"],
    )


def _stepper(p: Potential, params: UlmcParams):
    F, _ = _mean_map(p, params.gamma, params.h)
    root = psd_sqrt(_ulmc.ulmc_sigma(params.gamma, params.h))

    def step(x, y, rng):
        mx, my = F(x, y)
        z1 = rng.standard_normal(x.shape)
        z2 = rng.standard_normal(x.shape)
        return (mx + root[0, 0] * z1 + root[0, 1] * z2,
                my + root[1, 0] * z1 + root[1, 1] * z2)

    return step


def ulmc_step(p: Potential, x, y, params: UlmcParams, rng: np.random.Generator):
    """One exact exponential-integrator step for a point or a batch.

    Noise uses the symmetric square root of the 2x2 covariance, applied
    coordinate-wise.
    """
    step = _stepper(p, params)
    return step(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rng)


def ulmc_run(p: Potential, x0, y0, params: UlmcParams, n_steps: int,
             rng: np.random.Generator):
    step = _stepper(p, params)
    x, y = np.array(x0, dtype=float), np.array(y0, dtype=float)
    for _ in range(n_steps):
        x, y = step(x, y, rng)
    return x, y


def lambda_min_bar_sigma(gamma: float, h: float) -> float:
    """Exact smallest eigenvalue of the twisted one-step noise covariance."""
    if h == 0:
        return 0.0
    if gamma * h > 10:
        raise ValueError("gamma*h outside the supported range (<= 10)")
    return _ulmc.lambda_min_2x2(_ulmc.ulmc_bar_sigma(gamma, h))


def twisted_linear_part(p: QuadraticPotential, params: UlmcParams) -> np.ndarray:
    a, _ = ulmc_linear_parts(p, params.gamma, params.h)
    m = np.kron(_ulmc.twist_matrix(params.gamma), np.eye(p.dim))
    return m @ a @ np.linalg.inv(m)


def ulmc_contraction_measured(p: QuadraticPotential, params: UlmcParams) -> float:
    """Operator norm of the linear part of barF (its Lipschitz constant)."""
    return float(np.linalg.norm(twisted_linear_part(p, params), ord=2))


def ulmc_spectral_radius(p: QuadraticPotential, params: UlmcParams) -> float:
    a, _ = ulmc_linear_parts(p, params.gamma, params.h)
    return spectral_radius(a)


def ulmc_mix_iters(alpha: float, beta: float, h: float, q: float, w_psi2: float,
                   eps: float, C: float = 1.0) -> int:
    """Iterations for R_q between two ULMC chains to drop below eps^2.

    N = ceil(C sqrt(beta)/(alpha h) log(q w^2 / (sqrt(beta) eps^2 h^3))),
    with the log clamped below at 1.
    """
    if not (alpha > 0 and beta >= alpha and h > 0 and eps > 0 and q >= 1):
        raise ValueError("invalid parameters")
    if q > 1 and eps > math.sqrt(LOG2 / (q - 1)) * (1 + 1e-12):
        raise ValueError(f"eps={eps:g} exceeds sqrt(log 2/(q-1)) for q={q:g}")
    kappa = beta / alpha
    if h > 1.0 / (kappa * math.sqrt(beta)) * (1 + 1e-12):
        raise ValueError(f"h={h:g} exceeds 1/(kappa sqrt(beta)) = {1 / (kappa * math.sqrt(beta)):g}")
    if w_psi2 <= 0:
        return 1
    arg = q * w_psi2**2 / (math.sqrt(beta) * eps**2 * h**3)
    lg = max(math.log(arg), 1.0)
    return max(int(math.ceil(C * math.sqrt(beta) / (alpha * h) * lg)), 1)


def ulmc_bias_bound(beta: float, d: int, h: float, q: float, T: float, C: float = 1.0) -> float:
    """C beta^{3/2} d h^2 q T; warns outside the step-size regime."""
    if h < 0 or T < 0:
        raise ValueError("need h >= 0 and T >= 0")
    if h > 0 and T > 0:
        n = max(T / h, math.e)
        cap = 1.0 / (beta**0.75 * math.sqrt(d) * q * math.sqrt(T * math.log(n)))
        if h > cap:
            warnings.warn(f"h={h:g} outside the bias lemma regime (h <= {cap:g})",
                          RuntimeWarning, stacklevel=2)
    return C * beta**1.5 * d * h**2 * q * T

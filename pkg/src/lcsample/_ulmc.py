"""Exponential-integrator coefficients for underdamped Langevin.

All quantities are written in terms of ``t = gamma * h`` and evaluated with
series expansions where the closed forms cancel catastrophically (the
position variance is O(t^3) while its closed form is a difference of O(1)
terms).
"""

from __future__ import annotations

import math

import numpy as np

_SERIES_CUTOFF = 0.5
_SERIES_TERMS = 40


def _pos_var_scaled(t: float) -> float:
    """gamma^2 * Sigma_xx = 2t - 3 + 4 e^{-t} - e^{-2t}."""
    if t < _SERIES_CUTOFF:
        total = 0.0
        term = 1.0
        for k in range(1, _SERIES_TERMS):
            term *= t / k  # t^k / k!
            if k >= 3:
                total += (-1) ** k * (4 - 2**k) * term
        return total
    a = math.exp(-t)
    return 2 * t - 3 + 4 * a - a * a


def _twisted_cross_scaled(t: float) -> float:
    """gamma^2 * barSigma_uv = 2t + e^{-2t} - 1."""
    return 2 * t + math.expm1(-2 * t)


def ulmc_scalars(gamma: float, h: float) -> dict:
    """Scalar coefficients of the one-step law.

    Returns ``a = exp(-gamma h)`` and the mean-map coefficients
    ``c_v = (1 - a)/gamma`` (velocity into position) and
    ``c_g = (h - (1 - a)/gamma)/gamma`` (gradient into position).
    """
    if gamma <= 0 or h < 0:
        raise ValueError("need gamma > 0 and h >= 0")
    t = gamma * h
    one_minus_a = -math.expm1(-t)
    a = 1.0 - one_minus_a
    c_v = one_minus_a / gamma
    # h - (1-a)/gamma = (t - (1 - e^{-t}))/gamma; series for small t
    if t < _SERIES_CUTOFF:
        s, term = 0.0, t
        for k in range(2, _SERIES_TERMS):
            term *= t / k
            s += (-1) ** k * term
        g_lag = s / gamma
    else:
        g_lag = (t - one_minus_a) / gamma
    return {"a": a, "one_minus_a": one_minus_a, "c_v": c_v, "c_g": g_lag / gamma}


def ulmc_sigma(gamma: float, h: float) -> np.ndarray:
    """2x2 covariance of (position, velocity) noise over one step."""
    t = gamma * h
    one_minus_a = -math.expm1(-t)
    sxx = _pos_var_scaled(t) / gamma**2
    sxv = one_minus_a**2 / gamma
    svv = -math.expm1(-2 * t)
    return np.array([[sxx, sxv], [sxv, svv]])


def twist_matrix(gamma: float) -> np.ndarray:
    """(x, y) -> (x, x + 2y/gamma)."""
    return np.array([[1.0, 0.0], [1.0, 2.0 / gamma]])


def ulmc_bar_sigma(gamma: float, h: float) -> np.ndarray:
    """M Sigma M^T, with the off-diagonal taken from its stable closed form."""
    t = gamma * h
    m = twist_matrix(gamma)
    bar = m @ ulmc_sigma(gamma, h) @ m.T
    cross = _twisted_cross_scaled(t) / gamma**2
    bar[0, 1] = bar[1, 0] = cross
    return bar


def lambda_min_2x2(mat: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric PSD 2x2 matrix, as det / lambda_max."""
    tr = mat[0, 0] + mat[1, 1]
    det_sigma_like = mat[0, 0] * mat[1, 1] - mat[0, 1] ** 2
    disc = math.sqrt(max((mat[0, 0] - mat[1, 1]) ** 2 + 4 * mat[0, 1] ** 2, 0.0))
    lam_max = 0.5 * (tr + disc)
    if lam_max <= 0:
        return 0.0
    return det_sigma_like / lam_max

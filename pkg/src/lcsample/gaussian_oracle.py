"""Exact calculus on Gaussian measures.

Affine pushforwards, convolutions and closed-form divergences between
Gaussians, the exact one-step kernels of LMC and ULMC on quadratic targets,
and stationary laws of affine-Gaussian chains. Every inequality the rest of
the package reports is checked against this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from lcsample import _ulmc
from lcsample.model import QuadraticPotential

INF = math.inf
_PSD_TOL = 1e-12


class DivergentIntegralError(ArithmeticError):
    """Raised when a quadrature integrand is not integrable on its support."""


class ChainNotContractiveError(ValueError):
    pass


def _as_cov(cov, n: int) -> np.ndarray:
    c = np.array(cov, dtype=float, ndmin=2)
    if c.shape != (n, n):
        raise ValueError(f"covariance shape {c.shape} does not match dimension {n}")
    scale = max(np.abs(c).max(), 1.0)
    if np.abs(c - c.T).max() > 1e-12 * scale:
        raise ValueError("covariance is not symmetric")
    c = 0.5 * (c + c.T)
    w, v = np.linalg.eigh(c)
    floor = -_PSD_TOL * max(np.trace(c) / n, np.finfo(float).tiny)
    if w.min() < floor:
        raise ValueError(f"covariance has eigenvalue {w.min():.3e} below tolerance")
    if w.min() < 0:
        c = (v * np.clip(w, 0, None)) @ v.T
        c = 0.5 * (c + c.T)
    return c


@dataclass(frozen=True, eq=False)
class Gaussian:
    """N(mean, cov) with cov symmetric PSD (tiny negative eigenvalues clipped)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.array(self.mean, dtype=float).reshape(-1)
        c = _as_cov(self.cov, m.size)
        m.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", c)

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def dirac(cls, point) -> "Gaussian":
        p = np.array(point, dtype=float).reshape(-1)
        return cls(p, np.zeros((p.size, p.size)))

    @classmethod
    def isotropic(cls, mean, var: float) -> "Gaussian":
        m = np.array(mean, dtype=float).reshape(-1)
        return cls(m, var * np.eye(m.size))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        root = psd_sqrt(self.cov)
        return self.mean + rng.standard_normal((n, self.dim)) @ root.T

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.reshape(-1).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Gaussian":
        m = np.asarray(d["mean"], dtype=float)
        return cls(m, np.asarray(d["cov"], dtype=float).reshape(m.size, m.size))


def psd_sqrt(mat) -> np.ndarray:
    """Symmetric square root with eigenvalue floor 0."""
    w, v = np.linalg.eigh(np.asarray(mat, dtype=float))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.T


@dataclass(frozen=True, eq=False)
class AffineGaussianKernel:
    """x -> N(A x + b, Q)."""

    linear: np.ndarray
    offset: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        a = np.array(self.linear, dtype=float, ndmin=2)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("linear part must be square")
        b = np.array(self.offset, dtype=float).reshape(-1)
        if b.size != n:
            raise ValueError("offset dimension mismatch")
        q = _as_cov(self.noise_cov, n)
        for arr in (a, b, q):
            arr.setflags(write=False)
        object.__setattr__(self, "linear", a)
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "noise_cov", q)

    @property
    def dim(self) -> int:
        return self.offset.size

    def apply(self, g: Gaussian, n_steps: int = 1) -> Gaussian:
        """Law after ``n_steps`` transitions from ``g``."""
        mean, cov = g.mean, g.cov
        if mean.size != self.dim:
            raise ValueError("dimension mismatch")
        a, b, q = self.linear, self.offset, self.noise_cov
        for _ in range(n_steps):
            mean = a @ mean + b
            cov = a @ cov @ a.T + q
            cov = 0.5 * (cov + cov.T)
        return Gaussian(mean, cov)

    def conjugate(self, m) -> "AffineGaussianKernel":
        """The same kernel expressed in coordinates z = M x."""
        m = np.asarray(m, dtype=float)
        minv = np.linalg.inv(m)
        return AffineGaussianKernel(m @ self.linear @ minv, m @ self.offset,
                                    m @ self.noise_cov @ m.T)


def affine_push(g: Gaussian, a, b) -> Gaussian:
    a = np.array(a, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).reshape(-1)
    if a.shape[1] != g.dim or a.shape[0] != b.size:
        raise ValueError(f"shape mismatch: A {a.shape}, b {b.shape}, dim {g.dim}")
    cov = a @ g.cov @ a.T
    return Gaussian(a @ g.mean + b, 0.5 * (cov + cov.T))


def convolve(g: Gaussian, q) -> Gaussian:
    q = np.array(q, dtype=float, ndmin=2)
    if q.shape != (g.dim, g.dim):
        raise ValueError(f"shape mismatch: noise {q.shape}, dim {g.dim}")
    return Gaussian(g.mean, g.cov + q)


# -- divergences ------------------------------------------------------------


def _rank_basis(cov: np.ndarray, tol: float):
    w, v = np.linalg.eigh(cov)
    keep = w > tol
    return v[:, keep]


def _common_support(g1: Gaussian, g2: Gaussian):
    """Restrict both Gaussians to their common affine support.

    Returns ``(m1, s1, m2, s2)`` in reduced coordinates, or ``None`` when the
    supports differ (the divergence is then infinite).
    """
    if g1.dim != g2.dim:
        raise ValueError("dimension mismatch")
    scale = max(np.linalg.eigvalsh(g1.cov + g2.cov).max(), np.finfo(float).tiny)
    tol = 1e-12 * scale
    u1 = _rank_basis(g1.cov, tol)
    u2 = _rank_basis(g2.cov, tol)
    if u1.shape[1] == g1.dim and u2.shape[1] == g2.dim:
        return g1.mean, g1.cov, g2.mean, g2.cov
    if u1.shape[1] != u2.shape[1]:
        return None
    if u1.shape[1] and np.linalg.norm(u1 - u2 @ (u2.T @ u1)) > 1e-8:
        return None
    delta = g1.mean - g2.mean
    resid = delta - u2 @ (u2.T @ delta)
    if np.linalg.norm(resid) > 1e-10 * (1.0 + np.linalg.norm(delta)):
        return None
    u = u2
    return u.T @ g1.mean, u.T @ g1.cov @ u, u.T @ g2.mean, u.T @ g2.cov @ u


def _logdet(s: np.ndarray) -> float:
    if s.size == 0:
        return 0.0
    sign, val = np.linalg.slogdet(s)
    if sign <= 0:
        return -INF
    return float(val)


def _relative_spectrum(s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Eigenvalues of S2^{-1/2} S1 S2^{-1/2} minus one.

    Taken from the pencil (S1 - S2, S2) so that nearly equal covariances give
    values near zero without cancellation in log-determinants.
    """
    diff = s1 - s2
    return linalg.eigh(0.5 * (diff + diff.T), s2, eigvals_only=True)


def kl_gaussian(g1: Gaussian, g2: Gaussian) -> float:
    """KL(g1 || g2)."""
    red = _common_support(g1, g2)
    if red is None:
        return INF
    m1, s1, m2, s2 = red
    n = m1.size
    if n == 0:
        return 0.0
    delta = m1 - m2
    nu = _relative_spectrum(s1, s2)
    if np.any(nu <= -1):
        return INF
    val = 0.5 * (np.sum(nu - np.log1p(nu)) + delta @ np.linalg.solve(s2, delta))
    return max(float(val), 0.0)


def renyi_gaussian(q: float, g1: Gaussian, g2: Gaussian) -> float:
    """R_q(g1 || g2) in closed form; ``math.inf`` when it is infinite.

    Uses the interpolated covariance ``S_q = q S2 + (1 - q) S1``; the
    divergence is infinite whenever ``S_q`` fails to be positive definite.
    """
    if q < 1:
        raise ValueError(f"Renyi order must be >= 1, got {q}")
    if q == INF:
        return renyi_inf_gaussian(g1, g2)
    if q == 1:
        return kl_gaussian(g1, g2)
    red = _common_support(g1, g2)
    if red is None:
        return INF
    m1, s1, m2, s2 = red
    if m1.size == 0:
        return 0.0
    nu = _relative_spectrum(s1, s2)
    mix = (1 - q) * nu  # S_q = S2^{1/2} (I + (1 - q) N) S2^{1/2}
    if np.any(nu <= -1) or np.any(mix <= -1):
        return INF
    sq = q * s2 + (1 - q) * s1
    sq = 0.5 * (sq + sq.T)
    delta = m1 - m2
    quad = 0.5 * q * float(delta @ np.linalg.solve(sq, delta))
    logs = float(np.sum(np.log1p(mix) - (1 - q) * np.log1p(nu)))
    return max(quad - logs / (2 * (q - 1)), 0.0)


def chi2_gaussian(g1: Gaussian, g2: Gaussian) -> float:
    r2 = renyi_gaussian(2.0, g1, g2)
    return INF if r2 == INF else math.expm1(r2)


def renyi_inf_gaussian(g1: Gaussian, g2: Gaussian) -> float:
    """log ess-sup of the density ratio, by maximizing the log-ratio quadratic."""
    red = _common_support(g1, g2)
    if red is None:
        return INF
    m1, s1, m2, s2 = red
    if m1.size == 0:
        return 0.0
    p1 = np.linalg.inv(s1)
    p2 = np.linalg.inv(s2)
    curv = p1 - p2
    curv = 0.5 * (curv + curv.T)
    lin = p1 @ m1 - p2 @ m2
    w, v = np.linalg.eigh(curv)
    tol = 1e-12 * max(np.abs(w).max(), np.abs(p1).max())
    if w.min() < -tol:
        return INF
    null = np.abs(w) <= tol
    if null.any() and np.linalg.norm(v[:, null].T @ lin) > 1e-10 * (1 + np.linalg.norm(lin)):
        return INF
    winv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, w))
    x = (v * winv) @ (v.T @ lin)

    def log_ratio(z):
        r1 = z - m1
        r2 = z - m2
        return (-0.5 * r1 @ p1 @ r1 + 0.5 * r2 @ p2 @ r2
                + 0.5 * (_logdet(s2) - _logdet(s1)))

    return max(float(log_ratio(x)), 0.0)


def w2_gaussian(g1: Gaussian, g2: Gaussian) -> float:
    """2-Wasserstein distance (Bures formula)."""
    if g1.dim != g2.dim:
        raise ValueError("dimension mismatch")
    r2 = psd_sqrt(g2.cov)
    cross = psd_sqrt(r2 @ g1.cov @ r2)
    val = np.sum((g1.mean - g2.mean) ** 2) + np.trace(g1.cov + g2.cov - 2 * cross)
    return math.sqrt(max(float(val), 0.0))


# -- quadrature oracle ------------------------------------------------------


_MAX_PANELS = 2_000_000


def _adaptive_simpson(f, a: float, b: float, tol: float, panels: int = 200,
                      max_depth: int = 40) -> float:
    """Adaptive Simpson rule, refined level by level.

    The interval is pre-split into ``panels`` pieces so narrow peaks cannot
    fall between the coarse nodes. All intervals awaiting refinement at one
    level are evaluated in a single vectorized call of ``f``.
    """
    lo = np.linspace(a, b, panels + 1)
    hi = lo[1:]
    lo = lo[:-1]
    flo, fhi, fmid = f(lo), f(hi), f(0.5 * (lo + hi))
    whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
    eps = np.full(panels, tol / panels)
    total = 0.0
    for depth in range(max_depth + 1):
        if not (np.all(np.isfinite(flo)) and np.all(np.isfinite(fhi)) and np.all(np.isfinite(fmid))):
            raise DivergentIntegralError("divergent: non-finite integrand")
        mid = 0.5 * (lo + hi)
        fl = f(0.5 * (lo + mid))
        fr = f(0.5 * (mid + hi))
        if not (np.all(np.isfinite(fl)) and np.all(np.isfinite(fr))):
            raise DivergentIntegralError("divergent: non-finite integrand")
        left = (mid - lo) / 6 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * fr + fhi)
        err = left + right - whole
        # never ask for more than the rounding floor of the panel value
        floor = 1e-14 * np.abs(left + right)
        done = (np.abs(err) <= 15 * np.maximum(eps, floor)) | (depth == max_depth)
        total += float(np.sum((left + right + err / 15)[done]))
        go_on = ~done
        if not go_on.any():
            break
        if 2 * go_on.sum() > _MAX_PANELS:
            raise DivergentIntegralError("quadrature did not converge within the panel budget")
        lo, mid, hi = lo[go_on], mid[go_on], hi[go_on]
        flo, fl, fmid, fr, fhi = flo[go_on], fl[go_on], fmid[go_on], fr[go_on], fhi[go_on]
        left, right, eps = left[go_on], right[go_on], eps[go_on] / 2
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        flo, fmid, fhi = np.concatenate([flo, fmid]), np.concatenate([fl, fr]), np.concatenate([fmid, fhi])
        whole = np.concatenate([left, right])
        eps = np.concatenate([eps, eps])
    return total


def gaussian_support_1d(*gs: Gaussian, width: float = 20.0) -> tuple[float, float]:
    """[min mean - width * max std, max mean + width * max std] for 1-D Gaussians."""
    means = [float(g.mean[0]) for g in gs]
    std = max(math.sqrt(float(g.cov[0, 0])) for g in gs)
    return min(means) - width * std, max(means) + width * std


def renyi_quadrature_1d(q: float, logpdf1: Callable, logpdf2: Callable,
                        support: Sequence[float], tol: float = 1e-10) -> float:
    """(1/(q-1)) log of the integral of p1^q p2^(1-q) over ``support``.

    Takes log-densities so that far tails, where both densities underflow,
    still give a finite log-integrand. The integrand is rescaled by its
    peak on a coarse grid and ``tol`` is relative to the integral, so the
    returned value is accurate to about ``tol / (q - 1)`` in absolute terms.
    Test oracle only. Raises :class:`DivergentIntegralError` when the
    integrand is non-finite or still carries mass at the support edges.
    """
    if q <= 1:
        raise ValueError("quadrature oracle needs q > 1")
    lo, hi = float(support[0]), float(support[1])

    def log_integrand(x):
        with np.errstate(over="ignore", invalid="ignore"):
            l1 = np.asarray(logpdf1(x), dtype=float)
            logv = q * l1 + (1 - q) * np.asarray(logpdf2(x), dtype=float)
            return np.where(np.isneginf(l1), -INF, logv)

    grid = np.linspace(lo, hi, 401)
    inner = log_integrand(grid)
    if np.any(np.isnan(inner)) or np.any(inner == INF):
        raise DivergentIntegralError("divergent: non-finite integrand")
    log_peak = float(inner.max())
    if log_peak == -INF:
        raise DivergentIntegralError("divergent: integrand vanishes on the support")
    if log_integrand(np.array([lo, hi])).max() - log_peak > math.log(1e-12):
        raise DivergentIntegralError("divergent: integrand not decaying at the support edges")

    def scaled(x):
        return np.exp(log_integrand(x) - log_peak)

    coarse = float(np.sum(np.exp(inner - log_peak))) * (hi - lo) / 400
    val = _adaptive_simpson(scaled, lo, hi, tol * coarse)
    return (math.log(val) + log_peak) / (q - 1)


# -- exact kernels on quadratic targets -------------------------------------


def lmc_kernel(p: QuadraticPotential, h: float) -> AffineGaussianKernel:
    """One LMC step x -> x - h grad f(x) + sqrt(2h) xi on a quadratic."""
    if h <= 0:
        raise ValueError("step size must be positive")
    d = p.dim
    lam = p.precision
    return AffineGaussianKernel(np.eye(d) - h * lam, h * lam @ p.center, 2 * h * np.eye(d))


def ulmc_linear_parts(p: QuadraticPotential, gamma: float, h: float):
    """(A, b) of the ULMC mean map on R^{2d}, state ordered (x, y)."""
    c = _ulmc.ulmc_scalars(gamma, h)
    d = p.dim
    eye = np.eye(d)
    lam = p.precision
    a = np.block([[eye - c["c_g"] * lam, c["c_v"] * eye],
                  [-c["c_v"] * lam, c["a"] * eye]])
    lm = lam @ p.center
    b = np.concatenate([c["c_g"] * lm, c["c_v"] * lm])
    return a, b


def ulmc_kernel(p: QuadraticPotential, h: float, gamma: float) -> AffineGaussianKernel:
    """Exact one-step ULMC law on a quadratic: N(F(x, y), Sigma (x) I_d)."""
    if h <= 0 or gamma <= 0:
        raise ValueError("need h > 0 and gamma > 0")
    a, b = ulmc_linear_parts(p, gamma, h)
    noise = np.kron(_ulmc.ulmc_sigma(gamma, h), np.eye(p.dim))
    return AffineGaussianKernel(a, b, noise)


def spectral_radius(a) -> float:
    return float(np.abs(np.linalg.eigvals(np.asarray(a, dtype=float))).max())


def stationary_of_affine_chain(k: AffineGaussianKernel, tol: float = 1e-13,
                               max_iter: int = 1_000_000) -> Gaussian:
    """Unique invariant Gaussian of a contractive affine-Gaussian chain."""
    rho = spectral_radius(k.linear)
    if rho >= 1 - 1e-10:
        raise ChainNotContractiveError(f"chain not contractive: spectral radius {rho:.6g}")
    n = k.dim
    mean = np.linalg.solve(np.eye(n) - k.linear, k.offset)
    a, q = k.linear, k.noise_cov
    cov = q.copy()
    for _ in range(max_iter):
        nxt = a @ cov @ a.T + q
        nxt = 0.5 * (nxt + nxt.T)
        if np.abs(nxt - cov).max() <= tol:
            cov = nxt
            break
        cov = nxt
    else:
        raise ChainNotContractiveError("stationary covariance iteration did not converge")
    return Gaussian(mean, cov)


def target_gaussian(p: QuadraticPotential) -> Gaussian:
    """pi = N(m, Lambda^{-1}) for a positive definite quadratic."""
    if p.alpha <= 0:
        raise ValueError("target is not normalizable: precision not positive definite")
    return Gaussian(p.center, np.linalg.inv(p.precision))


def extended_target(p: QuadraticPotential) -> Gaussian:
    """pi (x) N(0, I_d) on (x, y)."""
    pi = target_gaussian(p)
    d = p.dim
    cov = np.zeros((2 * d, 2 * d))
    cov[:d, :d] = pi.cov
    cov[d:, d:] = np.eye(d)
    return Gaussian(np.concatenate([pi.mean, np.zeros(d)]), cov)

"""Proximal sampler: alternate Gaussian convolution and the restricted Gaussian oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from lcsample import gaussian_oracle as go
from lcsample.model import Potential, QuadraticPotential

# rgo(y_batch, rng) -> (x_batch, diagnostics dict)
Rgo = Callable[[np.ndarray, np.random.Generator], tuple]


@dataclass(frozen=True)
class ProxParams:
    h: float
    n_prox: int
    eps_rgo: Optional[float] = None
    rgo_mode: str = "exact-quadratic"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.n_prox < 0:
            raise ValueError("n_prox must be nonnegative")
        if self.rgo_mode not in ("exact-quadratic", "inner-sampler"):
            raise ValueError(f"unknown rgo_mode {self.rgo_mode!r}")

    @classmethod
    def default(cls, beta: float, n_prox: int, **kw) -> "ProxParams":
        return cls(1.0 / (2.0 * beta), n_prox, **kw)


def _rgo_system(p: QuadraticPotential, h: float):
    s = p.precision + np.eye(p.dim) / h
    if np.linalg.eigvalsh(s).min() <= 0:
        raise ValueError("Lambda + I/h is not positive definite")
    cov = np.linalg.inv(s)
    return 0.5 * (cov + cov.T)


def rgo_exact_quadratic(p: QuadraticPotential, h: float, y) -> go.Gaussian:
    """pi^{X|Y=y} for a quadratic target, in closed form."""
    cov = _rgo_system(p, h)
    y = np.asarray(y, dtype=float).reshape(p.dim)
    return go.Gaussian(cov @ (p.precision @ p.center + y / h), cov)


def exact_rgo(p: QuadraticPotential, h: float) -> Rgo:
    """Batched sampler for the exact quadratic RGO."""
    cov = _rgo_system(p, h)
    root = go.psd_sqrt(cov)
    shift = cov @ p.precision @ p.center

    def rgo(y, rng):
        mean = shift + (y / h) @ cov.T
        return mean + rng.standard_normal(y.shape) @ root.T, {}

    return rgo


def prox_gibbs_kernel(p: QuadraticPotential, h: float) -> go.AffineGaussianKernel:
    """X_k -> X_{k+1} for one full step with the exact RGO, as an affine kernel."""
    cov = _rgo_system(p, h)
    a = cov / h
    return go.AffineGaussianKernel(a, cov @ p.precision @ p.center, h * a @ a.T + cov)


def forward_contraction_factor(alpha: float, h: float, q: float) -> float:
    """(1 + alpha h)^{-1/q}, the Renyi contraction of the forward step."""
    return (1.0 + alpha * h) ** (-1.0 / q)


@dataclass
class ProxRun:
    x: np.ndarray
    y: np.ndarray
    diagnostics: list = field(default_factory=list)
    rgo_budget: float = 0.0  # accumulated eps_rgo^2 over outer steps


def proximal_sampler_run(p: Potential, params: ProxParams, rgo: Rgo, init, rng: np.random.Generator,
                         n_chains: Optional[int] = None) -> ProxRun:
    """Run ``params.n_prox`` outer iterations from ``init``.

    ``init`` is a Gaussian (``n_chains`` draws are taken), a single point
    (replicated ``n_chains`` times) or a batch of points.
    """
    if isinstance(init, go.Gaussian):
        x = init.sample(rng, n_chains or 1)
    else:
        x = np.array(init, dtype=float)
        if x.ndim == 1:
            x = np.tile(x, (n_chains or 1, 1))
    sqh = math.sqrt(params.h)
    y = x
    out = ProxRun(x, y)
    for k in range(params.n_prox):
        y = x + sqh * rng.standard_normal(x.shape)
        try:
            x, diag = rgo(y, rng)
        except Exception as err:
            raise RuntimeError(f"RGO failed at outer iteration {k}: {err}") from err
        out.diagnostics.append(diag)
        if params.eps_rgo is not None:
            out.rgo_budget += params.eps_rgo**2
    out.x, out.y = x, y
    return out

"""Unadjusted Langevin Monte Carlo."""

from __future__ import annotations

import math

import numpy as np

from lcsample.model import Potential


def lmc_step(p: Potential, x, h: float, rng: np.random.Generator) -> np.ndarray:
    """x - h grad f(x) + sqrt(2h) xi, for one point or a batch of points."""
    if h <= 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    return x - h * p.grad_at(x) + math.sqrt(2 * h) * rng.standard_normal(x.shape)


def lmc_run(p: Potential, x0, h: float, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    x = np.array(x0, dtype=float)
    for _ in range(n_steps):
        x = lmc_step(p, x, h, rng)
    return x

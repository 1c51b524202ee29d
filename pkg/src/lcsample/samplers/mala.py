"""Lazy Metropolis-adjusted Langevin."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lcsample.model import Potential


@dataclass(frozen=True)
class MalaParams:
    h: float
    laziness: float = 0.5

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if not 0 <= self.laziness < 1:
            raise ValueError("laziness must lie in [0, 1)")


def _logratio(fx, gx, fy, gy, x, y, h):
    fwd = np.sum((y - x + h * gx) ** 2, axis=-1)
    bwd = np.sum((x - y + h * gy) ** 2, axis=-1)
    return fx - fy + (fwd - bwd) / (4 * h)


def mala_accept_logratio(p: Potential, x, y, h: float) -> np.ndarray:
    """log of pi(y) Q(y, x) / (pi(x) Q(x, y)) for the LMC proposal Q.

    Only differences of f are used, never a normalizing constant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _logratio(p.value_at(x), p.grad_at(x), p.value_at(y), p.grad_at(y), x, y, h)


def _transition(p: Potential, x, params: MalaParams, rng: np.random.Generator, cache=None):
    """One lazy step. ``cache`` holds (f, grad f) at ``x`` and is updated."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    h = params.h
    fx, gx = cache if cache is not None else (p.value_at(x), p.grad_at(x))
    propose = rng.random(n) >= params.laziness
    y = x - h * gx + math.sqrt(2 * h) * rng.standard_normal(x.shape)
    fy, gy = p.value_at(y), p.grad_at(y)
    logr = _logratio(fx, gx, fy, gy, x, y, h)
    log_u = np.log(rng.random(n))
    accept = propose & (log_u < np.minimum(logr, 0.0))
    keep = accept[:, None]
    new_cache = (np.where(accept, fy, fx), np.where(keep, gy, gx))
    return np.where(keep, y, x), accept, propose, new_cache


def mala_step(p: Potential, x, params: MalaParams, rng: np.random.Generator):
    """One lazy MALA step for each row of ``x``; returns ``(x_new, accepted)``.

    ``accepted`` is False for lazy holds as well as rejections.
    """
    single = np.asarray(x).ndim == 1
    xn, acc, _, _ = _transition(p, x, params, rng)
    return (xn[0], bool(acc[0])) if single else (xn, acc)


@dataclass
class MalaRun:
    x: np.ndarray
    n_steps: int
    proposed: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        """Non-lazy acceptance rate: accepted over proposed."""
        return self.accepted / self.proposed if self.proposed else float("nan")


def mala_run(p: Potential, x0, params: MalaParams, n_steps: int,
             rng: np.random.Generator) -> MalaRun:
    x = np.atleast_2d(np.array(x0, dtype=float))
    prop = acc = 0
    cache = None
    for _ in range(n_steps):
        x, a, pr, cache = _transition(p, x, params, rng, cache)
        prop += int(pr.sum())
        acc += int(a.sum())
    return MalaRun(x, n_steps, prop, acc)

"""Renyi-divergence algebra on bound values.

These helpers combine numbers that upper-bound divergences; they never
touch the measures themselves (see :mod:`lcsample.gaussian_oracle` for
that). Discrete helpers at the bottom are used as brute-force oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

INF = math.inf

_KINDS = ("renyi", "kl", "chi2", "tv", "w2")


@dataclass(frozen=True)
class DivergenceBound:
    """A numeric bound with a trace of how it was obtained."""

    kind: str
    value: float
    order: float | None = None
    provenance: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        if not self.value >= 0:
            raise ValueError(f"bound value must be nonnegative, got {self.value}")
        if self.kind == "renyi":
            check_order(self.order)

    def note(self, step: str) -> "DivergenceBound":
        return DivergenceBound(self.kind, self.value, self.order, self.provenance + (step,))


def check_order(q) -> float:
    if q is None or not q >= 1:
        raise ValueError(f"Renyi order must be >= 1, got {q}")
    return float(q)


def chi2_to_renyi2(chi2: float) -> float:
    if chi2 < 0:
        raise ValueError("chi2 must be nonnegative")
    return math.log1p(chi2)


def renyi2_to_chi2(r2: float) -> float:
    if r2 < 0:
        raise ValueError("R_2 must be nonnegative")
    return INF if r2 == INF else math.expm1(r2)


@dataclass(frozen=True)
class TriangleResult:
    value: float
    coefficient: float
    order_first: float   # order needed for R(mu || nu)
    order_second: float  # order needed for R(nu || pi)


def weak_triangle(q: float, lam: float, a: float, b: float) -> TriangleResult:
    """Bound R_q(mu||pi) from a >= R_{q/lam}(mu||nu) and b >= R_{(q-lam)/(1-lam)}(nu||pi)."""
    if not q > 1:
        raise ValueError(f"weak triangle needs q > 1, got {q}")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if a < 0 or b < 0:
        raise ValueError("bounds must be nonnegative")
    coef = (q - lam) / (q - 1)
    return TriangleResult(coef * a + b, coef, q / lam, (q - lam) / (1 - lam))


def warm_boost_chi2(tv: float, r3: float) -> float:
    """sqrt(TV * (e^{2 R_3} + 1)), an upper bound on chi^2 after TV mixing from a warm start."""
    if not 0 <= tv <= 1:
        raise ValueError(f"tv must lie in [0, 1], got {tv}")
    if r3 < 0:
        raise ValueError("r3 must be nonnegative")
    if tv == 0:
        return 0.0
    if r3 == INF:
        return INF
    return math.sqrt(tv * (math.exp(2 * r3) + 1))


def tv_empirical_1d(samples_a, samples_b, bins: int = 100) -> float:
    """Half L1 distance of histograms on a shared range. An estimate, not a bound."""
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty samples")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    pa = np.histogram(a, edges)[0] / a.size
    pb = np.histogram(b, edges)[0] / b.size
    return float(min(0.5 * np.abs(pa - pb).sum(), 1.0))


# -- discrete oracles -------------------------------------------------------

_ATOM_FLOOR = 1e-12


def _discrete_pair(mu, pi):
    mu = np.asarray(mu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if mu.shape != pi.shape or mu.ndim != 1:
        raise ValueError("distributions must be 1-D arrays of equal length")
    return mu, pi


def renyi_discrete(q: float, mu, pi) -> float:
    """R_q(mu || pi) on a finite set; +inf if mu charges an atom pi does not."""
    q = check_order(q)
    mu, pi = _discrete_pair(mu, pi)
    live = pi >= _ATOM_FLOOR
    if np.any(mu[~live] > 0):
        return INF
    m, p = mu[live], pi[live]
    pos = m > 0
    if q == 1:
        return max(float(np.sum(m[pos] * np.log(m[pos] / p[pos]))), 0.0)
    if q == INF:
        return max(float(np.log((m[pos] / p[pos]).max())), 0.0)
    logs = q * np.log(m[pos]) + (1 - q) * np.log(p[pos])
    return max(float(logsumexp(logs)) / (q - 1), 0.0)


def chi2_discrete(mu, pi) -> float:
    mu, pi = _discrete_pair(mu, pi)
    live = pi >= _ATOM_FLOOR
    if np.any(mu[~live] > 0):
        return INF
    return max(float(np.sum(mu[live] ** 2 / pi[live]) - 1.0), 0.0)


def tv_discrete(mu, pi) -> float:
    mu, pi = _discrete_pair(mu, pi)
    return 0.5 * float(np.abs(mu - pi).sum())

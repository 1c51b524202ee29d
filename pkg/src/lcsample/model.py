"""Target potentials f with pi proportional to exp(-f).

A potential carries its value and gradient together with caller-certified
curvature bounds ``alpha <= eig(Hess f) <= beta``. Quadratic potentials
compute their bounds exactly from the precision matrix.

All callables accept either a single point of shape ``(d,)`` or a batch of
shape ``(n, d)``; values come back with shape ``()`` or ``(n,)``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


class Potential:
    """A smooth potential with known curvature constants.

    Args:
        dim: Ambient dimension d.
        value_at: ``x -> f(x)``, defined up to an additive constant.
        grad_at: ``x -> grad f(x)``.
        alpha: Lower bound on the Hessian spectrum (may be negative).
        beta: Upper bound on the Hessian spectrum.
        minimizer: The minimizer x*, if known.
    """

    def __init__(
        self,
        dim: int,
        value_at: Callable[[np.ndarray], np.ndarray],
        grad_at: Callable[[np.ndarray], np.ndarray],
        alpha: float,
        beta: float,
        minimizer: Optional[Sequence[float]] = None,
    ):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        if beta < alpha:
            raise ValueError(f"beta={beta} is smaller than alpha={alpha}")
        self._dim = int(dim)
        self._value = value_at
        self._grad = grad_at
        self._alpha = float(alpha)
        self._beta = float(beta)
        self._minimizer = None
        self._offset = 0.0
        if minimizer is not None:
            xs = np.array(minimizer, dtype=float).reshape(self._dim)
            xs.setflags(write=False)
            self._minimizer = xs
            # report f with f(x*) = 0
            self._offset = float(value_at(xs))

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def alpha(self) -> float:
        return self._alpha

    @property
    def beta(self) -> float:
        return self._beta

    @property
    def minimizer(self) -> Optional[np.ndarray]:
        return self._minimizer

    def value_at(self, x) -> np.ndarray:
        return np.asarray(self._value(np.asarray(x, dtype=float))) - self._offset

    def grad_at(self, x) -> np.ndarray:
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def __repr__(self) -> str:
        return (f"{type(self).__name__}(dim={self.dim}, alpha={self.alpha:g}, "
                f"beta={self.beta:g})")


class QuadraticPotential(Potential):
    """f(x) = 1/2 (x - m)^T Lambda (x - m).

    ``alpha`` and ``beta`` are the extreme eigenvalues of ``precision``.
    The precision may be indefinite (used by the regularity checks); the
    minimizer is only recorded when it is positive definite.
    """

    def __init__(self, precision, center=None):
        lam = np.array(precision, dtype=float, ndmin=2)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise ValueError("precision must be a square matrix")
        scale = max(np.abs(lam).max(), np.finfo(float).tiny)
        if np.abs(lam - lam.T).max() > 1e-12 * scale:
            raise ValueError("precision matrix is not symmetric")
        lam = 0.5 * (lam + lam.T)
        d = lam.shape[0]
        m = np.zeros(d) if center is None else np.array(center, dtype=float).reshape(d)
        eig = np.linalg.eigvalsh(lam)
        lam.setflags(write=False)
        m.setflags(write=False)
        self.precision = lam
        self.center = m
        self.eigenvalues = eig
        super().__init__(
            dim=d,
            value_at=self._quad_value,
            grad_at=self._quad_grad,
            alpha=float(eig[0]),
            beta=float(eig[-1]),
            minimizer=m if eig[0] > 0 else None,
        )

    def _quad_value(self, x):
        z = x - self.center
        return 0.5 * np.sum((z @ self.precision) * z, axis=-1)

    def _quad_grad(self, x):
        return (x - self.center) @ self.precision

    @classmethod
    def isotropic(cls, dim: int, curvature: float = 1.0, center=None):
        return cls(curvature * np.eye(dim), center)

    @classmethod
    def from_spectrum(cls, spectrum, center=None, rotation=None):
        """Quadratic with prescribed Hessian eigenvalues, optionally rotated."""
        lam = np.diag(np.asarray(spectrum, dtype=float))
        if rotation is not None:
            q = np.asarray(rotation, dtype=float)
            lam = q @ lam @ q.T
            lam = 0.5 * (lam + lam.T)
        return cls(lam, center)

    @classmethod
    def from_text(cls, text: str) -> "QuadraticPotential":
        """Parse ``dim``, then ``dim`` rows of the precision, then the center.

        Blank lines and lines starting with ``#`` are ignored. The center
        line may be omitted, in which case it defaults to the origin.
        """
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append((lineno, line.replace(",", " ").split()))
        if not rows:
            raise ValueError("empty quadratic description")
        lineno, head = rows[0]
        if len(head) != 1:
            raise ValueError(f"line {lineno}: expected the dimension alone")
        try:
            d = int(head[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad dimension {head[0]!r}") from None
        if len(rows) not in (d + 1, d + 2):
            raise ValueError(f"expected {d} matrix rows and an optional center line, "
                             f"found {len(rows) - 1} lines")
        parsed = []
        for lineno, toks in rows[1:]:
            if len(toks) != d:
                raise ValueError(f"line {lineno}: expected {d} entries, got {len(toks)}")
            try:
                parsed.append([float(t) for t in toks])
            except ValueError as err:
                raise ValueError(f"line {lineno}: {err}") from None
        center = parsed[d] if len(parsed) > d else None
        return cls(np.array(parsed[:d]), center)

    @classmethod
    def load(cls, path) -> "QuadraticPotential":
        return cls.from_text(Path(path).read_text())


def condition_number(p: Potential) -> float:
    """kappa = beta / alpha."""
    if p.alpha <= 0:
        raise ValueError("kappa undefined: alpha must be positive")
    return p.beta / p.alpha


def fd_gradient(p: Potential, x) -> np.ndarray:
    """Central finite-difference gradient of ``p.value_at`` at a single point."""
    x = np.asarray(x, dtype=float)
    step = _FD_STEP * (1.0 + np.linalg.norm(x))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (p.value_at(x + e) - p.value_at(x - e)) / (2 * step)
    return g


def grad_check(p: Potential, points) -> float:
    """Max over points of ``|grad - fd_grad| / (1 + |grad|)``."""
    worst = 0.0
    for x in np.atleast_2d(np.asarray(points, dtype=float)):
        g = p.grad_at(x)
        err = np.linalg.norm(g - fd_gradient(p, x)) / (1.0 + np.linalg.norm(g))
        worst = max(worst, float(err))
    return worst


def fd_hessian_form(p: Potential, x, u) -> float:
    """u^T Hess f(x) u / |u|^2 by central differences of the gradient."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    un = u / np.linalg.norm(u)
    step = _FD_STEP * (1.0 + np.linalg.norm(x))
    dg = (p.grad_at(x + step * un) - p.grad_at(x - step * un)) / (2 * step)
    return float(un @ dg)


def restricted(p: Potential, y, h: float) -> Potential:
    """The RGO potential x -> f(x) + |x - y|^2 / (2h).

    ``y`` may be a single point or a batch matching the batch of the points
    the returned potential is evaluated at. Curvature bounds shift by 1/h.
    The minimizer is only known in closed form for quadratic ``p`` with a
    single ``y``.
    """
    y = np.asarray(y, dtype=float)

    def value(x):
        return p.value_at(x) + np.sum((x - y) ** 2, axis=-1) / (2 * h)

    def grad(x):
        return p.grad_at(x) + (x - y) / h

    minimizer = None
    if isinstance(p, QuadraticPotential) and y.ndim == 1:
        s = p.precision + np.eye(p.dim) / h
        minimizer = np.linalg.solve(s, p.precision @ p.center + y / h)
    return Potential(p.dim, value, grad, p.alpha + 1.0 / h, p.beta + 1.0 / h, minimizer)

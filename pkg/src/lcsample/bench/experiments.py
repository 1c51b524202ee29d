"""The sweep experiments behind ``lcsample run``.

Each experiment lists its sweep points and evaluates one point at a time
with an RNG stream derived from (seed, point index). Evaluation returns a
list of rows; ``finalize`` may merge partial rows (replica blocks) in point
order. Every row carries both sides of its inequality.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from lcsample import gaussian_oracle as go
from lcsample import orlicz, shifted
from lcsample.bench.config import ExperimentConfig, random_rotation
from lcsample.model import QuadraticPotential
from lcsample.samplers import mala, prox, ulmc
from lcsample.samplers.pipelines import (
    FullConstants,
    WarmConstants,
    WeakConstants,
    pipeline_full,
    pipeline_weak,
)

LOG2 = math.log(2.0)


def _list(v, default):
    if v is None:
        return list(default)
    return v if isinstance(v, list) else [v]


def _range(cfg, lo_key, hi_key, lo, hi):
    return list(range(int(cfg.param(lo_key, lo)), int(cfg.param(hi_key, hi)) + 1))


def row(measured, bound, ok, work=0, **params) -> dict:
    return {"params": params, "measured": float(measured), "bound": float(bound),
            "pass": bool(ok), "work": int(work)}


def leq(measured, bound, rtol=0.0, atol=0.0) -> bool:
    return measured <= bound + rtol * abs(bound) + atol


class Experiment:
    columns: tuple = ()

    def points(self, cfg: ExperimentConfig) -> list:
        raise NotImplementedError

    def evaluate(self, cfg: ExperimentConfig, point: dict, rng: np.random.Generator) -> list:
        raise NotImplementedError

    def finalize(self, cfg: ExperimentConfig, rows: list) -> list:
        return rows


class PabiVerify(Experiment):
    columns = ("c", "n_steps", "q", "u_norm", "sigma")

    def points(self, cfg):
        sigma = float(cfg.param("sigma", 1.0))
        pts = []
        for c, n, q, u in itertools.product(
                _list(cfg.param("c"), [0.5, 0.8, 0.95]),
                _range(cfg, "n_min", "n_max", 5, 100),
                _list(cfg.param("q"), [1.5, 2, 4]),
                _list(cfg.param("u_norm"), [0.1, 1, 10])):
            spec = shifted.CniSpec(c, sigma, n, q, u / math.sqrt(LOG2))
            if shifted.pabi_condition_holds(spec):
                pts.append({"c": c, "n_steps": n, "q": q, "u_norm": u, "sigma": sigma})
        return pts

    def evaluate(self, cfg, pt, rng):
        spec = shifted.CniSpec(pt["c"], pt["sigma"], pt["n_steps"], pt["q"],
                               pt["u_norm"] / math.sqrt(LOG2))
        exact = shifted.cni_exact_gaussian(spec, [pt["u_norm"]])
        bound = shifted.pabi_orlicz_bound(spec)
        return [row(exact, bound, leq(exact, bound), pt["n_steps"], **pt)]


def lmc_exact_kl(lam: float, h: float, n: int, gap: float = 1.0) -> float:
    p = QuadraticPotential(np.array([[lam]]))
    k = go.lmc_kernel(p, h)
    g1 = k.apply(go.Gaussian.dirac([gap]), n)
    g0 = k.apply(go.Gaussian.dirac([0.0]), n)
    return go.kl_gaussian(g1, g0)


class RegularityVerify(Experiment):
    columns = ("kind", "lam", "h", "n_steps")

    def points(self, cfg):
        pts = []
        for lam in _list(cfg.param("lam"), [-0.5, 0.5, 1, 2]):
            for h in _list(cfg.param("h"), [0.05, 0.1, 0.2, 0.4]):
                r = shifted.gradient_step_rate(lam, lam, h)
                if lam > 0 and r <= 1:
                    continue  # only contractive steps for positive curvature
                for n in _range(cfg, "n_min", "n_max", 1, 50):
                    pts.append({"kind": "kl", "lam": lam, "h": h, "n_steps": n})
        n_lim = int(cfg.param("limit_steps", 10_000))
        for lam in _list(cfg.param("limit_alpha"), [0.5, 1, 2]):
            pts.append({"kind": "limit", "lam": lam, "h": float(cfg.param("horizon", 1.0)) / n_lim,
                        "n_steps": n_lim})
        return pts

    def evaluate(self, cfg, pt, rng):
        lam, h, n = pt["lam"], pt["h"], pt["n_steps"]
        inp = shifted.RegularityInputs(lam, lam, h, n, 1.0)
        coeff = shifted.lmc_regularity_coeff(inp, allow_expansive=True)
        if pt["kind"] == "kl":
            exact = lmc_exact_kl(lam, h, n)
            # equality holds in one dimension, so compare with a relative tolerance
            return [row(exact, coeff, leq(exact, coeff, rtol=1e-12), n, **pt)]
        limit = shifted.ld_regularity_coeff(lam, h * n)
        rel = abs(coeff / limit - 1)
        return [row(rel, 0.01, rel <= 0.01, n, **pt)]


def _extended_start(p: QuadraticPotential) -> go.Gaussian:
    d = p.dim
    cov = np.zeros((2 * d, 2 * d))
    cov[d:, d:] = np.eye(d)
    return go.Gaussian(np.concatenate([p.minimizer, np.zeros(d)]), cov)


class UlmcBiasScaling(Experiment):
    columns = ("h", "horizon", "stationary_r2")

    def points(self, cfg):
        return [{"h": h} for h in _list(cfg.param("h"), [0.02, 0.01, 0.005, 0.0025])]

    def evaluate(self, cfg, pt, rng):
        p = cfg.potential() if cfg.target else QuadraticPotential.isotropic(1)
        h, horizon = pt["h"], float(cfg.param("horizon", 1.0))
        q = float(cfg.param("q", 2.0))
        gamma = math.sqrt(2 * p.beta)
        k = go.ulmc_kernel(p, h, gamma)
        pi = go.extended_target(p)
        n = max(int(round(horizon / h)), 1)
        finite = go.renyi_gaussian(q, k.apply(pi, n), pi)
        stat = go.renyi_gaussian(q, go.stationary_of_affine_chain(k), pi)
        bound = ulmc.ulmc_bias_bound(p.beta, p.dim, h, q, n * h, cfg.const("bias", 1.0))
        return [row(finite, bound, leq(finite, bound), n, h=h, horizon=n * h, stationary_r2=stat)]


def random_quadratic(rng, d: int, kappa: float, beta: float) -> QuadraticPotential:
    alpha = beta / kappa
    spec = np.concatenate([[alpha, beta], rng.uniform(alpha, beta, max(d - 2, 0))])[:d]
    if d == 1:
        spec = np.array([beta])
    rot = random_rotation(d, int(rng.integers(2**31))) if d > 1 else None
    return QuadraticPotential.from_spectrum(spec, rng.standard_normal(d), rot)


class UlmcContraction(Experiment):
    columns = ("instance", "d", "kappa", "beta", "h")

    def points(self, cfg):
        return [{"instance": i} for i in range(int(cfg.param("instances", 50)))]

    def evaluate(self, cfg, pt, rng):
        d = int(rng.integers(2, int(cfg.param("d_max", 6)) + 1))
        kappa = math.exp(rng.uniform(0, math.log(float(cfg.param("kappa_max", 100)))))
        beta = math.exp(rng.uniform(-1, 2))
        p = random_quadratic(rng, d, kappa, beta)
        kappa = p.beta / p.alpha
        h = float(cfg.param("h_scale", 0.01)) / (kappa * math.sqrt(p.beta))
        lip = ulmc.ulmc_contraction_measured(p, ulmc.UlmcParams.default(p.beta, h))
        bound = 1 - p.alpha * h / (2 * math.sqrt(2 * p.beta))
        return [row(lip, bound, leq(lip, bound), 1, instance=pt["instance"], d=d, kappa=kappa,
                    beta=p.beta, h=h)]


class MalaStationarity(Experiment):
    columns = ("check", "h", "n_chains", "n_steps")

    def points(self, cfg):
        return [{"check": "antisymmetry"}, {"check": "moments"}]

    def evaluate(self, cfg, pt, rng):
        h = float(cfg.param("h", 0.1))
        p = QuadraticPotential.isotropic(1)
        if pt["check"] == "antisymmetry":
            n = int(cfg.param("pairs", 10_000))
            x = rng.standard_normal((n, 1)) * 2
            y = x + rng.standard_normal((n, 1))
            err = np.abs(mala.mala_accept_logratio(p, x, y, h) + mala.mala_accept_logratio(p, y, x, h))
            return [row(err.max(), 1e-12, err.max() <= 1e-12, n, check="antisymmetry", h=h,
                        n_chains=n, n_steps=1)]
        chains = int(cfg.param("chains", 1_000_000))
        steps = int(cfg.param("steps", 10))
        run = mala.mala_run(p, rng.standard_normal((chains, 1)), mala.MalaParams(h), steps, rng)
        x = run.x[:, 0]
        z = abs(x.mean()) / (x.std(ddof=1) / math.sqrt(chains))
        var_err = abs(x.var(ddof=1) - 1.0)
        work = chains * steps
        return [row(z, 4.0, z <= 4.0, work, check="mean_z", h=h, n_chains=chains, n_steps=steps),
                row(var_err, 0.01, var_err <= 0.01, work, check="variance", h=h, n_chains=chains,
                    n_steps=steps)]


class ProxContraction(Experiment):
    columns = ("check", "instance", "d", "alpha", "h", "r2_before")

    def points(self, cfg):
        n = int(cfg.param("instances", 200))
        return [{"check": "forward", "instance": i} for i in range(n)] + [{"check": "gibbs", "instance": 0}]

    def evaluate(self, cfg, pt, rng):
        q = 2.0
        d = int(rng.integers(1, 4))
        p = random_quadratic(rng, d, math.exp(rng.uniform(0, math.log(20))), math.exp(rng.uniform(-1, 1)))
        pi = go.target_gaussian(p)
        h = float(rng.uniform(0.05, 1.0)) / p.beta
        if pt["check"] == "gibbs":
            k = prox.prox_gibbs_kernel(p, h)
            r = go.renyi_gaussian(q, k.apply(pi), pi)
            return [row(r, 1e-10, r <= 1e-10, 1, check="gibbs", instance=0, d=d, alpha=p.alpha,
                        h=h, r2_before=0.0)]
        while True:
            shrink = rng.uniform(0.5, 1.2)
            mu = go.Gaussian(pi.mean + rng.standard_normal(d) * 0.5, pi.cov * shrink)
            before = go.renyi_gaussian(q, mu, pi)
            if math.isfinite(before) and before > 1e-8:
                break
        after = go.renyi_gaussian(q, go.convolve(mu, h * np.eye(d)), go.convolve(pi, h * np.eye(d)))
        factor = prox.forward_contraction_factor(p.alpha, h, q)
        ratio = after / before
        return [row(ratio, factor, leq(ratio, factor, atol=1e-9), 1, check="forward",
                    instance=pt["instance"], d=d, alpha=p.alpha, h=h, r2_before=before)]


def _default_target(cfg, kappa=None):
    if cfg.target is not None and kappa is None:
        return cfg.potential()
    d = int(cfg.param("dim", 4))
    kappa = kappa or 10.0
    spec = np.geomspace(1.0, kappa, d)
    center = np.linspace(-1.0, 1.0, d)
    rot = random_rotation(d, int(cfg.param("rotation_seed", 0))) if d > 1 else None
    return QuadraticPotential.from_spectrum(spec, center, rot)


def _moment_sums(x):
    return {"n": x.shape[0], "s1": x.sum(axis=0), "s2": x.T @ x}


def _moment_rows(p, sums, work, cov_tol=0.03, **params):
    n = sums["n"]
    mean = sums["s1"] / n
    cov = (sums["s2"] - n * np.outer(mean, mean)) / (n - 1)
    target = np.linalg.inv(p.precision)
    se = np.sqrt(np.diag(cov) / n)
    z = float(np.max(np.abs(mean - p.center) / se))
    scale = np.sqrt(np.outer(np.diag(target), np.diag(target)))
    cov_err = float(np.max(np.abs(cov - target) / scale))
    return [row(z, 4.0, z <= 4.0, work, check="mean_z", **params),
            row(cov_err, cov_tol, cov_err <= cov_tol, work, check="cov_rel", **params)]


class _Blocked(Experiment):
    """Replicas split into fixed-size blocks so results do not depend on --jobs."""

    def _blocks(self, cfg):
        total = int(cfg.param("replicas", 10_000))
        size = int(cfg.param("block", 1000))
        return [(b, min(size, total - b * size)) for b in range(math.ceil(total / size))]

    def finalize(self, cfg, rows):
        merged = {}
        order = []
        for r in rows:
            key = r["key"]
            if key not in merged:
                merged[key] = {"n": 0, "s1": 0.0, "s2": 0.0, "work": 0, "extra": r["extra"]}
                order.append(key)
            m = merged[key]
            m["n"] += r["sums"]["n"]
            m["s1"] = m["s1"] + r["sums"]["s1"]
            m["s2"] = m["s2"] + r["sums"]["s2"]
            m["work"] = max(m["work"], r["work"])
        out = []
        for key in order:
            m = merged[key]
            p = self._target(cfg, key)
            out.extend(_moment_rows(p, m, m["work"], float(cfg.param("cov_tol", 0.03)), **m["extra"]))
        return out


class PipelineWeak(_Blocked):
    columns = ("check", "eps", "d", "replicas")

    def _target(self, cfg, key):
        return _default_target(cfg)

    def points(self, cfg):
        return [{"block": b, "size": s} for b, s in self._blocks(cfg)]

    def evaluate(self, cfg, pt, rng):
        p = self._target(cfg, None)
        eps = float(cfg.param("eps", 0.1))
        consts = _weak_constants(cfg)
        x, rep = pipeline_weak(p, eps, p.minimizer, rng, consts, n_samples=pt["size"])
        return [{"key": 0, "sums": _moment_sums(x), "work": rep["work"],
                 "extra": {"eps": eps, "d": p.dim, "replicas": int(cfg.param("replicas", 10_000))}}]


def _weak_constants(cfg) -> WeakConstants:
    warm = WarmConstants(cfg.const("h_scale", 1.0), cfg.const("iter_scale", 1.0),
                         cfg.const("w_scale", 2.0))
    return WeakConstants(warm, cfg.const("c_mala", 0.5), cfg.const("mala_scale", 1.0),
                         cfg.const("log_power", 3.0), cfg.const("laziness", 0.5))


class PipelineFull(_Blocked):
    columns = ("check", "kappa", "eps", "d", "replicas")

    def _kappas(self, cfg):
        ks = cfg.param("kappa")
        return None if ks is None else [float(k) for k in _list(ks, [])]

    def _target(self, cfg, key):
        ks = self._kappas(cfg)
        return _default_target(cfg, None if ks is None else ks[key])

    def points(self, cfg):
        ks = self._kappas(cfg) or [None]
        return [{"kappa_index": i, "block": b, "size": s}
                for i in range(len(ks)) for b, s in self._blocks(cfg)]

    def evaluate(self, cfg, pt, rng):
        key = pt["kappa_index"]
        p = self._target(cfg, key)
        eps = float(cfg.param("eps", 0.1))
        consts = FullConstants(_weak_constants(cfg), cfg.const("prox_scale", 1.0),
                               cfg.const("rgo_scale", 1.0))
        x, rep = pipeline_full(p, eps, rng, consts, n_samples=pt["size"])
        extra = {"kappa": p.beta / p.alpha, "eps": eps, "d": p.dim,
                 "replicas": int(cfg.param("replicas", 10_000))}
        return [{"key": key, "sums": _moment_sums(x), "work": rep["work"], "extra": extra}]


class OrliczClosedForms(Experiment):
    columns = ("check", "d", "alpha", "h", "y_norm")

    def points(self, cfg):
        pts = [{"check": "empirical"}]
        for d in _list(cfg.param("dims"), [1, 4, 16, 64]):
            for a in _list(cfg.param("alphas"), [0.25, 1, 4]):
                pts.append({"check": "init", "d": d, "alpha": a})
        pts += [{"check": "rgo", "index": i} for i in range(int(cfg.param("rgo_pairs", 100)))]
        return pts

    def evaluate(self, cfg, pt, rng):
        if pt["check"] == "empirical":
            n = int(cfg.param("samples", 1_000_000))
            lam = orlicz.orlicz_norm_empirical(rng.standard_normal(n)).lam
            exact = math.sqrt(8.0 / 3.0)
            rel = abs(lam / exact - 1)
            return [row(rel, 0.02, rel <= 0.02, n, check="empirical", d=1, alpha=1.0, h=0.0,
                        y_norm=0.0)]
        if pt["check"] == "init":
            d, a = pt["d"], pt["alpha"]
            exact = orlicz.w_orlicz_gaussian_dirac(np.zeros(d), np.zeros(d), np.eye(d) / a).value
            bound = orlicz.init_bound_slc(a, d)
            return [row(exact, bound, leq(exact, bound), 1, check="init", d=d, alpha=a, h=0.0,
                        y_norm=0.0)]
        d = int(cfg.param("rgo_dim", 2))
        p = QuadraticPotential.isotropic(d)
        y = rng.standard_normal(d) * float(cfg.param("y_scale", 3.0))
        h = float(rng.uniform(1e-3, 1.0)) / (2 * p.beta)
        law = prox.rgo_exact_quadratic(p, h, y)
        exact = orlicz.w_orlicz_gaussian_dirac(y, law.mean, law.cov).value
        bound = orlicz.rgo_init_bound(p.beta, h, float(np.linalg.norm(y - p.minimizer)), d)
        return [row(exact, bound, leq(exact, bound), 1, check="rgo", d=d, alpha=p.alpha, h=h,
                    y_norm=float(np.linalg.norm(y)))]


REGISTRY: dict[str, Callable[[], Experiment]] = {
    "pabi-verify": PabiVerify,
    "regularity-verify": RegularityVerify,
    "ulmc-bias-scaling": UlmcBiasScaling,
    "ulmc-contraction": UlmcContraction,
    "mala-stationarity": MalaStationarity,
    "prox-contraction": ProxContraction,
    "pipeline-weak": PipelineWeak,
    "pipeline-full": PipelineFull,
    "orlicz-closed-forms": OrliczClosedForms,
}

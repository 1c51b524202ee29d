"""Experiment configuration files.

Grammar (INI, ``#`` or ``;`` comments)::

    [experiment]
    name = pabi-verify          # required, one of EXPERIMENTS
    seed = 12345                # required, 64-bit integer
    output = results/pabi.csv   # optional

    [target]                    # optional quadratic target
    dim = 4
    spectrum = 1, 2, 5, 10      # or: matrix = path/to/quadratic.txt
    center = 0, 0, 0, 0
    rotation_seed = 7           # random rotation of the spectrum

    [params]                    # experiment specific, decimal literals or lists
    [constants]                 # named O-constants, decimal literals

Matrix files follow :meth:`lcsample.model.QuadraticPotential.from_text`.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from lcsample.model import QuadraticPotential

EXPERIMENTS = (
    "pabi-verify",
    "regularity-verify",
    "ulmc-bias-scaling",
    "ulmc-contraction",
    "mala-stationarity",
    "prox-contraction",
    "pipeline-weak",
    "pipeline-full",
    "orlicz-closed-forms",
)


class ConfigError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + msg)


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    target: Optional[dict] = None
    params: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    text: str = ""
    base_dir: Path = Path(".")

    def potential(self) -> QuadraticPotential:
        if self.target is None:
            raise ConfigError("experiment needs a [target] section")
        return build_target(self.target, self.base_dir)

    def param(self, key, default=None):
        return self.params.get(key, default)

    def const(self, key, default):
        return float(self.constants.get(key, default))


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number."""
    where = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = i
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = i
    return where


def parse_value(raw: str):
    """Decimal literal, integer, comma-separated list, or bare word."""
    s = raw.strip()
    if "," in s:
        return [parse_value(part) for part in s.split(",") if part.strip()]
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    return s


def parse_config(text: str, source: str = "<config>", base_dir=".") -> ExperimentConfig:
    lines = _line_index(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        line = getattr(err, "lineno", None)
        msg = getattr(err, "message", str(err)).splitlines()[0]
        raise ConfigError(msg, line, source) from None

    def line_of(sec, key=None):
        return lines.get((sec, key))

    if not cp.has_section("experiment"):
        raise ConfigError("missing [experiment] section", None, source)
    exp = cp["experiment"]
    if "name" not in exp:
        raise ConfigError("missing experiment name", line_of("experiment"), source)
    name = exp["name"].strip()
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {', '.join(EXPERIMENTS)}",
                          line_of("experiment", "name"), source)
    if "seed" not in exp:
        raise ConfigError("seed is mandatory", line_of("experiment"), source)
    try:
        seed = int(exp["seed"])
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {exp['seed']!r}",
                          line_of("experiment", "seed"), source) from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 bits", line_of("experiment", "seed"), source)
    for sec in cp.sections():
        if sec not in ("experiment", "target", "params", "constants"):
            raise ConfigError(f"unknown section [{sec}]", line_of(sec), source)

    target = None
    if cp.has_section("target"):
        target = {}
        for key, raw in cp["target"].items():
            if key not in ("dim", "spectrum", "center", "matrix", "rotation_seed"):
                raise ConfigError(f"unknown target key {key!r}", line_of("target", key), source)
            target[key] = raw.strip() if key == "matrix" else parse_value(raw)
            target.setdefault("_lines", {})[key] = line_of("target", key)
    constants = {}
    if cp.has_section("constants"):
        for key, raw in cp["constants"].items():
            try:
                constants[key] = float(raw)
            except ValueError:
                raise ConfigError(f"constant {key!r} is not a decimal literal",
                                  line_of("constants", key), source) from None
    params = {k: parse_value(v) for k, v in cp["params"].items()} if cp.has_section("params") else {}
    cfg = ExperimentConfig(name, seed, target, params, constants,
                           exp.get("output"), text, Path(base_dir))
    if target is not None:
        try:
            build_target(target, cfg.base_dir)
        except ConfigError as err:
            raise ConfigError(str(err).split(": ", 1)[-1], err.line, source) from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err.strerror}", None, str(path)) from None
    return parse_config(text, str(path), path.parent)


def _as_list(v):
    return v if isinstance(v, list) else [v]


def build_target(t: dict, base_dir=".") -> QuadraticPotential:
    lines = t.get("_lines", {})
    if "matrix" in t:
        path = Path(base_dir) / t["matrix"]
        if not path.exists():
            raise ConfigError(f"matrix file not found: {path}", lines.get("matrix"))
        try:
            return QuadraticPotential.load(path)
        except ValueError as err:
            raise ConfigError(f"{path}: {err}", lines.get("matrix")) from None
    if "spectrum" not in t:
        raise ConfigError("target needs a spectrum or a matrix file", lines.get("dim"))
    spec = np.array(_as_list(t["spectrum"]), dtype=float)
    dim = int(t.get("dim", spec.size))
    if spec.size == 1 and dim > 1:
        spec = np.full(dim, spec[0])
    if spec.size != dim:
        raise ConfigError(f"spectrum has {spec.size} entries, dim is {dim}", lines.get("spectrum"))
    center = None
    if "center" in t:
        center = np.array(_as_list(t["center"]), dtype=float)
        if center.size != dim:
            raise ConfigError(f"center has {center.size} entries, dim is {dim}", lines.get("center"))
    rot = None
    if "rotation_seed" in t and dim > 1:
        rot = random_rotation(dim, int(t["rotation_seed"]))
    return QuadraticPotential.from_spectrum(spec, center, rot)


def random_rotation(d: int, seed: int) -> np.ndarray:
    g = np.random.default_rng(seed).standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))

"""Command-line entry point: ``lcsample run <config>`` and ``lcsample report <files...>``.

Exit status: 0 when every row passes, 1 when any row fails, 2 on usage or
configuration errors. The CSV is deterministic for a given config and seed;
wall-clock times go to a ``.timing.json`` sidecar so they never perturb it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from lcsample import __version__
from lcsample.bench.config import ConfigError, ExperimentConfig, load_config
from lcsample.bench.experiments import REGISTRY
from lcsample.rng import stream

OUT_ENV = "LCSAMPLE_OUT_DIR"
BASE_COLUMNS = ("experiment", "point")
RESULT_COLUMNS = ("measured", "bound", "margin", "pass", "work")


def fmt(v) -> str:
    """Shortest round-trip text for numbers; booleans as 0/1."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _evaluate(args):
    cfg, index, point = args
    exp = REGISTRY[cfg.experiment]()
    t0 = time.perf_counter()
    rows = exp.evaluate(cfg, point, stream(cfg.seed, index))
    return rows, time.perf_counter() - t0


def execute(cfg: ExperimentConfig, jobs: int = 1):
    """Evaluate every sweep point; rows come back in point order."""
    exp = REGISTRY[cfg.experiment]()
    points = exp.points(cfg)
    tasks = [(cfg, i, pt) for i, pt in enumerate(points)]
    if jobs > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=chunk))
    else:
        results = [_evaluate(t) for t in tasks]
    rows, times = [], []
    for i, (rs, dt) in enumerate(results):
        for r in rs:
            r.setdefault("point", i)
        rows.extend(rs)
        times.append(dt)
    rows = exp.finalize(cfg, rows)
    for i, r in enumerate(rows):
        r.setdefault("point", i)  # merged rows are numbered in output order
    return exp, rows, times


def render_csv(cfg: ExperimentConfig, exp, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# tool=lcsample {__version__}\n")
    buf.write(f"# experiment={cfg.experiment}\n")
    buf.write(f"# seed={cfg.seed}\n")
    for line in cfg.text.strip().splitlines():
        buf.write(f"# config| {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BASE_COLUMNS + tuple(exp.columns) + RESULT_COLUMNS)
    for r in rows:
        params = [fmt(r["params"].get(c, "")) for c in exp.columns]
        margin = r["bound"] - r["measured"]
        w.writerow([cfg.experiment, r["point"], *params, fmt(r["measured"]), fmt(r["bound"]),
                    fmt(margin), fmt(r["pass"]), fmt(r["work"])])
    return buf.getvalue()


def _output_path(cfg: ExperimentConfig, override) -> Path:
    if override:
        return Path(override)
    if cfg.output_path:
        out = Path(cfg.output_path)
        return out if out.is_absolute() else cfg.base_dir / out
    return Path(os.environ.get(OUT_ENV, ".")) / f"{cfg.experiment}.csv"


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.text = cfg.text + f"\n# seed overridden on the command line: {args.seed}"
    out = _output_path(cfg, args.out)
    try:
        exp, rows, times = execute(cfg, max(1, args.jobs))
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_csv(cfg, exp, rows))
    timing = {"experiment": cfg.experiment, "seed": cfg.seed, "jobs": args.jobs,
              "point_seconds": times, "total_seconds": sum(times)}
    out.with_name(out.name + ".timing.json").write_text(json.dumps(timing, indent=1))
    failed = sum(not r["pass"] for r in rows)
    print(f"{cfg.experiment}: {len(rows) - failed}/{len(rows)} rows pass -> {out}")
    return 1 if failed else 0


def read_result(path) -> tuple[dict, list]:
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body and not body.startswith("config|"):
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    return meta, list(csv.DictReader(lines))


def loglog_slope(xs, ys) -> float:
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def summarize(path) -> tuple[list[str], bool]:
    meta, rows = read_result(path)
    if not rows:
        return [f"{path}: no rows"], False
    name = rows[0]["experiment"]
    passed = sum(r["pass"] == "1" for r in rows)
    worst = min(rows, key=lambda r: float(r["margin"]))
    ok = passed == len(rows)
    out = [f"{name:22s} {passed:6d}/{len(rows):<6d} worst margin {float(worst['margin']):.6g} "
           f"(point {worst['point']})  {'PASS' if ok else 'FAIL'}"]
    if name == "ulmc-bias-scaling" and len(rows) >= 2:
        s = loglog_slope([r["h"] for r in rows], [r["stationary_r2"] for r in rows])
        good = 1.7 <= s <= 2.3
        out.append(f"  bias slope in h: {s:.4f}  [1.7, 2.3] {'PASS' if good else 'FAIL'}")
        ok = ok and good
    if name == "pipeline-full":
        pts = {}
        for r in rows:
            pts[float(r["kappa"])] = float(r["work"])
        if len(pts) >= 2:
            ks = sorted(pts)
            s = loglog_slope(ks, [pts[k] for k in ks])
            good = abs(s - 1.0) <= 0.3
            out.append(f"  work slope in kappa: {s:.4f}  [0.7, 1.3] {'PASS' if good else 'FAIL'}")
            ok = ok and good
    return out, ok


def cmd_report(args) -> int:
    if not args.files:
        print("usage: lcsample report <result.csv> [more.csv ...]", file=sys.stderr)
        return 2
    missing = [f for f in args.files if not Path(f).is_file()]
    if missing:
        print(f"error: missing files: {', '.join(missing)}", file=sys.stderr)
        return 2
    all_ok = True
    for f in args.files:
        lines, ok = summarize(f)
        print("\n".join(lines))
        all_ok = all_ok and ok
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcsample", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"lcsample {__version__}")
    sub = ap.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help=f"output CSV (default: config output or ${OUT_ENV})")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.set_defaults(func=cmd_run)
    rep = sub.add_parser("report", help="summarize result files")
    rep.add_argument("files", nargs="*")
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command is None:
        ap.print_usage(sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment driver.

    roughlocal <subcommand> --config exp.ini [--seed N] [--out DIR] [--check]

Every subcommand writes its CSVs under the output directory together with a
``manifest.json`` recording the configuration hash, library versions, the
output file digests and the wall time.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .integrate import curve_support, integral_gdL, lift_pair, rough_integral_gdL, young_integral
from .ito_verify import ito_residual_parts, local_time_for, report_csv
from .levy_model import check_admissibility
from .path_sim import path_to_csv, read_path_csv, simulate
from .presets import make_integrand, make_test_function
from .variation import pvar_exact, resample_dyadic

SUBCOMMANDS = ("simulate", "localtime", "pvar", "lift", "integrate", "verify-ito", "admissibility")


def _threads() -> int:
    raw = os.environ.get("ROUGHLOCAL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


class Run:
    """Output bookkeeping for one subcommand invocation."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.t0 = time.perf_counter()

    def write(self, rel: str, text: str) -> Path:
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files.append(path)
        return path

    def manifest(self, extra=None) -> Path:
        data = {
            "command": self.command,
            "config_hash": self.cfg.config_hash(),
            "config": self.cfg.to_dict(),
            "seed": self.cfg.simulation.seed,
            "versions": {"roughlocal": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "outputs": {str(p.relative_to(self.out)): hashlib.sha256(p.read_bytes()).hexdigest()
                        for p in self.files},
            "wall_time_s": round(time.perf_counter() - self.t0, 3),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        if extra:
            data.update(extra)
        path = self.out / f"manifest_{self.command}.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=list) + "\n")
        return path


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# per-path work (module level so it can be sent to worker processes)
# ---------------------------------------------------------------------------


def _sim_key(cfg: ExperimentConfig) -> str:
    """Hash of everything that determines the simulated paths."""
    d = cfg.to_dict()
    blob = json.dumps({"model": d["model"], "simulation": d["simulation"]}, sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()


def _path(cfg: ExperimentConfig, k: int):
    """Simulate path k, or reuse the cached CSV written by ``simulate`` under the same settings."""
    cache_dir = Path(cfg.output_dir) / "paths"
    key_file = cache_dir / "sim_key.txt"
    cache = cache_dir / f"path_{k:04d}.csv"
    if cache.exists() and key_file.exists() and key_file.read_text().strip() == _sim_key(cfg):
        return read_path_csv(cache)
    s = cfg.simulation
    return simulate(cfg.levy_model(), s.X0, s.T, s.dt, s.eps, s.seed, path_id=k)


def _curve(cfg, k):
    return local_time_for(_path(cfg, k), cfg.analysis.estimator, cfg.analysis.grid_points)


def _integrand_for(cfg, L):
    lo, hi = curve_support(L)
    ig = cfg.integrand
    return make_integrand(ig.preset, lo, hi, ig.n, coeffs=ig.coeffs, value=ig.value, beta=ig.beta,
                          center=ig.center, steps=ig.steps, hurst=ig.hurst, terms=ig.terms,
                          csv_path=ig.csv)


def _job_simulate(args):
    cfg, k = args
    return k, path_to_csv(_path(cfg, k))


def _job_localtime(args):
    cfg, k = args
    return k, _curve(cfg, k).to_csv()


def _job_pvar(args):
    cfg, k = args
    y = resample_dyadic(_curve(cfg, k))
    top = int(round(np.log2(y.size - 1)))
    return k, [(m, pvar_exact(y[:: 2 ** (top - m)], cfg.analysis.p)) for m in range(1, top + 1)]


def _job_lift(args):
    cfg, k = args
    L = _curve(cfg, k)
    g = _integrand_for(cfg, L)
    an = cfg.analysis
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rp = lift_pair(g, L, theta=an.theta, depth=an.depth, m_max=an.m_max)
    return k, rp.diagnostics_csv(), rp.dump_csv(), rp.non_cauchy


def _job_integrate(args):
    cfg, k = args
    L = _curve(cfg, k)
    g = _integrand_for(cfg, L)
    an = cfg.analysis
    if an.route == "young":
        res = young_integral(g, L, p=an.hat_q, a=an.a, b=an.b)
    elif an.route == "rough":
        res = rough_integral_gdL(lift_pair(g, L, theta=an.theta, depth=max(an.depth, 12)), an.a, an.b)
    elif an.a is None and an.b is None:
        res = integral_gdL(g, L, p=an.hat_q, depth=max(an.depth, 12))
    else:
        res = young_integral(g, L, p=an.hat_q, a=an.a, b=an.b)
    a, b = res.extras.get("a", an.a), res.extras.get("b", an.b)
    La = float(L(a)) if a is not None else 0.0
    Lb = float(L(b)) if b is not None else 0.0
    return k, res.method, res.value, res.converged, La, Lb, res.trace_csv()


def _job_ito(args):
    cfg, k = args
    f = make_test_function(cfg.analysis.test_function, cfg.analysis.level)
    path = _path(cfg, k)
    parts = ito_residual_parts(f, path, 1.0, estimator=cfg.analysis.estimator)
    return k, parts.residual, parts.residual - 0.5 * parts.lt_integral, parts.increment


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _jobs(cfg):
    return [(cfg, k) for k in range(cfg.simulation.n_paths)]


def cmd_simulate(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "simulate")
    for k, text in _map(_job_simulate, _jobs(cfg)):
        run.write(f"paths/path_{k:04d}.csv", text)
    run.write("paths/sim_key.txt", _sim_key(cfg) + "\n")
    run.manifest()
    return 0


def cmd_localtime(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "localtime")
    for k, text in _map(_job_localtime, _jobs(cfg)):
        run.write(f"localtime/L_{k:04d}.csv", text)
    run.manifest()
    return 0


def cmd_pvar(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "pvar")
    rows = [(k, cfg.analysis.p, m, v) for k, levels in _map(_job_pvar, _jobs(cfg)) for m, v in levels]
    run.write("pvar.csv", _rows_csv(["path_id", "p", "level", "value"], rows))
    run.manifest()
    return 0


def cmd_lift(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "lift")
    flags = []
    for k, diag, dump, bad in _map(_job_lift, _jobs(cfg)):
        run.write(f"lift/diagnostics_{k:04d}.csv", diag)
        run.write(f"lift/roughpath_{k:04d}.csv", dump)
        flags.append((k, bool(bad)))
    run.write("lift/non_cauchy.csv", _rows_csv(["path_id", "non_cauchy"], flags))
    run.manifest()
    return 0


def cmd_integrate(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "integrate")
    rows = []
    for k, method, value, ok, La, Lb, trace in _map(_job_integrate, _jobs(cfg)):
        run.write(f"integrate/trace_{k:04d}.csv", trace)
        rows.append((k, method, value, "true" if ok else "false", La, Lb))
    run.write("integrals.csv", _rows_csv(["path_id", "method", "value", "converged", "L_a", "L_b"], rows))
    run.manifest()
    return 0


def cmd_verify_ito(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "verify-ito")
    out = _map(_job_ito, _jobs(cfg))
    rows = [(k, r1, rh, inc) for k, r1, rh, inc in out]
    run.write("ito/residuals.csv", _rows_csv(["path_id", "residual_coeff1", "residual_coeff_half",
                                              "increment"], rows))
    r1 = np.array([r[1] for r in rows])
    rh = np.array([r[2] for r in rows])
    inc = np.array([r[3] for r in rows])
    n = max(len(rows), 1)
    se1 = float(r1.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    seh = float(rh.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    ratio = float(np.mean(np.abs(r1)) / max(np.mean(np.abs(inc)), 1e-300))
    report = [
        ("mean_residual_coeff1", float(r1.mean()), f"|mean| < 2*stderr ({se1:.3g})",
         bool(abs(r1.mean()) < 2 * se1) if n > 1 else False),
        ("mean_residual_coeff_half", float(rh.mean()), f"|mean| > 4*stderr ({seh:.3g})",
         bool(abs(rh.mean()) > 4 * seh) if n > 1 else False),
        ("relative_abs_residual", ratio, "< 0.05", ratio < 0.05),
    ]
    run.write("ito/report.csv", report_csv(report))
    run.manifest()
    return 0


def cmd_admissibility(cfg: ExperimentConfig) -> int:
    run = Run(cfg, "admissibility")
    rep = check_admissibility(cfg.levy_model())
    run.write("admissibility.csv", _rows_csv(["condition", "q", "eps", "value"], rep.as_rows()))
    run.manifest()
    return 0


COMMANDS = {
    "simulate": cmd_simulate, "localtime": cmd_localtime, "pvar": cmd_pvar, "lift": cmd_lift,
    "integrate": cmd_integrate, "verify-ito": cmd_verify_ito, "admissibility": cmd_admissibility,
}


def run_check(out_dir: Path, numbers=None) -> int:
    from .acceptance import run_all

    results = run_all(numbers)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [(r.number, r.title, r.statistic, r.threshold, "true" if r.passed else "false",
             round(r.seconds, 2)) for r in results]
    (out_dir / "acceptance.csv").write_text(
        _rows_csv(["criterion", "title", "statistic", "threshold", "pass", "seconds"], rows))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roughlocal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command")
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} stage")
        sp.add_argument("--config", required=True, type=Path, help="INI experiment file")
        sp.add_argument("--seed", type=int, help="override simulation.seed")
        sp.add_argument("--out", type=Path, help="override output.dir")
        sp.add_argument("--check", action="store_true",
                        help="also run the acceptance checks; nonzero exit on any failure")
    chk = sub.add_parser("check", help="run the acceptance checks only")
    chk.add_argument("--out", type=Path, default=Path("out"))
    chk.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command is None:
        build_parser().print_help()
        return 2
    if args.command == "check":
        return run_check(args.out, args.only)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = cfg.with_output(str(args.out))
    status = COMMANDS[args.command](cfg)
    if args.check:
        status = max(status, run_check(Path(cfg.output_dir)))
    return status


if __name__ == "__main__":
    sys.exit(main())

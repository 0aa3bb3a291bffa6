"""Command-line driver: ``simulate``, ``wave``, ``sweep`` and ``chibar``.

The output directory is taken from ``--out``, else ``[output] directory`` in
the config, else the ``KSWAVE_OUT`` environment variable, else
``./kswave-out``.  Theory checks are written as verdicts in the summary files;
they never change the exit code.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, parse_config
from .diagnostics import propagation_speed
from .hyperbolic import run
from .model import InitialCondition, chibar, make_params
from .travelingwave import FixedPointError, f_appendix, fixed_point

__all__ = [
    "OUT_ENV",
    "main",
    "cmd_simulate",
    "cmd_wave",
    "cmd_sweep",
    "cmd_chibar",
    "sweep_entry_config",
    "simulate_summary",
]

OUT_ENV = "KSWAVE_OUT"
JUMP_SLACK = 0.05
SPEED_SLACK = 0.02
PME_SPEED = 1.0 / math.sqrt(2.0)

log = logging.getLogger("kswave")


def resolve_out(arg: str | None, cfg: ExperimentConfig | None) -> Path:
    if arg:
        d = arg
    elif cfg is not None and cfg.output.directory:
        d = cfg.output.directory
    else:
        d = os.environ.get(OUT_ENV, "kswave-out")
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- simulate ------------------------------------------------------------------------

def simulate_summary(cfg: ExperimentConfig, trace) -> dict:
    """Measured speeds per level, final jump and the bound verdicts."""
    params = make_params(cfg.sigma, cfg.chi)
    t1, t2 = cfg.diagnostics.t1, cfg.diagnostics.t2
    out = {"t1": t1, "t2": t2, "sigma": cfg.sigma, "chi": cfg.chi, "chi_hat": params.chi_hat}
    speeds = {}
    for b in trace.levels:
        try:
            s = propagation_speed(trace, b, t1, t2)
        except (ValueError, KeyError):
            s = float("nan")
        speeds[b] = s
        out[f"speed_beta_{b:.4f}"] = s
    jump = float(trace.jump[-1])
    lo, hi = params.speed_interval
    s0 = speeds.get(0.0, float("nan"))
    out["jump"] = jump
    out["jump_bound"] = params.jump_bound
    out["jump_ok"] = bool(jump >= params.jump_bound - JUMP_SLACK)
    out["speed_lower_bound"] = lo
    out["speed_upper_bound"] = params.max_speed
    out["speed_ok"] = bool(lo - SPEED_SLACK <= s0 <= params.max_speed + SPEED_SLACK)
    m0, m1 = float(trace.mass[0]), float(trace.mass[-1])
    out["mass_initial"] = m0
    out["mass_final"] = m1
    out["mass_drift"] = abs(m1 - m0) / m0 if m0 > 0 else abs(m1 - m0)
    out["reaction"] = cfg.time.reaction
    if trace.step_hspeed is not None and np.isfinite(trace.step_hspeed).any():
        out["separatrix_final"] = float(trace.separatrix[-1])
        out["separatrix_max_speed"] = float(np.nanmax(trace.step_hspeed))
    return out


def _simulate_to(cfg: ExperimentConfig, out: Path, seed: int | None = None) -> dict:
    state, trace = run(cfg)
    io.write_trace(out / cfg.output.trace_file, trace)
    for t, (u, p) in sorted(trace.snapshots.items()):
        io.write_snapshot(out, cfg.output.snapshot_prefix, t, u, p)
    summary = simulate_summary(cfg, trace)
    summary["steps"] = state.step_count
    if seed is not None:
        summary["seed"] = seed
    io.write_meta(out / cfg.output.summary_file, summary)
    return summary


def cmd_simulate(cfg: ExperimentConfig, out: Path, seed: int | None = None) -> int:
    try:
        s = _simulate_to(cfg, out, seed)
    except Exception as e:  # solver failure -> nonzero exit
        print(f"simulate failed: {e}", file=sys.stderr)
        return 1
    for k in ("speed_beta_0.0000", "jump", "jump_ok", "speed_ok", "mass_drift"):
        if k in s:
            print(f"{k} = {io.fmt(s[k])}")
    return 0


# -- wave ------------------------------------------------------------------------------

def _wave(cfg: ExperimentConfig):
    params = make_params(cfg.sigma, cfg.chi)
    w = cfg.wave
    return params, fixed_point(params, dz=w.dz, Z=w.Z, tol=w.tol, max_iter=w.max_iter, eta=w.eta)


def _echo(caught) -> None:
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)


def cmd_wave(cfg: ExperimentConfig, out: Path) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            params, prof = _wave(cfg)
        except FixedPointError as e:
            _echo(caught)
            hist = io.write_columns(out / "residual_history.csv", ("iteration", "residual_eta"),
                                    (np.arange(1, len(e.history) + 1), e.history))
            print(f"wave failed: {e}; residual history in {hist}", file=sys.stderr)
            return 2
        except Exception as e:
            _echo(caught)
            print(f"wave failed: {e}", file=sys.stderr)
            return 1
    _echo(caught)
    lo, hi = params.speed_interval
    io.write_profile(out / cfg.output.profile_file, prof, {"chibar": chibar()})
    print(f"c = {io.fmt(prof.c)}")
    print(f"U0minus = {io.fmt(prof.U0minus)}")
    print(f"interval = ({io.fmt(lo)}, {io.fmt(hi)}) contains c: {lo < prof.c < hi}")
    print(f"U0minus >= {io.fmt(params.jump_bound)}: {prof.U0minus >= params.jump_bound}")
    print(f"iterations = {prof.iterations}, residual_eta = {prof.residual_eta:.3e}")
    return 0


# -- sweep -----------------------------------------------------------------------------

def sweep_entry_config(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    """Config of one sweep entry.  Kernel-range sweeps refine the grid to ``dx <= sigma/20``."""
    if param == "alpha":
        x0 = cfg.ic.x0 if cfg.ic.kind == "sigmoid" else -15.0
        return replace(cfg, ic=InitialCondition("sigmoid", x0=x0, L=cfg.grid.L, alpha=value), sweep=None)
    if param in ("sigma2", "sigma"):
        sigma = math.sqrt(value) if param == "sigma2" else value
        M = max(cfg.grid.M, int(math.ceil(2 * cfg.grid.L * 20 / sigma)))
        return replace(cfg, sigma=sigma, grid=replace(cfg.grid, M=M), sweep=None)
    if param == "chi":
        return replace(cfg, chi=value, sweep=None)
    if param == "M":
        return replace(cfg, grid=replace(cfg.grid, M=int(value)), sweep=None)
    raise ValueError(f"unknown sweep parameter {param!r}")


def _sweep_one(args):
    cfg, param, value, out = args
    row = {"param": param, "value": value}
    try:
        sub = out / f"{param}_{value:g}"
        sub.mkdir(parents=True, exist_ok=True)
        ecfg = sweep_entry_config(cfg, param, value)
        s = _simulate_to(ecfg, sub)
        row["speed_beta0"] = s.get("speed_beta_0.0000", float("nan"))
        row["jump"] = s["jump"]
        for b in ecfg.diagnostics.betas:
            if b != 0:
                row[f"speed_beta_{b:.4f}"] = s[f"speed_beta_{b:.4f}"]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row["c_wave"] = _wave(ecfg)[1].c
        except Exception as e:  # wave failure does not void the PDE row
            log.warning("%s=%g: wave solver failed: %s", param, value, e)
            row["c_wave"] = float("nan")
        row["ok"] = True
    except Exception as e:
        log.error("%s=%g failed: %s", param, value, e)
        row["ok"] = False
        row["error"] = str(e)
    return row


def cmd_sweep(cfg: ExperimentConfig, out: Path, workers: int = 1) -> int:
    if cfg.sweep is None or not cfg.sweep.values:
        print("sweep: config has no [sweep] values", file=sys.stderr)
        return 1
    param = cfg.sweep.param
    jobs = [(cfg, param, float(v), out) for v in cfg.sweep.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]

    extra = [f"speed_beta_{b:.4f}" for b in cfg.diagnostics.betas if b != 0]
    header = ["param", "value", "speed_beta0", "jump", "c_wave"] + extra + ["dist_pme", "ok"]
    pme = param in ("sigma2", "sigma")
    lines = [",".join(header)]
    for r in rows:
        s0 = r.get("speed_beta0", float("nan"))
        r["dist_pme"] = abs(s0 - PME_SPEED) if pme else float("nan")
        vals = [param] + [io.fmt(float(r.get(k, float("nan")))) for k in header[1:-1]] + [io.fmt(r["ok"])]
        lines.append(",".join(vals))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    for r in rows:
        msg = f"{param}={r['value']:g}: speed={r.get('speed_beta0', float('nan')):.6f}"
        if pme:
            msg += f" |speed - 1/sqrt2|={r['dist_pme']:.4f}"
        print(msg if r["ok"] else f"{param}={r['value']:g}: FAILED {r.get('error')}")
    return 0 if any(r["ok"] for r in rows) else 1


# -- chibar ----------------------------------------------------------------------------

def cmd_chibar(out: Path) -> int:
    x = np.linspace(0.02, 1.98, 50)
    io.write_columns(out / "f_table.csv", ("x", "f"), (x, f_appendix(x)))
    print(f"chibar = {chibar():.12f}")
    print(f"f(1) = {f_appendix(1.0):.12f}")
    return 0


# -- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kswave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: config, then ${OUT_ENV})")
    common.add_argument("--workers", type=int, default=1, help="parallel sweep entries")
    common.add_argument("--seed", type=int, default=None,
                        help="recorded in summaries; the solvers themselves are deterministic")
    common.add_argument("-v", "--verbose", action="store_true")
    for name in ("simulate", "wave", "sweep"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--config", required=True, help="INI experiment file")
    sub.add_parser("chibar", parents=[common])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    if args.command != "chibar":
        try:
            cfg = parse_config(args.config)
        except (OSError, ValueError) as e:
            print(f"config error: {e}", file=sys.stderr)
            return 1
    out = resolve_out(args.out, cfg)
    if args.command == "simulate":
        return cmd_simulate(cfg, out, args.seed)
    if args.command == "wave":
        return cmd_wave(cfg, out)
    if args.command == "sweep":
        return cmd_sweep(cfg, out, max(1, args.workers))
    return cmd_chibar(out)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``sisnet <subcommand> --config run.json --out dir``."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, io
from .config import FIGURE_IDS, RunConfig, golden_config, load_config, validate
from .ensemble import extinction_time, permanence_estimate, run_ensemble
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    FormatError,
    NumericalError,
    SisError,
)
from .exact import exact_marginals_mc, exact_marginals_ode, nimfa_bound_report
from .nimfa import DEFAULT_DT as NIMFA_DT, DEFAULT_SAVE_EVERY as NIMFA_SAVE, Trajectory, integrate_nimfa
from .regime import classify
from .sde import DEFAULT_DT as SDE_DT, DEFAULT_SAVE_EVERY as SDE_SAVE, simulate_sde

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5
EXIT_IO = 6

# Output grid spacing for the forward equations when the config gives no dt.
EXACT_GRID_DT = 0.05
# Node whose SDE and mean-field curves are overlaid by reproduce-figure.
PLOT_NODE = 3


@dataclass
class RunContext:
    cfg: RunConfig
    out: Path
    quiet: bool
    mc_paths: int | None = None
    started: float = field(default_factory=time.perf_counter)
    lines: list[str] = field(default_factory=list)

    def say(self, text: str) -> None:
        if not self.quiet:
            print(text)

    def note(self, key: str, value) -> None:
        self.lines.append(f"{key:<22} {value}")


def _binary_init(ctx: RunContext, n: int) -> np.ndarray:
    x0 = ctx.cfg.initial_state(n)
    if not np.all((x0 == 0.0) | (x0 == 1.0)):
        raise ConfigValidationError("the exact chain needs init values that are exactly 0 or 1")
    return x0


def _header(ctx: RunContext, command: str):
    cfg = ctx.cfg
    g = cfg.build_graph()
    p = cfg.build_params()
    report = classify(p, g.spectral)
    ctx.lines += [
        f"sisnet {__version__} {command}",
        f"config {cfg.name}",
        "",
        "[parameters]",
    ]
    ctx.note("graph", f"{cfg.graph.kind} n={g.n} edges={g.n_edges}")
    ctx.note("beta", f"{p.beta:.17g}")
    ctx.note("delta", f"{p.delta:.17g}")
    ctx.note("noise model", p.noise.model)
    ctx.note("noise cap M", f"{p.cap:.17g}")
    ctx.note("lambda1", f"{g.spectral.lambda1:.17g}")
    ctx.lines += ["", "[regime]", report.format()]
    return g, p, report


def _finish(ctx: RunContext) -> None:
    ctx.lines += ["", "[timing]"]
    ctx.note("wall seconds", f"{time.perf_counter() - ctx.started:.3f}")
    summary = ctx.out / ctx.cfg.outputs.summary
    summary.write_text("\n".join(ctx.lines) + "\n")
    ctx.say(f"summary written to {summary}")


def cmd_classify(ctx: RunContext) -> None:
    _, _, report = _header(ctx, "classify")
    ctx.say(report.format(digits=4))
    _finish(ctx)


def _nimfa(ctx: RunContext, g, p):
    run = ctx.cfg.run
    dt = run.dt if run.dt is not None else NIMFA_DT
    save = run.save_every if run.save_every is not None else NIMFA_SAVE
    return integrate_nimfa(g, p, ctx.cfg.initial_state(g.n), run.t_end, dt, save)


def cmd_simulate_nimfa(ctx: RunContext) -> None:
    g, p, _ = _header(ctx, "simulate-nimfa")
    traj = _nimfa(ctx, g, p)
    csv = io.write_trajectory_csv(ctx.out / ctx.cfg.outputs.csv, traj)
    ctx.lines += ["", "[result]"]
    ctx.note("csv", csv.name)
    ctx.note("final min", f"{traj.final.min():.17g}")
    ctx.note("final max", f"{traj.final.max():.17g}")
    if ctx.cfg.outputs.plot:
        io.write_gnuplot_script(ctx.out / "plot.gp", [(csv.name, PLOT_NODE + 2, f"NIMFA node {PLOT_NODE + 1}")],
                                title=ctx.cfg.name)
    ctx.say(f"final state in [{traj.final.min():.6f}, {traj.final.max():.6f}]")
    _finish(ctx)


def _sde(ctx: RunContext, g, p):
    run = ctx.cfg.run
    dt = run.dt if run.dt is not None else SDE_DT
    save = run.save_every if run.save_every is not None else SDE_SAVE
    return simulate_sde(g, p, ctx.cfg.initial_state(g.n), run.t_end, dt, save, run.seed)


def cmd_simulate_sde(ctx: RunContext) -> None:
    g, p, _ = _header(ctx, "simulate-sde")
    path = _sde(ctx, g, p)
    csv = io.write_trajectory_csv(ctx.out / ctx.cfg.outputs.csv, path.trajectory)
    ctx.lines += ["", "[result]"]
    ctx.note("csv", csv.name)
    ctx.note("seed", path.seed)
    ctx.note("steps", path.steps)
    ctx.note("clamp events", path.clamp_events)
    ctx.note("clamp rate", f"{path.clamp_rate:.3e}")
    if ctx.cfg.outputs.plot:
        io.write_gnuplot_script(ctx.out / "plot.gp", [(csv.name, PLOT_NODE + 2, f"SDE node {PLOT_NODE + 1}")],
                                title=ctx.cfg.name)
    ctx.say(f"clamp events {path.clamp_events} (rate {path.clamp_rate:.3e})")
    _finish(ctx)


def cmd_ensemble(ctx: RunContext) -> None:
    g, p, _ = _header(ctx, "ensemble")
    run, an = ctx.cfg.run, ctx.cfg.analysis
    dt = run.dt if run.dt is not None else SDE_DT
    save = run.save_every if run.save_every is not None else SDE_SAVE
    stats = run_ensemble(g, p, ctx.cfg.initial_state(g.n), run.t_end, dt, save, run.paths, run.seed,
                         run.workers, keep_paths=True)
    csv = io.write_ensemble_csv(ctx.out / ctx.cfg.outputs.csv, stats)
    ctx.lines += ["", "[result]"]
    ctx.note("csv", csv.name)
    ctx.note("paths", stats.paths)
    ctx.note("master seed", stats.master_seed)
    ctx.note("clamp events", stats.clamp_events)
    ctx.note("clamp rate", f"{stats.clamp_rate:.3e}")
    ctx.note("final max mean", f"{stats.mean[-1].max():.6g}")
    if an.extinction_hold <= run.t_end:
        hits = [extinction_time(m, an.extinction_tol, an.extinction_hold) for m in stats.members]
        ctx.note("extinct paths", f"{sum(h is not None for h in hits)}/{stats.paths}")
    if an.chi is not None:
        est = permanence_estimate(stats.members, an.chi, tuple(an.window) if an.window else None)
        ctx.note("permanence frac", f"{est.frac:.4f} (chi={est.chi:g}, window={est.window})")
    if ctx.cfg.outputs.plot:
        n = g.n
        cols = [(csv.name, n + 2, "|X| q05"), (csv.name, n + 3, "|X| median"),
                (csv.name, n + 4, "|X| q95"), (csv.name, n + 5, "|X| mean")]
        io.write_gnuplot_script(ctx.out / "plot.gp", cols, title=ctx.cfg.name, ylabel="|X(t)|")
    ctx.say(f"{stats.paths} paths, clamp rate {stats.clamp_rate:.3e}")
    _finish(ctx)


def _exact_grid(ctx: RunContext) -> np.ndarray:
    run = ctx.cfg.run
    step = run.dt if run.dt is not None else EXACT_GRID_DT
    count = max(1, round(run.t_end / step))
    return np.linspace(0.0, run.t_end, count + 1)


def cmd_exact(ctx: RunContext) -> None:
    g, p, _ = _header(ctx, "exact")
    x0 = _binary_init(ctx, g.n)
    times = _exact_grid(ctx)
    curve = exact_marginals_ode(g, p, x0, times)
    csv, _ = io.write_marginals_csv(ctx.out / ctx.cfg.outputs.csv, curve)
    ctx.lines += ["", "[result]"]
    ctx.note("csv", csv.name)
    ctx.note("grid points", times.size)
    series = [(csv.name, i + 2, f"P(X_{i} = 1)") for i in range(min(g.n, 4))]
    paths = ctx.mc_paths
    if paths:
        mc = exact_marginals_mc(g, p, x0, times, paths, ctx.cfg.run.seed)
        mcsv, _ = io.write_marginals_csv(ctx.out / "marginals_mc.csv", mc)
        worst = np.max(np.abs(mc.probs - curve.probs))
        ctx.note("mc paths", paths)
        ctx.note("max |mc - ode|", f"{worst:.3e}")
        series.append((mcsv.name, 2, "Gillespie P(X_0 = 1)"))
    if ctx.cfg.outputs.plot:
        io.write_gnuplot_script(ctx.out / "plot.gp", series, title=ctx.cfg.name)
    _finish(ctx)


def cmd_compare_bound(ctx: RunContext) -> None:
    g, p, _ = _header(ctx, "compare-bound")
    x0 = _binary_init(ctx, g.n)
    times = _exact_grid(ctx)
    rep = nimfa_bound_report(g, p, x0, times)
    io.write_trajectory_csv(ctx.out / "nimfa.csv", _curve_as_trajectory(times, rep.nimfa))
    io.write_trajectory_csv(ctx.out / ctx.cfg.outputs.csv, _curve_as_trajectory(times, rep.exact))
    ctx.lines += ["", "[result]"]
    ctx.note("min gap", f"{rep.min_gap:.6e}")
    ctx.note("at node", rep.node)
    ctx.note("at time", f"{rep.time:.6g}")
    ctx.note("bound holds", "yes" if rep.holds else "no")
    if ctx.cfg.outputs.plot:
        io.write_gnuplot_script(ctx.out / "plot.gp",
                                [("nimfa.csv", 2, "NIMFA x_0"), (ctx.cfg.outputs.csv, 2, "exact P(X_0 = 1)")],
                                title=ctx.cfg.name)
    ctx.say(f"min gap {rep.min_gap:.3e} at node {rep.node}, t={rep.time:.4g}")
    _finish(ctx)


def _curve_as_trajectory(times, values):
    return Trajectory(times, values, scheme="rk4", dt=float(times[1] - times[0]) if times.size > 1 else 0.0)


def cmd_reproduce_figure(ctx: RunContext) -> None:
    g, p, _ = _header(ctx, "reproduce-figure")
    path = _sde(ctx, g, p)
    run = ctx.cfg.run
    nimfa = integrate_nimfa(g, p, ctx.cfg.initial_state(g.n), run.t_end, NIMFA_DT, NIMFA_SAVE)
    sde_csv = io.write_trajectory_csv(ctx.out / ctx.cfg.outputs.csv, path.trajectory)
    nimfa_csv = io.write_trajectory_csv(ctx.out / "nimfa.csv", nimfa)
    ctx.lines += ["", "[result]"]
    ctx.note("sde csv", sde_csv.name)
    ctx.note("nimfa csv", nimfa_csv.name)
    ctx.note("seed", path.seed)
    ctx.note("clamp events", path.clamp_events)
    ctx.note("clamp rate", f"{path.clamp_rate:.3e}")
    ctx.note("sde final max", f"{path.trajectory.final.max():.6g}")
    ctx.note("nimfa final max", f"{nimfa.final.max():.6g}")
    if ctx.cfg.outputs.plot:
        col = PLOT_NODE + 2
        io.write_gnuplot_script(
            ctx.out / "plot.gp",
            [(sde_csv.name, col, f"SDE node {PLOT_NODE + 1}"), (nimfa_csv.name, col, f"NIMFA node {PLOT_NODE + 1}")],
            title=ctx.cfg.name,
        )
    ctx.say(f"{ctx.cfg.name}: clamp rate {path.clamp_rate:.3e}, outputs in {ctx.out}")
    _finish(ctx)


COMMANDS = {
    "classify": cmd_classify,
    "simulate-nimfa": cmd_simulate_nimfa,
    "simulate-sde": cmd_simulate_sde,
    "ensemble": cmd_ensemble,
    "exact": cmd_exact,
    "compare-bound": cmd_compare_bound,
    "reproduce-figure": cmd_reproduce_figure,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--paths", type=int, help="override run.paths")
    common.add_argument("--quiet", action="store_true", help="suppress console output")

    parser = argparse.ArgumentParser(prog="sisnet", description="SIS epidemics with noisy infection rates")
    parser.add_argument("--version", action="version", version=f"sisnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "reproduce-figure":
            sp.add_argument("figure", choices=FIGURE_IDS)
    return parser


def _load(args) -> RunConfig:
    if args.command == "reproduce-figure":
        cfg = load_config(args.config) if args.config else golden_config(args.figure)
    else:
        cfg = load_config(args.config)
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.paths is not None:
        cfg.run.paths = args.paths
    validate(cfg)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "reproduce-figure" and args.config is None:
        parser.error(f"{args.command} needs --config")
    try:
        cfg = _load(args)
        args.out.mkdir(parents=True, exist_ok=True)
        # for `exact`, --paths adds a Gillespie estimate next to the forward equations
        ctx = RunContext(cfg, args.out, args.quiet, mc_paths=args.paths)
        COMMANDS[args.command](ctx)
    except (ConfigParseError, FormatError) as exc:
        print(f"sisnet: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"sisnet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SisError as exc:
        print(f"sisnet: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"sisnet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK

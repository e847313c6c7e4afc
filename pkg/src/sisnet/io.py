"""CSV serialisation and gnuplot script emission.

Every CSV has a single header row and comma-separated decimal values written
with 17 significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ensemble import EnsembleStats
from .errors import FormatError
from .exact import MarginalCurve
from .nimfa import Trajectory

FMT = "%.17g"


def _write(path, header: list[str], columns: list[np.ndarray]) -> Path:
    path = Path(path)
    data = np.column_stack(columns)
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header), comments="")
    return path


def _read(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.shape[1] != len(header):
        raise FormatError(f"{path}: {data.shape[1]} columns but {len(header)} header fields")
    return header, data


def write_trajectory_csv(path, traj: Trajectory) -> Path:
    n = traj.states.shape[1]
    return _write(path, ["t"] + [f"x_{i}" for i in range(n)], [traj.times, traj.states])


def read_trajectory_csv(path) -> Trajectory:
    header, data = _read(path)
    if header[0] != "t" or any(h != f"x_{i}" for i, h in enumerate(header[1:])):
        raise FormatError(f"{path}: not a trajectory CSV (header {header[:3]}...)")
    times = data[:, 0]
    dt = float(times[1] - times[0]) if times.size > 1 else 0.0
    return Trajectory(times, data[:, 1:], scheme="csv", dt=dt)


def write_ensemble_csv(path, stats: EnsembleStats) -> Path:
    n = stats.mean.shape[1]
    header = ["t"] + [f"mean_{i}" for i in range(n)] + ["q05_norm", "q50_norm", "q95_norm", "norm_mean"]
    cols = [stats.times, stats.mean, stats.norm_q05, stats.norm_q50, stats.norm_q95, stats.norm_mean]
    return _write(path, header, cols)


def read_ensemble_csv(path) -> dict[str, np.ndarray]:
    header, data = _read(path)
    if header[0] != "t" or header[-4:] != ["q05_norm", "q50_norm", "q95_norm", "norm_mean"]:
        raise FormatError(f"{path}: not an ensemble CSV")
    return {
        "t": data[:, 0],
        "mean": data[:, 1:-4],
        "q05_norm": data[:, -4],
        "q50_norm": data[:, -3],
        "q95_norm": data[:, -2],
        "norm_mean": data[:, -1],
    }


def write_marginals_csv(path, curve: MarginalCurve) -> tuple[Path, Path]:
    """Write probabilities to ``path`` and confidence half-widths to a ``*_ci.csv`` sidecar."""
    path = Path(path)
    n = curve.probs.shape[1]
    main = _write(path, ["t"] + [f"x_{i}" for i in range(n)], [curve.times, curve.probs])
    side = path.with_name(path.stem + "_ci" + path.suffix)
    _write(side, ["t"] + [f"ci_{i}" for i in range(n)], [curve.times, curve.ci_halfwidth])
    return main, side


def read_marginals_csv(path) -> MarginalCurve:
    path = Path(path)
    traj = read_trajectory_csv(path)
    side = path.with_name(path.stem + "_ci" + path.suffix)
    ci = np.zeros_like(traj.states)
    if side.exists():
        _, data = _read(side)
        ci = data[:, 1:]
    return MarginalCurve(traj.times, traj.states, ci)


def write_gnuplot_script(path, series: list[tuple[str, int, str]], title: str = "",
                         ylabel: str = "infection probability") -> Path:
    """Standalone gnuplot script rendering CSV columns to an SVG next to it.

    ``series`` holds ``(csv file name, 1-based column, legend)`` triples;
    file names are taken relative to the script's directory.
    """
    path = Path(path)
    svg = path.with_suffix(".svg").name
    parts = [f"'{f}' using 1:{col} with lines title '{label}'" for f, col, label in series]
    lines = [
        "set terminal svg size 900,500 dynamic",
        f"set output '{svg}'",
        "set datafile separator ','",
        "set key outside right",
        "set xlabel 't'",
        f"set ylabel '{ylabel}'",
        f"set title '{title}'",
        "plot " + ", \\\n     ".join(parts),
        "",
    ]
    path.write_text("\n".join(lines))
    return path

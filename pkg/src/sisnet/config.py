"""Run configuration: JSON parsing, validation, defaults and model construction.

A config has the sections ``graph``, ``params``, ``init``, ``run``, and the
optional ``analysis`` and ``outputs``::

    {
      "graph":  {"kind": "ring", "n": 50},
      "params": {"beta": 1.5, "delta": 2.8, "noise": {"model": "linear", "m": 0.8, "cap": 0.8}},
      "init":   {"kind": "constant", "value": 0.5},
      "run":    {"t_end": 20, "seed": 1, "paths": 100},
      "outputs": {"csv": "trajectory.csv", "summary": "summary.txt", "plot": true}
    }

Schema problems raise ``ConfigParseError`` naming the offending field; values
that break a model precondition raise ``ConfigValidationError``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigParseError, ConfigValidationError, SisError
from .graph import (
    ContactGraph,
    build_complete,
    build_path,
    build_random,
    build_ring,
    build_star,
    load_edge_list,
)
from .model import NOISE_MODELS, ModelParams, NoiseSpec

GRAPH_KINDS = ("ring", "complete", "random", "file", "path", "star")
FIGURE_IDS = ("fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b")


@dataclass
class GraphConfig:
    kind: str
    n: int | None = None
    p: float | None = None
    path: str | None = None
    seed: int | None = None


@dataclass
class NoiseConfig:
    model: str = "linear"
    m: float | list[float] | None = None
    cap: float = 0.0


@dataclass
class ParamsConfig:
    beta: float
    delta: float
    noise: NoiseConfig = field(default_factory=NoiseConfig)


@dataclass
class InitConfig:
    kind: str = "constant"
    value: float | list[float] = 0.5


@dataclass
class RunSettings:
    t_end: float
    seed: int = 0
    dt: float | None = None
    save_every: int | None = None
    paths: int = 100
    workers: int = 1


@dataclass
class AnalysisConfig:
    extinction_tol: float = 1e-3
    extinction_hold: float = 2.0
    chi: float | None = None
    window: list[float] | None = None


@dataclass
class OutputConfig:
    csv: str = "trajectory.csv"
    summary: str = "summary.txt"
    plot: bool = True


@dataclass
class RunConfig:
    graph: GraphConfig
    params: ParamsConfig
    run: RunSettings
    init: InitConfig = field(default_factory=InitConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    name: str = "run"
    base_dir: str | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def build_graph(self) -> ContactGraph:
        gc = self.graph
        if gc.kind == "ring":
            return build_ring(gc.n)
        if gc.kind == "complete":
            return build_complete(gc.n)
        if gc.kind == "path":
            return build_path(gc.n)
        if gc.kind == "star":
            return build_star(gc.n)
        if gc.kind == "random":
            return build_random(gc.n, gc.p, gc.seed if gc.seed is not None else 0)
        src = _resolve(gc.path, self.base_dir)
        return load_edge_list(src.read_text(), n=gc.n, name=src.stem)

    def build_params(self) -> ModelParams:
        nc = self.params.noise
        levels = None if nc.m is None else np.asarray(nc.m, dtype=np.float64)
        return ModelParams(self.params.beta, self.params.delta, NoiseSpec(cap=nc.cap, levels=levels, model=nc.model))

    def initial_state(self, n: int) -> np.ndarray:
        if self.init.kind == "constant":
            return np.full(n, float(self.init.value))
        return np.asarray(self.init.value, dtype=np.float64)


_SECTIONS = {
    "graph": GraphConfig,
    "params": ParamsConfig,
    "init": InitConfig,
    "run": RunSettings,
    "analysis": AnalysisConfig,
    "outputs": OutputConfig,
}


def _resolve(path: str, base_dir: str | None) -> Path:
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    return p


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _num(section: dict, key: str, where: str, required: bool = False, integer: bool = False):
    if key not in section or section[key] is None:
        if required:
            raise ConfigParseError(f"missing required field '{where}.{key}'")
        return None
    v = section[key]
    if integer:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigParseError(f"field '{where}.{key}' must be an integer, got {v!r}")
        return v
    if not _is_number(v):
        raise ConfigParseError(f"field '{where}.{key}' must be a number, got {v!r}")
    return float(v)


def _section(raw: dict, name: str, required: bool) -> dict:
    if name not in raw:
        if required:
            raise ConfigParseError(f"missing required section '{name}'")
        return {}
    sec = raw[name]
    if not isinstance(sec, dict):
        raise ConfigParseError(f"section '{name}' must be an object")
    allowed = set(_SECTIONS[name].__dataclass_fields__)
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigParseError(f"unknown field(s) in '{name}': {', '.join(sorted(unknown))}")
    return sec


def _num_or_vector(v, where: str):
    if v is None:
        return None
    if _is_number(v):
        return float(v)
    if isinstance(v, list) and all(_is_number(e) for e in v):
        return [float(e) for e in v]
    raise ConfigParseError(f"field '{where}' must be a number or a list of numbers")


def parse_config(source: str | dict, base_dir: str | Path | None = None) -> RunConfig:
    """Parse JSON text (or an already decoded dict) into a validated ``RunConfig``."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            raw = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigParseError("config must be a JSON object")
    unknown = set(raw) - set(_SECTIONS) - {"name"}
    if unknown:
        raise ConfigParseError(f"unknown section(s): {', '.join(sorted(unknown))}")

    g = _section(raw, "graph", True)
    kind = g.get("kind")
    if kind not in GRAPH_KINDS:
        raise ConfigParseError(f"field 'graph.kind' must be one of {GRAPH_KINDS}, got {kind!r}")
    path = g.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigParseError("field 'graph.path' must be a string")
    graph = GraphConfig(
        kind=kind,
        n=_num(g, "n", "graph", required=kind != "file", integer=True),
        p=_num(g, "p", "graph", required=kind == "random"),
        path=path,
        seed=_num(g, "seed", "graph", integer=True),
    )
    if kind == "file" and path is None:
        raise ConfigParseError("missing required field 'graph.path' for kind 'file'")

    pr = _section(raw, "params", True)
    nz = pr.get("noise", {})
    if not isinstance(nz, dict):
        raise ConfigParseError("field 'params.noise' must be an object")
    bad = set(nz) - set(NoiseConfig.__dataclass_fields__)
    if bad:
        raise ConfigParseError(f"unknown field(s) in 'params.noise': {', '.join(sorted(bad))}")
    model = nz.get("model", "linear")
    if model not in NOISE_MODELS:
        raise ConfigParseError(f"field 'params.noise.model' must be one of {NOISE_MODELS}, got {model!r}")
    cap = _num(nz, "cap", "params.noise")
    m = _num_or_vector(nz.get("m"), "params.noise.m")
    params = ParamsConfig(
        beta=_num(pr, "beta", "params", required=True),
        delta=_num(pr, "delta", "params", required=True),
        noise=NoiseConfig(model=model, m=m, cap=cap if cap is not None else (
            float(np.max(m)) if m is not None else 0.0)),
    )

    it = _section(raw, "init", False)
    ikind = it.get("kind", "constant")
    if ikind not in ("constant", "vector"):
        raise ConfigParseError(f"field 'init.kind' must be 'constant' or 'vector', got {ikind!r}")
    ivalue = _num_or_vector(it.get("value", 0.5), "init.value")
    if ikind == "constant" and not isinstance(ivalue, float):
        raise ConfigParseError("field 'init.value' must be a number for kind 'constant'")
    if ikind == "vector" and not isinstance(ivalue, list):
        raise ConfigParseError("field 'init.value' must be a list for kind 'vector'")
    init = InitConfig(kind=ikind, value=ivalue)

    r = _section(raw, "run", True)
    run = RunSettings(
        t_end=_num(r, "t_end", "run", required=True),
        seed=_num(r, "seed", "run", integer=True) or 0,
        dt=_num(r, "dt", "run"),
        save_every=_num(r, "save_every", "run", integer=True),
        paths=_num(r, "paths", "run", integer=True) or 100,
        workers=_num(r, "workers", "run", integer=True) or 1,
    )

    a = _section(raw, "analysis", False)
    window = a.get("window")
    if window is not None and not (isinstance(window, list) and len(window) == 2 and all(map(_is_number, window))):
        raise ConfigParseError("field 'analysis.window' must be a list [t_a, t_b]")
    defaults = AnalysisConfig()
    tol = _num(a, "extinction_tol", "analysis")
    hold = _num(a, "extinction_hold", "analysis")
    analysis = AnalysisConfig(
        extinction_tol=defaults.extinction_tol if tol is None else tol,
        extinction_hold=defaults.extinction_hold if hold is None else hold,
        chi=_num(a, "chi", "analysis"),
        window=[float(w) for w in window] if window is not None else None,
    )

    o = _section(raw, "outputs", False)
    od = OutputConfig()
    for key in ("csv", "summary"):
        if key in o and not isinstance(o[key], str):
            raise ConfigParseError(f"field 'outputs.{key}' must be a string")
    if "plot" in o and not isinstance(o["plot"], bool):
        raise ConfigParseError("field 'outputs.plot' must be a boolean")
    outputs = OutputConfig(csv=o.get("csv", od.csv), summary=o.get("summary", od.summary), plot=o.get("plot", od.plot))

    name = raw.get("name", "run")
    if not isinstance(name, str):
        raise ConfigParseError("field 'name' must be a string")
    cfg = RunConfig(graph=graph, params=params, run=run, init=init, analysis=analysis, outputs=outputs,
                    name=name, base_dir=str(base_dir) if base_dir is not None else None)
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def _fail(msg: str):
    raise ConfigValidationError(msg)


def validate(cfg: RunConfig) -> None:
    """Check the physical preconditions the config feeds into."""
    gc = cfg.graph
    n = gc.n
    if gc.kind == "file":
        src = _resolve(gc.path, cfg.base_dir)
        if not src.is_file():
            _fail(f"graph file not found: {src}")
        if n is None:
            try:
                n = load_edge_list(src.read_text()).n
            except SisError as exc:
                _fail(f"graph file {src}: {exc}")
    min_n = {"ring": 3, "complete": 2, "path": 2, "star": 2, "random": 1, "file": 1}[gc.kind]
    if n is not None and n < min_n:
        _fail(f"graph.n={n} too small for kind '{gc.kind}' (needs >= {min_n})")
    if gc.kind == "random" and not 0.0 <= gc.p <= 1.0:
        _fail(f"graph.p={gc.p} must lie in [0, 1]")

    pc = cfg.params
    if pc.beta < 0:
        _fail(f"params.beta={pc.beta} must be >= 0")
    if pc.delta <= 0:
        _fail(f"params.delta={pc.delta} must be > 0")
    nc = pc.noise
    if nc.cap < 0:
        _fail(f"params.noise.cap={nc.cap} must be >= 0")
    if nc.m is not None:
        m = np.atleast_1d(np.asarray(nc.m, dtype=np.float64))
        if np.any(m < 0):
            _fail("params.noise.m must be >= 0")
        if np.any(m > nc.cap):
            _fail(
                f"params.noise.m={float(m.max()):g} exceeds cap M={nc.cap:g}: "
                "the noise level bound sup sigma_i(x)/x <= M requires m_i <= M"
            )
        if isinstance(nc.m, list) and n is not None and len(nc.m) != n:
            _fail(f"params.noise.m has {len(nc.m)} entries, graph has {n} nodes")

    ic = cfg.init
    vals = np.atleast_1d(np.asarray(ic.value, dtype=np.float64))
    if np.any(vals < 0) or np.any(vals > 1):
        _fail("init.value entries must lie in [0, 1]")
    if ic.kind == "vector" and n is not None and len(ic.value) != n:
        _fail(f"init.value has {len(ic.value)} entries, graph has {n} nodes")

    rc = cfg.run
    if rc.t_end <= 0:
        _fail(f"run.t_end={rc.t_end} must be > 0")
    if rc.dt is not None and (rc.dt <= 0 or rc.dt > rc.t_end):
        _fail(f"run.dt={rc.dt} must lie in (0, t_end]")
    if rc.save_every is not None and rc.save_every < 1:
        _fail("run.save_every must be >= 1")
    if rc.paths < 1:
        _fail("run.paths must be >= 1")
    if rc.workers < 1:
        _fail("run.workers must be >= 1")
    if rc.seed < 0:
        _fail("run.seed must be >= 0")

    ac = cfg.analysis
    if ac.extinction_tol <= 0 or ac.extinction_hold <= 0:
        _fail("analysis.extinction_tol and analysis.extinction_hold must be > 0")
    if ac.chi is not None and ac.chi <= 0:
        _fail("analysis.chi must be > 0")
    if ac.window is not None and not (0 <= ac.window[0] < ac.window[1] <= rc.t_end):
        _fail("analysis.window must satisfy 0 <= t_a < t_b <= t_end")


def golden_config(fig_id: str) -> RunConfig:
    """Shipped golden configuration for a reproduce-figure id."""
    if fig_id not in FIGURE_IDS:
        raise ConfigParseError(f"unknown figure id {fig_id!r}; expected one of {', '.join(FIGURE_IDS)}")
    text = resources.files("sisnet.configs").joinpath(f"{fig_id}.json").read_text()
    return parse_config(text)


def as_plain(obj: Any):
    """JSON-friendly copy with numpy scalars and arrays converted."""
    if isinstance(obj, dict):
        return {k: as_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [as_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj

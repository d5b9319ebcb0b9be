"""Run configuration: a JSON document with ``domain``, ``physics``, ``solver``,
``output`` and (optionally) ``propsuite`` blocks.  Unknown keys are rejected.

Example::

    {
      "domain":  {"kind": "ball", "N": 3, "R": 1.0, "resolution": 401},
      "physics": {"gamma": 1.0, "g": 1.0, "mass_per_volume": 10.0},
      "solver":  {"mass_tol": 1e-10},
      "output":  {"fields": "fields.csv", "summary": "summary.json"}
    }
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import DomainSpec, Grid, Interval, RadialBall, Rectangle, build_grid
from .errors import ConfigurationError
from .scalar import ScalarSolveConfig

DOMAIN_KEYS = {
    "interval": {"kind", "L", "resolution"},
    "ball": {"kind", "N", "R", "resolution"},
    "rectangle": {"kind", "Lx", "Ly", "resolution"},
}
PHYSICS_KEYS = {"gamma", "g", "mass", "mass_per_volume", "alpha"}
SOLVER_KEYS = {"tol_outer", "max_picard", "newton_switch", "damping", "max_newton", "mass_tol"}
OUTPUT_KEYS = {"dir", "fields", "summary"}
PROPSUITE_KEYS = {
    "alphas",
    "alpha_pairs",
    "round_trip_alphas",
    "derivative_alphas",
    "fd_alpha",
    "fd_step",
    "workers",
}
TOP_KEYS = {"domain", "physics", "solver", "output", "propsuite"}

EDGE_NAMES = {
    "interval": ("left", "right"),
    "rectangle": ("left", "right", "bottom", "top"),
}


@dataclass
class PropsuiteConfig:
    alphas: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    alpha_pairs: list = field(default_factory=lambda: [[1.0, 2.0], [2.0, 4.0]])
    round_trip_alphas: list = field(default_factory=lambda: [0.1, 1.0, 10.0])
    derivative_alphas: list = field(default_factory=lambda: [0.5, 2.0, 8.0])
    fd_alpha: float = 1.0
    fd_step: float = 1e-4
    workers: int = 1


@dataclass
class RunConfig:
    domain: DomainSpec
    resolution: object
    gamma: float
    g_spec: object
    mass: float | None = None
    alpha: float | None = None
    solver: ScalarSolveConfig = field(default_factory=ScalarSolveConfig)
    mass_tol: float = 1e-8
    output_dir: str = "."
    fields_name: str = "fields.csv"
    summary_name: str = "summary.json"
    propsuite: PropsuiteConfig = field(default_factory=PropsuiteConfig)

    def grid(self, resolution=None) -> Grid:
        return build_grid(self.domain, self.resolution if resolution is None else resolution)

    def boundary_g(self, grid: Grid) -> np.ndarray:
        return resolve_g(self.g_spec, grid)


def _reject_unknown(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigurationError(f"{where} must be an object")
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _number(block, key, where, required=True, default=None):
    if key not in block:
        if required:
            raise ConfigurationError(f"{where}.{key} is required")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, numbers.Real):
        raise ConfigurationError(f"{where}.{key} must be a number, got {v!r}")
    return v


def _number_list(v, where):
    if not isinstance(v, list) or not all(
        isinstance(x, numbers.Real) and not isinstance(x, bool) for x in v
    ):
        raise ConfigurationError(f"{where} must be a list of numbers")
    return [float(x) for x in v]


def _parse_domain(block):
    _reject_unknown(block, set().union(*DOMAIN_KEYS.values()), "domain")
    kind = block.get("kind")
    if kind not in DOMAIN_KEYS:
        raise ConfigurationError(f"domain.kind must be one of {sorted(DOMAIN_KEYS)}, got {kind!r}")
    _reject_unknown(block, DOMAIN_KEYS[kind], f"domain ({kind})")
    if "resolution" not in block:
        raise ConfigurationError("domain.resolution is required")
    res = block["resolution"]
    if kind == "interval":
        dom = Interval(_number(block, "L", "domain"))
    elif kind == "ball":
        N = block.get("N")
        if isinstance(N, bool) or not isinstance(N, int):
            raise ConfigurationError(f"domain.N must be an integer, got {N!r}")
        dom = RadialBall(N, _number(block, "R", "domain"))
    else:
        dom = Rectangle(_number(block, "Lx", "domain"), _number(block, "Ly", "domain"))
    if isinstance(res, list):
        res = tuple(res)
    # validates the resolution eagerly
    build_grid(dom, res)
    return dom, res


def resolve_g(spec, grid: Grid) -> np.ndarray:
    """Per-boundary-node permeability from a config ``g`` entry.

    Accepted forms: a number; ``{"edges": {...}}`` with per-edge constants
    (interval: left/right, rectangle: left/right/bottom/top; a corner takes
    the mean of its two edges); ``{"values": [...]}`` listing one value per
    boundary node in grid order.
    """
    if isinstance(spec, numbers.Real) and not isinstance(spec, bool):
        return np.full(grid.n_boundary, float(spec))
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigurationError("physics.g must be a number, {'edges': {...}} or {'values': [...]}")
    ((form, payload),) = spec.items()
    if form == "values":
        vals = _number_list(payload, "physics.g.values")
        if len(vals) != grid.n_boundary:
            raise ConfigurationError(
                f"physics.g.values has {len(vals)} entries, grid has {grid.n_boundary} boundary nodes"
            )
        return np.array(vals)
    if form != "edges":
        raise ConfigurationError(f"unknown g form {form!r}")
    kind = grid.domain.kind
    if kind not in EDGE_NAMES:
        raise ConfigurationError("per-edge g needs an interval or a rectangle")
    names = EDGE_NAMES[kind]
    _reject_unknown(payload, names, "physics.g.edges")
    missing = [k for k in names if k not in payload]
    if missing:
        raise ConfigurationError(f"physics.g.edges is missing {', '.join(missing)}")
    vals = {k: float(_number(payload, k, "physics.g.edges")) for k in names}
    if kind == "interval":
        return np.array([vals["left"], vals["right"]])
    nx, ny = grid.shape
    i, j = np.divmod(grid.boundary_indices, ny)
    total = np.zeros(grid.n_boundary)
    count = np.zeros(grid.n_boundary)
    for name, mask in (
        ("left", i == 0),
        ("right", i == nx - 1),
        ("bottom", j == 0),
        ("top", j == ny - 1),
    ):
        total[mask] += vals[name]
        count[mask] += 1
    return total / count


def parse_config(data: dict) -> RunConfig:
    _reject_unknown(data, TOP_KEYS, "config")
    for key in ("domain", "physics"):
        if key not in data:
            raise ConfigurationError(f"config block '{key}' is required")
    dom, res = _parse_domain(data["domain"])

    phys = data["physics"]
    _reject_unknown(phys, PHYSICS_KEYS, "physics")
    gamma = _number(phys, "gamma", "physics")
    if "g" not in phys:
        raise ConfigurationError("physics.g is required")
    given = [k for k in ("mass", "mass_per_volume", "alpha") if k in phys]
    if len(given) != 1:
        raise ConfigurationError(
            "physics needs exactly one of mass / mass_per_volume / alpha, got "
            + (", ".join(given) if given else "none")
        )
    mass = alpha = None
    if "alpha" in phys:
        alpha = float(_number(phys, "alpha", "physics"))
        if alpha < 0:
            raise ConfigurationError("physics.alpha must be >= 0")
    else:
        mass = float(_number(phys, given[0], "physics"))
        if given[0] == "mass_per_volume":
            mass *= dom.measure
        if not mass > 0:
            raise ConfigurationError("mass must be positive")

    solver = data.get("solver", {})
    _reject_unknown(solver, SOLVER_KEYS, "solver")
    for k, v in solver.items():
        if isinstance(v, bool) or not isinstance(v, numbers.Real) or not v > 0:
            raise ConfigurationError(f"solver.{k} must be a positive number")
    mass_tol = float(solver.get("mass_tol", 1e-8))
    scfg = ScalarSolveConfig(**{k: v for k, v in solver.items() if k != "mass_tol"})

    out = data.get("output", {})
    _reject_unknown(out, OUTPUT_KEYS, "output")
    for k, v in out.items():
        if not isinstance(v, str) or not v:
            raise ConfigurationError(f"output.{k} must be a non-empty string")

    ps = data.get("propsuite", {})
    _reject_unknown(ps, PROPSUITE_KEYS, "propsuite")
    pcfg = PropsuiteConfig()
    for key in ("alphas", "round_trip_alphas", "derivative_alphas"):
        if key in ps:
            setattr(pcfg, key, _number_list(ps[key], f"propsuite.{key}"))
    if "alpha_pairs" in ps:
        pairs = ps["alpha_pairs"]
        if not isinstance(pairs, list):
            raise ConfigurationError("propsuite.alpha_pairs must be a list of pairs")
        pcfg.alpha_pairs = [_number_list(p, "propsuite.alpha_pairs[]") for p in pairs]
        if any(len(p) != 2 or p[0] == p[1] for p in pcfg.alpha_pairs):
            raise ConfigurationError("propsuite.alpha_pairs entries must be distinct pairs")
    for key in ("fd_alpha", "fd_step"):
        if key in ps:
            setattr(pcfg, key, float(_number(ps, key, "propsuite")))
    if "workers" in ps:
        w = ps["workers"]
        if isinstance(w, bool) or not isinstance(w, int) or w < 1:
            raise ConfigurationError("propsuite.workers must be a positive integer")
        pcfg.workers = w

    cfg = RunConfig(
        domain=dom,
        resolution=res,
        gamma=float(gamma),
        g_spec=phys["g"],
        mass=mass,
        alpha=alpha,
        solver=scfg,
        mass_tol=mass_tol,
        output_dir=out.get("dir", "."),
        fields_name=out.get("fields", "fields.csv"),
        summary_name=out.get("summary", "summary.json"),
        propsuite=pcfg,
    )
    # resolve g once so bad boundary data fails at parse time
    from .domain import boundary_data

    grid = cfg.grid()
    boundary_data(grid, cfg.boundary_g(grid), cfg.gamma)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(data)

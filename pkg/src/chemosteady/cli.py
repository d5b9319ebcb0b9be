"""Command-line front end: ``solve``, ``convergence`` and ``propsuite``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .diagnostics import (
    CheckReport,
    CheckResult,
    _result,
    check_alpha_monotonicity,
    check_derivative_bounds,
    check_lipschitz,
    check_w_sandwich,
    CONTINUUM_SLACK,
)
from .domain import Interval, RadialBall, boundary_data
from .errors import ChemoSteadyError, ConfigurationError, NumericalFailure
from .mass import (
    SteadyState,
    barrier,
    invert_mass,
    mass_of_alpha,
    steady_state,
    steady_state_from_alpha,
)
from .oracle import solve_oracle

log = logging.getLogger("chemosteady")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

SUMMARY_KEYS = (
    "domain",
    "resolution",
    "n_nodes",
    "gamma",
    "alpha",
    "mass_target",
    "mass_achieved",
    "c_min",
    "c_max",
    "n_min",
    "n_max",
    "picard_iterations",
    "newton_iterations",
    "inversion_iterations",
    "pde_residual",
    "bc_residual",
    "n_equation_residual",
    "report",
)


def _emit(quiet, *lines):
    if not quiet:
        for line in lines:
            print(line)


def run_pipeline(cfg: RunConfig, resolution=None) -> SteadyState:
    grid = cfg.grid(resolution)
    bdata = boundary_data(grid, cfg.boundary_g(grid), cfg.gamma)
    if cfg.alpha is not None:
        return steady_state_from_alpha(cfg.alpha, cfg.gamma, bdata, grid, cfg=cfg.solver)
    return steady_state(cfg.mass, cfg.gamma, bdata, grid, cfg=cfg.solver, tol=cfg.mass_tol)


def _domain_dict(dom) -> dict:
    out = {"kind": dom.kind}
    out.update({k: v for k, v in vars(dom).items()})
    return out


def summarize(state: SteadyState, cfg: RunConfig) -> dict:
    sol = state.solution
    res = cfg.resolution
    summary = {
        "domain": _domain_dict(cfg.domain),
        "resolution": list(res) if isinstance(res, tuple) else res,
        "n_nodes": state.grid.n_nodes,
        "gamma": state.gamma,
        "alpha": state.alpha,
        "mass_target": state.mass_target,
        "mass_achieved": state.mass_achieved,
        "c_min": float(state.c.min()),
        "c_max": float(state.c.max()),
        "n_min": float(state.n.min()),
        "n_max": float(state.n.max()),
        "picard_iterations": sol.picard_iterations,
        "newton_iterations": sol.newton_iterations,
        "inversion_iterations": state.inversion_iterations,
        "pde_residual": sol.pde_residual,
        "bc_residual": sol.bc_residual,
        "n_equation_residual": state.n_residual,
        "report": state.report.to_dict(),
    }
    assert tuple(summary) == SUMMARY_KEYS
    return summary


def coordinate_columns(grid):
    dom = grid.domain
    if dom.kind == "interval":
        return ["x"], grid.points
    if dom.kind == "ball":
        return ["r"], grid.points
    return ["x", "y"], grid.points


def write_fields(path: Path, state: SteadyState):
    names, coords = coordinate_columns(state.grid)
    table = np.column_stack([coords, state.c, state.n])
    np.savetxt(path, table, delimiter=",", header=",".join(names + ["c", "n"]), comments="", fmt="%.17g")


def write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=False, allow_nan=True) + "\n")


def _out_dir(cfg: RunConfig, override) -> Path:
    out = Path(override if override is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(config_path, out=None, quiet=False) -> int:
    try:
        cfg = load_config(config_path)
        out_dir = _out_dir(cfg, out)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        state = run_pipeline(cfg)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChemoSteadyError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    summary = summarize(state, cfg)
    write_fields(out_dir / cfg.fields_name, state)
    write_json(out_dir / cfg.summary_name, summary)
    lines = [
        f"alpha = {state.alpha:.12g}",
        f"c in [{summary['c_min']:.6g}, {summary['c_max']:.6g}], "
        f"n in [{summary['n_min']:.6g}, {summary['n_max']:.6g}]",
    ]
    lines += [f"{c.status:8s} {c.name}: {c.detail}" for c in state.report.checks]
    _emit(quiet, *lines)
    return EXIT_OK if state.report.passed else EXIT_CHECK


def _oracle_for(cfg: RunConfig, grid, alpha):
    """Oracle profile on the half interval when the 1D problem is symmetric."""
    dom = cfg.domain
    g = cfg.boundary_g(grid)
    if not np.all(g == g[0]) or not g[0] > 0 or not alpha > 0:
        return None
    if isinstance(dom, Interval):
        half = dom.L / 2
    elif isinstance(dom, RadialBall) and dom.N == 1:
        half = dom.R
    else:
        return None
    return solve_oracle(half, float(g[0]), cfg.gamma, alpha)


def _oracle_error(prof, state):
    grid = state.grid
    if isinstance(grid.domain, Interval):
        ref = prof.sample_symmetric(grid.points[:, 0])
    else:
        ref = prof.sample(grid.axes[0])
    return float(np.abs(state.c - ref).max())


def convergence_table(cfg: RunConfig, levels: int):
    """Rows of the refinement study: one per level, with Richardson and oracle columns.

    Level ``k`` has ``(n0 - 1) 2^k + 1`` nodes per axis so every coarse node
    survives; the observed order at level ``k >= 2`` is
    ``log2(|u_{k-2} - u_{k-1}| / |u_{k-1} - u_k|)`` on the level-0 nodes.
    """
    if levels < 1:
        raise ConfigurationError("levels must be >= 1")
    grid0 = cfg.grid()
    grids = [grid0]
    for _ in range(levels - 1):
        grids.append(grids[-1].refine())
    states = [run_pipeline(cfg, g.shape if len(g.shape) > 1 else g.shape[0]) for g in grids]
    coarse = [s.grid.coarse_view(s.c, 2**k) for k, s in enumerate(states)]
    diffs = [float(np.abs(a - b).max()) for a, b in zip(coarse, coarse[1:])]

    oracle_errors = [None] * levels
    if cfg.domain.kind in ("interval", "ball") and cfg.domain.dim == 1:
        # one oracle per level: alpha can move slightly with h under a mass constraint
        for k, s in enumerate(states):
            prof = _oracle_for(cfg, s.grid, s.alpha)
            if prof is not None:
                oracle_errors[k] = _oracle_error(prof, s)

    rows = []
    for k, s in enumerate(states):
        order = None
        if k >= 2 and diffs[k - 1] > 0:
            order = math.log2(diffs[k - 2] / diffs[k - 1])
        oracle_order = None
        if k >= 1 and oracle_errors[k] and oracle_errors[k - 1]:
            oracle_order = math.log2(oracle_errors[k - 1] / oracle_errors[k])
        rows.append(
            {
                "level": k,
                "nodes": s.grid.n_nodes,
                "h": max(s.grid.h),
                "alpha": s.alpha,
                "c_min": float(s.c.min()),
                "c_max": float(s.c.max()),
                "diff_to_next": diffs[k] if k < len(diffs) else None,
                "order": order,
                "oracle_error": oracle_errors[k],
                "oracle_order": oracle_order,
            }
        )
    return rows


def _fmt(v, spec):
    return "" if v is None else format(v, spec)


def format_table(rows) -> list:
    head = f"{'level':>5} {'nodes':>7} {'h':>10} {'alpha':>14} {'c_min':>12} {'c_max':>12} {'diff':>10} {'order':>7} {'oracle_err':>11} {'o_order':>7}"
    lines = [head]
    for r in rows:
        lines.append(
            f"{r['level']:>5d} {r['nodes']:>7d} {r['h']:>10.4g} {r['alpha']:>14.10g} "
            f"{r['c_min']:>12.8g} {r['c_max']:>12.8g} {_fmt(r['diff_to_next'], '10.3e'):>10} "
            f"{_fmt(r['order'], '7.4f'):>7} {_fmt(r['oracle_error'], '11.3e'):>11} "
            f"{_fmt(r['oracle_order'], '7.4f'):>7}"
        )
    return lines


def cmd_convergence(config_path, levels=3, out=None, quiet=False) -> int:
    try:
        cfg = load_config(config_path)
        if levels < 1:
            raise ConfigurationError("levels must be >= 1")
        out_dir = _out_dir(cfg, out) if out is not None else None
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = convergence_table(cfg, levels)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChemoSteadyError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(quiet, *format_table(rows))
    if out_dir is not None:
        write_json(out_dir / "convergence.json", {"levels": levels, "rows": rows})
    return EXIT_OK


def _round_trip(cfg, grid, bdata, alpha) -> CheckResult:
    ev = mass_of_alpha(alpha, cfg.gamma, bdata, grid, cfg.solver)
    back = invert_mass(ev.mass, cfg.gamma, bdata, grid, tol=1e-12, cfg=cfg.solver)
    rel = abs(back.alpha - alpha) / alpha
    return _result(
        "mass_round_trip",
        "mass map inverts back to the starting alpha",
        rel,
        None,
        1e-6,
        f"alpha {alpha:g} -> mass {ev.mass:.12g} -> alpha {back.alpha:.12g}",
    )


def _mass_derivative(cfg, grid, bdata, alpha, eps) -> CheckResult:
    ev = mass_of_alpha(alpha, cfg.gamma, bdata, grid, cfg.solver, derivative=True)
    up = mass_of_alpha(alpha + eps, cfg.gamma, bdata, grid, cfg.solver).mass
    down = mass_of_alpha(alpha - eps, cfg.gamma, bdata, grid, cfg.solver).mass
    fd = (up - down) / (2 * eps)
    rel = abs(ev.dmass - fd) / abs(fd)
    return _result(
        "mass_derivative",
        "linearised mass derivative agrees with central differences",
        rel,
        None,
        1e-6,
        f"alpha {alpha:g}: m' = {ev.dmass:.12g}, central difference {fd:.12g}",
    )


def _derivative(cfg, grid, bdata, alpha) -> CheckResult:
    ev = mass_of_alpha(alpha, cfg.gamma, bdata, grid, cfg.solver)
    from .mass import dmass_dalpha

    try:
        c_prime, _ = dmass_dalpha(alpha, ev.solution)
    except NumericalFailure:
        # recompute without the guard so the check reports the breach
        from .robin import assemble
        from .scalar import newton_coefficient, reaction

        op = assemble(grid, newton_coefficient(alpha, ev.c), ev.solution.g)
        c_prime = op.solve(reaction(ev.c), 0.0)
    res = check_derivative_bounds(alpha, c_prime)
    res.detail = f"alpha {alpha:g}: {res.detail}"
    return res


def _sandwich(cfg, grid, bdata, pair, w_tilde):
    a1, a2 = sorted(pair)
    s1 = mass_of_alpha(a1, cfg.gamma, bdata, grid, cfg.solver).solution
    s2 = mass_of_alpha(a2, cfg.gamma, bdata, grid, cfg.solver).solution
    return [check_w_sandwich(s1, s2, w_tilde), check_lipschitz(s1, s2, w_tilde)]


def propsuite_report(cfg: RunConfig) -> CheckReport:
    """Run the diagnostics plus the lattice properties; checks are listed in lattice order."""
    ps = cfg.propsuite
    grid = cfg.grid()
    bdata = boundary_data(grid, cfg.boundary_g(grid), cfg.gamma)
    w_tilde = barrier(grid, cfg.gamma, bdata)

    tasks = [lambda: run_pipeline(cfg).report.checks]
    if ps.alphas:
        tasks.append(lambda: [check_alpha_monotonicity(cfg.gamma, bdata, grid, sorted(ps.alphas), cfg.solver)])
    tasks += [(lambda a=a: [_round_trip(cfg, grid, bdata, a)]) for a in ps.round_trip_alphas]
    tasks += [(lambda a=a: [_derivative(cfg, grid, bdata, a)]) for a in ps.derivative_alphas]
    tasks += [(lambda p=p: _sandwich(cfg, grid, bdata, p, w_tilde)) for p in ps.alpha_pairs]
    if ps.fd_alpha > ps.fd_step:
        tasks.append(lambda: [_mass_derivative(cfg, grid, bdata, ps.fd_alpha, ps.fd_step)])

    def run(task):
        try:
            return task()
        except ChemoSteadyError as exc:
            return [
                CheckResult(
                    name="solver",
                    source="solve completes",
                    status="failed",
                    worst_violation=math.inf,
                    tolerance=CONTINUUM_SLACK,
                    detail=str(exc),
                )
            ]

    # executor.map keeps submission order, so the report is deterministic
    with ThreadPoolExecutor(max_workers=ps.workers) as pool:
        results = list(pool.map(run, tasks))
    return CheckReport(checks=[c for group in results for c in group])


def cmd_propsuite(config_path, out=None, quiet=False) -> int:
    try:
        cfg = load_config(config_path)
        out_dir = _out_dir(cfg, out) if out is not None else None
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = propsuite_report(cfg)
    except ChemoSteadyError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(quiet, *[f"{c.status:8s} {c.name}: {c.detail}" for c in report.checks])
    if out_dir is not None:
        write_json(out_dir / "propsuite.json", report.to_dict())
    return EXIT_OK if report.passed else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemosteady", description="Stationary chemotaxis-consumption solver with Robin boundary"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve one configuration and write fields and summary"),
        ("convergence", "grid refinement study"),
        ("propsuite", "property checks on a parameter lattice"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true", help="suppress console output")
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        if name == "convergence":
            p.add_argument("--levels", type=int, default=3, help="number of grid levels")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "solve":
        return cmd_solve(args.config, args.out, args.quiet)
    if args.command == "convergence":
        return cmd_convergence(args.config, args.levels, args.out, args.quiet)
    return cmd_propsuite(args.config, args.out, args.quiet)


if __name__ == "__main__":
    sys.exit(main())

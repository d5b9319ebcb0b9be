import json
import math

import numpy as np
import pytest

from chemosteady.cli import SUMMARY_KEYS, convergence_table, main
from chemosteady.config import parse_config

BALL_BENCHMARK = {
    "domain": {"kind": "ball", "N": 3, "R": 1.0, "resolution": 401},
    "physics": {"gamma": 1.0, "g": 1.0, "mass_per_volume": 10.0},
}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(tmp_path, data, *extra, command="solve"):
    out = tmp_path / "out"
    code = main([command, "--config", write(tmp_path, data), "--out", str(out), "--quiet", *extra])
    return code, out


def test_solve_ball_benchmark(tmp_path):
    code, out = run(tmp_path, BALL_BENCHMARK)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert tuple(summary) == SUMMARY_KEYS
    assert summary["c_min"] == pytest.approx(0.088, abs=0.005)
    assert summary["c_max"] == pytest.approx(0.311, abs=0.005)
    assert summary["n_min"] >= 8
    assert summary["report"]["passed"]
    table = np.loadtxt(out / "fields.csv", delimiter=",", skiprows=1)
    assert table.shape == (401, 3)
    assert (out / "fields.csv").read_text().splitlines()[0] == "r,c,n"


def test_solve_alpha_zero(tmp_path):
    cfg = {"domain": {"kind": "interval", "L": 1.0, "resolution": 51}, "physics": {"gamma": 2.0, "g": 1.0, "alpha": 0.0}}
    code, out = run(tmp_path, cfg)
    assert code == 0
    table = np.loadtxt(out / "fields.csv", delimiter=",", skiprows=1)
    assert np.abs(table[:, 1] - 2.0).max() <= 1e-12
    assert np.all(table[:, 2] == 0.0)


def test_mass_and_alpha_conflict(tmp_path, capsys):
    cfg = json.loads(json.dumps(BALL_BENCHMARK))
    cfg["physics"]["alpha"] = 1.0
    code, _ = run(tmp_path, cfg)
    assert code == 2
    err = capsys.readouterr().err
    assert "mass_per_volume" in err and "alpha" in err


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c.update(extra=1),
        lambda c: c["domain"].update(L=1.0),
        lambda c: c["physics"].update(G=1.0),
        lambda c: c["physics"].pop("g"),
        lambda c: c["domain"].update(resolution=4),
        lambda c: c["physics"].update(g=0.0),
        lambda c: c.update(solver={"tol_outer": -1.0}),
    ],
)
def test_bad_configs_exit_2(tmp_path, mutate):
    cfg = json.loads(json.dumps(BALL_BENCHMARK))
    mutate(cfg)
    assert run(tmp_path, cfg)[0] == 2


def test_unreadable_config_exit_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.json"), "--quiet"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad), "--quiet"]) == 2


def test_solver_failure_exit_3(tmp_path):
    cfg = json.loads(json.dumps(BALL_BENCHMARK))
    cfg["solver"] = {"max_picard": 1}
    assert run(tmp_path, cfg)[0] == 3


def test_check_failure_exit_1(tmp_path):
    # a loose inversion tolerance stops early, so the mass check at 1e-8 fails
    cfg = json.loads(json.dumps(BALL_BENCHMARK))
    cfg["solver"] = {"mass_tol": 0.9}
    code, out = run(tmp_path, cfg)
    assert code == 1
    summary = json.loads((out / "summary.json").read_text())
    assert not summary["report"]["passed"]


def test_outputs_deterministic(tmp_path):
    cfg = {"domain": {"kind": "rectangle", "Lx": 1.0, "Ly": 1.0, "resolution": [15, 11]},
           "physics": {"gamma": 1.0, "g": {"edges": {"left": 1, "right": 1, "bottom": 0, "top": 1}}, "mass": 2.0}}
    first = tmp_path / "a"
    second = tmp_path / "b"
    path = write(tmp_path, cfg)
    assert main(["solve", "--config", path, "--out", str(first), "--quiet"]) == 0
    assert main(["solve", "--config", path, "--out", str(second), "--quiet"]) == 0
    for name in ("fields.csv", "summary.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_rectangle_corner_g_is_edge_mean():
    cfg = parse_config({"domain": {"kind": "rectangle", "Lx": 1.0, "Ly": 1.0, "resolution": [9, 9]},
                        "physics": {"gamma": 1.0, "g": {"edges": {"left": 1, "right": 1, "bottom": 0, "top": 1}}, "alpha": 1.0}})
    grid = cfg.grid()
    g = cfg.boundary_g(grid)
    pts = grid.points[grid.boundary_indices]
    at = lambda x, y: g[np.flatnonzero((pts[:, 0] == x) & (pts[:, 1] == y))[0]]
    assert at(0.0, 0.0) == 0.5 and at(1.0, 0.0) == 0.5
    assert at(0.5, 0.0) == 0.0 and at(0.0, 1.0) == 1.0


def test_tabulated_g_length_checked():
    base = {"domain": {"kind": "interval", "L": 1.0, "resolution": 11}, "physics": {"gamma": 1.0, "alpha": 1.0}}
    base["physics"]["g"] = {"values": [1.0, 2.0]}
    assert parse_config(base).boundary_g(parse_config(base).grid()).tolist() == [1.0, 2.0]
    base["physics"]["g"] = {"values": [1.0]}
    with pytest.raises(ValueError):
        parse_config(base)


def test_mass_per_volume_scaled():
    cfg = parse_config(BALL_BENCHMARK)
    assert cfg.mass == pytest.approx(40 * math.pi / 3)


def test_convergence_interval(tmp_path, capsys):
    cfg = {"domain": {"kind": "interval", "L": 1.0, "resolution": 101}, "physics": {"gamma": 1.0, "g": 1.0, "alpha": 1.0}}
    rows = convergence_table(parse_config(cfg), 4)
    assert 1.9 <= rows[2]["order"] <= 2.1 and 1.9 <= rows[3]["order"] <= 2.1
    errs = [r["oracle_error"] for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    code, out = run(tmp_path, cfg, "--levels", "3", command="convergence")
    assert code == 0
    saved = json.loads((out / "convergence.json").read_text())
    assert len(saved["rows"]) == 3


def test_convergence_single_level(capsys, tmp_path):
    cfg = {"domain": {"kind": "interval", "L": 1.0, "resolution": 51}, "physics": {"gamma": 1.0, "g": 1.0, "mass": 2.0}}
    rows = convergence_table(parse_config(cfg), 1)
    assert len(rows) == 1 and rows[0]["order"] is None and rows[0]["oracle_error"] is not None
    assert main(["convergence", "--config", write(tmp_path, cfg), "--levels", "1"]) == 0
    header, data = capsys.readouterr().out.strip().splitlines()
    assert header.split()[0] == "level" and data.split()[0] == "0"


def test_convergence_bad_levels(tmp_path):
    assert run(tmp_path, BALL_BENCHMARK, "--levels", "0", command="convergence")[0] == 2


def test_propsuite_small_lattice(tmp_path):
    cfg = {
        "domain": {"kind": "interval", "L": 1.0, "resolution": 101},
        "physics": {"gamma": 1.0, "g": 1.0, "mass": 3.0},
        "propsuite": {"alphas": [0.5, 1, 2], "alpha_pairs": [[1, 2]], "round_trip_alphas": [1.0],
                      "derivative_alphas": [2.0], "workers": 3},
    }
    code, out = run(tmp_path, cfg, command="propsuite")
    assert code == 0
    report = json.loads((out / "propsuite.json").read_text())
    names = [c["name"] for c in report["checks"]]
    assert names[-6:] == ["alpha_monotonicity", "mass_round_trip", "derivative_bounds", "w_sandwich", "lipschitz", "mass_derivative"]


def test_propsuite_failure_reported(tmp_path):
    cfg = {
        "domain": {"kind": "interval", "L": 1.0, "resolution": 51},
        "physics": {"gamma": 1.0, "g": 1.0, "mass": 3.0},
        "solver": {"max_picard": 1},
        "propsuite": {"alphas": [], "alpha_pairs": [], "round_trip_alphas": [], "derivative_alphas": []},
    }
    assert run(tmp_path, cfg, command="propsuite")[0] == 1

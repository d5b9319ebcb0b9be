import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from chemosteady import ConfigurationError, position_of, solve_oracle
from chemosteady.oracle import boundary_defect, phi


def test_phi_examples():
    assert phi(0.3, 0.3) == 0.0
    assert phi(1.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        phi(0.1, 0.2)


@pytest.mark.parametrize("c", [0.2, 0.7, 1.5])
def test_phi_derivative(c):
    h = 1e-5
    fd = (phi(c + h, 0.1) - phi(c - h, 0.1)) / (2 * h)
    assert fd == pytest.approx(c * math.exp(c), abs=1e-8)


def test_position_of_endpoints_and_monotone():
    assert position_of(0.4, 0.4, 2.0) == 0.0
    vals = [position_of(v, 0.4, 2.0) for v in (0.41, 0.5, 0.8, 1.2)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("c0,alpha", [(0.28, 1.0), (0.05, 8.0), (0.9, 0.3)])
def test_position_of_against_ivp(c0, alpha):
    # integrate c'' = alpha c e^c from c(0) = c0, c'(0) = 0 with a high-order stepper
    targets = c0 + np.array([1e-3, 0.05, 0.2, 0.5])

    def rhs(x, y):
        return [y[1], alpha * y[0] * math.exp(y[0])]

    events = []
    for t in targets:
        ev = lambda x, y, t=t: y[0] - t
        ev.terminal = False
        events.append(ev)
    out = solve_ivp(rhs, (0, 20), [c0, 0.0], method="DOP853", rtol=1e-13, atol=1e-14, events=events)
    for t, hits in zip(targets, out.t_events):
        assert abs(position_of(t, c0, alpha) - hits[0]) <= 1e-7


def test_oracle_invariants():
    prof = solve_oracle(1.0, 1.0, 1.0, 1.0)
    assert 0 < prof.c0 <= prof.c_at_L < 1.0
    lhs = prof.G * (prof.gamma - prof.c_at_L)
    assert lhs == pytest.approx(math.sqrt(2 * prof.alpha * phi(prof.c_at_L, prof.c0)), abs=1e-9)
    assert prof.sample(1.0) == pytest.approx(prof.c_at_L, abs=1e-12)
    assert prof.sample(0.0) == prof.c0


def test_dirichlet_limit():
    prof = solve_oracle(1.0, 1e6, 1.0, 1.0)
    assert abs(prof.c_at_L - 1.0) <= 1e-4


def test_small_alpha_limit():
    prof = solve_oracle(1.0, 1.0, 1.0, 1e-8)
    assert abs(prof.c0 - 1.0) <= 1e-3


def test_sampler_convexity():
    prof = solve_oracle(1.0, 2.0, 1.0, 3.0)
    vals = prof.sample(np.linspace(0, 1, 101))
    assert np.diff(vals, 2).min() >= 0


def test_defect_changes_sign_along_bracket():
    lo, _ = boundary_defect(1e-6, 1.0, 1.0, 1.0, 1.0)
    hi, _ = boundary_defect(1.0, 1.0, 1.0, 1.0, 1.0)
    assert lo > 0 > hi
    sweep = [boundary_defect(c0, 1.0, 1.0, 1.0, 1.0)[0] for c0 in np.linspace(0.05, 1.0, 10)]
    assert all(b < a for a, b in zip(sweep, sweep[1:]))


def test_sample_outside_range_rejected():
    prof = solve_oracle(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        prof.sample(1.5)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1.0, 1.0), (1.0, -1.0, 1.0, 1.0), (1.0, 1.0, 1.0, 0.0)])
def test_bad_arguments(args):
    with pytest.raises(ConfigurationError):
        solve_oracle(*args)

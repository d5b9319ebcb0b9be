import math

import numpy as np
import pytest

from chemosteady import Interval, RadialBall, Rectangle, SingularOperatorError, assemble, build_grid, solve


def test_neumann_with_reaction_is_solvable():
    grid = build_grid(Interval(1.0), 11)
    op = assemble(grid, 1.0, 0.0)
    # u'' - u = 1 with zero flux has the constant solution -1
    assert np.allclose(solve(op, 1.0, 0.0), -1.0, atol=1e-12)


def test_singular_operator_refused():
    grid = build_grid(Interval(1.0), 11)
    with pytest.raises(SingularOperatorError, match="singular operator"):
        assemble(grid, 0.0, 0.0)


def test_negative_coefficients_refused():
    grid = build_grid(Interval(1.0), 11)
    with pytest.raises(ValueError):
        assemble(grid, -1.0, 1.0)
    with pytest.raises(ValueError):
        assemble(grid, 0.0, [1.0, -1.0])


def test_constant_solves_harmonic_robin_problem():
    grid = build_grid(RadialBall(3, 1.0), 101)
    u = solve(assemble(grid, 0.0, 1.0), 0.0, 2.5)
    assert np.abs(u - 2.5).max() <= 1e-10


def test_homogeneous_problem_has_zero_solution():
    grid = build_grid(Rectangle(1.0, 1.0), (11, 11))
    u = solve(assemble(grid, 1.0, 1.0), 0.0, 0.0)
    assert np.all(u == 0.0)


def _mms_errors(grid_sizes, setup):
    errs = []
    for n in grid_sizes:
        grid, op, f, phi, exact = setup(n)
        errs.append(np.abs(solve(op, f, phi) - exact).max())
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def test_mms_interval_cos():
    def setup(n):
        grid = build_grid(Interval(1.0), n)
        x = grid.axes[0]
        u = np.cos(math.pi * x)
        f = -(math.pi**2) * u - u
        # u'(0) = u'(1) = 0, so phi = b u on both ends
        phi = 2.0 * u[grid.boundary_indices]
        return grid, assemble(grid, 1.0, 2.0), f, phi, u

    orders = _mms_errors((41, 81, 161, 321), setup)
    assert all(1.9 <= p <= 2.1 for p in orders), orders


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_mms_radial(N):
    def setup(n):
        grid = build_grid(RadialBall(N, 1.0), n)
        r = grid.axes[0]
        u = np.cos(r)
        lap = -np.cos(r) - (N - 1) * np.sinc(r / math.pi)
        q = 1 + r**2
        # du/dr at R = 1 is -sin 1
        phi = -math.sin(1.0) + 0.5 * math.cos(1.0)
        return grid, assemble(grid, q, 0.5), lap - q * u, phi, u

    orders = _mms_errors((41, 81, 161, 321), setup)
    assert all(1.9 <= p <= 2.1 for p in orders), orders


def test_mms_rectangle():
    def setup(n):
        grid = build_grid(Rectangle(1.0, 1.0), (n, n))
        x, y = grid.points.T
        u = (x - 0.5) ** 2 + (y - 0.5) ** 2 + np.cos(math.pi * x) * np.cos(2 * math.pi * y)
        lap = 4 - 5 * math.pi**2 * np.cos(math.pi * x) * np.cos(2 * math.pi * y)
        b = x[grid.boundary_indices] * 0 + 1.0
        # outward normal derivative of u on each edge: (x-1/2)^2 part gives 1, the cos part 0
        phi = 1.0 + b * u[grid.boundary_indices]
        return grid, assemble(grid, 0.0, b), lap, phi, u

    orders = _mms_errors((17, 33, 65, 129), setup)
    assert all(1.9 <= p <= 2.1 for p in orders), orders


def test_barrier_problem_is_nonpositive():
    gamma = 1.0
    for domain, res in ((Interval(1.0), 51), (RadialBall(3, 1.0), 51), (Rectangle(1.0, 1.0), (15, 15))):
        grid = build_grid(domain, res)
        u = solve(assemble(grid, 0.0, 1.0), gamma * math.e, 0.0)
        assert u.max() <= 0.0


def test_repeat_solve_bit_identical():
    grid = build_grid(Rectangle(1.0, 2.0), (21, 31))
    rng = np.random.default_rng(0)
    q = rng.uniform(0, 2, grid.n_nodes)
    f = rng.normal(size=grid.n_nodes)
    u1 = solve(assemble(grid, q, 1.0), f, 0.3)
    u2 = solve(assemble(grid, q, 1.0), f, 0.3)
    assert np.array_equal(u1, u2)


@pytest.mark.parametrize("domain,res", [(Interval(1.0), 21), (RadialBall(3, 1.0), 21), (Rectangle(1.0, 1.0), (9, 9))])
def test_m_matrix_sign_pattern(domain, res):
    grid = build_grid(domain, res)
    q = np.linspace(0, 1, grid.n_nodes)
    op = assemble(grid, q, 0.0)
    A = op.matrix.toarray()
    off = A - np.diag(np.diag(A))
    assert off.min() >= 0
    rowsum = A.sum(axis=1)
    assert np.all(rowsum <= 1e-9 * np.abs(A).max())
    assert np.all(rowsum[q > 0] < 0)


def test_residual_within_linear_tolerance():
    grid = build_grid(RadialBall(2, 1.0), 401)
    op = assemble(grid, np.exp(grid.axes[0]), 2.0)
    f = np.sin(5 * grid.axes[0])
    u = solve(op, f, 1.0)
    rhs = op.rhs(f, 1.0)
    assert np.abs(op.apply(u) - rhs).max() <= 1e-10 * np.abs(rhs).max()


def test_operator_is_immutable():
    grid = build_grid(Interval(1.0), 11)
    q = np.ones(11)
    op = assemble(grid, q, 1.0)
    q[:] = 5.0
    assert np.all(op.q == 1.0)
    with pytest.raises(Exception):
        op.q = q

"""Mass map ``alpha -> alpha * int e^{c_alpha}``, its derivative and its inverse.

The steady state for a prescribed bacterial mass ``m`` is ``n = alpha e^c``
where ``c`` solves the scalar problem and ``alpha`` is the unique root of
``mass(alpha) = m``.  The derivative

    mass'(alpha) = int e^c (1 + alpha c'),

uses ``c' = dc/dalpha``, the solution of the linear Robin problem

    (Lap - alpha e^c (1 + c)) c' = c e^c,   dc'/dnu + g c' = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .domain import BoundaryData, DomainSpec, Grid, Interval, RadialBall, Rectangle
from .domain import boundary_data, build_grid, integrate
from .errors import BracketError, ConfigurationError, DiscretizationError
from .robin import assemble
from .scalar import (
    ScalarSolution,
    ScalarSolveConfig,
    newton_coefficient,
    quotient_coefficient,
    reaction,
    solve_scalar,
)

log = logging.getLogger(__name__)

DERIVATIVE_SLACK = 1e-10
DEFAULT_MASS_TOL = 1e-8


@dataclass(eq=False)
class MassMapEval:
    alpha: float
    mass: float
    solution: ScalarSolution
    c_prime: np.ndarray | None = None
    dmass: float | None = None
    iterations: int = 0

    @property
    def c(self) -> np.ndarray:
        return self.solution.c


@dataclass(eq=False)
class SteadyState:
    grid: Grid
    n: np.ndarray
    c: np.ndarray
    alpha: float
    mass_target: float | None
    mass_achieved: float
    solution: ScalarSolution
    n_residual: float
    inversion_iterations: int = 0
    report: object = field(default=None, repr=False)

    @property
    def gamma(self) -> float:
        return self.solution.gamma

    @property
    def g(self) -> np.ndarray:
        return self.solution.g


def _bdata(grid, gamma, g):
    return g if isinstance(g, BoundaryData) else boundary_data(grid, g, gamma)


def mass_of_alpha(alpha, gamma, g, grid: Grid, cfg=None, derivative=False, c_init=None) -> MassMapEval:
    """Evaluate ``alpha * int e^{c_alpha}``; with ``derivative=True`` also ``c'`` and ``mass'``."""
    bdata = _bdata(grid, gamma, g)
    sol = solve_scalar(grid, alpha, bdata.gamma, bdata, cfg, c_init=c_init)
    ev = MassMapEval(alpha=sol.alpha, mass=sol.alpha * integrate(np.exp(sol.c), grid), solution=sol)
    if derivative:
        ev.c_prime, ev.dmass = dmass_dalpha(sol.alpha, sol)
    return ev


def dmass_dalpha(alpha: float, solution: ScalarSolution):
    """Return ``(c_prime, dmass)`` from one linear solve at the converged ``c``.

    Raises
    ------
    DiscretizationError
        If ``c_prime`` leaves ``(-1/alpha, 0]`` or ``dmass <= 0``; both hold
        for the continuum problem, so a breach points at an under-resolved grid.
    """
    if not alpha > 0:
        raise ConfigurationError("dmass_dalpha needs alpha > 0")
    grid, c = solution.grid, solution.c
    op = assemble(grid, newton_coefficient(alpha, c), solution.g)
    c_prime = op.solve(reaction(c), 0.0)
    dmass = integrate(np.exp(c) * (1 + alpha * c_prime), grid)
    hi = float(c_prime.max())
    lo = float(c_prime.min())
    if hi > DERIVATIVE_SLACK or lo <= -1 / alpha - DERIVATIVE_SLACK or not dmass > 0:
        raise DiscretizationError(
            f"derivative bounds violated at alpha={alpha:g} (c' in [{lo:.3e}, {hi:.3e}], "
            f"mass'={dmass:.3e}); refine the grid",
            achieved=max(hi, -1 / alpha - lo),
        )
    return c_prime, dmass


def mass_bracket(m_target: float, gamma: float, grid: Grid):
    """``alpha`` interval guaranteed to contain the root, from ``0 <= c <= gamma``.

    Uses the discrete measure so the bound is exact for the discrete mass map.
    """
    vol = grid.discrete_measure
    return m_target * np.exp(-gamma) / vol, m_target / vol


def invert_mass(m_target, gamma, g, grid: Grid, tol=DEFAULT_MASS_TOL, cfg=None, max_iter=100) -> MassMapEval:
    """Find ``alpha`` with ``|mass(alpha) - m_target| <= tol * m_target``.

    Newton steps on the mass map with a bisection fallback whenever the
    Newton iterate leaves the current bracket.
    """
    if not (np.isfinite(m_target) and m_target > 0):
        raise ConfigurationError(f"target mass must be positive, got {m_target!r}")
    bdata = _bdata(grid, gamma, g)
    lo, hi = mass_bracket(m_target, bdata.gamma, grid)
    ev_lo = mass_of_alpha(lo, bdata.gamma, bdata, grid, cfg)
    ev_hi = mass_of_alpha(hi, bdata.gamma, bdata, grid, cfg, derivative=True)
    if not ev_lo.mass <= m_target * (1 + tol) or not ev_hi.mass >= m_target * (1 - tol):
        raise BracketError(
            f"mass bracket [{lo:.6g}, {hi:.6g}] gives masses [{ev_lo.mass:.6g}, {ev_hi.mass:.6g}] "
            f"not straddling {m_target:.6g}",
            lower=ev_lo.mass,
            upper=ev_hi.mass,
        )
    for ev in (ev_lo, ev_hi):
        if abs(ev.mass - m_target) <= tol * m_target:
            if ev.c_prime is None:
                ev.c_prime, ev.dmass = dmass_dalpha(ev.alpha, ev.solution)
            return ev

    ev = ev_hi
    for it in range(1, max_iter + 1):
        if ev.mass > m_target:
            hi = ev.alpha
        else:
            lo = ev.alpha
        alpha = ev.alpha - (ev.mass - m_target) / ev.dmass
        if not lo < alpha < hi:
            alpha = 0.5 * (lo + hi)
        ev = mass_of_alpha(alpha, bdata.gamma, bdata, grid, cfg, derivative=True, c_init=ev.c)
        ev.iterations = it
        log.debug("invert_mass it=%d alpha=%.15g mass=%.15g", it, alpha, ev.mass)
        if abs(ev.mass - m_target) <= tol * m_target:
            return ev
    raise BracketError(
        f"mass inversion did not converge in {max_iter} iterations (last alpha {ev.alpha:.15g})",
        lower=lo,
        upper=hi,
    )


def n_equation_residual(grid: Grid, n, c) -> float:
    """Sup norm of the flux-form residual of ``div(grad n - n grad c)`` off the boundary.

    Face fluxes use the arithmetic mean of ``n``; for ``n = alpha e^c`` they
    vanish to ``O(h^2)``.
    """
    n = grid.check_field(n, "n")
    c = grid.check_field(c, "c")
    dom = grid.domain

    def flux(nv, cv, h, axis):
        dn = np.diff(nv, axis=axis) / h
        dc = np.diff(cv, axis=axis) / h
        nm = 0.5 * (np.delete(nv, 0, axis=axis) + np.delete(nv, -1, axis=axis))
        return dn - nm * dc

    if isinstance(dom, Interval):
        (h,) = grid.h
        F = flux(n, c, h, 0)
        res = np.diff(F) / h
    elif isinstance(dom, RadialBall):
        (h,) = grid.h
        r = grid.axes[0]
        N = dom.N
        rh = r[:-1] + h / 2
        F = flux(n, c, h, 0) * rh ** (N - 1)
        cell = np.empty(r.size - 1)
        cell[0] = (h / 2) ** N / N
        cell[1:] = ((r[1:-1] + h / 2) ** N - (r[1:-1] - h / 2) ** N) / N
        res = np.diff(np.concatenate([[0.0], F])) / cell
    elif isinstance(dom, Rectangle):
        nx, ny = grid.shape
        hx, hy = grid.h
        N2, C2 = n.reshape(nx, ny), c.reshape(nx, ny)
        Fx = flux(N2, C2, hx, 0)
        Fy = flux(N2, C2, hy, 1)
        res = np.diff(Fx, axis=0)[:, 1:-1] / hx + np.diff(Fy, axis=1)[1:-1, :] / hy
    else:
        raise TypeError(f"unsupported domain {dom!r}")
    return float(np.abs(res).max())


def _assemble_state(grid, ev: MassMapEval, m_target):
    sol = ev.solution
    n = ev.alpha * np.exp(sol.c)
    state = SteadyState(
        grid=grid,
        n=n,
        c=sol.c,
        alpha=ev.alpha,
        mass_target=m_target,
        mass_achieved=integrate(n, grid),
        solution=sol,
        n_residual=n_equation_residual(grid, n, sol.c),
        inversion_iterations=ev.iterations,
    )
    from .diagnostics import run_all

    state.report = run_all(state)
    return state


def steady_state(
    m_target,
    gamma,
    g,
    domain: DomainSpec | Grid,
    resolution=None,
    cfg: ScalarSolveConfig | None = None,
    tol=DEFAULT_MASS_TOL,
) -> SteadyState:
    """Full pipeline: grid, mass inversion, ``n = alpha e^c`` and the diagnostics report."""
    grid = domain if isinstance(domain, Grid) else build_grid(domain, resolution)
    ev = invert_mass(m_target, gamma, g, grid, tol=tol, cfg=cfg)
    return _assemble_state(grid, ev, float(m_target))


def steady_state_from_alpha(
    alpha, gamma, g, domain: DomainSpec | Grid, resolution=None, cfg=None
) -> SteadyState:
    """Steady state for a given ``alpha`` (``alpha = 0`` gives ``n = 0``, ``c = gamma``)."""
    grid = domain if isinstance(domain, Grid) else build_grid(domain, resolution)
    ev = mass_of_alpha(alpha, gamma, g, grid, cfg)
    return _assemble_state(grid, ev, None)


def barrier(grid: Grid, gamma, g) -> np.ndarray:
    """Lower barrier for every difference quotient of ``c`` in ``alpha``.

    Solves ``Lap w = gamma e^gamma`` with ``dw/dnu = -g w``.
    """
    bdata = _bdata(grid, gamma, g)
    op = assemble(grid, 0.0, bdata.g)
    return op.solve(bdata.gamma * np.exp(bdata.gamma), 0.0)


def difference_quotient(sol1: ScalarSolution, sol2: ScalarSolution) -> np.ndarray:
    """``(c_{alpha2} - c_{alpha1}) / (alpha2 - alpha1)``."""
    if sol1.alpha == sol2.alpha:
        raise ValueError("difference quotient needs distinct alpha values")
    return (sol2.c - sol1.c) / (sol2.alpha - sol1.alpha)


def quotient_equation_residual(sol1: ScalarSolution, sol2: ScalarSolution) -> np.ndarray:
    """Residual of the linear problem the difference quotient satisfies.

    ``(Lap - f2) w = f1`` with ``f1 = c2 e^{c2}``, ``f2`` from
    :func:`~chemosteady.scalar.quotient_coefficient` and ``dw/dnu = -g w``.
    """
    w = difference_quotient(sol1, sol2)
    q = quotient_coefficient(sol1.alpha, sol1.c, sol2.c)
    op = assemble(sol1.grid, q, sol1.g)
    return op.apply(w) - op.rhs(reaction(sol2.c), 0.0)

"""Nonlinear solver for ``Lap c = alpha c e^c`` with ``dc/dnu = (gamma - c) g``.

The iteration starts with frozen-exponent (Picard) steps

    (Lap - alpha e^{c_k}) c_{k+1} = 0,   dc/dnu + g c = gamma g,

which keep every iterate inside ``[0, gamma]`` by the discrete comparison
principle, and hands over to damped Newton once the Picard steps are small.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import exprel

from .domain import BoundaryData, Grid, boundary_data
from .errors import ConfigurationError, NonConvergenceError
from .robin import RobinOperator, assemble

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class ScalarSolveConfig:
    tol_outer: float = 1e-10
    max_picard: int = 200
    newton_switch: float = 1e-3
    damping: float = 1.0
    max_newton: int = 50

    def __post_init__(self):
        if not self.tol_outer > 0:
            raise ConfigurationError("tol_outer must be positive")
        if self.max_picard < 1 or self.max_newton < 0:
            raise ConfigurationError("iteration caps must be positive")
        if not 0 < self.damping <= 1:
            raise ConfigurationError("damping must lie in (0, 1]")
        if not self.newton_switch > 0:
            raise ConfigurationError("newton_switch must be positive")


@dataclass(eq=False)
class ScalarSolution:
    grid: Grid
    bdata: BoundaryData
    alpha: float
    c: np.ndarray
    picard_iterations: int
    newton_iterations: int
    step_history: list = field(default_factory=list)
    pde_residual: float = np.nan
    bc_residual: float = np.nan

    @property
    def gamma(self) -> float:
        return self.bdata.gamma

    @property
    def g(self) -> np.ndarray:
        return self.bdata.g

    @property
    def iterations(self) -> int:
        return self.picard_iterations + self.newton_iterations


def reaction(c):
    """The nonlinearity ``c e^c``."""
    return c * np.exp(c)


def newton_coefficient(alpha, c):
    """Derivative of ``alpha c e^c`` in ``c``: ``alpha e^c (1 + c)``."""
    return alpha * np.exp(c) * (1 + c)


def quotient_coefficient(alpha1, c1, c2):
    """Zeroth-order coefficient of the difference-quotient equation between two solutions.

    ``alpha1 e^{c2} + alpha1 c1 e^{c1} F(c2 - c1)`` with ``F(z) = (e^z - 1)/z``,
    so that ``alpha2 c2 e^{c2} - alpha1 c1 e^{c1} = (alpha2 - alpha1) c2 e^{c2}
    + coefficient * (c2 - c1)`` holds exactly.  At ``c2 == c1`` it reduces to
    :func:`newton_coefficient`.
    """
    return alpha1 * np.exp(c2) + alpha1 * c1 * np.exp(c1) * exprel(c2 - c1)


def residual_tolerance(alpha, gamma, grid: Grid | None = None) -> float:
    """``1e-8 max(1, alpha gamma e^gamma)``, raised to the rounding floor of the stencil.

    Applying a Laplacian with entries ``~1/h^2`` to values of size ``gamma``
    loses about ``eps ||A|| gamma`` in absolute terms, which exceeds the
    nominal tolerance on very fine grids.
    """
    tol = 1e-8 * max(1.0, alpha * gamma * np.exp(gamma))
    if grid is not None:
        norm = 4 * sum(1 / h**2 for h in grid.h)
        if grid.symmetry_index is not None:
            norm = max(norm, 4 * grid.domain.N / grid.h[0] ** 2)
        tol = max(tol, 10 * np.finfo(float).eps * norm * gamma)
    return tol


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha < 0:
        raise ConfigurationError(f"alpha must be finite and >= 0, got {alpha!r}")
    return float(alpha)


def _signal_operator(grid, bdata, q) -> RobinOperator:
    return assemble(grid, q, bdata.g)


def nonlinear_residual(grid: Grid, alpha: float, bdata: BoundaryData, c) -> np.ndarray:
    """Row residual of the discrete problem (boundary rows include the folded Robin term)."""
    op = _signal_operator(grid, bdata, 0.0)
    return op.apply(c) - alpha * reaction(c) - op.rhs(0.0, bdata.gamma * bdata.g)


def residual_norms(grid: Grid, alpha: float, bdata: BoundaryData, c):
    """``(pde, bc)``: sup of the interior residual and of the boundary flux defect.

    A boundary row divided by its Robin weight is the defect in
    ``dc/dnu - (gamma - c) g`` up to ``O(h)`` consistency terms.
    """
    res = nonlinear_residual(grid, alpha, bdata, c)
    interior = grid.interior_mask
    kappa = _signal_operator(grid, bdata, 0.0).kappa
    pde = float(np.abs(res[interior]).max()) if interior.any() else 0.0
    bc = float(np.abs(res[grid.boundary_indices] / kappa).max())
    return pde, bc


def picard_step(grid: Grid, alpha: float, gamma: float, g, c_tilde) -> np.ndarray:
    """Solve the problem linearised with ``c_tilde`` frozen in the exponent."""
    alpha = _check_alpha(alpha)
    bdata = g if isinstance(g, BoundaryData) else boundary_data(grid, g, gamma)
    c_tilde = grid.check_field(c_tilde, "c_tilde")
    op = _signal_operator(grid, bdata, alpha * np.exp(c_tilde))
    # correction form: same solution, but rounding scales with the update
    rhs = op.rhs(0.0, bdata.gamma * bdata.g)
    return c_tilde + op.solve_rhs(rhs - op.apply(c_tilde))


def _newton_update(grid, alpha, bdata, c):
    jac = _signal_operator(grid, bdata, newton_coefficient(alpha, c))
    return jac.solve_rhs(-nonlinear_residual(grid, alpha, bdata, c))


def solve_scalar(
    grid: Grid,
    alpha: float,
    gamma: float,
    g,
    cfg: ScalarSolveConfig | None = None,
    c_init=None,
) -> ScalarSolution:
    """Solve the scalar problem for a given ``alpha >= 0``.

    Parameters
    ----------
    grid : Grid
    alpha, gamma : float
    g : float or array
        Boundary permeability (scalar or per boundary node).
    cfg : ScalarSolveConfig, optional
    c_init : array, optional
        Starting iterate; defaults to ``c = gamma``, the solution at ``alpha = 0``.

    Raises
    ------
    NonConvergenceError
        If Picard or Newton exhaust their caps; carries the step history.
    """
    cfg = cfg or ScalarSolveConfig()
    alpha = _check_alpha(alpha)
    bdata = g if isinstance(g, BoundaryData) else boundary_data(grid, g, gamma)
    gamma = bdata.gamma
    if c_init is None:
        c = np.full(grid.n_nodes, gamma)
    else:
        c = grid.check_field(c_init, "c_init").copy()
    rtol = residual_tolerance(alpha, gamma, grid)
    steps = []
    n_picard = n_newton = 0

    def finished(step):
        if step >= cfg.tol_outer:
            return False
        pde, bc = residual_norms(grid, alpha, bdata, c)
        return pde <= rtol and bc <= rtol

    converged = False
    while n_picard < cfg.max_picard:
        c_new = picard_step(grid, alpha, gamma, bdata, c)
        step = float(np.abs(c_new - c).max())
        c = c_new
        n_picard += 1
        steps.append(step)
        if finished(step):
            converged = True
            break
        if step < cfg.newton_switch:
            break
    else:
        raise NonConvergenceError(
            f"Picard iteration did not reach the Newton switch within {cfg.max_picard} steps",
            steps,
            achieved=steps[-1],
        )

    if not converged:
        res = np.abs(nonlinear_residual(grid, alpha, bdata, c)).max()
        while n_newton < cfg.max_newton:
            delta = _newton_update(grid, alpha, bdata, c)
            lam = cfg.damping
            trial = c + lam * delta
            trial_res = np.abs(nonlinear_residual(grid, alpha, bdata, trial)).max()
            halvings = 0
            while trial_res > res and halvings < 30 and res > rtol:
                lam /= 2
                trial = c + lam * delta
                trial_res = np.abs(nonlinear_residual(grid, alpha, bdata, trial)).max()
                halvings += 1
            step = float(np.abs(trial - c).max())
            c, res = trial, trial_res
            n_newton += 1
            steps.append(step)
            if finished(step):
                converged = True
                break
        if not converged:
            raise NonConvergenceError(
                f"Newton phase did not converge within {cfg.max_newton} steps",
                steps,
                achieved=steps[-1],
            )

    pde, bc = residual_norms(grid, alpha, bdata, c)
    log.debug(
        "alpha=%g: %d Picard + %d Newton steps, residual %.2e", alpha, n_picard, n_newton, pde
    )
    return ScalarSolution(
        grid=grid,
        bdata=bdata,
        alpha=alpha,
        c=c,
        picard_iterations=n_picard,
        newton_iterations=n_newton,
        step_history=steps,
        pde_residual=pde,
        bc_residual=bc,
    )

"""Finite-difference Robin problems ``(Lap - q) u = f``, ``du/dnu + b u = phi``.

The Laplacian is the standard second-order stencil; on the ball it is written
in conservative radial form ``r^{1-N} (r^{N-1} u')'``, fluxes at the half
points divided by the exact cell volume, with the symmetric limit
``N u''(0)`` at the origin.  The Robin condition enters through a ghost node
placed by the centred difference of the boundary condition,

    u_ghost = u_inner + 2 h (phi - b u),

so every boundary row picks up ``kappa * (phi - b u)`` with ``kappa = 2/h``
per outward axis (plus ``(N-1)/R`` from the first-order radial term).  The
resulting matrix has nonnegative off-diagonals and nonpositive row sums, which
is what makes the discrete comparison principle hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .domain import Grid, Interval, RadialBall, Rectangle
from .errors import NumericalFailure, SingularOperatorError

LINEAR_RTOL = 1e-10


def _laplacian_1d(n, h):
    lower = np.full(n - 1, 1 / h**2)
    upper = np.full(n - 1, 1 / h**2)
    main = np.full(n, -2 / h**2)
    upper[0] = 2 / h**2
    lower[-1] = 2 / h**2
    return lower, main, upper


def _laplacian_radial(r, h, N):
    n = r.size
    ri = r[1:-1]
    # flux weights over the cell volume; dividing by r_i^{N-1} h instead
    # degrades the order near the origin for N >= 3
    cell = ((ri + h / 2) ** N - (ri - h / 2) ** N) / N
    rp = (ri + h / 2) ** (N - 1) / cell * h
    rm = (ri - h / 2) ** (N - 1) / cell * h
    lower = np.empty(n - 1)
    upper = np.empty(n - 1)
    main = np.empty(n)
    main[0] = -2 * N / h**2
    upper[0] = 2 * N / h**2
    lower[:-1] = rm / h**2
    upper[1:] = rp / h**2
    main[1:-1] = -(rp + rm) / h**2
    lower[-1] = 2 / h**2
    main[-1] = -2 / h**2
    return lower, main, upper


def neumann_stencil(grid: Grid):
    """Laplacian with reflecting ghost nodes, plus the per-boundary-node Robin weight.

    Returns ``(L, kappa)`` where ``L`` is a CSR matrix and the Robin problem
    matrix is ``L - diag(q) - diag_on_boundary(kappa * b)``.
    """
    dom = grid.domain
    if isinstance(dom, Interval):
        (h,) = grid.h
        lower, main, upper = _laplacian_1d(grid.n_nodes, h)
        L = sp.diags([lower, main, upper], [-1, 0, 1], format="csr")
        return L, np.full(2, 2 / h)

    if isinstance(dom, RadialBall):
        (h,) = grid.h
        lower, main, upper = _laplacian_radial(grid.axes[0], h, dom.N)
        L = sp.diags([lower, main, upper], [-1, 0, 1], format="csr")
        return L, np.array([2 / h + (dom.N - 1) / dom.R])

    if isinstance(dom, Rectangle):
        nx, ny = grid.shape
        hx, hy = grid.h
        Lx = sp.diags(_laplacian_1d(nx, hx), [-1, 0, 1])
        Ly = sp.diags(_laplacian_1d(ny, hy), [-1, 0, 1])
        L = (sp.kron(Lx, sp.identity(ny)) + sp.kron(sp.identity(nx), Ly)).tocsr()
        idx = grid.boundary_indices
        i, j = np.divmod(idx, ny)
        kappa = np.where((i == 0) | (i == nx - 1), 2 / hx, 0.0)
        kappa = kappa + np.where((j == 0) | (j == ny - 1), 2 / hy, 0.0)
        return L, kappa

    raise TypeError(f"unsupported domain {dom!r}")


@dataclass(frozen=True, eq=False)
class RobinOperator:
    """Assembled matrix of ``(Lap - q) u`` with ``du/dnu + b u`` folded into boundary rows."""

    grid: Grid
    q: np.ndarray
    b: np.ndarray
    kappa: np.ndarray
    matrix: sp.csr_matrix
    _banded: np.ndarray | None
    _lu: object | None

    @property
    def norm_inf(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max())

    def rhs(self, f, phi) -> np.ndarray:
        """Right-hand side vector for source ``f`` and boundary data ``phi``."""
        f = np.asarray(f, dtype=float)
        if f.ndim == 0:
            out = np.full(self.grid.n_nodes, float(f))
        else:
            out = self.grid.check_field(f, "f").copy()
        phi = self.grid.check_boundary(phi, "phi")
        out[self.grid.boundary_indices] -= self.kappa * phi
        return out

    def apply(self, u) -> np.ndarray:
        return self.matrix @ self.grid.check_field(u, "u")

    def _direct(self, rhs):
        if self._banded is not None:
            return solve_banded((1, 1), self._banded, rhs, check_finite=False)
        return self._lu.solve(rhs)

    def solve(self, f, phi) -> np.ndarray:
        """Solve the Robin problem; raises :class:`NumericalFailure` if the residual is too large.

        The residual test is normwise-backward: ``||A u - rhs|| <= 1e-10 *
        (||rhs|| + ||A|| ||u||)``.
        """
        return self.solve_rhs(self.rhs(f, phi))

    def solve_rhs(self, rhs) -> np.ndarray:
        """Solve ``A u = rhs`` for an already folded right-hand side."""
        rhs = np.asarray(rhs, dtype=float)
        u = self._direct(rhs)
        res = self._residual_ratio(u, rhs)
        if res > LINEAR_RTOL:
            # one step of iterative refinement before giving up
            u = u + self._direct(rhs - self.matrix @ u)
            res = self._residual_ratio(u, rhs)
            if res > LINEAR_RTOL:
                raise NumericalFailure(
                    f"linear solve residual ratio {res:.3e} exceeds {LINEAR_RTOL:.0e}",
                    achieved=res,
                )
        return u

    def _residual_ratio(self, u, rhs):
        scale = np.abs(rhs).max() + self.norm_inf * np.abs(u).max()
        if not np.isfinite(scale):
            return np.inf
        res = np.abs(self.matrix @ u - rhs).max()
        # residuals at the underflow level carry no information
        if res <= self.norm_inf * np.finfo(float).tiny:
            return 0.0
        return float(res / scale)


def assemble(grid: Grid, q, b) -> RobinOperator:
    """Assemble ``(Lap - q)`` with Robin coefficient ``b`` on the boundary.

    ``q`` (nodal) and ``b`` (per boundary node) may be scalars.  Both must be
    nonnegative and not both identically zero, otherwise the operator has
    the constants in its kernel.
    """
    q = np.asarray(q, dtype=float)
    q = np.full(grid.n_nodes, float(q)) if q.ndim == 0 else grid.check_field(q, "q").copy()
    b = grid.check_boundary(b, "b")
    if np.any(q < 0) or np.any(b < 0):
        raise ValueError("q and b must be nonnegative")
    if not (np.any(q > 0) or np.any(b > 0)):
        raise SingularOperatorError(
            "singular operator: q and b vanish identically (constants span the kernel)"
        )
    L, kappa = neumann_stencil(grid)
    diag = -q
    diag[grid.boundary_indices] -= kappa * b
    A = (L + sp.diags(diag)).tocsr()
    banded = lu = None
    if grid.domain.dim == 1:
        dia = A.todia()
        banded = np.zeros((3, grid.n_nodes))
        for offset, row in zip(dia.offsets, dia.data):
            banded[1 - offset] = row
    else:
        lu = splu(A.tocsc())
    q.setflags(write=False)
    b = b.copy()
    b.setflags(write=False)
    return RobinOperator(grid, q, b, kappa, A, banded, lu)


def solve(op: RobinOperator, f, phi) -> np.ndarray:
    return op.solve(f, phi)

"""Discretisation-free reference solution in one dimension.

On ``[0, L]`` with ``c'(0) = 0`` and ``c'(L) = G (gamma - c(L))`` the
equation ``c'' = alpha c e^c`` has the first integral

    (c')^2 = 2 alpha Phi(c, c0),   Phi(c, c0) = (c - 1) e^c - (c0 - 1) e^{c0},

with ``c0 = c(0)`` the minimum.  Position is recovered from the value by

    x(c) = (2 alpha)^{-1/2} int_{c0}^{c} Phi(t, c0)^{-1/2} dt,

and ``c0`` is fixed by the boundary closure ``G (gamma - c(L)) =
sqrt(2 alpha Phi(c(L), c0))``.  Everything here is quadrature and scalar root
finding; no grid is involved.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import BracketError, ConfigurationError, NumericalFailure

QUAD_EPS = 1e-12
# beyond this excess over c0 the profile is treated as having blown up
MAX_EXCESS = 60.0


def phi(c, c0):
    """``(c - 1) e^c - (c0 - 1) e^{c0}``, evaluated without cancellation near ``c = c0``."""
    c = np.asarray(c, dtype=float)
    if np.any(c < c0):
        raise ValueError("phi requires c >= c0")
    d = c - c0
    out = math.exp(c0) * ((c - 1) * (np.expm1(d) - d) + c * d)
    return float(out) if out.ndim == 0 else out


def _phi_over_d(c0, d):
    # Phi(c0 + d, c0) / d, finite and positive at d = 0 (limit c0 e^{c0})
    c = c0 + d
    if d == 0:
        tail = 0.0
    elif d < 1e-5:
        tail = d / 2 + d * d / 6
    else:
        tail = (math.expm1(d) - d) / d
    return math.exp(c0) * ((c - 1) * tail + c)


def position_of(c_val: float, c0: float, alpha: float) -> float:
    """Position ``x`` at which the profile with minimum ``c0`` reaches ``c_val``.

    Uses ``t = c0 + s^2`` to remove the inverse-square-root singularity at
    the lower limit; the transformed integrand ``2 / sqrt(Phi/s^2)`` is smooth.
    """
    if not (c0 > 0 and alpha > 0):
        raise ValueError("position_of needs c0 > 0 and alpha > 0")
    if c_val < c0:
        raise ValueError("position_of needs c_val >= c0")
    if c_val == c0:
        return 0.0
    smax = math.sqrt(c_val - c0)

    def integrand(s):
        return 2.0 / math.sqrt(_phi_over_d(c0, s * s))

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(integrand, 0.0, smax, epsabs=QUAD_EPS, epsrel=QUAD_EPS, limit=200)
        except IntegrationWarning as exc:
            raise NumericalFailure(f"quadrature did not converge: {exc}") from None
    if err > 1e-10:
        raise NumericalFailure(f"quadrature error estimate {err:.2e} above 1e-10", achieved=err)
    return val / math.sqrt(2 * alpha)


def _value_at(x, c0, alpha, c_hi=None):
    """Invert ``position_of`` for ``x >= 0``; ``None`` if the profile blows up before ``x``."""
    if x == 0:
        return c0
    if c_hi is None:
        step = 1.0
        c_hi = c0 + step
        while position_of(c_hi, c0, alpha) < x:
            step *= 2
            c_hi = c0 + step
            if step > MAX_EXCESS:
                return None
    return brentq(
        lambda cv: position_of(cv, c0, alpha) - x, c0, c_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps
    )


def boundary_defect(c0, L, G, gamma, alpha):
    """``G (gamma - c(L)) - sqrt(2 alpha Phi(c(L), c0))`` for the profile started at ``c0``.

    Returns ``(defect, c(L))``; a profile that blows up inside ``[0, L]`` has
    defect ``-inf``.
    """
    cL = _value_at(L, c0, alpha)
    if cL is None:
        return -math.inf, math.inf
    return G * (gamma - cL) - math.sqrt(2 * alpha * phi(cL, c0)), cL


@dataclass(frozen=True)
class OracleProfile:
    alpha: float
    gamma: float
    G: float
    L: float
    c0: float
    c_at_L: float
    defect: float

    def sample(self, x):
        """Profile values at positions ``x`` (scalar or array) in ``[0, L]``."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs < -1e-14) or np.any(xs > self.L * (1 + 1e-14)):
            raise ValueError("sample positions must lie in [0, L]")
        xs = np.clip(xs, 0.0, self.L)
        out = np.array([_value_at(xi, self.c0, self.alpha, self.c_at_L) for xi in xs])
        return out if np.ndim(x) else float(out[0])

    def sample_symmetric(self, y):
        """Values at coordinates ``y`` in ``[0, 2L]`` of the mirrored interval, using symmetry."""
        y = np.asarray(y, dtype=float)
        dist = np.abs(y - self.L)
        uniq, inverse = np.unique(np.round(dist, 15), return_inverse=True)
        return self.sample(uniq)[inverse]


def solve_oracle(L: float, G: float, gamma: float, alpha: float) -> OracleProfile:
    """Find the minimum value ``c0`` that satisfies the boundary closure at ``x = L``."""
    for name, v in (("L", L), ("G", G), ("gamma", gamma), ("alpha", alpha)):
        if not (np.isfinite(v) and v > 0):
            raise ConfigurationError(f"{name} must be positive, got {v!r}")

    hi = gamma
    d_hi, _ = boundary_defect(hi, L, G, gamma, alpha)
    lo = d_lo = None
    for k in range(1, 50):
        trial = gamma * 10.0 ** (-6 * k)
        if trial == 0.0:
            break
        d_trial, _ = boundary_defect(trial, L, G, gamma, alpha)
        if d_trial > 0:
            lo, d_lo = trial, d_trial
            break
    if lo is None or not d_hi < 0:
        raise BracketError(
            "boundary defect does not change sign on (0, gamma]",
            lower=float("nan") if d_lo is None else d_lo,
            upper=d_hi,
        )

    c0 = brentq(
        lambda s: boundary_defect(s, L, G, gamma, alpha)[0],
        lo,
        hi,
        xtol=1e-16,
        rtol=4 * np.finfo(float).eps,
        maxiter=500,
    )
    defect, cL = boundary_defect(c0, L, G, gamma, alpha)
    if abs(defect) > 1e-9 * max(1.0, G * gamma):
        raise NumericalFailure(f"boundary defect {defect:.2e} after root finding", achieved=defect)
    return OracleProfile(alpha=alpha, gamma=gamma, G=G, L=L, c0=c0, c_at_L=cL, defect=defect)

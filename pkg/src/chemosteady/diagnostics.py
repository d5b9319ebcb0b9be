"""Executable checks of the structural properties of steady states.

Every check returns a :class:`CheckResult` and never raises on a violated
property.  Checks whose hypotheses do not hold for the given geometry or
data report ``"skipped"``.

Slack constants:

* ``EXACT_SLACK`` (1e-12) for properties the discrete scheme preserves
  exactly (bounds from the M-matrix structure, ``n = alpha e^c``),
* ``CONVEXITY_SLACK`` (1e-10) for raw second differences,
* ``CONTINUUM_SLACK`` (1e-8) for properties that only hold in the limit
  ``h -> 0`` or are compared across separate solves.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .domain import Grid, Interval, RadialBall, distance_from_center, integrate
from .scalar import ScalarSolution, solve_scalar

if TYPE_CHECKING:
    from .mass import SteadyState

EXACT_SLACK = 1e-12
CONVEXITY_SLACK = 1e-10
CONTINUUM_SLACK = 1e-8

PASSED, FAILED, SKIPPED = "passed", "failed", "skipped"


@dataclass
class CheckResult:
    name: str
    source: str
    status: str
    worst_violation: float = 0.0
    location: int | None = None
    tolerance: float | None = None
    detail: str = ""
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def to_dict(self) -> dict:
        out = asdict(self)
        if not math.isfinite(out["worst_violation"]):
            out["worst_violation"] = str(out["worst_violation"])
        return out


@dataclass
class CheckReport:
    checks: list
    tolerances: dict = field(
        default_factory=lambda: {
            "exact": EXACT_SLACK,
            "convexity": CONVEXITY_SLACK,
            "continuum": CONTINUUM_SLACK,
        }
    )

    @property
    def passed(self) -> bool:
        return not any(c.status == FAILED for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.status == FAILED]

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tolerances": dict(self.tolerances),
            "checks": [c.to_dict() for c in self.checks],
        }


def _result(name, source, violation, location, tol, detail="", **data):
    status = PASSED if violation <= tol else FAILED
    return CheckResult(
        name=name,
        source=source,
        status=status,
        worst_violation=float(violation),
        location=None if location is None else int(location),
        tolerance=tol,
        detail=detail,
        data=data,
    )


def _skipped(name, source, reason):
    return CheckResult(name=name, source=source, status=SKIPPED, detail=reason)


def _worst(viol):
    """``(max violation, argmax)`` of a violation array (positive = violated)."""
    k = int(np.argmax(viol))
    return float(viol[k]), k


def _fail_if(res: CheckResult, condition: bool, location, note: str) -> CheckResult:
    if condition:
        res.status = FAILED
        if location is not None:
            res.location = int(location)
        res.detail = f"{res.detail}; {note}" if res.detail else note
    return res


def check_bounds(sol: ScalarSolution) -> CheckResult:
    """``0 <= c <= gamma``, strictly inside when ``alpha * gamma > 0``."""
    src = "maximum principle: 0 < c < gamma, or c = gamma when alpha*gamma = 0"
    c, gamma = sol.c, sol.gamma
    worst, loc = _worst(np.maximum(-c, c - gamma))
    detail = f"min c = {c.min():.6g}, max c = {c.max():.6g}"
    if not sol.alpha * gamma > 0:
        return _result(
            "bounds", src, worst, loc, EXACT_SLACK,
            detail + "; alpha*gamma = 0: strict interior sub-check skipped",
        )
    res = _result("bounds", src, worst, loc, EXACT_SLACK, detail)
    s_worst, s_loc = _worst(np.maximum(EXACT_SLACK - c, c - (gamma - EXACT_SLACK)))
    return _fail_if(res, s_worst > 0, s_loc, "strict interior bound violated")


def check_nonconstant(state: "SteadyState") -> CheckResult:
    """Positive, non-constant ``n`` and non-constant ``c`` when ``alpha > 0``."""
    src = "solutions with positive mass are positive and non-constant"
    name = "positivity_nonconstant"
    if not state.alpha * state.gamma > 0:
        return _skipped(name, src, "alpha*gamma = 0: constant solution c = gamma is expected")
    spread_c = float(np.ptp(state.c))
    spread_n = float(np.ptp(state.n))
    viol = max(EXACT_SLACK - spread_c, EXACT_SLACK - spread_n, -float(state.n.min()))
    return _result(
        name,
        src,
        max(viol, 0.0),
        int(np.argmin(state.n)),
        0.0,
        f"spread c = {spread_c:.3e}, min n = {state.n.min():.6g}",
    )


def check_density_relation(state: "SteadyState") -> CheckResult:
    """``n = alpha e^c`` nodewise."""
    src = "every solution of the density equation is a multiple of e^c"
    expected = state.alpha * np.exp(state.c)
    viol = np.abs(state.n - expected) / np.maximum(1.0, np.abs(expected))
    worst, loc = _worst(viol)
    return _result("density_relation", src, worst, loc, EXACT_SLACK)


def check_mass(state: "SteadyState", tol=1e-8) -> CheckResult:
    src = "mass map is a bijection; the inversion hits the prescribed mass"
    if state.mass_target is None:
        return _skipped("mass", src, "alpha prescribed directly")
    err = abs(state.mass_achieved - state.mass_target) / state.mass_target
    return _result(
        "mass",
        src,
        err,
        None,
        tol,
        f"target {state.mass_target:.12g}, achieved {state.mass_achieved:.12g}",
    )


def check_radial_convexity(sol: ScalarSolution) -> CheckResult:
    """Second differences of ``c`` and ``n`` nonnegative; ``dc/dr >= 0`` on balls."""
    src = "on a ball with constant g, n and c are strictly convex and dc/dr is increasing"
    name = "convexity"
    dom = sol.grid.domain
    if not isinstance(dom, (RadialBall, Interval)):
        return _skipped(name, src, "convexity is asserted only for balls and intervals")
    c = sol.c
    n = sol.alpha * np.exp(c)
    d2c = c[2:] - 2 * c[1:-1] + c[:-2]
    d2n = n[2:] - 2 * n[1:-1] + n[:-2]
    worst, loc = _worst(np.maximum(-d2c, -d2n))
    detail = f"min d2c = {d2c.min():.3e}, min d2n = {d2n.min():.3e}"
    res = _result(name, src, worst, loc + 1, CONVEXITY_SLACK, detail)
    if isinstance(dom, RadialBall):
        # on an interval c'' = alpha c e^c > 0 for any g, but monotonicity
        # away from the centre needs the symmetric setting, so it is ball-only
        d1 = np.diff(c)
        res.detail += f", min dc/dr step = {d1.min():.3e}"
        _fail_if(res, d1.min() < -EXACT_SLACK, int(np.argmin(d1)), "dc/dr negative")
    return res


def boundary_envelope(r, R, g, gamma, mass, volume):
    """Lower envelope ``g/(g+k) e^{(r-R) k} gamma`` with ``k = sqrt(mass e^gamma / volume)``."""
    k = math.sqrt(mass * math.exp(gamma) / volume)
    return g / (g + k) * np.exp((np.asarray(r) - R) * k) * gamma


def check_boundary_estimate(state: "SteadyState") -> CheckResult:
    """``envelope(r) <= c(r) <= gamma`` on a ball (or symmetric interval) with constant ``g > 0``."""
    src = "boundary estimate for balls with constant g: exponential envelope <= c <= gamma"
    name = "boundary_estimate"
    grid = state.grid
    dom = grid.domain
    if not isinstance(dom, (RadialBall, Interval)):
        return _skipped(name, src, "requires a ball")
    g = state.g
    if not np.all(g == g[0]) or not g[0] > 0:
        return _skipped(name, src, "requires constant g > 0")
    R = dom.R if isinstance(dom, RadialBall) else dom.L / 2
    r = distance_from_center(grid)
    mass = state.mass_achieved
    env = boundary_envelope(r, R, float(g[0]), state.gamma, mass, dom.measure)
    worst, loc = _worst(env - state.c)
    res = _result(
        name,
        src,
        worst,
        loc,
        CONTINUUM_SLACK,
        f"envelope at boundary {env.max():.6g}, c there {state.c[np.argmax(r)]:.6g}",
        envelope_min=float(env.min()),
        envelope_max=float(env.max()),
    )
    over = state.c - state.gamma
    return _fail_if(res, over.max() > EXACT_SLACK, int(np.argmax(over)), "c exceeds gamma")


def check_alpha_monotonicity(gamma, g, grid: Grid, alphas, cfg=None) -> CheckResult:
    """Fields decrease and masses strictly increase along increasing ``alphas``."""
    src = "c is nonincreasing and the mass is strictly increasing in alpha"
    name = "alpha_monotonicity"
    alphas = [float(a) for a in alphas]
    if any(b <= a for a, b in zip(alphas, alphas[1:])) or alphas[0] < 0:
        raise ValueError("alphas must be strictly increasing and nonnegative")
    sols = [solve_scalar(grid, a, gamma, g, cfg) for a in alphas]
    masses = [s.alpha * integrate(np.exp(s.c), grid) for s in sols]
    worst, loc = 0.0, None
    strict_somewhere = True
    for s1, s2 in zip(sols, sols[1:]):
        diff = s2.c - s1.c
        v, k = _worst(diff)
        if loc is None or v > worst:
            worst, loc = v, k
        if s2.alpha * gamma > 0 and not (diff < -CONTINUUM_SLACK).any():
            strict_somewhere = False
    mass_viol = max((m1 - m2 for m1, m2 in zip(masses, masses[1:])), default=-1.0)
    ok_mass = mass_viol < 0
    res = _result(
        name,
        src,
        worst,
        loc,
        CONTINUUM_SLACK,
        f"masses {['%.10g' % m for m in masses]}",
        alphas=alphas,
        masses=masses,
    )
    if not ok_mass or not strict_somewhere:
        res.status = FAILED
        res.detail += "; masses not strictly increasing" if not ok_mass else "; no strict decrease"
    return res


def check_derivative_bounds(alpha: float, c_prime) -> CheckResult:
    """``-1/alpha < c' <= 0`` nodewise."""
    src = "derivative in alpha satisfies 0 >= c' > -1/alpha"
    c_prime = np.asarray(c_prime)
    viol = np.maximum(c_prime, -1 / alpha - c_prime)
    worst, loc = _worst(viol)
    strict_low = c_prime.min() > -1 / alpha
    res = _result(
        "derivative_bounds",
        src,
        worst,
        loc,
        CONVEXITY_SLACK,
        f"c' in [{c_prime.min():.6g}, {c_prime.max():.3e}], -1/alpha = {-1 / alpha:.6g}",
    )
    if not strict_low:
        res.status = FAILED
    return res


def check_w_sandwich(sol1: ScalarSolution, sol2: ScalarSolution, w_tilde) -> CheckResult:
    """Barrier ``w_tilde <= (c2 - c1)/(alpha2 - alpha1) <= 0`` nodewise."""
    src = "difference quotients in alpha lie between the barrier and 0"
    w = (sol2.c - sol1.c) / (sol2.alpha - sol1.alpha)
    viol = np.maximum(w, np.asarray(w_tilde) - w)
    worst, loc = _worst(viol)
    return _result(
        "w_sandwich",
        src,
        worst,
        loc,
        CONTINUUM_SLACK,
        f"alphas ({sol1.alpha:g}, {sol2.alpha:g}), min w = {w.min():.6g}, "
        f"min barrier = {np.min(w_tilde):.6g}",
    )


def check_lipschitz(sol1: ScalarSolution, sol2: ScalarSolution, w_tilde) -> CheckResult:
    """``||c2 - c1|| <= 2 ||w_tilde|| |alpha2 - alpha1|``."""
    src = "alpha -> c_alpha is Lipschitz with constant bounded by the barrier"
    diff = float(np.abs(sol2.c - sol1.c).max())
    bound = 2 * float(np.abs(w_tilde).max()) * abs(sol2.alpha - sol1.alpha)
    return _result("lipschitz", src, diff - bound, None, 0.0, f"{diff:.6g} <= {bound:.6g}")


def run_all(state: "SteadyState") -> CheckReport:
    """All checks applicable to a single steady state."""
    sol = state.solution
    return CheckReport(
        checks=[
            check_bounds(sol),
            check_nonconstant(state),
            check_density_relation(state),
            check_mass(state),
            check_radial_convexity(sol),
            check_boundary_estimate(state),
        ]
    )

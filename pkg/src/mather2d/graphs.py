"""Closed-form layer for the unit-amplitude model: invariant graphs and
saddle connections of the Euler-Lagrange flow.

With a = 1 and velocity written as v = sqrt(2E) (cos phi, sin phi), the flow
on the energy level E conserves

    F(x, phi) = cos(2*pi*x) + sqrt(2E) * sin(phi).

For E > 1/2 and |F| < sqrt(2E) - 1 the level set {F = const} is a pair of
graphs phi = phi_b(x) over the x-circle (branch 1 through phi in
[-pi/2, pi/2], branch 2 its reflection pi - phi_1).  Each graph is the image
of an invariant Lagrangian graph whose momentum is the closed one-form

    eta_b = sqrt(2E) cos(phi_b(x)) dx + F dy,

so its cohomology class is ([integral of sqrt(2E) cos phi_b], F).  At
|F| = sqrt(2E) - 1 the two branches touch along the vertical orbits and the
level carries saddle connections; beyond it there is no graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import flow
from .model import CohomologyClass, CotangentVec, HomologyClass, LiftedPoint, MagneticModel, TangentVec, TWO_PI, cos_two_pi, legendre

__all__ = [
    "NoGraph",
    "InconclusiveWitness",
    "GraphParams",
    "CriticalPoint",
    "SingularOrbit",
    "WitnessReport",
    "first_integral",
    "graph_exists",
    "solve_branch",
    "eta_form",
    "cohomology_class",
    "saddle_class",
    "graph_momentum",
    "critical_points",
    "singular_rotation_vectors",
    "graph_invariance_check",
    "graph_chart_distance",
    "region_scan",
    "absorbing_witness",
]

_BOUNDARY_ATOL = 1e-12


class NoGraph(ValueError):
    """No invariant graph exists at the requested (E, F)."""


class InconclusiveWitness(RuntimeError):
    """No non-absorbing witness orbit found among the sampled candidates."""


@dataclass(frozen=True)
class GraphParams:
    E: float
    F: float
    branch: int = 1

    def __post_init__(self):
        if self.E <= 0.0:
            raise ValueError(f"energy must be positive, got {self.E}")
        if self.branch not in (1, 2):
            raise ValueError(f"branch must be 1 or 2, got {self.branch}")


def first_integral(x, phi, E: float):
    """F(x, phi) = cos(2*pi*x) + sqrt(2E) sin(phi) for the a = 1 model."""
    if E <= 0.0:
        raise ValueError(f"energy must be positive, got {E}")
    return cos_two_pi(x) + math.sqrt(2.0 * E) * np.sin(phi)


def graph_exists(E: float, F: float) -> str:
    """Classify (E, F): 'foliated', 'saddle-boundary', or 'none'."""
    if E <= 0.0:
        raise ValueError(f"energy must be positive, got {E}")
    crit = math.sqrt(2.0 * E) - 1.0
    if abs(abs(F) - crit) <= _BOUNDARY_ATOL and crit >= 0.0:
        return "saddle-boundary"
    if crit > 0.0 and abs(F) < crit:
        return "foliated"
    return "none"


def solve_branch(x, params: GraphParams):
    """Velocity angle phi_b(x) of the graph; branch 1 in [-pi/2, pi/2].

    Accepts scalars or arrays.  Raises NoGraph outside the existence region
    (the saddle boundary itself is allowed).
    """
    if graph_exists(params.E, params.F) == "none":
        raise NoGraph(f"no invariant graph at E={params.E}, F={params.F}")
    s = (params.F - cos_two_pi(x)) / math.sqrt(2.0 * params.E)
    s = np.clip(s, -1.0, 1.0)  # guards roundoff at the tangency
    phi1 = np.arcsin(s)
    phi = phi1 if params.branch == 1 else math.pi - phi1
    return float(phi) if np.isscalar(x) or np.ndim(x) == 0 else phi


def eta_form(x: float, params: GraphParams) -> CotangentVec:
    """Value (sqrt(2E) cos phi_b(x), F) of the invariant-graph one-form at x."""
    phi = solve_branch(x, params)
    return CotangentVec(math.sqrt(2.0 * params.E) * math.cos(phi), params.F)


def graph_momentum(model: MagneticModel, x: float, params: GraphParams) -> CotangentVec:
    """Legendre image of the graph velocity at x.

    Independent route to eta_form: builds v = sqrt(2E)(cos phi, sin phi) and
    pushes it through the fiberwise Legendre transform.  The two agree
    identically because the graph level ties sin phi to cos(2*pi*x).
    """
    phi = solve_branch(x, params)
    speed = math.sqrt(2.0 * params.E)
    return legendre(model, x, TangentVec(speed * math.cos(phi), speed * math.sin(phi)))


def _branch_cos_integrand(params: GraphParams):
    root = math.sqrt(2.0 * params.E)
    sign = 1.0 if params.branch == 1 else -1.0

    def f(x: float) -> float:
        s = (params.F - float(cos_two_pi(x))) / root
        s = min(1.0, max(-1.0, s))
        return sign * root * math.sqrt(max(0.0, 1.0 - s * s))

    return f


def cohomology_class(params: GraphParams) -> CohomologyClass:
    """Class of eta_b: (integral_0^1 sqrt(2E) cos phi_b(x) dx, F).

    Adaptive quadrature to 1e-10 absolute.  On the saddle boundary the
    integrand has a root-type kink at the tangency point, so the integral is
    split there.
    """
    status = graph_exists(params.E, params.F)
    if status == "none":
        raise NoGraph(f"no invariant graph at E={params.E}, F={params.F}")
    f = _branch_cos_integrand(params)
    pts = None
    if status == "saddle-boundary":
        pts = [0.5] if params.F >= 0.0 else [0.0]
    c1, err = quad(f, 0.0, 1.0, points=pts, epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-10:
        raise RuntimeError(f"quadrature error estimate {err:.2e} above 1e-10")
    return CohomologyClass(c1, params.F)


def saddle_class(E: float, branch: int = 1, side: str = "upper",
                 eps0: float = 1e-2, levels: int = 10) -> CohomologyClass:
    """Saddle-connection class as a one-sided limit F -> +-(sqrt(2E)-1).

    Evaluates the foliated-class curve on the schedule eps_k = eps0 * 2^-k
    inside the boundary and extrapolates with the known eps*log(eps) edge
    behaviour.  Cross-checked in tests against direct boundary quadrature.
    """
    if side not in ("upper", "lower"):
        raise ValueError(f"side must be 'upper' or 'lower', got {side}")
    crit = math.sqrt(2.0 * E) - 1.0
    if crit <= 0.0:
        raise NoGraph(f"no saddle level at E={E}")
    sgn = 1.0 if side == "upper" else -1.0
    eps = eps0 * 0.5 ** np.arange(levels)
    vals = np.array([
        cohomology_class(GraphParams(E, sgn * (crit - e), branch)).c1 for e in eps
    ])
    # fit c(eps) = c* + a*eps*log(eps) + b*eps on the tail of the schedule
    tail = slice(levels // 2, None)
    basis = np.column_stack([
        np.ones_like(eps[tail]),
        eps[tail] * np.log(eps[tail]),
        eps[tail],
    ])
    coef, *_ = np.linalg.lstsq(basis, vals[tail], rcond=None)
    return CohomologyClass(float(coef[0]), sgn * crit)


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    phi: float
    value: float
    kind: str  # "max" | "min" | "saddle"


def critical_points(E: float) -> list[CriticalPoint]:
    """The four critical points of F(x, phi), classified by the Hessian."""
    if E <= 0.0:
        raise ValueError(f"energy must be positive, got {E}")
    root = math.sqrt(2.0 * E)
    out = []
    for x in (0.0, 0.5):
        for phi in (0.5 * math.pi, -0.5 * math.pi):
            fxx = -4.0 * math.pi**2 * math.cos(TWO_PI * x)
            fpp = -root * math.sin(phi)
            if fxx < 0.0 and fpp < 0.0:
                kind = "max"
            elif fxx > 0.0 and fpp > 0.0:
                kind = "min"
            else:
                kind = "saddle"
            out.append(CriticalPoint(x, phi, float(first_integral(x, phi, E)), kind))
    return out


@dataclass(frozen=True)
class SingularOrbit:
    """Vertical orbit supporting a singular minimizing measure."""

    x: float
    rotation: HomologyClass
    action_rate: float  # Lagrangian value along the orbit
    level: float        # first-integral value


def singular_rotation_vectors(E: float) -> list[SingularOrbit]:
    """The two cheap vertical orbits: x = 1/2 going up, x = 0 going down.

    Both carry Lagrangian action E - sqrt(2E) per unit time and sit on the
    saddle levels +-(sqrt(2E) - 1).
    """
    if E <= 0.0:
        raise ValueError(f"energy must be positive, got {E}")
    root = math.sqrt(2.0 * E)
    rate = E - root
    return [
        SingularOrbit(0.5, HomologyClass(0.0, root), rate, root - 1.0),
        SingularOrbit(0.0, HomologyClass(0.0, -root), rate, -(root - 1.0)),
    ]


def _circ_dist(a, b, period: float):
    d = np.abs(np.asarray(a) - b) % period
    return np.minimum(d, period - d)


def graph_chart_distance(x, phi, params: GraphParams, n_grid: int = 2048) -> np.ndarray:
    """Distance from (x, phi) to the graph curve in the (x mod 1, phi) chart.

    Flat product metric, both coordinates treated as circles.  Minimizes over
    a dense grid of foot points on the curve, then refines the foot point
    with one parabolic step through the neighboring samples, so points lying
    essentially on the curve measure as such rather than as O(1/n_grid).
    """
    u = np.linspace(0.0, 1.0, n_grid, endpoint=False)
    phi_u = solve_branch(u, params)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    dx = _circ_dist(x[:, None], u[None, :], 1.0)
    dp = _circ_dist(phi[:, None], phi_u[None, :], 2.0 * math.pi)
    d2 = dx**2 + dp**2
    k = np.argmin(d2, axis=1)
    rows = np.arange(x.size)
    f0 = d2[rows, k]
    fm = d2[rows, (k - 1) % n_grid]
    fp = d2[rows, (k + 1) % n_grid]
    # vertex of the parabola through the three samples, clamped to the cell
    denom = fm - 2.0 * f0 + fp
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0.0, 0.5 * (fm - fp) / denom, 0.0)
    t = np.clip(t, -1.0, 1.0)
    u_ref = (u[k] + t / n_grid) % 1.0
    phi_ref = solve_branch(u_ref, params)
    d_ref = np.sqrt(_circ_dist(x, u_ref, 1.0) ** 2
                    + _circ_dist(phi, phi_ref, 2.0 * math.pi) ** 2)
    return np.minimum(np.sqrt(f0), d_ref)


def _velocity_angles(vel: np.ndarray) -> np.ndarray:
    return np.arctan2(vel[:, 1], vel[:, 0])


def graph_invariance_check(
    model: MagneticModel,
    params: GraphParams,
    n_seeds: int,
    T: float,
    dt: float,
    seed: int,
) -> float:
    """Max deviation from the graph along integrated orbits seeded on it.

    Seeds n_seeds points uniformly in x on the graph, integrates each for
    time T, and returns the largest wrapped |phi(t) - phi_b(x(t))| observed.
    Requires the unit-amplitude model (the closed form assumes a = 1).
    """
    if abs(model.amplitude - 1.0) > 1e-15:
        raise ValueError("closed-form graph layer requires amplitude = 1")
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, 1.0, size=n_seeds)
    phi0 = solve_branch(x0, params)
    speed = math.sqrt(2.0 * params.E)
    state0 = np.column_stack([
        x0,
        np.zeros(n_seeds),
        speed * np.cos(phi0),
        speed * np.sin(phi0),
    ])
    n = math.ceil(T / dt)
    path = flow.rk4_path(model, state0, n, dt)
    if not np.all(np.isfinite(path)):
        raise flow.NonFiniteState("integration produced non-finite state")
    xs = path[:, :, 0].ravel() % 1.0
    phis = np.arctan2(path[:, :, 3].ravel(), path[:, :, 2].ravel())
    dev = _circ_dist(phis, solve_branch(xs, params), 2.0 * math.pi)
    return float(dev.max())


def region_scan(E_values: np.ndarray, F_values: np.ndarray) -> list[tuple[float, float, str]]:
    """Existence status on the (E, F) product grid, row-major in E then F."""
    return [
        (float(E), float(F), graph_exists(float(E), float(F)))
        for E in E_values
        for F in F_values
    ]


@dataclass(frozen=True)
class WitnessReport:
    """A point whose forward orbit settles into a graph it does not lie on."""

    E: float
    level: float
    x: float
    phi: float
    point_to_other_graph: float
    cloud_to_other_graph: float
    cloud_to_gamma1: float
    orbits_checked: int


def absorbing_witness(
    model: MagneticModel,
    E: float,
    F: float,
    n_orbits: int = 8,
    T_transient: float = 200.0,
    T_sample: float = 40.0,
    dt: float = 2e-3,
    seed: int = 0,
    cloud_tol: float = 1e-2,
    separation_min: float = 0.1,
) -> WitnessReport:
    """Search for an orbit witnessing that the branch-2 graph is not absorbing.

    Candidates start on branch 1 of the level F.  A witness must (i) have its
    omega-limit cloud within cloud_tol of the branch-2 graph (median sojourn
    distance, see flow.cloud_distance) and (ii) itself sit farther than
    separation_min from that graph.  On a saddle level the candidates converge
    to the vertical orbit gamma_1, which lies in both branches' graphs, so a
    witness exists; on a foliated level every orbit stays on its own leaf and
    InconclusiveWitness is raised.
    """
    if abs(model.amplitude - 1.0) > 1e-15:
        raise ValueError("closed-form graph layer requires amplitude = 1")
    status = graph_exists(E, F)
    if status == "none":
        raise NoGraph(f"no invariant graph at E={E}, F={F}")
    p1 = GraphParams(E, F, 1)
    p2 = GraphParams(E, F, 2)
    rng = np.random.default_rng(seed)
    speed = math.sqrt(2.0 * E)
    # keep candidates away from the tangency at x = 1/2 where both branches meet
    x0s = 0.05 + 0.8 * rng.uniform(0.0, 1.0, size=n_orbits) % 0.8
    x0s = np.where(np.abs(x0s - 0.5) < 0.1, (x0s + 0.22) % 1.0, x0s)
    gamma1 = singular_rotation_vectors(E)[0]
    phi0s = np.array([solve_branch(float(x0), p1) for x0 in x0s])
    states = np.column_stack([
        x0s, np.zeros_like(x0s),
        speed * np.cos(phi0s), speed * np.sin(phi0s),
    ])
    # one batched integration for all candidates; per-orbit results match
    # one-at-a-time runs bit for bit, see flow.omega_limit_batch
    clouds = flow.omega_limit_batch(model, states, T_transient, T_sample, dt)
    for checked, (x0, phi0) in enumerate(zip(x0s, phi0s), start=1):
        point_sep = float(graph_chart_distance(x0, phi0, p2)[0])
        cloud = clouds[checked - 1]
        xs, phis = cloud[:, 0], _velocity_angles(cloud[:, 2:])
        d2 = flow.cloud_distance(graph_chart_distance(xs, phis, p2))
        dg = flow.cloud_distance(
            np.sqrt(
                _circ_dist(xs, gamma1.x, 1.0) ** 2
                + _circ_dist(phis, 0.5 * math.pi, 2.0 * math.pi) ** 2
            )
        )
        if d2 < cloud_tol and point_sep > separation_min:
            return WitnessReport(
                E, F, float(x0), float(phi0), point_sep, d2, dg, checked
            )
    raise InconclusiveWitness(
        f"no witness among {len(x0s)} orbits at E={E}, F={F} ({status})"
    )

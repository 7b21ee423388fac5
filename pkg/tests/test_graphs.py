import math

import numpy as np
import pytest

from mather2d import flow, graphs
from mather2d.graphs import (
    GraphParams,
    InconclusiveWitness,
    NoGraph,
    cohomology_class,
    critical_points,
    eta_form,
    first_integral,
    graph_chart_distance,
    graph_exists,
    graph_momentum,
    region_scan,
    saddle_class,
    singular_rotation_vectors,
    solve_branch,
)
from mather2d.model import LiftedPoint, MagneticModel, TangentVec

ROOT2 = math.sqrt(2.0)
CRIT_F = ROOT2 - 1.0
# quadrature-pinned horizontal classes of the F = 0 graphs
C1_E1 = 1.2160067234249796
C1_E2 = 1.8684309153353882
SAMPLE_PARAMS = [(1.0, 0.0), (1.0, 0.2), (1.0, -0.3), (2.0, 0.5), (0.75, 0.1)]


def test_first_integral_spot_values():
    assert first_integral(0.0, math.pi / 2, 0.5) == pytest.approx(2.0, abs=1e-14)
    assert first_integral(0.5, -math.pi / 2, 0.5) == pytest.approx(-2.0, abs=1e-14)
    with pytest.raises(ValueError):
        first_integral(0.0, 0.0, -1.0)


def test_graph_existence_region():
    assert graph_exists(1.0, 0.0) == "foliated"
    assert graph_exists(1.0, 0.4) == "foliated"
    assert graph_exists(1.0, 0.42) == "none"
    assert graph_exists(0.4, 0.0) == "none"
    assert graph_exists(1.0, CRIT_F) == "saddle-boundary"
    assert graph_exists(1.0, -CRIT_F) == "saddle-boundary"


def test_solve_branch_spot_values():
    assert solve_branch(0.25, GraphParams(2.0, 0.0, 1)) == pytest.approx(0.0, abs=1e-14)
    assert solve_branch(0.0, GraphParams(2.0, 0.0, 1)) == pytest.approx(-math.pi / 6, abs=1e-12)
    assert solve_branch(0.0, GraphParams(2.0, 0.0, 2)) == pytest.approx(math.pi + math.pi / 6, abs=1e-12)
    # tangency at the saddle
    assert solve_branch(0.5, GraphParams(1.0, CRIT_F, 1)) == pytest.approx(math.pi / 2, abs=1e-12)
    with pytest.raises(NoGraph):
        solve_branch(0.3, GraphParams(1.0, 0.42, 1))


def test_solve_branch_satisfies_level_equation():
    rng = np.random.default_rng(2)
    x = rng.uniform(0.0, 1.0, 200)
    for E, F in SAMPLE_PARAMS:
        for branch in (1, 2):
            phi = solve_branch(x, GraphParams(E, F, branch))
            res = np.abs(first_integral(x, phi, E) - F)
            assert np.max(res) < 1e-12


def test_eta_form_spot_values():
    assert eta_form(0.25, GraphParams(2.0, 0.0, 1)).as_array() == pytest.approx([2.0, 0.0], abs=1e-14)
    assert eta_form(0.25, GraphParams(2.0, 0.0, 2)).as_array() == pytest.approx([-2.0, 0.0], abs=1e-14)
    assert eta_form(0.37, GraphParams(1.0, 0.2, 1)).p2 == 0.2


def test_eta_form_is_closed():
    # eta = f(x) dx + F dy: the numeric curl d(eta_y)/dx - d(eta_x)/dy vanishes
    p = GraphParams(1.0, 0.2, 1)
    eps = 1e-5
    for x in (0.1, 0.3, 0.8):
        dp2_dx = (eta_form(x + eps, p).p2 - eta_form(x - eps, p).p2) / (2 * eps)
        assert abs(dp2_dx) < 1e-8  # exactly 0: the dy slot is the constant F


def test_graph_momentum_equals_eta_form():
    model = MagneticModel()
    rng = np.random.default_rng(5)
    worst = 0.0
    for E, F in SAMPLE_PARAMS:
        for branch in (1, 2):
            params = GraphParams(E, F, branch)
            for x in rng.uniform(0.0, 1.0, 1000):
                p = graph_momentum(model, float(x), params).as_array()
                e = eta_form(float(x), params).as_array()
                worst = max(worst, float(np.max(np.abs(p - e))))
    assert worst < 1e-12


def test_graph_momentum_spot_value():
    # x = 1/2, E = 1, F = 0: sin(phi1) = (0 - (-1))/sqrt2, phi1 = pi/4,
    # v = (1, 1), p = (1, 1 + cos(pi)) = (1, 0)
    model = MagneticModel()
    params = GraphParams(1.0, 0.0, 1)
    assert solve_branch(0.5, params) == pytest.approx(math.pi / 4, abs=1e-12)
    p = graph_momentum(model, 0.5, params).as_array()
    assert p == pytest.approx([1.0, 0.0], abs=1e-12)
    assert eta_form(0.5, params).as_array() == pytest.approx([1.0, 0.0], abs=1e-12)


def test_cohomology_class_values():
    c = cohomology_class(GraphParams(1.0, 0.0, 1))
    assert c.c1 == pytest.approx(C1_E1, abs=1e-9)
    assert c.c2 == 0.0
    c2 = cohomology_class(GraphParams(2.0, 0.0, 1))
    assert c2.c1 == pytest.approx(C1_E2, abs=1e-9)
    # branch 2 flips the dx slot, keeps F
    cb = cohomology_class(GraphParams(2.0, 0.0, 2))
    assert cb.c1 == pytest.approx(-c2.c1, abs=1e-9)
    cf = cohomology_class(GraphParams(1.0, 0.3, 1))
    assert cf.c2 == 0.3


def test_saddle_class_limit_matches_boundary_value():
    # one-sided limit F -> (sqrt(2E)-1)^- against direct quadrature at the
    # boundary (the integrand stays integrable there)
    sc = saddle_class(1.0)
    direct = cohomology_class(GraphParams(1.0, CRIT_F, 1))
    assert abs(sc.c1 - direct.c1) < 1e-6
    assert sc.c2 == pytest.approx(CRIT_F, abs=1e-12)


def test_critical_points_classification():
    pts = critical_points(1.0)
    assert len(pts) == 4
    table = {(p.x, round(p.phi, 6)): p for p in pts}
    mx = table[(0.0, round(math.pi / 2, 6))]
    s1 = table[(0.0, round(-math.pi / 2, 6))]
    s2 = table[(0.5, round(math.pi / 2, 6))]
    mn = table[(0.5, round(-math.pi / 2, 6))]
    assert mx.kind == "max" and mx.value == pytest.approx(1 + ROOT2, abs=1e-12)
    assert mn.kind == "min" and mn.value == pytest.approx(-1 - ROOT2, abs=1e-12)
    assert s1.kind == "saddle" and s1.value == pytest.approx(-CRIT_F, abs=1e-12)
    assert s2.kind == "saddle" and s2.value == pytest.approx(CRIT_F, abs=1e-12)


def test_singular_rotation_vectors():
    up, down = singular_rotation_vectors(1.0)
    assert (up.rotation.h1, up.rotation.h2) == pytest.approx((0.0, ROOT2), abs=1e-14)
    assert (down.rotation.h1, down.rotation.h2) == pytest.approx((0.0, -ROOT2), abs=1e-14)
    assert up.x == 0.5 and down.x == 0.0
    # action rate E - sqrt(2E), the Lagrangian value along the orbits
    assert up.action_rate == pytest.approx(1.0 - ROOT2, abs=1e-14)
    u05, d05 = singular_rotation_vectors(0.5)
    assert (u05.rotation.h1, u05.rotation.h2) == pytest.approx((0.0, 1.0), abs=1e-14)
    assert (d05.rotation.h1, d05.rotation.h2) == pytest.approx((0.0, -1.0), abs=1e-14)


def test_singular_rotation_matches_integrated_orbit():
    model = MagneticModel()
    up = singular_rotation_vectors(1.0)[0]
    s0 = flow.FlowState(LiftedPoint(up.x, 0.0), TangentVec(0.0, ROOT2))
    traj = flow.integrate(model, s0, 10.0, 1e-3)
    rot = flow.rotation_vector_estimate(traj)
    assert abs(rot.h1 - up.rotation.h1) < 1e-6
    assert abs(rot.h2 - up.rotation.h2) < 1e-6


def test_region_scan_recovers_boundary():
    E_values = np.linspace(0.55, 2.0, 50)
    F_values = np.linspace(-1.2, 1.2, 50)
    cell = F_values[1] - F_values[0]
    rows = region_scan(E_values, F_values)
    assert len(rows) == 2500
    for E, F, status in rows:
        margin = abs(F) - (math.sqrt(2.0 * E) - 1.0)
        if status == "foliated":
            assert margin < cell + 1e-12
        elif status == "none":
            assert margin > -cell - 1e-12


def test_graph_chart_distance_vanishes_on_graph():
    params = GraphParams(1.0, 0.2, 1)
    x = np.linspace(0.0, 1.0, 64, endpoint=False)
    phi = solve_branch(x, params)
    d = graph_chart_distance(x, phi, params)
    assert np.max(d) < 1e-3
    # a quarter-turn off the graph is far from it
    far = graph_chart_distance(np.array([0.25]), np.array([solve_branch(0.25, params) + 1.5]), params)
    assert far[0] > 0.5


def test_graph_invariance(invariance_deviation):
    assert invariance_deviation < 1e-5


def test_saddle_boundary_orbit_converges_to_gamma1():
    # an orbit seeded on branch 1 of the saddle level stays on that branch
    # and accumulates on the vertical orbit through the saddle
    model = MagneticModel()
    params = GraphParams(1.0, CRIT_F, 1)
    x0 = 0.3
    phi0 = solve_branch(x0, params)
    s0 = flow.FlowState(
        LiftedPoint(x0, 0.0), TangentVec(ROOT2 * math.cos(phi0), ROOT2 * math.sin(phi0))
    )
    traj = flow.integrate(model, s0, 50.0, 1e-3)
    xs = traj.positions[:, 0] % 1.0
    phis = np.arctan2(traj.velocities[:, 1], traj.velocities[:, 0])
    dev = graph_chart_distance(xs, phis, params)
    assert np.max(dev) < 1e-3
    # final point near the saddle (1/2, pi/2), the gamma_1 chart position
    d_end = math.hypot(xs[-1] - 0.5, phis[-1] - math.pi / 2)
    assert d_end < 1e-2


def test_flipped_field_breaks_invariance():
    # regression guard on the sign convention of the magnetic coupling: the
    # J-flipped field must visibly leave the graph
    model = MagneticModel()
    params = GraphParams(1.0, 0.0, 1)
    x0 = np.array([0.15, 0.4, 0.8])
    phi0 = solve_branch(x0, params)
    state = np.column_stack([
        x0, np.zeros(3), ROOT2 * np.cos(phi0), ROOT2 * np.sin(phi0),
    ])

    def field(s):
        x, v1, v2 = s[:, 0], s[:, 2], s[:, 3]
        f = 2.0 * math.pi * np.sin(2.0 * math.pi * x)
        # wrong sign relative to the model convention
        return np.column_stack([v1, v2, f * v2, -f * v1])

    dt = 1e-3
    worst = 0.0
    for step in range(1, 5001):
        k1 = field(state)
        k2 = field(state + 0.5 * dt * k1)
        k3 = field(state + 0.5 * dt * k2)
        k4 = field(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % 250 == 0:
            xs = state[:, 0] % 1.0
            phis = np.arctan2(state[:, 3], state[:, 2])
            worst = max(worst, float(np.max(graph_chart_distance(xs, phis, params))))
    assert worst > 0.05


def test_absorbing_witness_on_saddle_levels(witness_reports):
    for E, rep in witness_reports["saddle"].items():
        assert rep.cloud_to_gamma1 < 1e-2
        assert rep.cloud_to_other_graph < 1e-2
        assert rep.point_to_other_graph > 0.1
        assert rep.E == E


def test_no_witness_on_foliated_level(witness_reports):
    assert witness_reports["foliated_witness"] is False


def test_witness_raises_on_missing_graph():
    model = MagneticModel()
    with pytest.raises(NoGraph):
        graphs.absorbing_witness(model, 0.3, 0.0)

"""Certificate checks on small computed trajectories."""

import copy

import pytest

from plastiq.discretization import Field, State, reference_state, unit_square
from plastiq.dissipation import DissipationModel, global_distance
from plastiq.energy import EnergyModel, Loading
from plastiq.solver import ModelSet, SolverConfig, TimeGrid, run_quasistatic
from plastiq.verify import (
    check_E_discr,
    check_E_limit,
    check_S_discr,
    check_S_semi,
    check_energy_bound,
    verify_all,
)

CONFIG = SolverConfig(
    max_outer_iterations=1500,
    plastic_trials=8,
    plastic_step_floor=1e-4,
    perturbation_count=20,
)


def build(load=0.0, knots=5, n=3):
    mesh = unit_square(n, dirichlet="all")
    models = ModelSet(
        EnergyModel.default_2d(dirichlet_weight=4.0),
        Loading.body_ramp(mesh, [load, 0.0], horizon=1.0),
        DissipationModel(),
    )
    grid = TimeGrid.uniform(1.0, knots)
    traj = run_quasistatic(reference_state(mesh), grid, models, CONFIG)
    return mesh, models, traj


MESH0, MODELS0, TRAJ0 = build(load=0.0)
MESH1, MODELS1, TRAJ1 = build(load=0.25)


def corrupted_copy(traj, knot, shift=0.8):
    """Trajectory with one state's total deformation knocked far off."""
    bad = copy.deepcopy(traj)
    values = bad.states[knot].y.values.copy()
    values[len(values) // 2] += shift
    bad.states[knot] = State(Field(values, bad.states[knot].mesh), bad.states[knot].yp)
    return bad


# ---------------------------------------------------------------------------
# discrete stability
# ---------------------------------------------------------------------------

def test_s_discr_passes_on_unloaded_trajectory():
    for k in (0, 2, len(TRAJ0.grid.knots) - 1):
        cert = check_S_discr(TRAJ0, k, competitors=25, seed=1, models=MODELS0)
        assert cert.passed
        assert cert.margin >= 0.0
        assert cert.detail["competitors_used"] > 0


def test_s_discr_self_competitor_contributes_zero():
    # the competitor equal to the current state adds E - E + D(I) = 0
    state = TRAJ0.states[0]
    assert global_distance(state.yp, state.yp, MODELS0.dissipation) == 0.0


def test_s_discr_detects_corrupted_state():
    bad = corrupted_copy(TRAJ0, knot=2)
    cert = check_S_discr(bad, 2, competitors=40, seed=2, models=MODELS0)
    assert not cert.passed
    assert cert.margin < -cert.tolerance


# ---------------------------------------------------------------------------
# discrete energy inequality
# ---------------------------------------------------------------------------

def test_e_discr_zero_loading_margin_zero():
    cert = check_E_discr(TRAJ0, 0, len(TRAJ0.grid.knots) - 1, MODELS0)
    assert cert.passed
    assert cert.margin == pytest.approx(0.0, abs=1e-12)


def test_e_discr_equal_indices():
    cert = check_E_discr(TRAJ1, 3, 3, MODELS1)
    assert cert.passed
    assert cert.detail["lhs"] == 0.0
    assert cert.detail["rhs"] == 0.0


def test_e_discr_all_pairs_on_ramp():
    n = len(TRAJ1.grid.knots)
    for s in range(n):
        for t in range(s, n):
            cert = check_E_discr(TRAJ1, s, t, MODELS1)
            assert cert.passed, (s, t, cert.margin)


def test_e_discr_rejects_reversed_indices():
    with pytest.raises(ValueError):
        check_E_discr(TRAJ1, 3, 1, MODELS1)


# ---------------------------------------------------------------------------
# semistability
# ---------------------------------------------------------------------------

def test_s_semi_passes_at_equilibrium():
    for k in range(len(TRAJ1.grid.knots)):
        cert = check_S_semi(TRAJ1, k, elastic_competitors=50, seed=3 + k, models=MODELS1)
        assert cert.passed


def test_s_semi_zero_competitors_is_vacuous():
    cert = check_S_semi(TRAJ1, 0, elastic_competitors=0, seed=4, models=MODELS1)
    assert cert.passed
    assert cert.vacuous


def test_s_semi_detects_corrupted_state():
    bad = corrupted_copy(TRAJ1, knot=1)
    cert = check_S_semi(bad, 1, elastic_competitors=100, seed=5, models=MODELS1)
    assert not cert.passed


# ---------------------------------------------------------------------------
# limit energy inequality and the bound
# ---------------------------------------------------------------------------

def test_e_limit_zero_loading_margin_zero():
    cert = check_E_limit(TRAJ0, MODELS0)
    assert cert.passed
    assert cert.margin == pytest.approx(0.0, abs=1e-12)


def test_e_limit_passes_on_ramp():
    cert = check_E_limit(TRAJ1, MODELS1)
    assert cert.passed


def test_e_limit_rejects_inflated_delta():
    inflated = [d + 0.25 for d in TRAJ1.delta_accumulated]
    cert = check_E_limit(TRAJ1, MODELS1, delta=inflated)
    assert not cert.passed


def test_energy_bound_constant_trajectory():
    cert = check_energy_bound(TRAJ0)
    assert cert.passed
    assert cert.detail["value"] == pytest.approx(TRAJ0.energies[0].total, abs=1e-12)


def test_energy_bound_respects_ceiling():
    cert = check_energy_bound(TRAJ1, ceiling=1e-3)
    assert not cert.passed


def test_energy_bound_ramp_regression_value():
    # regression pin: a subcritical ramp from the reference state keeps its
    # energy peak at t = 0 (value 2.0 on the unit square) and accumulates
    # no dissipation, so sup E + Diss = 2.0
    cert = check_energy_bound(TRAJ1)
    assert cert.detail["value"] == pytest.approx(2.0, abs=1e-9)


# ---------------------------------------------------------------------------
# structural identities
# ---------------------------------------------------------------------------

def test_dissipation_interval_additivity():
    # Diss(s, u) + Diss(u, t) = Diss(s, t) exactly for knot triples
    delta = TRAJ1.delta_accumulated
    for s in range(len(delta)):
        for u in range(s, len(delta)):
            for t in range(u, len(delta)):
                left = (delta[u] - delta[s]) + (delta[t] - delta[u])
                assert left == pytest.approx(delta[t] - delta[s], abs=1e-15)


def test_field_distance_triangle_inequality_on_knots():
    d = MODELS1.dissipation
    states = TRAJ1.states
    n = len(states)
    for s in range(n):
        for u in range(s, n):
            for t in range(u, n):
                direct = global_distance(states[s].yp, states[t].yp, d)
                via = global_distance(states[s].yp, states[u].yp, d) + global_distance(
                    states[u].yp, states[t].yp, d
                )
                assert direct <= via + 1e-10


def test_e_discr_from_zero_equals_e_limit_margin():
    # with delta = accumulated increments the two margins are the same
    # arithmetic expression knot by knot
    cert_limit = check_E_limit(TRAJ1, MODELS1)
    per_knot = cert_limit.detail["per_knot_margins"]
    for t in range(len(TRAJ1.grid.knots)):
        cert = check_E_discr(TRAJ1, 0, t, MODELS1)
        assert cert.margin == pytest.approx(per_knot[t], abs=1e-11)


def test_verify_all_bundles_certificates():
    certs = verify_all(TRAJ0, MODELS0, stability=True, competitors=10, seed=6)
    kinds = {c.kind for c in certs}
    assert kinds == {"E_discr", "E", "S_semi", "S_discr", "bound"}
    assert all(c.passed for c in certs)
    assert all(isinstance(c.to_dict(), dict) for c in certs)

"""Acceptance criteria.

One test per criterion, each printing a single pass/fail line with its
runtime (run with `pytest tests/test_acceptance.py -s` to see them live).
Criteria 6, 7 and 9 share the bundled ramp scenario; the solve cost is
charged to the first of them that runs.
"""

import math
import os
import time

import numpy as np

from plastiq.algebra import random_special
from plastiq.discretization import (
    Field,
    Mesh,
    chain_estimate_audit,
    random_admissible_state,
    reference_state,
    unit_square,
)
from plastiq.dissipation import DissipationModel, one_step_distance, rate_potential
from plastiq.energy import (
    EnergyModel,
    elastic_energy_eulerian,
    elastic_energy_lagrangian,
)
from plastiq.geometry import (
    Polygon,
    ciarlet_necas_check,
    hausdorff,
    jones_verify,
    sample_polygon,
    slit_square,
)
from plastiq.scenario import Scenario
from plastiq.solver import TimeGrid, run_1d_toy, run_quasistatic
from plastiq.verify import check_E_discr, check_E_limit, check_S_semi, check_energy_bound

RAMP_SCENARIO = os.path.join(os.path.dirname(__file__), "..", "scenarios", "ramp.json")

_cache = {}


def ramp_bundle():
    if "traj" not in _cache:
        scenario = Scenario.from_file(RAMP_SCENARIO)
        traj = run_quasistatic(
            reference_state(scenario.mesh), scenario.grid, scenario.models,
            scenario.solver,
        )
        _cache.update(scenario=scenario, traj=traj)
    return _cache["scenario"], _cache["traj"]


def report(number, description, ok, elapsed, limit=None):
    status = "PASS" if ok else "FAIL"
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:.0f}s)" if limit else "")
    print(f"[criterion {number}] {status}: {description} [{timing}]")
    assert ok, f"criterion {number} failed: {description}"
    if limit is not None:
        assert elapsed < limit, f"criterion {number} exceeded {limit}s ({elapsed:.2f}s)"


def test_criterion_1_toy_activation_threshold():
    start = time.perf_counter()
    rows = run_1d_toy(0.5, TimeGrid.uniform(2.0, 40))
    ok = all(abs(r.p - 1.0) <= 1e-8 for r in rows)
    report(1, "1D activation threshold: p = 1 at every knot for lambda = 0.5",
           ok, time.perf_counter() - start, limit=1.0)


def test_criterion_2_toy_post_threshold_flow():
    start = time.perf_counter()
    grid = TimeGrid.uniform(1.0, 40)
    rows = run_1d_toy(2.0, grid)
    step = grid.fineness
    ok = all(r.p == 1.0 for r in rows if r.t <= 0.5) and all(
        r.p != 1.0 and r.runaway for r in rows if r.t > 0.5 + step
    )
    report(2, "1D post-threshold flow: runaway exactly past |ell| = 1",
           ok, time.perf_counter() - start, limit=1.0)


def random_sl2_batch(rng, count, log_stretch=1.2):
    """Batched random SL(2) factors R(alpha) diag(s, 1/s) R(beta)."""
    alpha = rng.uniform(0.0, 2.0 * math.pi, count)
    beta = rng.uniform(0.0, 2.0 * math.pi, count)
    s = np.exp(rng.uniform(-log_stretch, log_stretch, count))

    def rot(theta):
        c, sn = np.cos(theta), np.sin(theta)
        return np.stack(
            [np.stack([c, -sn], -1), np.stack([sn, c], -1)], axis=-2
        )

    diag = np.zeros((count, 2, 2))
    diag[:, 0, 0] = s
    diag[:, 1, 1] = 1.0 / s
    return rot(alpha) @ diag @ rot(beta)


def test_criterion_3_dissipation_structure():
    start = time.perf_counter()
    model = DissipationModel()
    rng = np.random.default_rng(42)
    ok = True
    pairs_a = random_sl2_batch(rng, 10_000)
    pairs_b = random_sl2_batch(rng, 10_000)
    for a, b in zip(pairs_a, pairs_b):
        if one_step_distance(a @ b, model, det_tol=1e-6) > (
            one_step_distance(a, model) + one_step_distance(b, model) + 1e-10
        ):
            ok = False
            break
    for _ in range(1000):
        p = random_special(rng, 2)
        pdot = rng.uniform(-1.0, 1.0, size=(2, 2))
        base = rate_potential(p, pdot, model)
        for lam in (0.0, 0.5, 2.0, 8.0):
            if rate_potential(p, lam * pdot, model) != lam * base:
                ok = False
        q = random_special(rng, 2)
        if abs(rate_potential(p @ q, pdot @ q, model) - base) > 1e-12 * (1.0 + base):
            ok = False
    report(3, "dissipation structure: subadditivity, 1-homogeneity, indifference",
           ok, time.perf_counter() - start, limit=5.0)


def test_criterion_4_dual_assembly_identity():
    start = time.perf_counter()
    mesh = unit_square(8)
    rng = np.random.default_rng(7)
    model = EnergyModel.default_2d()
    ok = True
    worst = 0.0
    for _ in range(100):
        state = random_admissible_state(mesh, rng)
        lag = elastic_energy_lagrangian(model, state)
        eul = elastic_energy_eulerian(model, state)
        gap = abs(eul - lag) / (1.0 + abs(lag))
        worst = max(worst, gap)
        if gap > 1e-12:
            ok = False
    report(4, f"dual-assembly identity to 1e-12 (worst {worst:.2e})",
           ok, time.perf_counter() - start, limit=5.0)


def test_criterion_5_chain_estimate_audit():
    start = time.perf_counter()
    mesh = unit_square(4)
    rng = np.random.default_rng(11)
    violations = 0
    for _ in range(500):
        state = random_admissible_state(mesh, rng)
        if not chain_estimate_audit(state)["ok"]:
            violations += 1
    report(5, f"Holder chain estimate: {violations} violations in 500 states",
           violations == 0, time.perf_counter() - start, limit=10.0)


def test_criterion_6_discrete_energy_inequality():
    start = time.perf_counter()
    scenario, traj = ramp_bundle()
    n = len(traj.grid.knots)
    pairs = 0
    ok = True
    for s in range(n):
        for t in range(s, n):
            pairs += 1
            if not check_E_discr(traj, s, t, scenario.models).passed:
                ok = False
    ok = ok and pairs == 210
    ok = ok and check_E_limit(traj, scenario.models).passed
    report(6, f"discrete energy inequality on all {pairs} knot pairs plus limit form",
           ok, time.perf_counter() - start, limit=60.0)


def test_criterion_7_semistability():
    start = time.perf_counter()
    scenario, traj = ramp_bundle()
    ok = all(
        check_S_semi(traj, k, elastic_competitors=200, seed=1000 + k,
                     models=scenario.models).passed
        for k in range(len(traj.grid.knots))
    )
    report(7, "semistability with 200 elastic competitors per knot",
           ok, time.perf_counter() - start, limit=60.0)


def test_criterion_8_geometry():
    start = time.perf_counter()
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    jones_square = jones_verify(square, 0.9, 0.5, sample_pairs=1000, seed=3)
    ok = not jones_square.cond1_failures
    ok = ok and abs(jones_square.epsilon_max_estimate - 1.0) <= 1e-9

    slit = slit_square(0.01, 0.9)
    jones_slit = jones_verify(slit, 0.5, 1.0, sample_pairs=400, seed=4)
    ok = ok and len(jones_slit.cond1_failures) >= 1

    h = 0.01
    inner = sample_polygon(square, h)
    outer = sample_polygon(Polygon([(0, 0), (2, 0), (2, 2), (0, 2)]), h)
    ok = ok and abs(hausdorff(inner, outer) - math.sqrt(2.0)) <= 2 * h

    mesh = Mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)],
                [(0, 1)], [(1, 2), (2, 3), (3, 0)])
    ok = ok and ciarlet_necas_check(Field.identity(mesh), mesh).passed
    fold = Field(np.array([(0, 0), (1, 0), (1, 1), (1, 0)], dtype=float), mesh)
    ok = ok and not ciarlet_necas_check(fold, mesh).passed

    report(8, "geometry: Jones square/slit, nested-squares Hausdorff, CN id/fold",
           ok, time.perf_counter() - start, limit=10.0)


def test_criterion_9_grid_refinement_regression():
    start = time.perf_counter()
    scenario, coarse = ramp_bundle()
    fine_grid = TimeGrid.uniform(float(coarse.grid.knots[-1]),
                                 2 * (len(coarse.grid.knots) - 1) + 1)
    assert fine_grid.fineness <= coarse.grid.fineness / 2 + 1e-15
    fine = run_quasistatic(reference_state(scenario.mesh), fine_grid,
                           scenario.models, scenario.solver)
    e_coarse = coarse.energies[-1].total
    e_fine = fine.energies[-1].total
    ok = abs(e_fine - e_coarse) < 0.05 * abs(e_coarse)
    d_coarse = coarse.delta_accumulated[-1]
    d_fine = fine.delta_accumulated[-1]
    ok = ok and abs(d_fine - d_coarse) <= 0.10 * max(d_coarse, d_fine, 1e-9)
    b_coarse = check_energy_bound(coarse).detail["value"]
    b_fine = check_energy_bound(fine).detail["value"]
    ok = ok and abs(b_fine - b_coarse) <= 0.10 * abs(b_coarse)
    report(
        9,
        f"grid refinement: final energy {e_coarse:.6f} -> {e_fine:.6f}, "
        f"delta(T) {d_coarse:.3g} -> {d_fine:.3g}",
        ok,
        time.perf_counter() - start,
    )

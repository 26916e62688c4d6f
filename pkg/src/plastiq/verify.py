"""Numerical certification of computed trajectories.

Each check emits a Certificate with a margin (pass means margin >=
-tolerance) and enough detail to reproduce it.  Stability-type checks are
sampled falsifiers, not proofs: the universal quantifier over admissible
competitors is undecidable numerically, so certificates record competitor
counts, amplitudes and the seed.  Semistability competitors never modify
the plastic field, exactly matching the limit condition's quantifier; no
extension machinery is needed because competitors live on the same mesh.

All tolerances scale with (1 + |E|) to stay meaningful across load
magnitudes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import Field, State, project_isochoric
from .dissipation import global_distance
from .energy import load_pairing, total_energy
from .errors import ProjectionStall
from .geometry import ciarlet_necas_check
from .solver import Assembler

__all__ = [
    "Certificate",
    "check_S_discr",
    "check_E_discr",
    "check_S_semi",
    "check_E_limit",
    "check_energy_bound",
    "verify_all",
]

_AMPLITUDES = (1e-3, 1e-2, 1e-1)


@dataclass
class Certificate:
    kind: str
    margin: float
    tolerance: float
    passed: bool
    knot: int | None = None
    knot_pair: tuple | None = None
    competitors: int | None = None
    amplitudes: tuple | None = None
    seed: int | None = None
    vacuous: bool = False
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "kind": self.kind,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
        }
        if self.knot is not None:
            out["knot"] = self.knot
        if self.knot_pair is not None:
            out["knot_pair"] = list(self.knot_pair)
        if self.competitors is not None:
            out["competitors"] = self.competitors
        if self.amplitudes is not None:
            out["amplitudes"] = list(self.amplitudes)
        if self.seed is not None:
            out["seed"] = self.seed
        if self.vacuous:
            out["vacuous"] = True
        if self.detail:
            out["detail"] = self.detail
        return out


def _objective(asm, state, t, prev_fp=None):
    fp_inv = asm.fp_inverse(state.yp)
    scalar = asm.plastic_scalar(state.yp, prev_fp)
    return float(asm.objective_batch(state.y.values[None], fp_inv, scalar, t)[0])


def check_S_discr(traj, t_index, competitors, seed, models):
    """Discrete stability against random admissible competitor states.

    Perturbs both fields of the current state (the plastic one is projected
    back to the isochoric manifold and must pass the Ciarlet-Necas check),
    sweeping the amplitudes {1e-3, 1e-2, 1e-1} times the mesh diameter, and
    reports the minimum of E(t, competitor) + D(current, competitor) -
    E(t, current).
    """
    rng = np.random.default_rng(seed)
    state = traj.states[t_index]
    t = float(traj.grid.knots[t_index])
    mesh = state.mesh
    asm = Assembler(mesh, models.energy, models.loading, models.dissipation)
    current = _objective(asm, state, t)
    diam = mesh.diameter
    n = len(mesh.nodes)
    margin = math.inf
    used = 0
    skipped = 0
    for _ in range(competitors):
        dy = rng.standard_normal((n, 2))
        dy /= np.linalg.norm(dy)
        dp = rng.standard_normal((n, 2))
        dp /= np.linalg.norm(dp)
        for amp in _AMPLITUDES:
            comp_y = Field(state.y.values + amp * diam * dy, mesh)
            try:
                comp_yp = project_isochoric(
                    Field(state.yp.values + amp * diam * dp, mesh)
                )
            except ProjectionStall:
                skipped += 1
                continue
            if not ciarlet_necas_check(comp_yp, mesh).passed:
                skipped += 1
                continue
            comp = State(comp_y, comp_yp)
            value = total_energy(models.energy, models.loading, t, comp).total
            diss = global_distance(state.yp, comp_yp, models.dissipation)
            margin = min(margin, value + diss - current)
            used += 1
    tol = 1e-8 * (1.0 + abs(current))
    return Certificate(
        kind="S_discr",
        margin=margin if used else math.inf,
        tolerance=tol,
        passed=(margin >= -tol) if used else True,
        knot=t_index,
        competitors=competitors,
        amplitudes=_AMPLITUDES,
        seed=seed,
        vacuous=used == 0,
        detail={"competitors_used": used, "competitors_skipped": skipped},
    )


def _interval_work(traj, models, i):
    """Exact integral of <l_dot, y(r)> over [t_{i-1}, t_i] (y frozen there)."""
    t0 = float(traj.grid.knots[i - 1])
    t1 = float(traj.grid.knots[i])
    y = traj.states[i - 1].y
    return load_pairing(models.loading, t1, y) - load_pairing(models.loading, t0, y)


def check_E_discr(traj, s_index, t_index, models):
    """Discrete energy inequality between two knots.

    LHS = E(t) - E(s) + Diss(s, t) with the dissipation recomputed from the
    stored plastic fields; RHS = minus the exact integral of <l_dot, y(r)>
    with the right-continuous piecewise-constant interpolant.
    """
    if s_index > t_index:
        raise ValueError("s_index must be <= t_index")
    e_s = total_energy(models.energy, models.loading,
                       float(traj.grid.knots[s_index]), traj.states[s_index]).total
    e_t = total_energy(models.energy, models.loading,
                       float(traj.grid.knots[t_index]), traj.states[t_index]).total
    diss = sum(
        global_distance(traj.states[i].yp, traj.states[i + 1].yp, models.dissipation)
        for i in range(s_index, t_index)
    )
    rhs = -sum(_interval_work(traj, models, i) for i in range(s_index + 1, t_index + 1))
    lhs = e_t - e_s + diss
    tol = 1e-8 * (1.0 + abs(e_s))
    margin = rhs - lhs
    return Certificate(
        kind="E_discr",
        margin=margin,
        tolerance=tol,
        passed=margin >= -tol,
        knot_pair=(s_index, t_index),
        detail={"lhs": lhs, "rhs": rhs, "dissipation": diss},
    )


def check_S_semi(traj, t_index, elastic_competitors, seed, models):
    """Semistability with respect to elastic deformations only.

    Competitors share the plastic field of the trajectory state, so they
    are admissible by construction; only the total-deformation nodal values
    are perturbed.  With zero competitors the certificate is a vacuous pass
    and flagged as such.
    """
    rng = np.random.default_rng(seed)
    state = traj.states[t_index]
    t = float(traj.grid.knots[t_index])
    mesh = state.mesh
    asm = Assembler(mesh, models.energy, models.loading, models.dissipation)
    fp_inv = asm.fp_inverse(state.yp)
    scalar = asm.plastic_scalar(state.yp)
    current = float(asm.objective_batch(state.y.values[None], fp_inv, scalar, t)[0])
    diam = mesh.diameter
    n = len(mesh.nodes)
    margin = math.inf
    for _ in range(elastic_competitors):
        d = rng.standard_normal((n, 2))
        d /= np.linalg.norm(d)
        amps = np.array(_AMPLITUDES) * diam
        batch = state.y.values[None] + amps[:, None, None] * d[None]
        vals = asm.objective_batch(batch, fp_inv, scalar, t)
        margin = min(margin, float(np.min(vals)) - current)
    tol = 1e-8 * (1.0 + abs(current))
    vacuous = elastic_competitors == 0
    return Certificate(
        kind="S_semi",
        margin=margin if not vacuous else math.inf,
        tolerance=tol,
        passed=True if vacuous else margin >= -tol,
        knot=t_index,
        competitors=elastic_competitors,
        amplitudes=_AMPLITUDES,
        seed=seed,
        vacuous=vacuous,
    )


def check_E_limit(traj, models, delta=None):
    """Energy inequality at every knot with the accumulated dissipation.

    delta defaults to the trajectory's accumulated increments; passing an
    external array audits a stored (possibly corrupted) trajectory file.
    """
    if delta is None:
        delta = traj.delta_accumulated
    e0 = total_energy(models.energy, models.loading,
                      float(traj.grid.knots[0]), traj.states[0]).total
    tol = 1e-8 * (1.0 + abs(e0))
    margins = []
    work = 0.0
    for k in range(len(traj.grid.knots)):
        if k > 0:
            work += _interval_work(traj, models, k)
        e_t = total_energy(models.energy, models.loading,
                           float(traj.grid.knots[k]), traj.states[k]).total
        margins.append((e0 - work) - (e_t + delta[k]))
    margin = float(min(margins))
    return Certificate(
        kind="E",
        margin=margin,
        tolerance=tol,
        passed=margin >= -tol,
        detail={"per_knot_margins": margins},
    )


def check_energy_bound(traj, ceiling=1e6):
    """Uniform bound diagnostic: sup_t E(t) + Diss(0, T) below the ceiling."""
    value = float(max(e.total for e in traj.energies) + traj.delta_accumulated[-1])
    passed = math.isfinite(value) and value < ceiling
    return Certificate(
        kind="bound",
        margin=ceiling - value,
        tolerance=0.0,
        passed=passed,
        detail={"value": value, "ceiling": ceiling},
    )


def verify_all(
    traj,
    models,
    semistability=True,
    energy_inequality=True,
    stability=False,
    bound=True,
    competitors=50,
    seed=0,
    energy_ceiling=1e6,
    delta=None,
):
    """Run the toggled certificate checks over a whole trajectory."""
    certs = []
    n = len(traj.grid.knots)
    if energy_inequality:
        for s in range(n):
            for t in range(s, n):
                certs.append(check_E_discr(traj, s, t, models))
        certs.append(check_E_limit(traj, models, delta=delta))
    if semistability:
        for k in range(n):
            certs.append(check_S_semi(traj, k, competitors, seed + k, models))
    if stability:
        for k in range(n):
            certs.append(check_S_discr(traj, k, max(competitors // 2, 1), seed + k, models))
    if bound:
        certs.append(check_energy_bound(traj, ceiling=energy_ceiling))
    return certs

"""Quasistatic incremental solver.

At each time knot the solver descends the incremental objective

    E(t_i, y, yp) + D(grad yp_{i-1}, grad yp)

by alternating minimization: a derivative-free pattern search over the
total-deformation nodal values (the boundary penalty and the dissipation
term are nonsmooth, so no gradients are assumed), then trial moves of the
plastic nodal values followed by the isochoric projection.  Testing the
minimum against the previous state is always available, so every accepted
state satisfies objective(new) <= objective(previous state at t_i); summing
this over knots is exactly the discrete energy inequality.

Global minimization is not certified: the returned state is a
stationary-by-construction candidate, and certificate checks probe it with
random competitors.

The 1D single-material-point variant (`run_1d_toy`) eliminates the elastic
strain in closed form and locates the plastic strain by grid search plus
golden-section refinement, reporting box-boundary hits as runaway flags.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    DET_TOLERANCE,
    Field,
    Mesh,
    State,
    inv2,
    project_isochoric,
    reference_state,
)
from .dissipation import DissipationModel, _one_step_values, global_distance
from .energy import (
    EnergyBreakdown,
    EnergyModel,
    Loading,
    exceeds_lipschitz_cap,
    total_energy,
    we_eval,
    wp_eval,
)
from .errors import ProjectionStall, SolverFailure
from .geometry import ciarlet_necas_check

__all__ = [
    "TimeGrid",
    "ModelSet",
    "SolverConfig",
    "Trajectory",
    "Assembler",
    "incremental_solve",
    "relax_initial_state",
    "run_quasistatic",
    "run_1d_toy",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing knots 0 = t_0 < ... < t_N = T."""

    knots: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "knots", np.asarray(self.knots, dtype=float))
        if len(self.knots) < 2:
            raise ValueError("a time grid needs at least two knots")
        if abs(self.knots[0]) > 0.0:
            raise ValueError("the first knot must be 0")
        if np.any(np.diff(self.knots) <= 0.0):
            raise ValueError("knots must be strictly increasing")

    @classmethod
    def uniform(cls, horizon, n_knots):
        """n_knots equally spaced time points from 0 to horizon inclusive."""
        if n_knots < 2:
            raise ValueError("need at least two knots")
        return cls(np.linspace(0.0, horizon, n_knots))

    @property
    def fineness(self):
        return float(np.max(np.diff(self.knots)))

    def __len__(self):
        return len(self.knots)


@dataclass(frozen=True)
class ModelSet:
    """Everything the incremental problem needs besides the state."""

    energy: EnergyModel
    loading: Loading
    dissipation: DissipationModel


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iterations: int = 3000
    alternation_rounds: int = 3
    step_init: float = 0.05
    step_floor: float = 1e-8
    det_tolerance: float = DET_TOLERANCE
    perturbation_count: int = 50
    seed: int = 0
    plastic_step_init: float = 0.02
    plastic_step_floor: float = 1e-5
    plastic_trials: int = 24
    check_initial_semistability: bool = True
    energy_ceiling: float = 1e6

    def __post_init__(self):
        positives = (
            self.max_outer_iterations,
            self.alternation_rounds,
            self.step_init,
            self.step_floor,
            self.det_tolerance,
            self.perturbation_count,
            self.plastic_step_init,
            self.plastic_step_floor,
            self.plastic_trials,
            self.energy_ceiling,
        )
        if any(v <= 0 for v in positives):
            raise ValueError("all solver parameters must be positive")
        if self.step_floor >= self.step_init:
            raise ValueError("step_floor must be smaller than step_init")
        if self.plastic_step_floor >= self.plastic_step_init:
            raise ValueError("plastic_step_floor must be smaller than plastic_step_init")


_ACCEPT_TOL = 1e-14  # objectives closer than this keep the incumbent


class Assembler:
    """Vectorized energy evaluation for batches of total-deformation fields."""

    def __init__(self, mesh, model, loading, dissipation=None):
        self.mesh = mesh
        self.model = model
        self.loading = loading
        self._dissipation = dissipation
        self.tris = mesh.triangles
        self.grads = mesh.shape_gradients
        self.areas = mesh.areas
        self.dir_edges = mesh.gamma_D
        self.dir_mid = mesh.edge_midpoints(mesh.gamma_D)
        self.dir_len = mesh.edge_lengths(mesh.gamma_D)
        self._load_cache = {}
        self._neumann_mass = (
            mesh.edge_mass_matrix(mesh.gamma_N) if len(mesh.gamma_N) else None
        )

    def load_weights(self, t):
        """(n, 2) array w with <l(t), y> = sum(w * y_values)."""
        key = float(t)
        if key not in self._load_cache:
            w = self.mesh.mass_matrix @ self.loading.body_at(t)
            if self._neumann_mass is not None:
                w = w + self._neumann_mass @ self.loading.traction_at(t)
            self._load_cache[key] = w
        return self._load_cache[key]

    def fp_inverse(self, yp_field):
        return inv2(yp_field.gradients())

    def plastic_scalar(self, yp_field, prev_fp=None):
        """area-weighted W_p plus (optionally) the dissipation increment."""
        fp = yp_field.gradients()
        if exceeds_lipschitz_cap(self.model, fp):
            return math.inf
        wp = wp_eval(self.model, fp, det_tol=None)
        value = float(np.sum(self.areas * wp))
        if prev_fp is not None:
            rel = np.einsum("eij,ejk->eik", fp, inv2(prev_fp))
            value += float(np.sum(self.areas * _one_step_values(rel, self._dissipation)))
        return value

    def objective_batch(self, y_batch, fp_inv, scalar_term, t):
        """Objective at a (B, n, 2) batch of y values; plastic part is scalar_term."""
        yb = y_batch if y_batch.ndim == 3 else y_batch[None]
        f = np.einsum("beai,eaj->beij", yb[:, self.tris], self.grads)
        fe = np.einsum("beij,ejk->beik", f, fp_inv)
        elastic = we_eval(self.model, fe) @ self.areas
        mids = 0.5 * (yb[:, self.dir_edges[:, 0]] + yb[:, self.dir_edges[:, 1]])
        gaps = np.linalg.norm(mids - self.dir_mid[None], axis=2)
        boundary = self.model.dirichlet_weight * (gaps @ self.dir_len)
        load = np.einsum("bni,ni->b", yb, self.load_weights(t))
        return elastic + boundary + scalar_term - load


def _poll_directions(n_nodes):
    """(4n, n, 2) one-hot +/- coordinate perturbations."""
    dirs = np.zeros((4 * n_nodes, n_nodes, 2))
    k = 0
    for node in range(n_nodes):
        for comp in range(2):
            dirs[k, node, comp] = 1.0
            dirs[k + 1, node, comp] = -1.0
            k += 2
    return dirs


_LINE_MULTIPLIERS = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
_RANDOM_POLL = 24


def _descend_y(asm, y_values, fp_inv, scalar_term, t, config, poll, rng=None):
    """Pattern search with shrinking steps over the total-deformation values.

    Each poll evaluates all +/- coordinate moves plus a fresh batch of
    random unit directions (the poll set is asymptotically dense, which the
    nonsmooth boundary term needs: at its kinks no single coordinate move
    may descend while combined directions still do), then probes a combined
    move along the per-coordinate winners with doubling multipliers.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed + 977)
    y = y_values.copy()
    obj = float(asm.objective_batch(y[None], fp_inv, scalar_term, t)[0])
    step = config.step_init
    iters = 0
    trace = []  # accepted objective values only; re-evaluation seams excluded
    n = y.shape[0]
    n_coord = poll.shape[0]
    while step >= config.step_floor and iters < config.max_outer_iterations:
        iters += 1
        rand = rng.standard_normal((_RANDOM_POLL, n, 2))
        rand /= np.linalg.norm(rand, axis=(1, 2))[:, None, None]
        dirs = np.concatenate([poll, rand, -rand])
        cand = y[None] + step * dirs
        vals = asm.objective_batch(cand, fp_inv, scalar_term, t)
        gains = obj - vals
        best = int(np.argmax(gains))
        if gains[best] <= _ACCEPT_TOL:
            step *= 0.5
            continue
        # combined move along the per-coordinate winners
        g = gains[:n_coord].reshape(n, 2, 2)  # (node, comp, sign)
        sign_pick = np.where(g[..., 0] >= g[..., 1], 1.0, -1.0)
        mask = np.max(g, axis=2) > _ACCEPT_TOL
        delta = np.where(mask, sign_pick, 0.0) * step
        if not np.any(mask):
            delta = step * dirs[best]
        line = y[None] + delta[None] * _LINE_MULTIPLIERS[:, None, None]
        lvals = asm.objective_batch(line, fp_inv, scalar_term, t)
        lbest = int(np.argmin(lvals))
        if lvals[lbest] < obj - _ACCEPT_TOL and lvals[lbest] <= vals[best]:
            y = line[lbest]
            obj = float(lvals[lbest])
        else:
            y = cand[best]
            obj = float(vals[best])
        trace.append(obj)
    return y, obj, iters, trace


def _descend_plastic(asm, y_values, yp_field, prev_fp, t, config, rng):
    """Trial plastic moves (global SL(2) moves and projected nodal moves)."""
    mesh = yp_field.mesh
    yp = yp_field
    fp_inv = asm.fp_inverse(yp)
    scalar = asm.plastic_scalar(yp, prev_fp)
    obj = float(asm.objective_batch(y_values[None], fp_inv, scalar, t)[0])
    changed = False
    step = config.plastic_step_init
    n = yp.values.shape[0]
    rounds = 0
    while step >= config.plastic_step_floor and rounds < 200:
        rounds += 1
        improved = False
        # exactly isochoric global moves: shears and a diagonal stretch
        global_moves = [
            np.array([[1.0, step], [0.0, 1.0]]),
            np.array([[1.0, -step], [0.0, 1.0]]),
            np.array([[1.0, 0.0], [step, 1.0]]),
            np.array([[1.0, 0.0], [-step, 1.0]]),
            np.array([[1.0 + step, 0.0], [0.0, 1.0 / (1.0 + step)]]),
            np.array([[1.0 / (1.0 + step), 0.0], [0.0, 1.0 + step]]),
        ]
        candidates = [Field(yp.values @ m.T, mesh) for m in global_moves]
        # random projected nodal moves
        picks = rng.integers(0, 2 * n, size=config.plastic_trials)
        signs = rng.choice([-1.0, 1.0], size=config.plastic_trials)
        for pick, sign in zip(picks, signs):
            raw = yp.values.copy()
            raw[pick // 2, pick % 2] += sign * step
            try:
                candidates.append(project_isochoric(
                    Field(raw, mesh), det_tol=config.det_tolerance
                ))
            except ProjectionStall:
                continue
        for cand in candidates:
            cand_fp_inv = asm.fp_inverse(cand)
            cand_scalar = asm.plastic_scalar(cand, prev_fp)
            cand_obj = float(
                asm.objective_batch(y_values[None], cand_fp_inv, cand_scalar, t)[0]
            )
            if cand_obj < obj - _ACCEPT_TOL:
                if not ciarlet_necas_check(cand, mesh).passed:
                    continue
                yp = cand
                fp_inv = cand_fp_inv
                scalar = cand_scalar
                obj = cand_obj
                improved = True
                changed = True
        if not improved:
            step *= 0.25
    return yp, obj, changed


@dataclass
class SolveInfo:
    objective_start: float
    objective_end: float
    y_iterations: int
    rounds: int
    plastic_moved: bool
    no_decrease: bool
    objective_trace: list = field(default_factory=list)


def incremental_solve(prev, t, models, config, rng=None, assembler=None):
    """One incremental minimization step starting from the previous state.

    Returns (state, info) with objective(state) <= objective(prev at t_i) up
    to 1e-12; when nothing improves, the previous state itself is returned
    (info.no_decrease set), which is a legitimate minimizer candidate.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    asm = assembler
    if asm is None:
        asm = Assembler(prev.mesh, models.energy, models.loading, models.dissipation)
    prev_fp = prev.yp.gradients()
    y = prev.y.values.copy()
    yp = prev.yp.copy()
    poll = _poll_directions(y.shape[0])

    fp_inv = asm.fp_inverse(yp)
    scalar = asm.plastic_scalar(yp, prev_fp)
    obj_start = float(asm.objective_batch(y[None], fp_inv, scalar, t)[0])
    obj = obj_start
    y_iters = 0
    trace = [obj_start]
    plastic_moved = False
    rounds = 0
    for _ in range(config.alternation_rounds):
        rounds += 1
        round_start = obj
        y, obj, it, tr = _descend_y(asm, y, fp_inv, scalar, t, config, poll, rng)
        y_iters += it
        trace.extend(tr)
        yp, obj_p, moved = _descend_plastic(asm, y, yp, prev_fp, t, config, rng)
        if moved:
            plastic_moved = True
            fp_inv = asm.fp_inverse(yp)
            scalar = asm.plastic_scalar(yp, prev_fp)
            obj = obj_p
            trace.append(obj)
        if round_start - obj <= 1e-10 * (1.0 + abs(obj)):
            break
    if plastic_moved:
        # end on an elastic polish so the state is stationary in y
        y, obj, it, tr = _descend_y(asm, y, fp_inv, scalar, t, config, poll, rng)
        y_iters += it
        trace.extend(tr)
    no_decrease = obj >= obj_start - _ACCEPT_TOL
    if no_decrease:
        state = prev.copy()
        obj = obj_start
    else:
        state = State(Field(y, prev.mesh), yp)
    info = SolveInfo(
        objective_start=obj_start,
        objective_end=obj,
        y_iterations=y_iters,
        rounds=rounds,
        plastic_moved=plastic_moved,
        no_decrease=no_decrease,
        objective_trace=trace,
    )
    return state, info


@dataclass
class Trajectory:
    """Per-knot states, energies, dissipation increments and accumulated delta."""

    grid: TimeGrid
    states: list
    energies: list
    dissipation_increments: list
    delta_accumulated: list
    energy_bound: float = 0.0
    bound_ok: bool = True
    solve_infos: list = field(default_factory=list)

    @property
    def mesh(self):
        return self.states[0].mesh

    def totals(self):
        return np.array([e.total for e in self.energies])

    def to_json_dict(self):
        return {
            "schema": 1,
            "mesh": self.mesh.to_json_dict(),
            "knots": self.grid.knots.tolist(),
            "states": [
                {"y": s.y.values.tolist(), "yp": s.yp.values.tolist()}
                for s in self.states
            ],
            "energies": [e.to_dict() for e in self.energies],
            "dissipation_increments": list(self.dissipation_increments),
            "delta": list(self.delta_accumulated),
            "energy_bound": self.energy_bound,
            "bound_ok": self.bound_ok,
        }

    @classmethod
    def from_json_dict(cls, data):
        mesh = Mesh.from_json_dict(data["mesh"])
        grid = TimeGrid(np.asarray(data["knots"]))
        states = [
            State(Field(np.asarray(s["y"]), mesh), Field(np.asarray(s["yp"]), mesh))
            for s in data["states"]
        ]
        energies = [
            EnergyBreakdown(
                elastic=e["elastic"],
                plastic=e["plastic"],
                boundary=e["boundary"],
                load=e["load"],
            )
            for e in data["energies"]
        ]
        return cls(
            grid=grid,
            states=states,
            energies=energies,
            dissipation_increments=list(data["dissipation_increments"]),
            delta_accumulated=list(data["delta"]),
            energy_bound=data.get("energy_bound", 0.0),
            bound_ok=data.get("bound_ok", True),
        )


def relax_initial_state(mesh, models, config=SolverConfig()):
    """Elastic equilibrium at t = 0 with identity plastic history.

    Descends the t = 0 energy over the total deformation only, starting
    from the reference state.  The default elastic density carries stress
    at the identity, so with a partial Dirichlet boundary the reference
    state is not an unloaded equilibrium; this produces a semistable
    initial condition for such scenarios.
    """
    state = reference_state(mesh)
    asm = Assembler(mesh, models.energy, models.loading, models.dissipation)
    fp_inv = asm.fp_inverse(state.yp)
    scalar = asm.plastic_scalar(state.yp)
    poll = _poll_directions(len(mesh.nodes))
    y, _, _, _ = _descend_y(asm, state.y.values, fp_inv, scalar, 0.0, config, poll)
    return State(Field(y, mesh), state.yp)


def _initial_semistability_spot_check(initial, models, config):
    """Sampled semistability of the initial state at t = 0."""
    rng = np.random.default_rng(config.seed + 101)
    asm = Assembler(initial.mesh, models.energy, models.loading, models.dissipation)
    fp_inv = asm.fp_inverse(initial.yp)
    scalar = asm.plastic_scalar(initial.yp)
    base = float(asm.objective_batch(initial.y.values[None], fp_inv, scalar, 0.0)[0])
    diam = initial.mesh.diameter
    n = initial.y.values.shape[0]
    worst = 0.0
    for _ in range(config.perturbation_count):
        direction = rng.standard_normal((n, 2))
        direction /= np.linalg.norm(direction)
        for amp in (1e-3, 1e-2, 1e-1):
            trial = initial.y.values + amp * diam * direction
            val = float(asm.objective_batch(trial[None], fp_inv, scalar, 0.0)[0])
            worst = min(worst, val - base)
    tol = 1e-8 * (1.0 + abs(base))
    if worst < -tol:
        raise SolverFailure(
            f"initial state is not semistable at t = 0 (margin {worst:g})", knot=0
        )


def run_quasistatic(initial, grid, models, config=SolverConfig()):
    """Solve the incremental problem at every knot and record the trajectory.

    states[0] is the initial state (its semistability at t = 0 is spot
    checked unless disabled); delta accumulates the per-step dissipation
    increments; the uniform energy diagnostic sup E + Diss(0, T) is recorded
    against the configured ceiling.
    """
    report = initial.admissibility_report(det_tol=config.det_tolerance)
    if not report["ok"]:
        raise SolverFailure(f"initial state not admissible: {report}", knot=0)
    if config.check_initial_semistability:
        _initial_semistability_spot_check(initial, models, config)

    asm = Assembler(initial.mesh, models.energy, models.loading, models.dissipation)
    rng = np.random.default_rng(config.seed)

    knots = grid.knots
    states = [initial]
    energies = [total_energy(models.energy, models.loading, knots[0], initial)]
    increments = []
    delta = [0.0]
    infos = []
    for i in range(1, len(knots)):
        try:
            state, info = incremental_solve(
                states[-1], knots[i], models, config, rng=rng, assembler=asm
            )
        except ProjectionStall as exc:
            raise SolverFailure(f"projection stalled at knot {i}: {exc}", knot=i)
        inc = global_distance(states[-1].yp, state.yp, models.dissipation)
        states.append(state)
        infos.append(info)
        increments.append(inc)
        delta.append(delta[-1] + inc)
        energies.append(total_energy(models.energy, models.loading, knots[i], state))

    bound = float(max(e.total for e in energies) + delta[-1])
    bound_ok = math.isfinite(bound) and bound < config.energy_ceiling
    if not bound_ok:
        warnings.warn(f"uniform energy bound exceeded: {bound:g}")
    return Trajectory(
        grid=grid,
        states=states,
        energies=energies,
        dissipation_increments=increments,
        delta_accumulated=delta,
        energy_bound=bound,
        bound_ok=bound_ok,
        solve_infos=infos,
    )


# ---------------------------------------------------------------------------
# 1D single-material-point toy model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyStep:
    t: float
    ell: float
    f: float
    p: float
    dissipation: float
    runaway: bool


def _toy_objective(p, ell, p_prev):
    """Incremental objective after the exact inner minimization over f.

    With f = ell p^2 (stationarity of the quadratic part), the objective
    reduces to 0.5 (1 - ell^2) p^2 + |log p - log p_prev|.
    """
    return 0.5 * (1.0 - ell * ell) * p * p + abs(math.log(p) - math.log(p_prev))


def _golden_minimize(fn, lo, hi, tol=1e-8):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    x = (a + b) / 2.0
    return x, fn(x)


def run_1d_toy(lam, grid, p_bounds=(0.05, 20.0), search_resolution=1e-4):
    """Single-material-point incremental evolution with loading ell(t) = lam t.

    The inner minimization over the deformation strain f is exact
    (f = ell p^2); the plastic strain is found by grid search over p_bounds
    at the given resolution with golden-section refinement to 1e-8.  Ties
    within 1e-14 keep the incumbent p, so the elastic branch stays at
    exactly p = 1 below the activation threshold.  Box-boundary hits are
    flagged as plastic runaway: the reduced objective is unbounded below for
    |ell| > 1, so the box is what keeps the problem well posed there.
    """
    p_min, p_max = p_bounds
    if not 0.0 < p_min < 1.0 < p_max:
        raise ValueError("p_bounds must satisfy 0 < p_min < 1 < p_max")
    p_grid = np.arange(p_min, p_max + search_resolution, search_resolution)
    log_grid = np.log(p_grid)

    rows = []
    p_prev = 1.0
    for i, t in enumerate(grid.knots):
        ell = lam * t
        if i == 0:
            rows.append(ToyStep(t=float(t), ell=ell, f=ell * p_prev**2, p=p_prev,
                                dissipation=0.0, runaway=False))
            continue
        objs = 0.5 * (1.0 - ell * ell) * p_grid**2 + np.abs(log_grid - math.log(p_prev))
        k = int(np.argmin(objs))
        lo = max(p_min, p_grid[k] - search_resolution)
        hi = min(p_max, p_grid[k] + search_resolution)
        p_star, obj_star = _golden_minimize(
            lambda p: _toy_objective(p, ell, p_prev), lo, hi
        )
        for cand in (p_prev, 1.0, p_min, p_max):
            if p_min <= cand <= p_max and _toy_objective(cand, ell, p_prev) < obj_star:
                p_star, obj_star = cand, _toy_objective(cand, ell, p_prev)
        if _toy_objective(p_prev, ell, p_prev) <= obj_star + _ACCEPT_TOL:
            p_star = p_prev
        diss = abs(math.log(p_star) - math.log(p_prev))
        runaway = (p_star - p_min) <= 1e-6 * (1.0 + p_min) or (
            p_max - p_star
        ) <= 1e-6 * (1.0 + p_max)
        rows.append(ToyStep(t=float(t), ell=ell, f=ell * p_star**2, p=p_star,
                            dissipation=diss, runaway=runaway))
        p_prev = p_star
    return rows

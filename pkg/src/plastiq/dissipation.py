"""Rate-independent dissipation structure.

The rate potential is R(P, Pdot) = rho * ||Pdot P^{-1}||_F, which is convex,
positively 1-homogeneous in the rate and plastically indifferent by
construction.  The default one-step distance on SL(2) is

    D(F) = 2 rho log sigma_1(F),

with sigma_1 the largest singular value (sigma_1 >= 1 on SL(2)); the scalar
variant for the 1D toy is D(p) = rho |log p| without the isochoric
constraint.  This closed form gives D(I) = 0, isotropy, and exact
subadditivity through sigma_1(AB) <= sigma_1(A) sigma_1(B).  Whether it
coincides with the true path infimum generated by the Frobenius rate
potential is an open choice; `delta_estimate` reports a piecewise-geodesic
upper bound on that infimum instead of assuming anything.

A second registered density, "quadratic-polyconvex", is a genuinely
polyconvex alternative (a convex function of (F, cof F)); it trades the
closed-form path interpretation for verifiable minors-convexity.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import frobenius, mat_exp, mat_log_spd, polar_decompose
from .discretization import det2, inv2
from .errors import NonConvergenceWarning, NotIsochoric

__all__ = [
    "DissipationModel",
    "PathDiscretization",
    "rate_potential",
    "one_step_distance",
    "global_distance",
    "trajectory_dissipation",
    "delta_estimate",
    "dissipation_minors",
]

_KINDS = ("log-singular-values", "quadratic-polyconvex")

_SPIN = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class DissipationModel:
    """Yield scale rho and the one-step density choice."""

    yield_scale: float = 1.0
    density_kind: str = "log-singular-values"

    def __post_init__(self):
        if self.yield_scale <= 0.0:
            raise ValueError("yield_scale must be positive")
        if self.density_kind not in _KINDS:
            raise ValueError(f"density_kind must be one of {_KINDS}")


def _check_isochoric(f, det_tol, what):
    if det_tol is None:
        return
    d = f.shape[-1]
    if d == 1:
        return
    err = float(np.max(np.abs(det2(f) - 1.0))) if d == 2 else abs(
        np.linalg.det(f) - 1.0
    )
    if err > det_tol:
        raise NotIsochoric(f"{what} has |det - 1| = {err:g} > {det_tol:g}")


def rate_potential(p, pdot, model, det_tol=1e-8):
    """R(P, Pdot) = rho ||Pdot P^{-1}||_F; requires det P = 1 to det_tol."""
    p = np.asarray(p, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    _check_isochoric(p, det_tol, "rate_potential argument P")
    if p.shape[-1] == 1:
        l = pdot / p
    else:
        l = pdot @ inv2(p) if p.shape[-1] == 2 else pdot @ np.linalg.inv(p)
    return model.yield_scale * frobenius(l)


def _sigma1_batch(f):
    """Largest singular value of a (..., 2, 2) batch.

    Uses sigma_1 = (n_plus + n_minus) / 2 with the conformal and
    anticonformal seminorms n_plus = |(a+d, b-c)| and n_minus =
    |(a-d, b+c)|; unlike the discriminant form this does not lose half the
    digits near repeated singular values (rotations evaluate to 1 + O(eps)).
    """
    a, b = f[..., 0, 0], f[..., 0, 1]
    c, d = f[..., 1, 0], f[..., 1, 1]
    n_plus = np.hypot(a + d, b - c)
    n_minus = np.hypot(a - d, b + c)
    return (n_plus + n_minus) / 2.0


def _one_step_values(f_batch, model):
    """One-step distance on a (..., 2, 2) batch (no det check)."""
    if model.density_kind == "log-singular-values":
        s1 = _sigma1_batch(f_batch)
        return 2.0 * model.yield_scale * np.clip(np.log(s1), 0.0, None)
    n2f = np.sum(np.square(f_batch), axis=(-2, -1))
    cofs = np.empty_like(f_batch)
    cofs[..., 0, 0] = f_batch[..., 1, 1]
    cofs[..., 0, 1] = -f_batch[..., 1, 0]
    cofs[..., 1, 0] = -f_batch[..., 0, 1]
    cofs[..., 1, 1] = f_batch[..., 0, 0]
    n2h = np.sum(np.square(cofs), axis=(-2, -1))
    return model.yield_scale * np.clip((n2f + n2h) / 2.0 - 2.0, 0.0, None)


def one_step_distance(f, model, det_tol=1e-8):
    """D(F) for one plastic increment.

    d = 2: the model's density on SL(2) (det checked to det_tol);
    d = 1: rho |log p| with p > 0, no isochoric constraint (the 1D toy
    drops it).
    """
    f = np.asarray(f, dtype=float)
    if f.shape == (1, 1):
        p = f[0, 0]
        if p <= 0.0:
            raise ValueError("scalar plastic strain must be positive")
        return model.yield_scale * abs(math.log(p))
    if f.shape != (2, 2):
        raise ValueError("one_step_distance supports d = 1 and d = 2 only")
    _check_isochoric(f, det_tol, "one_step_distance argument")
    return float(_one_step_values(f, model))


def dissipation_minors(model, f, h):
    """The density as a function of the independent minors (F, cof F).

    For the default log-singular-value density the cofactor slot carries no
    independent information in 2D (cof is linear in F), so the value is
    2 rho log sigma_1(F) clipped at 0.  The quadratic-polyconvex density is
    a convex function of both slots.
    """
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    if model.density_kind == "log-singular-values":
        s1 = float(_sigma1_batch(f))
        return 2.0 * model.yield_scale * max(math.log(max(s1, 1e-300)), 0.0)
    n2 = float(np.sum(f * f) + np.sum(h * h))
    return model.yield_scale * max(n2 / 2.0 - 2.0, 0.0)


def global_distance(fp0_field, fp1_field, model, field_det_tol=1e-5):
    """Dissipation distance between plastic strain fields.

    Element-area-weighted sum of D(Fp1 Fp0^{-1}); both fields must be
    elementwise in SL(2) to field_det_tol (NotIsochoric carries the first
    offending element index).
    """
    mesh = fp0_field.mesh
    f0 = fp0_field.gradients()
    f1 = fp1_field.gradients()
    for name, g in (("first", f0), ("second", f1)):
        err = np.abs(det2(g) - 1.0)
        if float(np.max(err)) > field_det_tol:
            e = int(np.argmax(err))
            raise NotIsochoric(
                f"{name} plastic field has |det - 1| = {err[e]:g} on element {e}",
                element=e,
            )
    rel = np.einsum("eij,ejk->eik", f1, inv2(f0))
    return float(np.sum(mesh.areas * _one_step_values(rel, model)))


def trajectory_dissipation(plastic_fields, model, s_index, t_index):
    """Total dissipation between trajectory indices: sum of consecutive D.

    For piecewise-constant-in-time trajectories this equals the supremum
    over partitions, since refinements only insert zero terms.
    """
    if s_index > t_index:
        raise ValueError("s_index must be <= t_index")
    total = 0.0
    for i in range(s_index, t_index):
        total += global_distance(plastic_fields[i], plastic_fields[i + 1], model)
    return total


# ---------------------------------------------------------------------------
# path-discretized estimate of the dissipation distance Delta
# ---------------------------------------------------------------------------

@dataclass
class PathDiscretization:
    """Multiplicative path P_k = exp(A_k) P_{k-1} with trace-free increments."""

    increments: list = field(default_factory=list)

    @property
    def segment_count(self):
        return len(self.increments)

    def endpoint(self):
        p = np.eye(2)
        for a in self.increments:
            p = mat_exp(a) @ p
        return p

    def endpoint_error(self, target):
        return float(np.max(np.abs(self.endpoint() - np.asarray(target, dtype=float))))

    def cost(self, model):
        return model.yield_scale * sum(frobenius(a) for a in self.increments)


_TRACE_FREE_BASIS = [
    np.array([[1.0, 0.0], [0.0, -1.0]]),
    np.array([[0.0, 1.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [1.0, 0.0]]),
]


def _params_to_increments(x):
    out = []
    for k in range(len(x) // 3):
        a = sum(x[3 * k + i] * _TRACE_FREE_BASIS[i] for i in range(3))
        out.append(a)
    return out


def _closure_increments(residual):
    """Trace-free increments (SPD log, rotation log) whose path hits residual."""
    r, u = polar_decompose(residual)
    a_sym = mat_log_spd(u)
    theta = math.atan2(r[1, 0], r[0, 0])
    out = [a_sym]
    if abs(theta) > 1e-15:
        out.append(theta * _SPIN)
    return out


def _path_cost(x, target):
    incs = _params_to_increments(x)
    p = np.eye(2)
    cost = 0.0
    for a in incs:
        p = mat_exp(a) @ p
        cost += frobenius(a)
    residual = target @ np.linalg.inv(p)
    closure = _closure_increments(residual)
    cost += sum(frobenius(a) for a in closure)
    return cost, incs + closure


def delta_estimate(
    f_target,
    n_segments,
    model,
    max_iterations=5000,
    step_init=0.25,
    step_floor=1e-9,
    det_tol=1e-8,
    return_path=False,
):
    """Upper bound on Delta(I, F) by descent over piecewise-exponential paths.

    Paths are products of exponentials of trace-free increments, so they
    stay in SL(2) exactly; the last increments are eliminated as the SPD log
    of the residual plus a rotation completion, which pins the endpoint.
    Descent is derivative-free (cyclic coordinate steps with shrinking step
    size) and warm-started segment count by segment count, which makes the
    estimate nonincreasing in n_segments.  Emits NonConvergenceWarning when
    the iteration cap is reached before the step floor.
    """
    target = np.asarray(f_target, dtype=float)
    _check_isochoric(target, det_tol, "delta_estimate target")
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")

    x = np.zeros(0)
    best_cost, best_path = _path_cost(x, target)
    budget = max_iterations
    for stage in range(2, n_segments + 1):
        x = np.concatenate([x, np.zeros(3)])
        best_cost, best_path = _path_cost(x, target)
        step = step_init
        stage_budget = max_iterations // max(n_segments - 1, 1)
        used = 0
        while step >= step_floor and used < stage_budget and budget > 0:
            improved = False
            for i in range(len(x)):
                for sign in (1.0, -1.0):
                    trial = x.copy()
                    trial[i] += sign * step
                    cost, path = _path_cost(trial, target)
                    used += 1
                    budget -= 1
                    if cost < best_cost - 1e-15:
                        x = trial
                        best_cost, best_path = cost, path
                        improved = True
                        break
                    if used >= stage_budget or budget <= 0:
                        break
                if used >= stage_budget or budget <= 0:
                    break
            if not improved:
                step *= 0.5
        if step >= step_floor and (used >= stage_budget or budget <= 0):
            warnings.warn(
                f"delta_estimate hit the iteration cap at stage {stage}",
                NonConvergenceWarning,
            )
    value = model.yield_scale * best_cost
    if return_path:
        return value, PathDiscretization(best_path)
    return value

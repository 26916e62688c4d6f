"""Stored and loading energies.

The default densities are polyconvex and frame-indifferent:

    W_e(F) = 1/4 |F|^4 + 1/2 (det F - 1)^2        (elastic, q_e = 4)
    W_p(F) = 1/4 |F|^{q_p}                         (hardening, q_p = 4)

Both satisfy the two-sided q_e-growth / coercivity bounds with the published
constant c = 1/8.  Densities are pluggable through a small registry keyed by
name so the 1D toy model (quadratic densities) registers under the same
interface.

Loading is piecewise linear in time between knots; its rate is piecewise
constant with the right derivative used at knots.  The boundary penalty
integrates |y(x) - x| over the Dirichlet edges with midpoint quadrature.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import DET_TOLERANCE, det2, push_forward
from .errors import GrowthViolation, NotIsochoric

__all__ = [
    "DensitySpec",
    "EnergyModel",
    "Loading",
    "EnergyBreakdown",
    "we_eval",
    "wp_eval",
    "we_minors",
    "wp_minors",
    "growth_margins",
    "growth_audit",
    "load_pairing",
    "load_rate_pairing",
    "total_energy",
    "elastic_energy_lagrangian",
    "elastic_energy_eulerian",
    "boundary_penalty",
    "midpoint_convexity_probe",
]


# ---------------------------------------------------------------------------
# density registry
# ---------------------------------------------------------------------------

def _frob2(f):
    return np.sum(np.square(f), axis=(-2, -1))


def _quartic_elastic(f, params):
    q = params.get("exponent", 4.0)
    n2 = _frob2(f)
    if f.shape[-1] == 2:
        d = det2(f)
    else:
        d = f[..., 0, 0]
    return 0.25 * n2 ** (q / 2.0) + 0.5 * (d - 1.0) ** 2


def _quartic_elastic_minors(f, h, d, params):
    q = params.get("exponent", 4.0)
    return 0.25 * _frob2(f) ** (q / 2.0) + 0.5 * (d - 1.0) ** 2


def _quartic_plastic(f, params):
    q = params.get("exponent", 4.0)
    return 0.25 * _frob2(f) ** (q / 2.0)


def _quartic_plastic_minors(f, h, params):
    q = params.get("exponent", 4.0)
    return 0.25 * _frob2(f) ** (q / 2.0)


def _quadratic_1d(f, params):
    return 0.5 * _frob2(f)


def _quadratic_1d_minors(f, h, d, params):
    return 0.5 * _frob2(f)


_ELASTIC = {
    "quartic-polyconvex": (_quartic_elastic, _quartic_elastic_minors),
    "quadratic-1d": (_quadratic_1d, _quadratic_1d_minors),
}
_PLASTIC = {
    "quartic-polyconvex": (_quartic_plastic, _quartic_plastic_minors),
    "quadratic-1d": (_quadratic_1d, lambda f, h, p: 0.5 * _frob2(f)),
}


@dataclass(frozen=True)
class DensitySpec:
    """Named density with parameters, resolvable in the registry."""

    name: str = "quartic-polyconvex"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EnergyModel:
    """Growth exponents, density choices and boundary-penalty weight.

    Requires q_e > d and q_p > d(d - 1); growth_constant is the published
    two-sided growth constant for the elastic density.  A finite
    lipschitz_cap switches on the locking variant: the stored energy is
    +inf whenever any element's plastic gradient exceeds the cap in
    Frobenius norm, which forces uniformly Lipschitz plastic deformations.
    """

    dim: int = 2
    q_e: float = 4.0
    q_p: float = 4.0
    elastic: DensitySpec = field(default_factory=DensitySpec)
    plastic: DensitySpec = field(default_factory=DensitySpec)
    growth_constant: float = 0.125
    dirichlet_weight: float = 1.0
    lipschitz_cap: float | None = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.q_e <= self.dim:
            raise ValueError(f"q_e must exceed d = {self.dim}")
        if self.q_p <= self.dim * (self.dim - 1):
            raise ValueError(f"q_p must exceed d(d-1) = {self.dim * (self.dim - 1)}")
        if self.growth_constant <= 0.0:
            raise ValueError("growth_constant must be positive")
        if self.dirichlet_weight < 0.0:
            raise ValueError("dirichlet_weight must be nonnegative")
        if self.lipschitz_cap is not None and self.lipschitz_cap <= 0.0:
            raise ValueError("lipschitz_cap must be positive when set")
        if self.elastic.name not in _ELASTIC:
            raise ValueError(f"unknown elastic density {self.elastic.name!r}")
        if self.plastic.name not in _PLASTIC:
            raise ValueError(f"unknown plastic density {self.plastic.name!r}")

    @classmethod
    def default_2d(cls, dirichlet_weight=1.0):
        return cls(
            elastic=DensitySpec("quartic-polyconvex", {"exponent": 4.0}),
            plastic=DensitySpec("quartic-polyconvex", {"exponent": 4.0}),
            dirichlet_weight=dirichlet_weight,
        )

    @classmethod
    def toy_1d(cls):
        return cls(
            dim=1,
            q_e=2.0,
            q_p=2.0,
            elastic=DensitySpec("quadratic-1d"),
            plastic=DensitySpec("quadratic-1d"),
            growth_constant=0.25,
        )


def we_eval(model, f):
    """Elastic density at one deformation gradient (or a batch)."""
    fn, _ = _ELASTIC[model.elastic.name]
    return fn(np.asarray(f, dtype=float), model.elastic.params)


def we_minors(model, f, h, d):
    """Polyconvex structure function of the elastic density on (F, cof F, det F)."""
    _, fn = _ELASTIC[model.elastic.name]
    return fn(np.asarray(f, dtype=float), h, d, model.elastic.params)


def wp_eval(model, fp, det_tol=DET_TOLERANCE):
    """Hardening density; requires |det Fp - 1| <= det_tol unless d = 1."""
    fp = np.asarray(fp, dtype=float)
    if model.dim == 2 and det_tol is not None:
        err = np.max(np.abs(det2(fp) - 1.0))
        if err > det_tol:
            raise NotIsochoric(f"plastic strain has |det - 1| = {err:g} > {det_tol:g}")
    fn, _ = _PLASTIC[model.plastic.name]
    return fn(fp, model.plastic.params)


def wp_minors(model, f, h):
    """Polyconvex structure function of the hardening density on (F, cof F)."""
    _, fn = _PLASTIC[model.plastic.name]
    return fn(np.asarray(f, dtype=float), h, model.plastic.params)


# ---------------------------------------------------------------------------
# growth audit
# ---------------------------------------------------------------------------

def growth_margins(model, f):
    """(lower, upper) growth-bound margins for the elastic density at F.

    lower = W_e(F) - (c |F|^{q_e} - 1/c), upper = (1/c)(1 + |F|^{q_e}) - W_e(F);
    both must be nonnegative.
    """
    c = model.growth_constant
    nf = math.sqrt(float(_frob2(np.asarray(f, dtype=float))))
    w = float(we_eval(model, f))
    lower = w - (c * nf**model.q_e - 1.0 / c)
    upper = (1.0 / c) * (1.0 + nf**model.q_e) - w
    return lower, upper


def growth_audit(model, samples, seed=0):
    """Audit the elastic growth sandwich and the plastic coercivity bound.

    Evaluates at `samples` random matrices with Frobenius norm log-uniform
    in [1e-3, 1e3] (elastic, general matrices; plastic, SL(d) matrices with
    log-uniform largest singular value).  Raises GrowthViolation at the
    first offending matrix; otherwise returns the worst margins.
    """
    from .algebra import random_rotation

    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    d = model.dim
    c = model.growth_constant
    worst_lower = math.inf
    worst_upper = math.inf
    worst_plastic = math.inf
    for _ in range(samples):
        direction = rng.standard_normal((d, d))
        direction /= math.sqrt(float(_frob2(direction)))
        scale = 10.0 ** rng.uniform(-3.0, 3.0)
        f = scale * direction
        lower, upper = growth_margins(model, f)
        worst_lower = min(worst_lower, lower)
        worst_upper = min(worst_upper, upper)
        if lower < 0.0 or upper < 0.0:
            raise GrowthViolation(
                f"elastic growth bound violated (lower {lower:g}, upper {upper:g})",
                matrix=f,
            )
        if d == 2:
            s = 10.0 ** rng.uniform(0.0, 3.0)
            fp = random_rotation(rng, 2) @ np.diag([s, 1.0 / s]) @ random_rotation(rng, 2)
            wp = float(wp_eval(model, fp, det_tol=None))
            nfp = math.sqrt(float(_frob2(fp)))
            margin = wp - (c * nfp**model.q_p - 1.0 / c)
            worst_plastic = min(worst_plastic, margin)
            if margin < 0.0:
                raise GrowthViolation(
                    f"plastic coercivity bound violated (margin {margin:g})", matrix=fp
                )
    return {
        "samples": samples,
        "worst_lower": worst_lower,
        "worst_upper": worst_upper,
        "worst_plastic": worst_plastic,
        "ok": True,
    }


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

@dataclass
class Loading:
    """Time-indexed nodal body force and boundary traction samples.

    Samples are (n_nodes, 2) arrays at each time knot; values interpolate
    piecewise linearly in time and the rate is the piecewise-constant right
    derivative (left derivative on the last interval end).
    """

    time_knots: np.ndarray
    body_samples: np.ndarray  # (K, n, 2)
    traction_samples: np.ndarray  # (K, n, 2); paired on Gamma_N only
    mesh: object

    def __post_init__(self):
        self.time_knots = np.asarray(self.time_knots, dtype=float)
        self.body_samples = np.asarray(self.body_samples, dtype=float)
        self.traction_samples = np.asarray(self.traction_samples, dtype=float)
        if len(self.time_knots) < 2 or np.any(np.diff(self.time_knots) <= 0):
            raise ValueError("time_knots must be at least two strictly increasing values")
        n = len(self.mesh.nodes)
        k = len(self.time_knots)
        if self.body_samples.shape != (k, n, 2):
            raise ValueError("body_samples must have shape (knots, nodes, 2)")
        if self.traction_samples.shape != (k, n, 2):
            raise ValueError("traction_samples must have shape (knots, nodes, 2)")

    @property
    def horizon(self):
        return float(self.time_knots[-1])

    @classmethod
    def zero(cls, mesh, horizon=1.0):
        n = len(mesh.nodes)
        z = np.zeros((2, n, 2))
        return cls(np.array([0.0, horizon]), z, z.copy(), mesh)

    @classmethod
    def body_ramp(cls, mesh, vector, horizon=1.0):
        """f(t, x) = t * vector, no traction."""
        n = len(mesh.nodes)
        body = np.zeros((2, n, 2))
        body[1] = horizon * np.asarray(vector, dtype=float)
        return cls(np.array([0.0, horizon]), body, np.zeros((2, n, 2)), mesh)

    @classmethod
    def piecewise(cls, mesh, knots, scales, body_vector=None, traction_vector=None):
        """Spatially constant loading with per-knot scale factors."""
        n = len(mesh.nodes)
        knots = np.asarray(knots, dtype=float)
        scales = np.asarray(scales, dtype=float)
        shape = (len(knots), n, 2)

        def expand(vector):
            if vector is None:
                return np.zeros(shape)
            vec = np.asarray(vector, dtype=float)
            return (scales[:, None, None] * vec[None, None, :] * np.ones((1, n, 1))).reshape(shape)

        return cls(knots, expand(body_vector), expand(traction_vector), mesh)

    def _bracket(self, t):
        knots = self.time_knots
        if t < knots[0] - 1e-12 or t > knots[-1] + 1e-12:
            raise ValueError(f"time {t} outside loading horizon [{knots[0]}, {knots[-1]}]")
        i = int(np.searchsorted(knots, t, side="right")) - 1
        return min(max(i, 0), len(knots) - 2)

    def body_at(self, t):
        i = self._bracket(t)
        t0, t1 = self.time_knots[i], self.time_knots[i + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.body_samples[i] + w * self.body_samples[i + 1]

    def traction_at(self, t):
        i = self._bracket(t)
        t0, t1 = self.time_knots[i], self.time_knots[i + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.traction_samples[i] + w * self.traction_samples[i + 1]

    def body_rate_at(self, t):
        i = self._bracket(t)
        dt = self.time_knots[i + 1] - self.time_knots[i]
        return (self.body_samples[i + 1] - self.body_samples[i]) / dt

    def traction_rate_at(self, t):
        i = self._bracket(t)
        dt = self.time_knots[i + 1] - self.time_knots[i]
        return (self.traction_samples[i + 1] - self.traction_samples[i]) / dt


def _pairing(loading, body, traction, y_values):
    mesh = loading.mesh
    total = float(np.sum(body * (mesh.mass_matrix @ y_values)))
    if len(mesh.gamma_N):
        mn = mesh.edge_mass_matrix(mesh.gamma_N)
        total += float(np.sum(traction * (mn @ y_values)))
    return total


def load_pairing(loading, t, y_field):
    """<l(t), y>: body plus traction pairing, exact for affine fields."""
    values = y_field.values if hasattr(y_field, "values") else np.asarray(y_field)
    return _pairing(loading, loading.body_at(t), loading.traction_at(t), values)


def load_rate_pairing(loading, t, y_field):
    """<dl/dt (t), y> with the piecewise-constant loading rate."""
    values = y_field.values if hasattr(y_field, "values") else np.asarray(y_field)
    return _pairing(loading, loading.body_rate_at(t), loading.traction_rate_at(t), values)


# ---------------------------------------------------------------------------
# total energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    plastic: float
    boundary: float
    load: float

    @property
    def total(self):
        return self.elastic + self.plastic + self.boundary - self.load

    def to_dict(self):
        return {
            "elastic": self.elastic,
            "plastic": self.plastic,
            "boundary": self.boundary,
            "load": self.load,
            "total": self.total,
        }


def elastic_energy_lagrangian(model, state):
    """Reference-configuration assembly: sum of area * W_e(grad y (grad yp)^-1)."""
    fe = state.fe()
    return float(np.sum(state.mesh.areas * we_eval(model, fe)))


def elastic_energy_eulerian(model, state):
    """Intermediate-configuration assembly over the pushed-forward mesh."""
    image, elastic_field = push_forward(state)
    grads = elastic_field.gradients()
    return float(np.sum(image.areas * we_eval(model, grads)))


def plastic_energy(model, state, det_tol=DET_TOLERANCE):
    fp = state.fp()
    if exceeds_lipschitz_cap(model, fp):
        return math.inf
    wp = wp_eval(model, fp, det_tol=det_tol)
    return float(np.sum(state.mesh.areas * wp))


def exceeds_lipschitz_cap(model, fp):
    """True when the locking cap is set and some element gradient exceeds it."""
    if model.lipschitz_cap is None:
        return False
    return bool(np.max(_frob2(fp)) > model.lipschitz_cap**2)


def boundary_penalty(model, state):
    """dirichlet_weight * integral over Gamma_D of |y(x) - x|, midpoint rule."""
    mesh = state.mesh
    edges = mesh.gamma_D
    mid_ref = mesh.edge_midpoints(edges)
    mid_val = 0.5 * (state.y.values[edges[:, 0]] + state.y.values[edges[:, 1]])
    lengths = mesh.edge_lengths(edges)
    return model.dirichlet_weight * float(
        np.sum(lengths * np.linalg.norm(mid_val - mid_ref, axis=1))
    )


def total_energy(model, loading, t, state, det_tol=DET_TOLERANCE):
    """Full energy breakdown at time t: elastic + plastic + boundary - load."""
    return EnergyBreakdown(
        elastic=elastic_energy_lagrangian(model, state),
        plastic=plastic_energy(model, state, det_tol=det_tol),
        boundary=boundary_penalty(model, state),
        load=load_pairing(loading, t, state.y),
    )


# ---------------------------------------------------------------------------
# polyconvexity spot check
# ---------------------------------------------------------------------------

def midpoint_convexity_probe(minors_fn, endpoint_sampler, segments, seed=0):
    """Worst midpoint-convexity violation of a minors-space function.

    endpoint_sampler(rng) must return a minors tuple; segments are formed
    from independent endpoint pairs and the function is evaluated at the
    componentwise midpoint.  Returns max over segments of
    f(mid) - (f(a) + f(b)) / 2  (<= 0 everywhere for a convex function).
    """
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_pair = None
    for _ in range(segments):
        a = endpoint_sampler(rng)
        b = endpoint_sampler(rng)
        mid = tuple((x + y) / 2.0 for x, y in zip(a, b))
        gap = float(minors_fn(*mid)) - 0.5 * (
            float(minors_fn(*a)) + float(minors_fn(*b))
        )
        if gap > worst:
            worst = gap
            worst_pair = (a, b)
    return worst, worst_pair

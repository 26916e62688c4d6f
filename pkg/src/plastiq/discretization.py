"""Reference triangulations and piecewise-affine deformation fields.

A deformation field stores one 2-vector per mesh node; its gradient is
constant on each triangle.  Plastic deformations are ordinary nodal fields,
so their gradients are automatically curl-free: compatibility is structural,
not a separate check.  The module also provides the isochoric projection
used to keep per-element determinants at 1, admissibility reporting, the
push-forward to the intermediate configuration, and the Holder chain-rule
audit.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CNViolation, DegenerateElement, ProjectionStall

DET_TOLERANCE = 1e-6

_REF_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def det2(f):
    """Determinant of a batch (..., 2, 2)."""
    return f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]


def inv2(f):
    """Inverse of a batch (..., 2, 2) of invertible matrices."""
    d = det2(f)
    out = np.empty_like(f)
    out[..., 0, 0] = f[..., 1, 1]
    out[..., 0, 1] = -f[..., 0, 1]
    out[..., 1, 0] = -f[..., 1, 0]
    out[..., 1, 1] = f[..., 0, 0]
    return out / d[..., None, None]


class Mesh:
    """Conforming triangulation with a Dirichlet/Neumann boundary split.

    nodes: (n, 2) float array; triangles: (E, 3) int array, positively
    oriented; gamma_D / gamma_N: (k, 2) int arrays of boundary edges.
    Every boundary edge must appear in exactly one of the two parts and
    gamma_D must be non-empty.
    """

    def __init__(self, nodes, triangles, gamma_D, gamma_N):
        self.nodes = np.asarray(nodes, dtype=float)
        self.triangles = np.asarray(triangles, dtype=int)
        self.gamma_D = np.asarray(gamma_D, dtype=int).reshape(-1, 2)
        self.gamma_N = np.asarray(gamma_N, dtype=int).reshape(-1, 2)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ValueError("nodes must have shape (n, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must have shape (E, 3)")
        self._validate()

    # -- validation --------------------------------------------------------

    def _validate(self):
        n = len(self.nodes)
        if self.triangles.min(initial=0) < 0 or self.triangles.max(initial=-1) >= n:
            raise ValueError("triangle node index out of range")
        if np.any(self.signed_areas <= 0.0):
            bad = int(np.argmin(self.signed_areas))
            raise DegenerateElement(
                f"triangle {bad} is degenerate or negatively oriented", element=bad
            )
        boundary = self._boundary_edge_set()
        declared_d = {self._edge_key(e) for e in self.gamma_D}
        declared_n = {self._edge_key(e) for e in self.gamma_N}
        if declared_d & declared_n:
            raise ValueError("gamma_D and gamma_N overlap")
        if declared_d | declared_n != boundary:
            raise ValueError("gamma_D and gamma_N must partition the boundary edges")
        if not declared_d:
            raise ValueError("gamma_D must be non-empty")

    @staticmethod
    def _edge_key(edge):
        a, b = int(edge[0]), int(edge[1])
        return (a, b) if a < b else (b, a)

    def _boundary_edge_set(self):
        count = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = self._edge_key((a, b))
                count[key] = count.get(key, 0) + 1
                if count[key] > 2:
                    raise ValueError(f"edge {key} shared by more than two triangles")
        return {key for key, c in count.items() if c == 1}

    # -- cached geometry ---------------------------------------------------

    @cached_property
    def signed_areas(self):
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    @cached_property
    def areas(self):
        return np.abs(self.signed_areas)

    @property
    def total_area(self):
        return float(np.sum(self.areas))

    @cached_property
    def shape_gradients(self):
        """(E, 3, 2) array G with grad v = sum_a v[tri[e,a]] (x) G[e,a]."""
        p = self.nodes[self.triangles]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
        return np.einsum("aj,eji->eai", _REF_GRADS, inv2(jac))

    @cached_property
    def mass_matrix(self):
        """Dense (n, n) consistent mass matrix (exact for affine x affine)."""
        n = len(self.nodes)
        m = np.zeros((n, n))
        local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
        for e, tri in enumerate(self.triangles):
            m[np.ix_(tri, tri)] += self.areas[e] * local
        return m

    def edge_mass_matrix(self, edges):
        """Dense (n, n) boundary mass matrix for the given edge list."""
        n = len(self.nodes)
        m = np.zeros((n, n))
        local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
        for a, b in np.asarray(edges, dtype=int).reshape(-1, 2):
            length = float(np.linalg.norm(self.nodes[b] - self.nodes[a]))
            m[np.ix_([a, b], [a, b])] += length * local
        return m

    def edge_lengths(self, edges):
        e = np.asarray(edges, dtype=int).reshape(-1, 2)
        return np.linalg.norm(self.nodes[e[:, 1]] - self.nodes[e[:, 0]], axis=1)

    def edge_midpoints(self, edges):
        e = np.asarray(edges, dtype=int).reshape(-1, 2)
        return 0.5 * (self.nodes[e[:, 0]] + self.nodes[e[:, 1]])

    @property
    def diameter(self):
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    # -- I/O -----------------------------------------------------------------

    def to_json_dict(self):
        return {
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "gamma_D": self.gamma_D.tolist(),
            "gamma_N": self.gamma_N.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data):
        return cls(data["nodes"], data["triangles"], data["gamma_D"], data["gamma_N"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def unit_square(n, dirichlet="left"):
    """Structured triangulation of the unit square with 2 n^2 triangles.

    dirichlet selects which boundary edges form Gamma_D: "left", "all",
    or "bottom".  The rest is Gamma_N.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    nodes = np.array([(x, y) for y in xs for x in xs])

    def idx(ix, iy):
        return iy * (n + 1) + ix

    tris = []
    for iy in range(n):
        for ix in range(n):
            a = idx(ix, iy)
            b = idx(ix + 1, iy)
            c = idx(ix + 1, iy + 1)
            d = idx(ix, iy + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))

    def edge_on(pred):
        out = []
        for iy in range(n):
            for side, pair in (
                ("left", (idx(0, iy), idx(0, iy + 1))),
                ("right", (idx(n, iy), idx(n, iy + 1))),
            ):
                if pred(side):
                    out.append(pair)
        for ix in range(n):
            for side, pair in (
                ("bottom", (idx(ix, 0), idx(ix + 1, 0))),
                ("top", (idx(ix, n), idx(ix + 1, n))),
            ):
                if pred(side):
                    out.append(pair)
        return out

    choices = {"left", "all", "bottom"}
    if dirichlet not in choices:
        raise ValueError(f"dirichlet must be one of {sorted(choices)}")
    if dirichlet == "all":
        gamma_d = edge_on(lambda s: True)
        gamma_n = []
    else:
        gamma_d = edge_on(lambda s: s == dirichlet)
        gamma_n = edge_on(lambda s: s != dirichlet)
    return Mesh(nodes, tris, gamma_d, gamma_n)


@dataclass
class Field:
    """Piecewise-affine vector field given by nodal values (n, 2)."""

    values: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.mesh.nodes), 2):
            raise ValueError(
                f"field values must have shape {(len(self.mesh.nodes), 2)}"
            )

    @classmethod
    def identity(cls, mesh):
        return cls(mesh.nodes.copy(), mesh)

    def gradients(self):
        """All element gradients as an (E, 2, 2) array."""
        gathered = self.values[self.mesh.triangles]
        return np.einsum("eai,eaj->eij", gathered, self.mesh.shape_gradients)

    def nodal_mean(self):
        return self.values.mean(axis=0)

    def centered(self):
        return Field(self.values - self.nodal_mean(), self.mesh)

    def copy(self):
        return Field(self.values.copy(), self.mesh)


def gradient(field, element):
    """Constant gradient of the affine map on one element."""
    if element < 0 or element >= len(field.mesh.triangles):
        raise IndexError("element index out of range")
    tri = field.mesh.triangles[element]
    return np.einsum(
        "ai,aj->ij", field.values[tri], field.mesh.shape_gradients[element]
    )


@dataclass
class State:
    """Admissible pair (total deformation y, plastic deformation yp).

    The derived per-element strains are F = grad y, Fp = grad yp and
    Fe = F Fp^{-1}; the chain rule F = Fe Fp holds by construction.
    """

    y: Field
    yp: Field

    def __post_init__(self):
        if self.y.mesh is not self.yp.mesh:
            raise ValueError("y and yp must live on the same mesh")

    @property
    def mesh(self):
        return self.y.mesh

    def f(self):
        return self.y.gradients()

    def fp(self):
        return self.yp.gradients()

    def fe(self):
        return np.einsum("eij,ejk->eik", self.f(), inv2(self.fp()))

    def plastic_dets(self):
        return det2(self.fp())

    def copy(self):
        return State(self.y.copy(), self.yp.copy())

    def admissibility_report(self, det_tol=DET_TOLERANCE, mean_tol=1e-10):
        """Check the state-space conditions; the CN test is reported lazily.

        Returns a dict with per-condition pass flags and margins.  The
        Ciarlet-Necas test is imported here to keep module layering simple.
        """
        from .geometry import ciarlet_necas_check

        dets = self.plastic_dets()
        det_err = float(np.max(np.abs(dets - 1.0)))
        mean_err = float(np.max(np.abs(self.yp.nodal_mean())))
        cn = ciarlet_necas_check(self.yp, self.mesh)
        return {
            "det_ok": det_err <= det_tol,
            "det_error": det_err,
            "mean_ok": mean_err <= mean_tol,
            "mean_error": mean_err,
            "cn_ok": cn.passed,
            "cn_margin": cn.margin,
            "ok": det_err <= det_tol and mean_err <= mean_tol and cn.passed,
        }


def reference_state(mesh):
    """The stress-history-free state: yp = id (mean-centered), y = id."""
    return State(Field.identity(mesh), Field.identity(mesh).centered())


def elastic_strain(state, element):
    """Per-element elastic strain grad y (grad yp)^{-1} via the exact 2x2 inverse."""
    f = gradient(state.y, element)
    fp = gradient(state.yp, element)
    d = det2(fp)
    if abs(d) < 1e-14:
        raise DegenerateElement("plastic gradient is singular", element=element)
    return f @ inv2(fp)


def push_forward(state):
    """Image mesh under yp plus the elastic field on it.

    The image mesh keeps the reference connectivity with nodes yp(node);
    the elastic field carries nodal values y(node), so its per-element
    gradient equals the elastic strain (affine composition).  Requires the
    Ciarlet-Necas condition with nonnegative margin.
    """
    from .geometry import ciarlet_necas_check

    cn = ciarlet_necas_check(state.yp, state.mesh)
    if not cn.passed:
        raise CNViolation(
            f"push-forward needs the Ciarlet-Necas condition (margin {cn.margin:g})"
        )
    image = Mesh(
        state.yp.values.copy(),
        state.mesh.triangles.copy(),
        state.mesh.gamma_D.copy(),
        state.mesh.gamma_N.copy(),
    )
    return image, Field(state.y.values.copy(), image)


def chain_estimate_audit(state, q=None, q_e=4.0, q_p=4.0, slack=1e-10):
    """Audit the Holder chain estimate on one state.

    Compares the L^q integral of grad y against the product of the Eulerian
    L^{q_e} norm of the elastic strain (image-area weighted) and the L^{q_p}
    norm of grad yp, with 1/q = 1/q_e + 1/q_p.
    """
    if q is None:
        q = 1.0 / (1.0 / q_e + 1.0 / q_p)
    areas = state.mesh.areas
    f = state.f()
    fp = state.fp()
    fe = state.fe()
    image_areas = areas * det2(fp)
    norm_f = np.sqrt(np.sum(f * f, axis=(1, 2)))
    norm_fe = np.sqrt(np.sum(fe * fe, axis=(1, 2)))
    norm_fp = np.sqrt(np.sum(fp * fp, axis=(1, 2)))
    lhs = float(np.sum(areas * norm_f**q))
    int_e = float(np.sum(image_areas * norm_fe**q_e))
    int_p = float(np.sum(areas * norm_fp**q_p))
    rhs = int_e ** (q / q_e) * int_p ** (q / q_p)
    ok = lhs <= rhs * (1.0 + slack)
    return {
        "q": q,
        "q_e": q_e,
        "q_p": q_p,
        "lhs": lhs,
        "rhs": rhs,
        "margin": rhs - lhs,
        "ok": ok,
    }


def project_isochoric(yp, det_tol=DET_TOLERANCE, max_sweeps=50):
    """Project a plastic field onto per-element det = 1 and zero nodal mean.

    Gauss-Seidel over elements: each element's gradient is rescaled toward
    unit determinant and realized by the least-squares nodal displacement.
    Raises ProjectionStall when max |det - 1| stays above det_tol after
    max_sweeps sweeps.  Requires starting determinants in [0.2, 5].
    """
    mesh = yp.mesh
    values = yp.values.copy()
    grads = mesh.shape_gradients
    tris = mesh.triangles

    start = det2(Field(values, mesh).gradients())
    if np.any(start < 0.2) or np.any(start > 5.0):
        raise ProjectionStall(
            f"initial determinants outside [0.2, 5]: range "
            f"[{start.min():g}, {start.max():g}]"
        )

    # least-norm nodal lift of a gradient correction: G (G^T G)^{-1}, (E,3,2)
    normal = np.einsum("eai,eaj->eij", grads, grads)
    lift = np.einsum("eai,eij->eaj", grads, np.linalg.inv(normal))
    n_dof = values.size

    def all_grads(v):
        return np.einsum("eai,eaj->eij", v[tris], grads)

    done = False
    for _ in range(max_sweeps):
        # kill the uniform mode first: rescale so the mean determinant is 1
        image_area = float(np.sum(mesh.areas * det2(all_grads(values))))
        values *= math.sqrt(mesh.total_area / image_area)
        # element-wise Gauss-Seidel pass
        for e in range(len(tris)):
            tri = tris[e]
            f = np.einsum("ai,aj->ij", values[tri], grads[e])
            d = det2(f)
            if abs(d - 1.0) <= 0.25 * det_tol:
                continue
            delta_f = f / math.sqrt(d) - f
            # delta v[a, i] = lift[a, :] . delta_f[i, :]
            values[tri] += np.einsum("aj,ij->ai", lift[e], delta_f)
        # global least-norm correction of all det constraints at once;
        # pure element sweeps need far more than 50 sweeps on rough fields
        fs = all_grads(values)
        residual = det2(fs) - 1.0
        if float(np.max(np.abs(residual))) <= det_tol:
            done = True
            break
        cofs = np.empty_like(fs)
        cofs[:, 0, 0] = fs[:, 1, 1]
        cofs[:, 0, 1] = -fs[:, 1, 0]
        cofs[:, 1, 0] = -fs[:, 0, 1]
        cofs[:, 1, 1] = fs[:, 0, 0]
        jac = np.zeros((len(tris), n_dof))
        rows = np.einsum("eij,eaj->eai", cofs, grads)  # d det / d v[tri[a], i]
        for a in range(3):
            cols = 2 * tris[:, a]
            np.add.at(jac, (np.arange(len(tris)), cols), rows[:, a, 0])
            np.add.at(jac, (np.arange(len(tris)), cols + 1), rows[:, a, 1])
        delta, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        values += delta.reshape(values.shape)
        if float(np.max(np.abs(det2(all_grads(values)) - 1.0))) <= det_tol:
            done = True
            break
    if not done:
        worst = float(np.max(np.abs(det2(all_grads(values)) - 1.0)))
        raise ProjectionStall(
            f"projection stalled at max |det - 1| = {worst:g} > {det_tol:g}"
        )
    values -= values.mean(axis=0)
    return Field(values, mesh)


def random_admissible_state(mesh, rng, shear_scale=0.6, y_scale=0.25):
    """Random admissible state with exactly isochoric plastic strain.

    The plastic field applies a per-strip simple shear whose kink levels sit
    on the mesh's node coordinate levels (so every element gradient is
    exactly a rank-one shear, as on the structured unit square), composed
    with a global shear pair and a rotation.  Per-element det grad yp = 1
    then holds to machine precision, so the state passes admissibility with
    margins far below every audit tolerance.  The total deformation is a
    smooth random low-order polynomial field.
    """
    z = mesh.nodes.copy()
    axis = int(rng.integers(0, 2))
    other = 1 - axis
    coords = np.unique(z[:, axis])
    slopes = rng.uniform(-shear_scale, shear_scale, size=max(len(coords) - 1, 1))
    prof = np.zeros(len(coords))
    for i in range(1, len(coords)):
        prof[i] = prof[i - 1] + slopes[i - 1] * (coords[i] - coords[i - 1])
    z[:, other] += np.interp(z[:, axis], coords, prof)
    # global exact-SL(2) shear pair plus a rotation
    a = rng.uniform(-0.4, 0.4)
    b = rng.uniform(-0.4, 0.4)
    z = z @ np.array([[1.0, 0.0], [a, 1.0]]).T
    z = z @ np.array([[1.0, b], [0.0, 1.0]]).T
    theta = rng.uniform(0.0, 2.0 * math.pi)
    c, s = math.cos(theta), math.sin(theta)
    z = z @ np.array([[c, -s], [s, c]]).T
    z -= z.mean(axis=0)
    yp = Field(z, mesh)

    x = mesh.nodes
    coeffs = rng.uniform(-y_scale, y_scale, size=(2, 6))
    basis = np.stack(
        [
            np.ones(len(x)),
            x[:, 0],
            x[:, 1],
            x[:, 0] * x[:, 1],
            x[:, 0] ** 2,
            x[:, 1] ** 2,
        ],
        axis=1,
    )
    y_values = x + basis @ coeffs.T
    return State(Field(y_values, mesh), yp)

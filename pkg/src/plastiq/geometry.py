"""Admissibility geometry.

Hausdorff distance between sampled compact sets, the Ciarlet-Necas
injectivity test for discrete plastic deformations (image-union area versus
reference area), and a sampled verifier for the two curve conditions that
define (epsilon, delta)-domains.

The Jones verifier is honest about what sampling can certify: the length
condition is checked against the exact shortest interior path (visibility
graph over polygon vertices), so a failure there is definitive, while a
failure of the distance condition on that particular curve is only
inconclusive because the definition quantifies existentially over curves.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import cKDTree
from shapely.geometry import LineString, Point
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import unary_union

from .errors import (
    DegenerateElement,
    EmptySet,
    InvalidDelta,
    InvalidEpsilon,
)

__all__ = [
    "Polygon",
    "JonesReport",
    "CNReport",
    "hausdorff",
    "ciarlet_necas_check",
    "jones_verify",
    "hausdorff_convergence_probe",
    "slit_square",
    "sample_polygon",
]


class Polygon:
    """Simple polygon with counterclockwise vertices.

    Simplicity is verified by a pairwise proper-intersection sweep at
    construction; the signed area must be positive.
    """

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("vertices must have shape (m >= 3, 2)")
        self.vertices = v
        if self.signed_area() <= 0.0:
            raise ValueError("polygon must be counterclockwise (positive area)")
        self._check_simple()
        self.shape = ShapelyPolygon(v)

    def signed_area(self):
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))

    def _check_simple(self):
        v = self.vertices
        m = len(v)
        edges = [(v[i], v[(i + 1) % m]) for i in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                adjacent = j == i + 1 or (i == 0 and j == m - 1)
                if adjacent:
                    continue
                if _segments_properly_intersect(*edges[i], *edges[j]):
                    raise ValueError(f"polygon edges {i} and {j} intersect")

    @property
    def diameter(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def contains(self, point):
        return self.shape.covers(Point(point))

    def boundary_distance(self, point):
        return float(self.shape.exterior.distance(Point(point)))


def _segments_properly_intersect(a, b, c, d):
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0.0) and (o3 * o4 < 0.0)


def slit_square(width=0.01, depth=0.9):
    """Unit square with a vertical slit of the given width cut from the top.

    The slit reaches down to y = 1 - depth, producing the U-shaped domain
    used to exercise definitive length-condition failures.
    """
    if not 0.0 < width < 1.0 or not 0.0 < depth < 1.0:
        raise ValueError("width and depth must lie in (0, 1)")
    lo = 0.5 - width / 2.0
    hi = 0.5 + width / 2.0
    floor = 1.0 - depth
    return Polygon(
        [
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (hi, 1.0),
            (hi, floor),
            (lo, floor),
            (lo, 1.0),
            (0.0, 1.0),
        ]
    )


def sample_polygon(poly, spacing):
    """Boundary plus interior samples of a polygon at the given spacing."""
    pts = []
    v = poly.vertices
    m = len(v)
    for i in range(m):
        a, b = v[i], v[(i + 1) % m]
        steps = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
        for k in range(steps):
            pts.append(a + (b - a) * (k / steps))
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    xs = np.arange(lo[0], hi[0] + spacing / 2, spacing)
    ys = np.arange(lo[1], hi[1] + spacing / 2, spacing)
    grid = np.array([(x, y) for x in xs for y in ys])
    if len(grid):
        inside = shapely.contains_xy(poly.shape, grid[:, 0], grid[:, 1])
        pts.extend(grid[inside])
    return np.asarray(pts)


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------

def hausdorff(x, y):
    """Hausdorff distance between two finite samplings of compact sets.

    Computes the max of the two directed sup-of-nearest-distance values,
    exactly on the given samples.
    """
    xa = np.asarray(x, dtype=float).reshape(-1, 2)
    ya = np.asarray(y, dtype=float).reshape(-1, 2)
    if len(xa) == 0 or len(ya) == 0:
        raise EmptySet("hausdorff requires non-empty point sets")
    d_xy = float(np.max(cKDTree(ya).query(xa)[0]))
    d_yx = float(np.max(cKDTree(xa).query(ya)[0]))
    return max(d_xy, d_yx)


# ---------------------------------------------------------------------------
# Ciarlet-Necas check
# ---------------------------------------------------------------------------

@dataclass
class CNReport:
    passed: bool
    margin: float
    union_area: float
    reference_area: float

    def to_dict(self):
        return {
            "passed": self.passed,
            "margin": self.margin,
            "union_area": self.union_area,
            "reference_area": self.reference_area,
        }


def ciarlet_necas_check(yp_field, mesh, area_tol=1e-8):
    """Compare the area of the union of image triangles with the domain area.

    margin = area(yp(Omega)) - area(Omega); the check passes when the margin
    is >= -area_tol * area(Omega).  Image triangles with area below 1e-14
    raise DegenerateElement.  Orientation of the images is not assumed: the
    union is taken of the absolute triangles, so folds show up as missing
    area rather than as errors.
    """
    image = yp_field.values[mesh.triangles]
    pieces = []
    for e in range(len(image)):
        tri = ShapelyPolygon(image[e])
        if tri.area < 1e-14:
            raise DegenerateElement(
                f"image triangle {e} has area {tri.area:g}", element=e
            )
        pieces.append(tri)
    union_area = float(unary_union(pieces).area)
    ref_area = mesh.total_area
    margin = union_area - ref_area
    return CNReport(
        passed=margin >= -area_tol * ref_area,
        margin=margin,
        union_area=union_area,
        reference_area=ref_area,
    )


# ---------------------------------------------------------------------------
# Jones (epsilon, delta) verifier
# ---------------------------------------------------------------------------

@dataclass
class JonesReport:
    epsilon: float
    delta: float
    pairs_checked: int
    cond1_failures: list = field(default_factory=list)
    cond2_inconclusive: list = field(default_factory=list)
    epsilon_max_estimate: float = float("inf")

    @property
    def passed(self):
        return not self.cond1_failures

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "pairs_checked": self.pairs_checked,
            "cond1_failures": [
                [list(map(float, x)), list(map(float, y))]
                for x, y in self.cond1_failures
            ],
            "cond2_inconclusive": [
                [list(map(float, x)), list(map(float, y))]
                for x, y in self.cond2_inconclusive
            ],
            "epsilon_max_estimate": self.epsilon_max_estimate,
            "passed": self.passed,
        }


class _GeodesicOracle:
    """Shortest interior paths in a simple polygon via its visibility graph."""

    def __init__(self, poly):
        self.poly = poly
        self.verts = poly.vertices
        m = len(self.verts)
        self._vis = np.zeros((m, m), dtype=bool)
        for i in range(m):
            for j in range(i + 1, m):
                if self._segment_inside(self.verts[i], self.verts[j]):
                    self._vis[i, j] = self._vis[j, i] = True

    def _segment_inside(self, a, b):
        return self.poly.shape.covers(LineString([a, b]))

    def shortest_path(self, x, y):
        """Polyline of the shortest path from x to y inside the closed polygon."""
        if self._segment_inside(x, y):
            return np.array([x, y]), float(np.linalg.norm(np.asarray(y) - x))
        m = len(self.verts)
        nodes = list(self.verts) + [np.asarray(x, dtype=float), np.asarray(y, dtype=float)]
        sx, sy = m, m + 1
        adj = {i: [] for i in range(m + 2)}
        for i in range(m):
            for j in range(i + 1, m):
                if self._vis[i, j]:
                    w = float(np.linalg.norm(nodes[i] - nodes[j]))
                    adj[i].append((j, w))
                    adj[j].append((i, w))
        for endpoint in (sx, sy):
            for i in range(m):
                if self._segment_inside(nodes[endpoint], nodes[i]):
                    w = float(np.linalg.norm(nodes[endpoint] - nodes[i]))
                    adj[endpoint].append((i, w))
                    adj[i].append((endpoint, w))
        dist = {sx: 0.0}
        prev = {}
        heap = [(0.0, sx)]
        seen = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in seen:
                continue
            seen.add(u)
            if u == sy:
                break
            for v, w in adj[u]:
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd, v))
        if sy not in dist:
            raise ValueError("no interior path found; polygon may be invalid")
        path = [sy]
        while path[-1] != sx:
            path.append(prev[path[-1]])
        path.reverse()
        return np.array([nodes[i] for i in path]), dist[sy]


def _sample_polyline(polyline, count):
    """Arc-length uniform samples (including endpoints) along a polyline."""
    seg = np.diff(polyline, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    if total == 0.0:
        return np.repeat(polyline[:1], count, axis=0)
    targets = np.linspace(0.0, total, count)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg) - 1)
    local = (targets - cum[idx]) / np.where(seg_len[idx] > 0, seg_len[idx], 1.0)
    return polyline[idx] + seg[idx] * local[:, None]


def jones_verify(poly, epsilon, delta, sample_pairs=500, seed=0, cond2_samples=64):
    """Sampled verifier for the (epsilon, delta)-domain curve conditions.

    Draws interior point pairs with |x - y| < delta, computes the shortest
    interior path through the visibility graph, and checks the length bound
    against it (definitive on failure).  The distance condition is checked
    at cond2_samples points of that same path; a failure there is recorded
    as inconclusive because a different curve might satisfy it.
    """
    if not 0.0 < epsilon <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1], got {epsilon}")
    if delta <= 0.0:
        raise InvalidDelta(f"delta must be positive, got {delta}")
    rng = np.random.default_rng(seed)
    oracle = _GeodesicOracle(poly)
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    report = JonesReport(epsilon=epsilon, delta=delta, pairs_checked=0)
    eps_max = math.inf
    attempts = 0
    max_attempts = 200 * sample_pairs + 1000
    while report.pairs_checked < sample_pairs and attempts < max_attempts:
        attempts += 1
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        gap = float(np.linalg.norm(x - y))
        if gap >= delta or gap < 1e-9:
            continue
        if not (poly.shape.contains(Point(x)) and poly.shape.contains(Point(y))):
            continue
        report.pairs_checked += 1
        path, length = oracle.shortest_path(x, y)
        eps_max = min(eps_max, gap / length)
        if length > gap / epsilon * (1.0 + 1e-12):
            report.cond1_failures.append((x.copy(), y.copy()))
            continue
        pts = _sample_polyline(path, cond2_samples)
        dx = np.linalg.norm(pts - x, axis=1)
        dy = np.linalg.norm(pts - y, axis=1)
        required = epsilon * dx * dy / gap
        for k in range(len(pts)):
            if poly.boundary_distance(pts[k]) < required[k] - 1e-12:
                report.cond2_inconclusive.append((x.copy(), y.copy()))
                break
    report.epsilon_max_estimate = eps_max
    return report


# ---------------------------------------------------------------------------
# Hausdorff convergence probe for intermediate configurations
# ---------------------------------------------------------------------------

def _field_samples(field, spacing):
    """Image samples of the closed domain and of its boundary under a field."""
    mesh = field.mesh
    interior = []
    for e, tri in enumerate(mesh.triangles):
        vals = field.values[tri]
        span = math.sqrt(mesh.areas[e])
        k = max(1, int(math.ceil(span / spacing)))
        for i in range(k + 1):
            for j in range(k + 1 - i):
                l1 = i / k
                l2 = j / k
                l0 = 1.0 - l1 - l2
                interior.append(l0 * vals[0] + l1 * vals[1] + l2 * vals[2])
    boundary = []
    edges = np.vstack([mesh.gamma_D, mesh.gamma_N]) if len(mesh.gamma_N) else mesh.gamma_D
    for a, b in edges:
        va, vb = field.values[a], field.values[b]
        steps = max(1, int(math.ceil(np.linalg.norm(mesh.nodes[b] - mesh.nodes[a]) / spacing)))
        for k in range(steps + 1):
            boundary.append(va + (vb - va) * (k / steps))
    return np.asarray(interior), np.asarray(boundary)


def hausdorff_convergence_probe(yp_sequence, mesh, spacing=0.02, threshold=1e-6):
    """Distances of each intermediate configuration to the final one.

    Reports d_H between closures of the images and between their boundaries
    for every entry of the sequence against the last entry.  No monotone
    trend is asserted; `converged` only records whether the second-to-last
    iterate is below the threshold.
    """
    if len(yp_sequence) < 1:
        raise ValueError("need at least one field")
    target_closure, target_boundary = _field_samples(yp_sequence[-1], spacing)
    closure_dists = []
    boundary_dists = []
    for f in yp_sequence:
        closure, boundary = _field_samples(f, spacing)
        closure_dists.append(hausdorff(closure, target_closure))
        boundary_dists.append(hausdorff(boundary, target_boundary))
    tail = closure_dists[-2] if len(closure_dists) > 1 else closure_dists[-1]
    return {
        "closure_distances": closure_dists,
        "boundary_distances": boundary_dists,
        "converged": tail <= threshold + 2.0 * spacing,
        "spacing": spacing,
        "slack": 2.0 * spacing,
    }

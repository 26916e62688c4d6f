"""Hausdorff distance, Ciarlet-Necas check and the Jones-domain verifier."""

import math

import numpy as np
import pytest

from plastiq.discretization import Field, Mesh, unit_square
from plastiq.errors import DegenerateElement, EmptySet, InvalidDelta, InvalidEpsilon
from plastiq.geometry import (
    Polygon,
    ciarlet_necas_check,
    hausdorff,
    hausdorff_convergence_probe,
    jones_verify,
    sample_polygon,
    slit_square,
)

SQUARE = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])


def two_triangle_mesh():
    nodes = [(0, 0), (1, 0), (1, 1), (0, 1)]
    return Mesh(nodes, [(0, 1, 2), (0, 2, 3)], [(0, 1)], [(1, 2), (2, 3), (3, 0)])


# ---------------------------------------------------------------------------
# polygons
# ---------------------------------------------------------------------------

def test_polygon_rejects_clockwise():
    with pytest.raises(ValueError):
        Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])


def test_polygon_rejects_self_intersection():
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_slit_square_is_simple():
    poly = slit_square(0.01, 0.9)
    assert poly.signed_area() == pytest.approx(1.0 - 0.01 * 0.9, abs=1e-12)


# ---------------------------------------------------------------------------
# hausdorff
# ---------------------------------------------------------------------------

def test_hausdorff_identical_sets():
    pts = np.random.default_rng(0).uniform(0, 1, (50, 2))
    assert hausdorff(pts, pts) == 0.0


def test_hausdorff_nested_squares():
    h = 0.01
    a = sample_polygon(SQUARE, h)
    b = sample_polygon(Polygon([(0, 0), (2, 0), (2, 2), (0, 2)]), h)
    assert abs(hausdorff(a, b) - math.sqrt(2.0)) <= 2 * h


def test_hausdorff_symmetry():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (40, 2))
    y = rng.uniform(0, 2, (60, 2))
    assert hausdorff(x, y) == hausdorff(y, x)


def test_hausdorff_triangle_inequality():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.uniform(0, 1, (20, 2))
        y = rng.uniform(0, 1, (25, 2))
        z = rng.uniform(0, 1, (30, 2))
        assert hausdorff(x, z) <= hausdorff(x, y) + hausdorff(y, z) + 1e-12


def test_hausdorff_empty_set():
    with pytest.raises(EmptySet):
        hausdorff(np.zeros((0, 2)), np.ones((3, 2)))


# ---------------------------------------------------------------------------
# Ciarlet-Necas
# ---------------------------------------------------------------------------

def test_cn_identity_margin_zero():
    mesh = two_triangle_mesh()
    report = ciarlet_necas_check(Field.identity(mesh), mesh)
    assert report.passed
    assert report.margin == pytest.approx(0.0, abs=1e-12)


def test_cn_rigid_motion_invariance():
    mesh = unit_square(3)
    rng = np.random.default_rng(3)
    for _ in range(10):
        theta = rng.uniform(0, 2 * math.pi)
        rot = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        shift = rng.uniform(-2, 2, 2)
        moved = Field(mesh.nodes @ rot.T + shift, mesh)
        report = ciarlet_necas_check(moved, mesh)
        assert report.passed
        assert abs(report.margin) <= 1e-10


def test_cn_fold_fails_with_half_area():
    # both triangles collapse onto the same image triangle: union area 1/2
    mesh = two_triangle_mesh()
    folded = Field(np.array([(0, 0), (1, 0), (1, 1), (1, 0)], dtype=float), mesh)
    report = ciarlet_necas_check(folded, mesh)
    assert not report.passed
    assert report.margin == pytest.approx(-0.5, abs=1e-12)
    assert report.union_area == pytest.approx(0.5, abs=1e-12)


def test_cn_degenerate_image_triangle():
    mesh = two_triangle_mesh()
    squashed = Field(np.array([(0, 0), (1, 0), (0.5, 0), (0, 1)], dtype=float), mesh)
    with pytest.raises(DegenerateElement):
        ciarlet_necas_check(squashed, mesh)


# ---------------------------------------------------------------------------
# Jones verifier
# ---------------------------------------------------------------------------

def test_jones_validates_parameters():
    with pytest.raises(InvalidEpsilon):
        jones_verify(SQUARE, 1.5, 0.5)
    with pytest.raises(InvalidEpsilon):
        jones_verify(SQUARE, 0.0, 0.5)
    with pytest.raises(InvalidDelta):
        jones_verify(SQUARE, 0.5, -1.0)


def test_jones_convex_square_no_length_failures():
    report = jones_verify(SQUARE, 0.5, 0.5, sample_pairs=1000, seed=5)
    assert report.passed
    assert not report.cond1_failures
    assert report.pairs_checked == 1000


def test_jones_convex_epsilon_max_is_one():
    report = jones_verify(SQUARE, 0.9, 0.5, sample_pairs=300, seed=6)
    assert abs(report.epsilon_max_estimate - 1.0) <= 1e-9


def test_jones_slit_produces_definitive_failures():
    poly = slit_square(0.01, 0.9)
    report = jones_verify(poly, 0.5, 1.0, sample_pairs=400, seed=7)
    assert len(report.cond1_failures) >= 1
    assert not report.passed
    # each reported pair truly straddles the slit detour: check one witness
    x, y = report.cond1_failures[0]
    assert np.linalg.norm(np.asarray(x) - np.asarray(y)) < 1.0


def test_jones_nestedness_on_same_samples():
    # cond1 failures can only shrink when epsilon decreases (same seed/delta)
    poly = slit_square(0.02, 0.8)
    failures = {
        eps: len(jones_verify(poly, eps, 1.0, sample_pairs=300, seed=8).cond1_failures)
        for eps in (0.2, 0.5, 0.9)
    }
    assert failures[0.2] <= failures[0.5] <= failures[0.9]


def test_jones_class_stable_along_hausdorff_convergent_family():
    # squares with a shallow wide notch (depth/width fixed at 1/4) converge
    # to the square in Hausdorff distance; every member passes the length
    # condition at eps = 0.5 on samples, and so does the limit
    def notched(depth):
        w = 4.0 * depth
        return Polygon([
            (0, 0), (1, 0), (1, 1),
            (0.5 + w / 2, 1.0), (0.5 + w / 2, 1.0 - depth),
            (0.5 - w / 2, 1.0 - depth), (0.5 - w / 2, 1.0),
            (0, 1),
        ])

    members = [notched(0.2 / n) for n in (1, 2, 4)]
    samples = [sample_polygon(p, 0.02) for p in members]
    target = sample_polygon(SQUARE, 0.02)
    dists = [hausdorff(s, target) for s in samples]
    assert dists[0] > dists[2]
    assert dists[2] <= 0.2 / 4 + 2 * 0.02
    for poly in members + [SQUARE]:
        report = jones_verify(poly, 0.5, 0.5, sample_pairs=300, seed=11)
        assert report.passed


def test_jones_cond2_failures_are_only_inconclusive():
    # points hugging the boundary of a convex polygon fail cond2 on the
    # straight path, which must land in the inconclusive bucket, never in
    # the definitive one
    report = jones_verify(SQUARE, 0.9, 0.9, sample_pairs=500, seed=9)
    assert not report.cond1_failures
    assert len(report.cond2_inconclusive) > 0


# ---------------------------------------------------------------------------
# Hausdorff convergence probe
# ---------------------------------------------------------------------------

def test_probe_constant_sequence():
    mesh = unit_square(2)
    fields = [Field.identity(mesh) for _ in range(4)]
    report = hausdorff_convergence_probe(fields, mesh, spacing=0.05)
    assert all(d == 0.0 for d in report["closure_distances"])
    assert all(d == 0.0 for d in report["boundary_distances"])


def test_probe_shear_sequence_rates():
    mesh = unit_square(3)
    shear = np.array([[0.0, 1.0], [0.0, 0.0]])
    ns = (1, 2, 4, 8, 64, 10_000)
    fields = [
        Field(mesh.nodes + (1.0 / n) * mesh.nodes @ shear.T, mesh) for n in ns
    ]
    report = hausdorff_convergence_probe(fields, mesh, spacing=0.02, threshold=0.02)
    diam = mesh.diameter
    for n, dist in zip(ns[:-1], report["closure_distances"][:-1]):
        assert dist <= 2.0 / n * diam + report["slack"]
    assert report["converged"]


def test_probe_distances_track_uniform_rate():
    mesh = unit_square(3)
    rng = np.random.default_rng(10)
    direction = rng.uniform(-1, 1, mesh.nodes.shape)
    rates = [0.3, 0.1, 0.03, 0.0]
    fields = [Field(mesh.nodes + r * direction, mesh) for r in rates]
    report = hausdorff_convergence_probe(fields, mesh, spacing=0.02)
    scale = np.max(np.linalg.norm(direction, axis=1))
    for r, dist in zip(rates, report["closure_distances"]):
        assert dist <= r * scale + report["slack"]

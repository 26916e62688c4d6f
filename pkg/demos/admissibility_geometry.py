"""Geometric admissibility machinery on friendly and hostile domains.

Three capabilities side by side: the sampled (epsilon, delta)-domain
verifier (shortest interior paths through the visibility graph), Hausdorff
distances between sampled compact sets, and the Ciarlet-Necas injectivity
test that catches folded plastic deformations.
"""

import math

import numpy as np

from plastiq.discretization import Field, Mesh
from plastiq.geometry import (
    Polygon,
    ciarlet_necas_check,
    hausdorff,
    jones_verify,
    sample_polygon,
    slit_square,
)


def jones_demo():
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    report = jones_verify(square, epsilon=0.9, delta=0.5, sample_pairs=500, seed=0)
    print("unit square, eps = 0.9:")
    print(f"  definitive length failures: {len(report.cond1_failures)}")
    print(f"  inconclusive distance-condition pairs: {len(report.cond2_inconclusive)}")
    print(f"  largest workable eps estimate: {report.epsilon_max_estimate:.9f}")

    slit = slit_square(width=0.01, depth=0.9)
    report = jones_verify(slit, epsilon=0.5, delta=1.0, sample_pairs=500, seed=0)
    print("slit square (width 0.01), eps = 0.5:")
    print(f"  definitive length failures: {len(report.cond1_failures)}")
    if report.cond1_failures:
        x, y = report.cond1_failures[0]
        print(f"  witness pair straddling the slit: {np.round(x, 3)} vs {np.round(y, 3)}")


def hausdorff_demo():
    h = 0.01
    small = sample_polygon(Polygon([(0, 0), (1, 0), (1, 1), (0, 1)]), h)
    big = sample_polygon(Polygon([(0, 0), (2, 0), (2, 2), (0, 2)]), h)
    d = hausdorff(small, big)
    print(f"nested squares: d_H = {d:.6f} (exact sqrt(2) = {math.sqrt(2):.6f}, "
          f"sampling slack {2 * h})")


def ciarlet_necas_demo():
    mesh = Mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)],
                [(0, 1)], [(1, 2), (2, 3), (3, 0)])
    ident = ciarlet_necas_check(Field.identity(mesh), mesh)
    print(f"identity map: pass = {ident.passed}, margin = {ident.margin:.2e}")
    folded = Field(np.array([(0, 0), (1, 0), (1, 1), (1, 0)], dtype=float), mesh)
    fold = ciarlet_necas_check(folded, mesh)
    print(f"folded map:   pass = {fold.passed}, margin = {fold.margin:.3f} "
          f"(both triangles land on the same image)")


if __name__ == "__main__":
    jones_demo()
    print()
    hausdorff_demo()
    print()
    ciarlet_necas_demo()

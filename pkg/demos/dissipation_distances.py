"""Dissipation distances on SL(2): closed form versus path estimates.

The default one-step distance D(F) = 2 rho log sigma_1(F) is subadditive
and vanishes exactly on rotations.  The path estimator bounds the true
distance generated by the Frobenius rate potential from above by descending
over piecewise-exponential paths; how the two relate is a modeling choice,
so both are printed side by side.
"""

import warnings

import numpy as np

from plastiq.algebra import frobenius, mat_exp, random_special
from plastiq.dissipation import DissipationModel, delta_estimate, one_step_distance

MODEL = DissipationModel()


def closed_form_demo():
    print("one-step distance values:")
    for name, f in (
        ("identity", np.eye(2)),
        ("rotation(30deg)", np.array([[np.cos(0.52), -np.sin(0.52)],
                                      [np.sin(0.52), np.cos(0.52)]])),
        ("diag(2, 1/2)", np.diag([2.0, 0.5])),
        ("shear(1)", np.array([[1.0, 1.0], [0.0, 1.0]])),
    ):
        print(f"  D({name}) = {one_step_distance(f, MODEL):.6f}")

    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(2000):
        a = random_special(rng, 2, spread=1.0)
        b = random_special(rng, 2, spread=1.0)
        gap = one_step_distance(a @ b, MODEL, det_tol=1e-6) - (
            one_step_distance(a, MODEL) + one_step_distance(b, MODEL)
        )
        worst = max(worst, gap)
    print(f"subadditivity: worst D(AB) - D(A) - D(B) over 2000 pairs = {worst:.2e}")


def path_estimate_demo():
    rng = np.random.default_rng(1)
    a = rng.uniform(-0.6, 0.6, size=(2, 2))
    a = 0.5 * (a + a.T)
    a -= np.eye(2) * np.trace(a) / 2.0
    target = mat_exp(a)
    print(f"\ntarget exp(A) with ||A|| = {frobenius(a):.6f}")
    print(f"closed-form D: {one_step_distance(target, MODEL, det_tol=1e-8):.6f}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in (1, 2, 3, 4):
            value = delta_estimate(target, n, MODEL, max_iterations=1200)
            print(f"path upper bound, {n} segment(s): {value:.6f}")


if __name__ == "__main__":
    closed_form_demo()
    path_estimate_demo()

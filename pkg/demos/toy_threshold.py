"""Single-material-point evolution and the plastic activation threshold.

The reduced incremental problem in one dimension minimizes

    0.5 |f / p|^2 + 0.5 p^2 - ell(t) f + |log p - log p_prev|

over the deformation strain f and the plastic strain p > 0, with
ell(t) = lambda * t.  Below |ell| = 1 the plastic strain stays pinned at
p = 1 (purely elastic response); the instant the loading exceeds the
threshold, every incremental minimizer leaves p = 1 and runs to the box
boundary, which the solver flags as plastic runaway.
"""

from plastiq.solver import TimeGrid, run_1d_toy


def show(lam, horizon, knots=11):
    rows = run_1d_toy(lam, TimeGrid.uniform(horizon, knots))
    print(f"\nlambda = {lam} (threshold crossed at t = {1.0 / lam if lam > 0 else 'never'})")
    print(f"{'t':>8} {'ell':>8} {'f':>10} {'p':>10}  runaway")
    for r in rows:
        print(f"{r.t:8.3f} {r.ell:8.3f} {r.f:10.4f} {r.p:10.4f}  {r.runaway}")


if __name__ == "__main__":
    show(0.5, 2.0)   # subcritical: |ell| <= 1 throughout, p stays exactly 1
    show(2.0, 1.0)   # supercritical past t = 0.5: p jumps to the box edge

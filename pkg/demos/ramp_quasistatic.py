"""Quasistatic 2D evolution under a subcritical body-force ramp.

Runs the bundled ramp scenario: a unit square with a soft Dirichlet
condition on the whole boundary, loaded by f(t, x) = t * (0.3, 0).  The
load stays below the plastic activation threshold, so the plastic field is
frozen, the dissipation stays zero, and the energy decreases as the body
leans into the load.  Afterwards every certificate class is checked on the
computed trajectory.
"""

import os

from plastiq.discretization import reference_state
from plastiq.scenario import Scenario
from plastiq.solver import run_quasistatic
from plastiq.verify import verify_all

SCENARIO = os.path.join(os.path.dirname(__file__), "..", "scenarios", "ramp.json")


def main():
    scenario = Scenario.from_file(SCENARIO)
    trajectory = run_quasistatic(
        reference_state(scenario.mesh), scenario.grid, scenario.models,
        scenario.solver,
    )
    print(f"{'t':>6} {'elastic':>10} {'plastic':>10} {'boundary':>10} "
          f"{'load':>10} {'total':>10} {'delta':>8}")
    for i, t in enumerate(trajectory.grid.knots):
        e = trajectory.energies[i]
        print(f"{t:6.3f} {e.elastic:10.6f} {e.plastic:10.6f} {e.boundary:10.6f} "
              f"{e.load:10.6f} {e.total:10.6f} {trajectory.delta_accumulated[i]:8.4f}")
    print(f"\nuniform energy diagnostic sup E + Diss = {trajectory.energy_bound:.6f}")

    certificates = verify_all(trajectory, scenario.models, stability=True,
                              competitors=20, seed=scenario.seed)
    by_kind = {}
    for cert in certificates:
        ok, total = by_kind.get(cert.kind, (0, 0))
        by_kind[cert.kind] = (ok + int(cert.passed), total + 1)
    print("\ncertificates:")
    for kind, (ok, total) in sorted(by_kind.items()):
        print(f"  {kind:8} {ok}/{total} pass")


if __name__ == "__main__":
    main()

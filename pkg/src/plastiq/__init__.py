"""Quasistatic dislocation-free finite plasticity.

Incremental energy-plus-dissipation minimization for compatible plastic
strains, with the admissibility geometry (Ciarlet-Necas, Hausdorff,
(epsilon, delta)-domains) and numerical certificates for discrete
stability, discrete and limit energy inequalities and semistability.
"""

from .algebra import cof, det, mat_exp, mat_log_spd, singular_values
from .discretization import (
    DET_TOLERANCE,
    Field,
    Mesh,
    State,
    chain_estimate_audit,
    elastic_strain,
    gradient,
    project_isochoric,
    push_forward,
    random_admissible_state,
    reference_state,
    unit_square,
)
from .dissipation import (
    DissipationModel,
    PathDiscretization,
    delta_estimate,
    global_distance,
    one_step_distance,
    rate_potential,
    trajectory_dissipation,
)
from .energy import (
    DensitySpec,
    EnergyBreakdown,
    EnergyModel,
    Loading,
    growth_audit,
    load_pairing,
    load_rate_pairing,
    total_energy,
    we_eval,
    wp_eval,
)
from .geometry import (
    CNReport,
    JonesReport,
    Polygon,
    ciarlet_necas_check,
    hausdorff,
    hausdorff_convergence_probe,
    jones_verify,
    sample_polygon,
    slit_square,
)
from .scenario import Scenario
from .solver import (
    ModelSet,
    SolverConfig,
    TimeGrid,
    Trajectory,
    incremental_solve,
    run_1d_toy,
    run_quasistatic,
)
from .verify import (
    Certificate,
    check_E_discr,
    check_E_limit,
    check_S_discr,
    check_S_semi,
    check_energy_bound,
    verify_all,
)

__version__ = "0.1.0"

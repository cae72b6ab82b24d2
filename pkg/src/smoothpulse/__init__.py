"""Smooth bounded single-axis qubit pulses with tunable low-frequency noise filtering.

The package synthesizes control pulses whose phase is an odd polynomial
in scaled time, chosen so the first k moments of the pulse phase factor
vanish.  Such pulses implement arbitrary x-rotations with a filter
function flat to order omega^{2k}, and their robustness can be
quantified against a finite random-matrix quantum bath or composite
telegraph 1/f noise.
"""

from .phase import (
    GateTarget,
    PhasePolynomial,
    PulseWaveform,
    boundary_residuals,
    eval_omega,
    eval_phi,
    max_slope,
    sample_waveform,
    waveform_to_csv,
)
from .solver import (
    ConstraintVector,
    ParityError,
    QuadratureError,
    SolveReport,
    SolverConfig,
    constraint_vector,
    initial_guess,
    jacobian,
    load_solution,
    save_solution,
    solution_to_dict,
    solve,
    solve_continuation,
    solve_order_family,
    solve_theta_family,
    verify_solution,
)
from .curves import (
    CurveHierarchy,
    closure_defects,
    curve_area,
    curves_to_csv,
    cusp_tangent_jump,
    r_sequence,
)
from .filters import (
    DDSequence,
    FilterSamples,
    dd_phase,
    f_transform,
    filter_F,
    filter_samples,
    filter_to_csv,
    polynomial_phase,
    slope_fit,
    slope_report_to_json,
    udd_sequence,
)
from .noise import (
    BathInstance,
    RTNSpectrum,
    RTNTrajectory,
    StaticDeltaSpectrum,
    VRQBSpectrum,
    build_bath,
    empirical_bath_spectrum,
    rtn_average_periodogram,
    rtn_spectrum,
    sample_gue,
    sample_rtn_trajectory,
    semicircle_pdf,
    vrqb_spectrum,
)
from .infidelity import (
    AccuracyError,
    InfidelityPoint,
    SimConfig,
    SweepRow,
    classical_mc_infidelity,
    leading_infidelity,
    quantum_full_fidelity,
    sweep,
    sweep_to_csv,
)

__version__ = "0.1.0"

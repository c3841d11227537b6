"""Certified capacity bounds for classical-quantum and quantum channels.

Capacities are bracketed by running an accelerated (or inexact projected)
gradient method on a smoothed dual problem; every solve returns an upper and
a lower bound in bits.
"""

from .continuous import (
    ContinuousCqChannel,
    QuadratureGrid,
    QuadratureOracle,
    build_grid,
    smoothed_G_quadrature,
    solve_continuous,
    solve_inexact,
)
from .discrete import (
    DiscreteCqChannel,
    SolverConfig,
    SolverReport,
    TraceRecord,
    dual_F,
    holevo_information,
    iterations_for,
    perturb_channel,
    schedule,
    smoothed_G,
    solve,
)
from .errors import (
    ConstraintSolveFailure,
    EigenDecompositionError,
    ExponentOverflow,
    InfeasibleConstraint,
    InvalidChoi,
    InvalidDensityMatrix,
    NotHermitianError,
    QcapError,
    RegularityViolation,
)
from .holevo import (
    QuantumChannel,
    SamplerSpec,
    UniversalEncoder,
    apply_channel,
    embed,
    holevo_capacity,
    load_choi,
    make_depolarizing,
    make_pauli,
    mc_gradient_importance,
    mc_gradient_uniform,
    perturb,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSolveFailure", "ContinuousCqChannel", "DiscreteCqChannel", "EigenDecompositionError",
    "ExponentOverflow", "InfeasibleConstraint", "InvalidChoi", "InvalidDensityMatrix", "NotHermitianError",
    "QcapError", "QuadratureGrid", "QuadratureOracle", "QuantumChannel", "RegularityViolation", "SamplerSpec",
    "SolverConfig", "SolverReport", "TraceRecord", "UniversalEncoder", "apply_channel", "build_grid", "dual_F",
    "embed", "holevo_capacity", "holevo_information", "iterations_for", "load_choi", "make_depolarizing",
    "make_pauli", "mc_gradient_importance", "mc_gradient_uniform", "perturb", "perturb_channel", "schedule",
    "smoothed_G", "smoothed_G_quadrature", "solve", "solve_continuous", "solve_inexact",
]

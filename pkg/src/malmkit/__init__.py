"""Penalty and augmented Lagrangian solvers for equality-constrained problems."""

from .problem import (
    AugLagObjective,
    DerivativeCheck,
    EvaluationError,
    PenaltyObjective,
    PenaltyProblem,
    check_derivatives,
)
from .problems import CIRCLE_REF, circle, metrics_circle, metrics_ocp, ocp
from .quadrature import QuadratureRule, gauss_legendre
from .solvers import (
    MalmConfig,
    NotApplicableError,
    SolveReport,
    SolveStatus,
    kkt_residual,
    malm_solve,
    qpm_solve,
)
from .transcription import Mesh, OcpDefinition, TranscribedProblem, Transcription, assemble
from .trm import TrmConfig, TrmReport, TrmStatus, shifted_solve, trm_minimize

__version__ = "0.1.0"

__all__ = [
    "AugLagObjective",
    "CIRCLE_REF",
    "DerivativeCheck",
    "EvaluationError",
    "MalmConfig",
    "Mesh",
    "NotApplicableError",
    "OcpDefinition",
    "PenaltyObjective",
    "PenaltyProblem",
    "QuadratureRule",
    "SolveReport",
    "SolveStatus",
    "TranscribedProblem",
    "Transcription",
    "TrmConfig",
    "TrmReport",
    "TrmStatus",
    "assemble",
    "check_derivatives",
    "circle",
    "gauss_legendre",
    "kkt_residual",
    "malm_solve",
    "metrics_circle",
    "metrics_ocp",
    "ocp",
    "qpm_solve",
    "shifted_solve",
    "trm_minimize",
]

"""Numerical core: operators, leakage solver, encoder search and pipeline audits."""

# Core exports
from .errors import (
    DegenerateEnsembleError,
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidChannelError,
    QuantumLeakageError,
    ValidationError,
)
from .operators import DensityOperator, Ensemble, HermitianOperator, Povm, PureState
from .leakage import LeakageResult, compute_leakage, leakage_bounds, two_state_oracle
from .encoder import OptimizationRun, basis_encoding, optimize_encoding, sweep_qubits
from .inference import BoundReport, JointPmf, Pipeline, PostProcessor, QuantumChannel, audit_bounds

__all__ = [
    "QuantumLeakageError", "InvalidArgumentError", "DimensionMismatchError", "ValidationError",
    "InvalidChannelError", "DegenerateEnsembleError",
    "HermitianOperator", "DensityOperator", "PureState", "Povm", "Ensemble",
    "LeakageResult", "compute_leakage", "leakage_bounds", "two_state_oracle",
    "OptimizationRun", "basis_encoding", "optimize_encoding", "sweep_qubits",
    "JointPmf", "QuantumChannel", "PostProcessor", "Pipeline", "BoundReport", "audit_bounds",
]

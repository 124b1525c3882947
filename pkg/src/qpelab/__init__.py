"""Windowed and QSVT-based quantum phase estimation on a statevector testbed."""
from .qpe import (OutcomeDistribution, PhaseRegisterSpec, coalesce_bins, emulate_qpe, inverse_qft,
                  phase_success_probability, run_qpe, success_probability)
from .qsp import PhaseFactors, SignFunctionSpec, optimize_phases, qsp_response, target_function
from .qsvt_qpe import QsvtQpeConfig, query_cost, run_qsvt_qpe
from .statevector import GateSpec, StateVector
from .sweep import SweepConfig, SweepResult, run_sweep
from .windows import WindowKind, WindowSpec, WindowState, best_alpha, make_window

__version__ = "0.1.0"

__all__ = [
    "GateSpec", "OutcomeDistribution", "PhaseFactors", "PhaseRegisterSpec", "QsvtQpeConfig",
    "SignFunctionSpec", "StateVector", "SweepConfig", "SweepResult", "WindowKind", "WindowSpec",
    "WindowState", "best_alpha", "coalesce_bins", "emulate_qpe", "inverse_qft", "make_window",
    "optimize_phases", "phase_success_probability", "qsp_response", "query_cost", "run_qpe",
    "run_qsvt_qpe", "run_sweep", "success_probability", "target_function",
]

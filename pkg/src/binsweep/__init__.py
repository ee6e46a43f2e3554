"""Exact and simulated analysis of fixed-order single-site samplers on binary models."""
__version__ = "0.1.0"

from .errors import InvalidInputError, NumericalError, ResourceCapError
from .model import (BinaryModel, IsingLattice, QuadraticModel, TableModel, TieReport,
                    check_tie_condition, model_from_spec)
from .kernels import AcceptanceRule, SweepKernel, SweepOrder, accept_prob
from .matrix import (SpectralReport, TransitionMatrix, load_matrix, save_matrix,
                     site_matrix, spectral_gap, stationary_residual, sweep_matrix)
from .ergodicity import ErgodicityReport, check_ergodic, find_closed_set, is_aperiodic
from .proofgraph import edge_set, find_cycle, verify_induction_step
from .sim import EmpiricalSummary, Trajectory, run_chain, tv_distance

__all__ = [
    "AcceptanceRule", "BinaryModel", "EmpiricalSummary", "ErgodicityReport",
    "InvalidInputError", "IsingLattice", "NumericalError", "QuadraticModel",
    "ResourceCapError", "SpectralReport", "SweepKernel", "SweepOrder", "TableModel",
    "TieReport", "Trajectory", "TransitionMatrix", "accept_prob", "check_ergodic",
    "check_tie_condition", "edge_set", "find_closed_set", "find_cycle", "is_aperiodic",
    "load_matrix", "model_from_spec", "run_chain", "save_matrix", "site_matrix",
    "spectral_gap", "stationary_residual", "sweep_matrix", "tv_distance",
    "verify_induction_step",
]

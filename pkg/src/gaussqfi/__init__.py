"""Quantum and classical Fisher information of seeded, lossy Gaussian interferometers."""

from .analytic import (
    eta0,
    qfi_equal_squeezing,
    qfi_internal,
    qfi_lossless,
    qfi_mandel_full,
    qfi_mandel_no_a,
    qfi_max_lossless,
    qfi_yurke_external,
    t_critical,
)
from .circuit import Circuit, Loss, PhaseShift, TraceOut
from .fock import CfiResult, FockDistribution, cfi, dense_fock_oracle, fock_probabilities
from .gaussian import GaussianState, SymplecticOp
from .interferometers import InfeasibleDose, ScenarioConfig, build, n_phi, output_state, r1_max, seed_for_target
from .optimize import InnerSpec, OptimizationResult, SweepResult, optimize_scenario, scenario_qfi, sweep
from .qfi import FisherResult, circuit_qfi, qfi, state_derivative

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Loss", "PhaseShift", "TraceOut", "GaussianState", "SymplecticOp",
    "ScenarioConfig", "InfeasibleDose", "build", "n_phi", "output_state", "r1_max", "seed_for_target",
    "FisherResult", "state_derivative", "qfi", "circuit_qfi",
    "qfi_lossless", "qfi_max_lossless", "qfi_internal", "t_critical", "qfi_yurke_external",
    "qfi_mandel_no_a", "qfi_mandel_full", "qfi_equal_squeezing", "eta0",
    "InnerSpec", "OptimizationResult", "SweepResult", "optimize_scenario", "scenario_qfi", "sweep",
    "FockDistribution", "CfiResult", "fock_probabilities", "dense_fock_oracle", "cfi",
]

"""Branch-and-bound bias-field digitized counterdiabatic optimization for HUBOs."""

from .bbb import BbbConfig, BbbResult, approximate_bbb, brute_force_relaxation, exact_bbb, trivial_relaxation
from .bfdcqo import BfdcqoConfig, BfdcqoResult, run as run_bfdcqo
from .cd import DriverConfig, Schedule, alpha1, build_cd_circuit, prep_angles
from .classical import GreedyConfig, SaConfig, brute_force, greedy_local_search, simulated_annealing
from .hubo import (
    CapExceededError,
    HuboProblem,
    InstanceSpec,
    ProblemError,
    SampleSet,
    energies,
    energy,
    generate,
    parse,
    serialize,
)
from .ledger import FunctionEvalCounter, derive_rng, derive_seed
from .pauli import PauliString, PauliSum, commutator
from .quadratize import QuboProblem, ReductionMap, hubo_to_qubo, verify_reduction
from .statevector import StateVector, run_circuit, sample

__all__ = [
    "BbbConfig", "BbbResult", "approximate_bbb", "brute_force_relaxation", "exact_bbb",
    "trivial_relaxation", "BfdcqoConfig", "BfdcqoResult", "run_bfdcqo", "DriverConfig",
    "Schedule", "alpha1", "build_cd_circuit", "prep_angles", "GreedyConfig", "SaConfig",
    "brute_force", "greedy_local_search", "simulated_annealing", "CapExceededError",
    "HuboProblem", "InstanceSpec", "ProblemError", "SampleSet", "energies", "energy",
    "generate", "parse", "serialize", "FunctionEvalCounter", "derive_rng", "derive_seed",
    "PauliString", "PauliSum", "commutator", "QuboProblem", "ReductionMap", "hubo_to_qubo",
    "verify_reduction", "StateVector", "run_circuit", "sample",
]

"""Dense statevector backend for counterdiabatic circuits.

Qubit q is bit q of the amplitude index; measuring bit b gives spin 1 - 2b.
"""

from __future__ import annotations

import numpy as np

from .cd import CdCircuit
from .hubo import CapExceededError, HuboProblem, SampleSet
from .ledger import derive_rng
from .pauli import PauliString

MAX_QUBITS = 24
NORM_TOL = 1e-10


class SimulatorCapError(CapExceededError):
    """Register larger than the configured qubit cap."""


class StateVector:
    """Owned, mutable amplitude buffer of ``2**n`` complex values."""

    def __init__(self, amplitudes: np.ndarray):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        n = int(amps.size).bit_length() - 1
        if amps.ndim != 1 or amps.size != 1 << n:
            raise ValueError("amplitude count must be a power of two")
        self.n = n
        self.amplitudes = amps.copy()
        self._index = np.arange(amps.size, dtype=np.int64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes)


def prepare(n: int, angles, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Product state of Ry(theta_q)|0> on every qubit."""
    if n > max_qubits:
        raise SimulatorCapError(f"{n} qubits exceeds the cap of {max_qubits}")
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (n,):
        raise ValueError(f"expected {n} angles, got shape {angles.shape}")
    amps = np.ones(1, dtype=np.complex128)
    for theta in angles[::-1]:
        amps = np.kron(amps, [np.cos(theta / 2), np.sin(theta / 2)])
    return StateVector(amps)


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    shift = 1
    while shift < 64:
        v ^= v >> shift
        shift <<= 1
    return v & 1


def apply_pauli_rotation(state: StateVector, string: PauliString, angle: float) -> StateVector:
    """In place: psi <- (cos(a/2) I - i sin(a/2) P) psi."""
    if string.n != state.n:
        raise ValueError(f"string on {string.n} qubits, state has {state.n}")
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if s == 0.0:
        return state
    psi = state.amplitudes
    idx = state._index
    # P|k> = i^{#Y} (-1)^{parity(k & z)} |k ^ x>
    sign = 1 - 2 * _parity(idx & string.z)
    phase = (1j) ** (bin(string.x & string.z).count("1") % 4)
    p_psi = np.empty_like(psi)
    p_psi[idx ^ string.x] = phase * sign * psi
    state.amplitudes = c * psi - 1j * s * p_psi
    return state


def run_circuit(circuit: CdCircuit, max_qubits: int = MAX_QUBITS) -> StateVector:
    state = prepare(circuit.n, circuit.prep_angles, max_qubits)
    for string, angle in circuit.rotations:
        apply_pauli_rotation(state, string, angle)
    return state


def sample_indices(state: StateVector, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    if n_shots < 1:
        raise ValueError("n_shots must be positive")
    p = state.probabilities()
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL * 100:
        raise ValueError(f"state norm {np.sqrt(total)} is not 1")
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n_shots), side="right")
    return np.minimum(idx, p.size - 1)


def sample(state: StateVector, problem: HuboProblem, n_shots: int, rng_seed: int) -> SampleSet:
    """Measure ``n_shots`` times in the computational basis."""
    if problem.n != state.n:
        raise ValueError("problem and state sizes differ")
    rng = derive_rng(rng_seed)
    return SampleSet.from_indices(problem, sample_indices(state, n_shots, rng))


def expectation_z(state: StateVector) -> np.ndarray:
    """<Z_q> for every qubit."""
    p = state.probabilities()
    bits = (state._index[:, None] >> np.arange(state.n)) & 1
    return (p[:, None] * (1 - 2 * bits)).sum(axis=0)

"""Bias-field counterdiabatic optimization loop.

A bias vector is a target magnetization: entry i is the desired <sigma^z_i>
(spin +1 for |0>). The ground state of ``hx X + h Z`` has <Z> of sign
``-sign(h)``, so the driver's longitudinal field is the *negative* of the bias.
With that mapping the prepared product state leans toward the spins the
bias names, which is the whole point of feeding measurements back.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .cd import DEFAULT_PANELS, DriverConfig, Schedule, build_cd_circuit
from .classical import GreedyConfig, greedy_post_process
from .hubo import HuboProblem, ProblemError, SampleSet, cvar_count
from .ledger import FunctionEvalCounter, derive_seed
from .statevector import MAX_QUBITS, run_circuit, sample


@dataclass(frozen=True)
class BfdcqoConfig:
    iterations: int = 3
    n_shots: int = 1000
    cvar_fraction: float = 0.1
    schedule: Schedule = field(default_factory=Schedule)
    quadrature_panels: int = DEFAULT_PANELS
    hx_value: float = -1.0
    rng_seed: int = 0
    post_process: GreedyConfig | None = None
    max_qubits: int = MAX_QUBITS

    def __post_init__(self):
        if self.iterations < 1 or self.n_shots < 1:
            raise ValueError("iterations and n_shots must be positive")
        cvar_count(self.cvar_fraction, self.n_shots)
        if self.hx_value == 0:
            raise ValueError("transverse field must be nonzero")


def cvar_bias_update(samples: SampleSet, alpha: float) -> np.ndarray:
    """Mean spin over the ceil(alpha * shots) lowest-energy shots.

    Records are already sorted by (energy, basis index), which fixes the
    tie-break at the cutoff.
    """
    if not len(samples):
        raise ProblemError("empty sample set")
    m = cvar_count(alpha, samples.total_shots)
    before = np.concatenate(([0], np.cumsum(samples.counts)[:-1]))
    take = np.clip(m - before, 0, samples.counts)
    return (take[:, None] * samples.spins).sum(axis=0) / m


def driver_for_bias(bias, hx_value: float = -1.0) -> DriverConfig:
    bias = np.asarray(bias, dtype=float)
    return DriverConfig(np.full(bias.shape, float(hx_value)), -bias)


def warm_start_bias(z, scale: float = 1.0) -> np.ndarray:
    return scale * np.asarray(z, dtype=float)


def rescale_bias(bias, cap: float, exclude=()) -> np.ndarray:
    """Scale the non-excluded entries linearly so that max |entry| <= cap."""
    out = np.asarray(bias, dtype=float).copy()
    mask = np.ones(out.shape, dtype=bool)
    mask[list(exclude)] = False
    if mask.any():
        peak = np.abs(out[mask]).max()
        if peak > cap:
            out[mask] *= cap / peak
    return out


def _pin(bias, pinned):
    if pinned:
        bias = bias.copy()
        for i, v in pinned.items():
            bias[i] = v
    return bias


@dataclass(frozen=True, eq=False)
class BfdcqoResult:
    best_spins: np.ndarray
    best_energy: float
    final_bias: np.ndarray
    evals: FunctionEvalCounter
    samples: list[SampleSet]
    history: list[dict]

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "best_energy", "mean_energy", "cvar_energy", "evals"])
        for row in self.history:
            w.writerow([row["iteration"], repr(row["best_energy"]), repr(row["mean_energy"]),
                        repr(row["cvar_energy"]), row["evals"]])
        return buf.getvalue()


def run(
    problem: HuboProblem,
    initial_bias,
    config: BfdcqoConfig,
    pinned: Mapping[int, float] | None = None,
) -> BfdcqoResult:
    """Iterate circuit -> samples -> CVaR bias update, tracking the incumbent.

    ``pinned`` entries are held at their values through every update (used
    for branch constraints). Iteration k samples with seed
    ``derive_seed(rng_seed, k)``.
    """
    bias = np.asarray(initial_bias, dtype=float)
    if bias.shape != (problem.n,):
        raise ValueError(f"bias has shape {bias.shape}, expected ({problem.n},)")
    bias = _pin(bias, pinned)
    best_z, best_e = None, np.inf
    evals = FunctionEvalCounter()
    all_samples, history = [], []
    for it in range(config.iterations):
        circuit = build_cd_circuit(
            problem, driver_for_bias(bias, config.hx_value), config.schedule,
            config.quadrature_panels,
        )
        state = run_circuit(circuit, config.max_qubits)
        samples = sample(state, problem, config.n_shots, derive_seed(config.rng_seed, it))
        evals = evals + FunctionEvalCounter(quantum_shots=config.n_shots)
        if config.post_process is not None:
            post = replace(config.post_process, rng_seed=derive_seed(config.rng_seed, it, 1))
            samples, used = greedy_post_process(problem, samples, post)
            evals = evals + FunctionEvalCounter(greedy_flips=used)
        z, e = samples.best
        if e < best_e:
            best_z, best_e = z, e
        bias = _pin(cvar_bias_update(samples, config.cvar_fraction), pinned)
        all_samples.append(samples)
        history.append({
            "iteration": it,
            "best_energy": float(best_e),
            "mean_energy": samples.mean_energy(),
            "cvar_energy": samples.cvar(config.cvar_fraction),
            "evals": evals.total(),
        })
    return BfdcqoResult(best_z, float(best_e), bias, evals, all_samples, history)

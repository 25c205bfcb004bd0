"""Function-evaluation accounting and seed derivation.

One function evaluation is one energy measurement: a measured quantum shot,
a proposed annealing flip, or a flip evaluated by greedy descent.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class FunctionEvalCounter:
    quantum_shots: int = 0
    sa_flips: int = 0
    greedy_flips: int = 0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative")

    def total(self) -> int:
        return self.quantum_shots + self.sa_flips + self.greedy_flips

    def __add__(self, other: "FunctionEvalCounter") -> "FunctionEvalCounter":
        if not isinstance(other, FunctionEvalCounter):
            return NotImplemented
        return FunctionEvalCounter(
            self.quantum_shots + other.quantum_shots,
            self.sa_flips + other.sa_flips,
            self.greedy_flips + other.greedy_flips,
        )

    def as_dict(self) -> dict:
        return {**asdict(self), "total": self.total()}


def ledger_merge(*evals: FunctionEvalCounter) -> FunctionEvalCounter:
    out = FunctionEvalCounter()
    for e in evals:
        out = out + e
    return out


def approximate_bbb_budget(K: int, iterations: int, n_shots: int) -> FunctionEvalCounter:
    """Quantum shots spent by an approximate tree of depth K without post-processing."""
    return FunctionEvalCounter(quantum_shots=(2 * K + 1) * iterations * n_shots)


def sa_budget(n: int, sweeps: int, reads: int) -> FunctionEvalCounter:
    return FunctionEvalCounter(sa_flips=n * sweeps * reads)


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the stream named by ``(seed, *path)``.

    Streams with different paths are statistically independent, so per-read,
    per-node and per-iteration randomness never depends on execution order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))

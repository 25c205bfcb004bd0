"""Classical baselines: simulated annealing, greedy descent, brute force."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .hubo import CapExceededError, HuboProblem, ProblemError, SampleSet, as_spins, energy, index_to_spins
from .ledger import FunctionEvalCounter, derive_rng

BRUTE_FORCE_CAP = 24


@dataclass(frozen=True)
class SaConfig:
    """Geometric-cooling annealing. Missing temperatures are calibrated per problem."""

    sweeps: int = 1000
    reads: int = 100
    t_initial: float | None = None
    t_final: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1 or self.reads < 1:
            raise ValueError("sweeps and reads must be positive")
        for t in (self.t_initial, self.t_final):
            if t is not None and not t >= 0:
                raise ValueError("temperatures must be nonnegative")
        if self.t_initial is not None and self.t_final is not None:
            if self.t_final > self.t_initial:
                raise ValueError("t_final must not exceed t_initial")


@dataclass(frozen=True)
class GreedyConfig:
    sweeps: int = 15
    top_k: int = 150
    rng_seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1 or self.top_k < 1:
            raise ValueError("sweeps and top_k must be positive")


def default_temperatures(problem: HuboProblem, rng: np.random.Generator, probes: int = 1000):
    """t_initial = largest |dE| over random single-flip probes, t_final = 1e-3 of it."""
    adj = problem.adjacency
    biggest = 0.0
    for _ in range(probes):
        z = rng.choice(np.array([-1, 1], dtype=np.int8), size=problem.n)
        i = int(rng.integers(problem.n))
        biggest = max(biggest, abs(_kernels.delta(z, i, *adj)))
    if biggest == 0.0:
        biggest = 1.0
    return biggest, 1e-3 * biggest


def temperature_ladder(t_initial: float, t_final: float, sweeps: int) -> np.ndarray:
    if sweeps == 1:
        return np.array([t_initial])
    if t_final == t_initial:
        return np.full(sweeps, t_initial)
    r = (t_final / t_initial) ** (1.0 / (sweeps - 1))
    return t_initial * r ** np.arange(sweeps)


@dataclass(frozen=True, eq=False)
class SaResult:
    samples: SampleSet
    evals: FunctionEvalCounter
    read_energies: np.ndarray
    read_flips: np.ndarray
    t_initial: float
    t_final: float

    def per_read_rows(self):
        """(read, final energy, accepted flips) per read."""
        return [
            (r, float(e), int(f))
            for r, (e, f) in enumerate(zip(self.read_energies, self.read_flips))
        ]


def simulated_annealing(problem: HuboProblem, config: SaConfig) -> SaResult:
    """Metropolis annealing natively on the cubic objective.

    Each sweep proposes every spin once in a fresh random order. Read r draws
    all its randomness from stream ``(rng_seed, r)``.
    """
    n = problem.n
    t0, t1 = config.t_initial, config.t_final
    if t0 is None or t1 is None:
        d0, d1 = default_temperatures(problem, derive_rng(config.rng_seed, 1 << 30))
        t0 = d0 if t0 is None else t0
        t1 = min(d1, t0) if t1 is None else t1
    temps = temperature_ladder(t0, t1, config.sweeps)
    adj = problem.adjacency
    finals = np.empty((config.reads, n), dtype=np.int8)
    flips = np.zeros(config.reads, dtype=np.int64)
    for r in range(config.reads):
        rng = derive_rng(config.rng_seed, r)
        z = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
        order = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (config.sweeps, 1)), axis=1)
        uniforms = rng.random((config.sweeps, n))
        flips[r] = _kernels.anneal(z, temps, order, uniforms, *adj)
        finals[r] = z
    samples = SampleSet.from_spins(problem, finals)
    read_e = np.array([energy(problem, z) for z in finals])
    evals = FunctionEvalCounter(sa_flips=config.sweeps * n * config.reads)
    return SaResult(samples, evals, read_e, flips, float(t0), float(t1))


def greedy_local_search(
    problem: HuboProblem, z, config: GreedyConfig | None = None, rng=None
) -> tuple[np.ndarray, int]:
    """Accept only strictly improving single flips, visiting spins in shuffled order.

    Returns the refined assignment and the number of flip evaluations.
    """
    config = config or GreedyConfig()
    z = as_spins(problem, z).copy()
    if problem.n == 0:
        return z, 0
    rng = rng if rng is not None else derive_rng(config.rng_seed)
    order = rng.permuted(np.tile(np.arange(problem.n, dtype=np.int64), (config.sweeps, 1)), axis=1)
    used = _kernels.greedy(z, order, *problem.adjacency)
    return z, int(used)


def is_local_minimum(problem: HuboProblem, z) -> bool:
    z = as_spins(problem, z)
    adj = problem.adjacency
    return all(_kernels.delta(z, i, *adj) >= 0.0 for i in range(problem.n))


def greedy_post_process(
    problem: HuboProblem, samples: SampleSet, config: GreedyConfig | None = None
) -> tuple[SampleSet, int]:
    """Refine the ``top_k`` lowest-energy distinct records by greedy descent."""
    config = config or GreedyConfig()
    if not len(samples):
        raise ProblemError("empty sample set")
    k = min(config.top_k, len(samples))
    spins = samples.spins.copy()
    used = 0
    for r in range(k):
        spins[r], u = greedy_local_search(
            problem, spins[r], config, rng=derive_rng(config.rng_seed, r)
        )
        used += u
    return SampleSet.from_spins(problem, spins, samples.counts), used


@dataclass(frozen=True, eq=False)
class BruteForceResult:
    spins: np.ndarray
    energy: float
    index: int
    spectrum: np.ndarray | None = None


def brute_force(problem: HuboProblem, spectrum: bool = False, cap: int = BRUTE_FORCE_CAP):
    """Exhaustive Gray-code scan with incremental energy updates.

    Ties within floating tolerance resolve to the lowest basis index. With
    ``spectrum=True`` the energies of all 2**n assignments are returned sorted.
    """
    n = problem.n
    if n > cap:
        raise CapExceededError(f"brute force limited to {cap} spins, got {n}")
    if n == 0:
        z = np.zeros(0, dtype=np.int8)
        spec = np.array([0.0]) if spectrum else None
        return BruteForceResult(z, 0.0, 0, spec)
    e0 = energy(problem, np.ones(n, dtype=np.int8))
    tol = 1e-10 * (1.0 + problem.abs_coefficient_sum())
    idx, _, spec = _kernels.gray_scan(n, e0, tol, spectrum, *problem.adjacency)
    z = index_to_spins([idx], n)[0]
    return BruteForceResult(z, energy(problem, z), int(idx), np.sort(spec) if spectrum else None)


def ground_energy(problem: HuboProblem) -> float:
    return brute_force(problem).energy


def ferromagnetic_chain(n: int, J: float = -1.0) -> HuboProblem:
    return HuboProblem(n, {}, {(i, i + 1): J for i in range(n - 1)}, {})


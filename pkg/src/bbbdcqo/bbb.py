"""Branch-and-bound over bias fields.

``approximate_bbb`` grows a single path: at each layer the least certain free
spin is branched to bias +W and -W, both children run BF-DCQO, and the worse
child is pruned. Constraints live only in the bias (the problem is never
reduced), so transverse fluctuations still act on constrained spins.

``exact_bbb`` is best-first branch-and-bound with a pluggable relaxation;
fixed spins are substituted out of the problem.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from . import bfdcqo
from .bfdcqo import BfdcqoConfig, BfdcqoResult, rescale_bias, warm_start_bias
from .classical import brute_force
from .hubo import CapExceededError, HuboProblem, as_spins, energy
from .ledger import FunctionEvalCounter, derive_seed, ledger_merge


class BudgetExceededError(CapExceededError):
    """The planned number of BF-DCQO runs exceeds the configured budget."""


class RelaxationContractError(AssertionError):
    """A relaxation oracle returned a bound above the constrained optimum."""


@dataclass(frozen=True, eq=False)
class BbbConfig:
    K: int = 3
    W: float = 1.0
    rescale_cap: float = 3.0
    bf_config: BfdcqoConfig = field(default_factory=BfdcqoConfig)
    warm_start: np.ndarray | None = None
    warm_start_scale: float = 1.0
    warm_start_evals: FunctionEvalCounter = field(default_factory=FunctionEvalCounter)
    max_runs: int | None = None

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if not self.W > 0:
            raise ValueError("W must be positive")
        if not self.rescale_cap > 0:
            raise ValueError("rescale_cap must be positive")


@dataclass(eq=False)
class BranchNode:
    depth: int
    bias: np.ndarray
    constraints: tuple[tuple[int, int], ...]
    best_z: np.ndarray
    best_energy: float
    final_bias: np.ndarray
    evals: FunctionEvalCounter
    children: list["BranchNode"] = field(default_factory=list)
    pruned: bool = False

    @property
    def constrained_index(self) -> int | None:
        return self.constraints[-1][0] if self.constraints else None

    @property
    def sign(self) -> int | None:
        return self.constraints[-1][1] if self.constraints else None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def dump(self) -> str:
        """One line per node: depth, constrained_index, sign, best_energy, pruned."""
        lines = ["depth,constrained_index,sign,best_energy,pruned"]
        for node in self.walk():
            idx = "" if node.constrained_index is None else node.constrained_index
            sign = "" if node.sign is None else f"{node.sign:+d}"
            lines.append(f"{node.depth},{idx},{sign},{node.best_energy!r},{int(node.pruned)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class BbbResult:
    best_spins: np.ndarray
    best_energy: float
    tree: BranchNode
    evals: FunctionEvalCounter
    runs: int


def _node(depth, bias, constraints, res: BfdcqoResult) -> BranchNode:
    return BranchNode(depth, bias, tuple(constraints), res.best_spins, res.best_energy,
                      res.final_bias, res.evals)


def select_branch_index(bias, constrained) -> int | None:
    """argmin |bias| over unconstrained entries, lowest index on ties."""
    free = [j for j in range(len(bias)) if j not in constrained]
    if not free:
        return None
    mags = np.abs(np.asarray(bias)[free])
    return free[int(np.argmin(mags))]


def approximate_bbb(problem: HuboProblem, config: BbbConfig) -> BbbResult:
    """Branch-and-prune tree of depth K: exactly 2K+1 BF-DCQO runs.

    Child runs at depth d use seed ``derive_seed(seed, d, 0)`` for the +W
    branch and ``derive_seed(seed, d, 1)`` for -W; the root uses the
    configured seed unchanged.
    """
    if config.max_runs is not None and 2 * config.K + 1 > config.max_runs:
        raise BudgetExceededError(f"{2 * config.K + 1} runs exceed the budget of {config.max_runs}")
    bf = config.bf_config
    n = problem.n
    best_z, best_e = None, np.inf
    if config.warm_start is not None:
        best_z = as_spins(problem, config.warm_start)
        best_e = energy(problem, best_z)
        root_bias = warm_start_bias(best_z, config.warm_start_scale)
    else:
        root_bias = np.zeros(n)
    res = bfdcqo.run(problem, root_bias, bf)
    root = _node(0, root_bias, (), res)
    runs = 1
    ledger = [config.warm_start_evals, res.evals]
    if res.best_energy < best_e:
        best_z, best_e = res.best_spins, res.best_energy

    current = root
    constraints: dict[int, int] = {}
    for depth in range(1, config.K + 1):
        i = select_branch_index(current.final_bias, constraints)
        if i is None:
            break
        base = rescale_bias(current.final_bias, config.rescale_cap, exclude=constraints)
        children = []
        for tag, sign in enumerate((1, -1)):
            cons = {**constraints, i: sign}
            pinned = {j: s * config.W for j, s in cons.items()}
            bias = base.copy()
            for j, v in pinned.items():
                bias[j] = v
            cfg = replace(bf, rng_seed=derive_seed(bf.rng_seed, depth, tag))
            child_res = bfdcqo.run(problem, bias, cfg, pinned=pinned)
            runs += 1
            ledger.append(child_res.evals)
            children.append(_node(depth, bias, cons.items(), child_res))
        current.children = children
        plus, minus = children
        keep, drop = (plus, minus) if plus.best_energy <= minus.best_energy else (minus, plus)
        drop.pruned = True
        if keep.best_energy < best_e:
            best_z, best_e = keep.best_z, keep.best_energy
        constraints = dict(keep.constraints)
        current = keep
    return BbbResult(best_z, float(best_e), root, ledger_merge(*ledger), runs)


# -- exact mode -------------------------------------------------------------

RelaxationOracle = Callable[[HuboProblem, Mapping[int, int]], tuple[np.ndarray, float]]


def brute_force_relaxation(problem: HuboProblem, fixed: Mapping[int, int]):
    """Exact minimum over the free spins: the tightest admissible bound."""
    reduced, offset, free = problem.fix_spins(fixed)
    bf = brute_force(reduced)
    z = np.zeros(problem.n)
    for i, s in fixed.items():
        z[i] = s
    z[free] = bf.spins
    return z, offset + bf.energy


def trivial_relaxation(problem: HuboProblem, fixed: Mapping[int, int]):
    """Bound every free term by -|coefficient|; relaxed spins are 0."""
    reduced, offset, _ = problem.fix_spins(fixed)
    z = np.zeros(problem.n)
    for i, s in fixed.items():
        z[i] = s
    return z, offset - reduced.abs_coefficient_sum()


@dataclass(frozen=True, eq=False)
class ExactResult:
    best_spins: np.ndarray
    best_energy: float
    node_count: int
    evals: FunctionEvalCounter


def _constrained_minimum(problem, fixed):
    reduced, offset, _ = problem.fix_spins(fixed)
    return offset + brute_force(reduced).energy


def exact_bbb(
    problem: HuboProblem,
    oracle: RelaxationOracle = brute_force_relaxation,
    bf_config: BfdcqoConfig | None = None,
    check_admissible: bool = False,
) -> ExactResult:
    """Best-first search by lower bound with BF-DCQO incumbents at every node.

    A node is pruned when its bound reaches the incumbent; otherwise the free
    spin with the smallest |relaxed value| is fixed to +1 and -1. A relaxed
    solution that is already integral counts as a feasible candidate.
    ``node_count`` counts nodes taken off the frontier.
    """
    bf_config = bf_config or BfdcqoConfig(iterations=1, n_shots=200)
    tol = 1e-9 * (1.0 + problem.abs_coefficient_sum())
    seq = itertools.count()
    ub, best = np.inf, None
    evals = FunctionEvalCounter()
    node_count = 0

    def relax(fixed):
        zt, lb = oracle(problem, fixed)
        zt = np.asarray(zt, dtype=float)
        if check_admissible and lb > _constrained_minimum(problem, fixed) + tol:
            raise RelaxationContractError(f"bound {lb} exceeds the optimum under {dict(fixed)}")
        return zt, float(lb)

    zt, lb = relax({})
    frontier = [(lb, next(seq), {}, zt)]
    while frontier:
        lb, _, fixed, zt = heapq.heappop(frontier)
        node_count += 1
        if lb >= ub - tol:
            continue
        if np.all(np.abs(zt) == 1.0):
            cand = zt.astype(np.int8)
            e = energy(problem, cand)
            if e < ub:
                ub, best = e, cand
        reduced, offset, free = problem.fix_spins(fixed)
        if free:
            cfg = replace(bf_config, rng_seed=derive_seed(bf_config.rng_seed, node_count))
            res = bfdcqo.run(reduced, zt[free], cfg)
            evals = evals + res.evals
            z = np.zeros(problem.n, dtype=np.int8)
            for i, s in fixed.items():
                z[i] = s
            z[free] = res.best_spins
            e = energy(problem, z)
            if e < ub:
                ub, best = e, z
        else:
            z = np.array([fixed[i] for i in range(problem.n)], dtype=np.int8)
            e = energy(problem, z)
            if e < ub:
                ub, best = e, z
        if lb >= ub - tol or not free:
            continue
        mags = np.abs(zt[free])
        i = free[int(np.argmin(mags))]
        for sign in (1, -1):
            child = {**fixed, i: sign}
            czt, clb = relax(child)
            heapq.heappush(frontier, (clb, next(seq), child, czt))
    return ExactResult(best, float(ub), node_count, evals)

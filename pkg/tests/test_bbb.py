import numpy as np
import pytest

from bbbdcqo import bbb
from bbbdcqo.bbb import (
    BbbConfig,
    BudgetExceededError,
    RelaxationContractError,
    approximate_bbb,
    brute_force_relaxation,
    exact_bbb,
    select_branch_index,
    trivial_relaxation,
)
from bbbdcqo.bfdcqo import BfdcqoConfig, run
from bbbdcqo.classical import SaConfig, brute_force, simulated_annealing
from bbbdcqo.hubo import InstanceSpec, energy, generate
from dense import chain

FAST = BfdcqoConfig(iterations=1, n_shots=200, rng_seed=3)


@pytest.fixture
def count_runs(monkeypatch):
    calls = []
    real = bbb.bfdcqo.run

    def spy(*args, **kwargs):
        calls.append(args)
        return real(*args, **kwargs)

    monkeypatch.setattr(bbb.bfdcqo, "run", spy)
    return calls


class TestApproximate:
    @pytest.mark.parametrize("K", [0, 1, 2, 3, 4])
    def test_run_count(self, K, count_runs):
        res = approximate_bbb(chain(10, K), BbbConfig(K=K, bf_config=FAST))
        assert len(count_runs) == res.runs == 2 * K + 1
        assert res.evals.quantum_shots == (2 * K + 1) * 200

    def test_k_zero_is_plain_bfdcqo(self):
        p = chain(10, 1)
        cfg = BfdcqoConfig(iterations=2, n_shots=500, rng_seed=8)
        a = approximate_bbb(p, BbbConfig(K=0, bf_config=cfg))
        b = run(p, np.zeros(10), cfg)
        assert a.best_energy == b.best_energy
        np.testing.assert_array_equal(a.best_spins, b.best_spins)
        assert a.evals == b.evals

    def test_tree_invariants(self):
        W = 2.0
        res = approximate_bbb(chain(10, 2), BbbConfig(K=4, W=W, bf_config=FAST))
        nodes = list(res.tree.walk())
        assert len(nodes) == 9
        node = res.tree
        path_best = [node.best_energy]
        while node.children:
            plus, minus = node.children
            assert plus.pruned != minus.pruned
            keep = minus if plus.pruned else plus
            assert set(node.constraints) < set(keep.constraints)
            assert keep.depth == len(keep.constraints)
            idx = [i for i, _ in keep.constraints]
            assert len(set(idx)) == len(idx)
            for i, s in keep.constraints:
                assert keep.bias[i] == s * W
            path_best.append(min(path_best[-1], keep.best_energy))
            node = keep
        assert res.best_energy <= min(path_best)
        dump = res.tree.dump().splitlines()
        assert dump[0] == "depth,constrained_index,sign,best_energy,pruned"
        assert len(dump) == 10

    def test_tie_keeps_plus_branch(self):
        res = approximate_bbb(chain(8, 0), BbbConfig(K=2, bf_config=BfdcqoConfig(n_shots=2000)))
        for node in res.tree.walk():
            if node.children:
                plus, minus = node.children
                if plus.best_energy == minus.best_energy:
                    assert minus.pruned and not plus.pruned

    def test_rescale_applies_to_free_entries(self, count_runs):
        approximate_bbb(chain(8, 5), BbbConfig(K=2, W=30.0, rescale_cap=0.5, bf_config=FAST))
        for args in count_runs[1:]:
            bias = args[1]
            big = np.abs(bias) == 30.0
            assert big.sum() >= 1
            assert np.all(np.abs(bias[~big]) <= 0.5 + 1e-12)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            approximate_bbb(chain(6, 0), BbbConfig(K=3, bf_config=FAST, max_runs=6))

    def test_warm_start(self):
        p = chain(10, 7)
        sa = simulated_annealing(p, SaConfig(sweeps=20, reads=5))
        z, e = sa.samples.best
        res = approximate_bbb(p, BbbConfig(K=1, bf_config=FAST, warm_start=z, warm_start_evals=sa.evals))
        assert res.best_energy <= e
        assert res.evals.sa_flips == sa.evals.sa_flips
        np.testing.assert_array_equal(res.tree.bias, z)

    def test_reproducible(self):
        p = chain(10, 9)
        cfg = BbbConfig(K=2, W=2.0, bf_config=FAST)
        assert approximate_bbb(p, cfg).tree.dump() == approximate_bbb(p, cfg).tree.dump()

    def test_dense_paired_budget(self):
        wins = 0
        for s in range(10):
            p = generate(InstanceSpec(n=12, topology="dense", n2=24, n3=32, seed=s))
            tree = approximate_bbb(
                p, BbbConfig(K=3, W=2.0, bf_config=BfdcqoConfig(iterations=2, n_shots=500, rng_seed=s))
            )
            plain = run(p, np.zeros(12), BfdcqoConfig(iterations=2, n_shots=3500, rng_seed=s))
            assert tree.evals.total() == plain.evals.total()
            wins += tree.best_energy <= plain.best_energy + 1e-12
        assert wins >= 7

    def test_branch_selection(self):
        assert select_branch_index([0.5, -0.1, 0.1, 0.9], {}) == 1
        assert select_branch_index([0.5, -0.1, 0.1, 0.9], {1: 1}) == 2
        assert select_branch_index([1.0, 1.0], {0: 1, 1: -1}) is None


class TestExact:
    def test_optimal_n10(self):
        for s in range(10):
            p = chain(10, 100 + s)
            res = exact_bbb(p, brute_force_relaxation, FAST)
            assert res.best_energy == pytest.approx(brute_force(p).energy, abs=1e-12)
            assert energy(p, res.best_spins) == res.best_energy

    def test_root_solved(self):
        res = exact_bbb(chain(10, 3), brute_force_relaxation, FAST)
        assert res.node_count == 1

    def test_trivial_oracle(self):
        for s in range(3):
            p = chain(8, s)
            strong = exact_bbb(p, brute_force_relaxation, FAST)
            weak = exact_bbb(p, trivial_relaxation, FAST, check_admissible=True)
            assert weak.best_energy == pytest.approx(brute_force(p).energy, abs=1e-12)
            assert weak.node_count >= strong.node_count

    def test_larger_instances(self):
        for n in (14, 16):
            p = generate(InstanceSpec(n=n, topology="dense", n2=n, n3=n, seed=n))
            assert exact_bbb(p, brute_force_relaxation, FAST).best_energy == pytest.approx(
                brute_force(p).energy, abs=1e-12)

    def test_inadmissible_oracle_detected(self):
        def liar(problem, fixed):
            z, lb = brute_force_relaxation(problem, fixed)
            return z, lb + 1.0

        with pytest.raises(RelaxationContractError):
            exact_bbb(chain(6, 0), liar, FAST, check_admissible=True)

    def test_relaxations_admissible(self):
        p = chain(8, 4)
        for fixed in ({}, {0: 1}, {2: -1, 5: 1}):
            reduced, offset, _ = p.fix_spins(fixed)
            opt = offset + brute_force(reduced).energy
            assert brute_force_relaxation(p, fixed)[1] == pytest.approx(opt)
            assert trivial_relaxation(p, fixed)[1] <= opt

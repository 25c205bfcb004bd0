import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbbdcqo.classical import (
    GreedyConfig,
    SaConfig,
    brute_force,
    ferromagnetic_chain,
    greedy_local_search,
    greedy_post_process,
    is_local_minimum,
    simulated_annealing,
    temperature_ladder,
)
from bbbdcqo.hubo import (
    CapExceededError,
    HuboProblem,
    InstanceSpec,
    SampleSet,
    energies,
    energy,
    generate,
    index_to_spins,
)
from bbbdcqo.ledger import derive_rng, sa_budget
from dense import chain


def naive_scan(problem):
    Z = index_to_spins(np.arange(1 << problem.n), problem.n)
    e = energies(problem, Z)
    return e.min(), np.sort(e)


class TestSimulatedAnnealing:
    def test_ferromagnet(self):
        p = ferromagnetic_chain(8)
        res = simulated_annealing(p, SaConfig(sweeps=200, reads=100, rng_seed=1))
        ground = sum(c for s, e, c in zip(res.samples.spins, res.samples.energies, res.samples.counts)
                     if abs(e + 7) < 1e-12 and abs(s.sum()) == 8)
        assert ground >= 99

    def test_eval_ledger(self):
        p = chain(12, 0)
        res = simulated_annealing(p, SaConfig(sweeps=50, reads=7))
        assert res.evals.sa_flips == 50 * 12 * 7 == res.evals.total()
        assert res.samples.total_shots == 7
        assert sa_budget(156, 1000, 100).total() == 15_600_000

    def test_reproducible(self):
        p = chain(10, 3)
        a = simulated_annealing(p, SaConfig(sweeps=30, reads=10, rng_seed=5))
        b = simulated_annealing(p, SaConfig(sweeps=30, reads=10, rng_seed=5))
        np.testing.assert_array_equal(a.samples.spins, b.samples.spins)
        np.testing.assert_array_equal(a.read_flips, b.read_flips)

    def test_zero_temperature_matches_greedy_stream(self):
        p = chain(12, 9)
        sweeps, seed = 20, 4
        res = simulated_annealing(p, SaConfig(sweeps=sweeps, reads=5, t_initial=0.0, t_final=0.0,
                                              rng_seed=seed))
        for r, (e_read, _) in enumerate(zip(res.read_energies, res.read_flips)):
            rng = derive_rng(seed, r)
            z0 = rng.choice(np.array([-1, 1], dtype=np.int8), size=12)
            z, _ = greedy_local_search(p, z0, GreedyConfig(sweeps=sweeps), rng=rng)
            assert energy(p, z) == e_read
            assert e_read <= energy(p, z0)

    def test_ladder(self):
        t = temperature_ladder(2.0, 0.002, 11)
        assert t[0] == 2.0 and t[-1] == pytest.approx(0.002)
        np.testing.assert_allclose(t[1:] / t[:-1], (0.001) ** 0.1)

    def test_invalid_temperatures(self):
        with pytest.raises(ValueError):
            SaConfig(t_initial=0.1, t_final=1.0)
        with pytest.raises(ValueError):
            SaConfig(sweeps=0)

    def test_per_read_rows(self):
        res = simulated_annealing(chain(6, 0), SaConfig(sweeps=5, reads=3))
        rows = res.per_read_rows()
        assert [r for r, _, _ in rows] == [0, 1, 2]


class TestGreedy:
    def test_single_spin(self):
        p = HuboProblem.from_terms(1, {0: 1.0})
        z, _ = greedy_local_search(p, [1])
        assert z.tolist() == [-1]

    def test_fixed_point(self):
        p = chain(12, 2)
        z = brute_force(p).spins
        out, used = greedy_local_search(p, z)
        np.testing.assert_array_equal(out, z)
        assert used == 12

    def test_local_minimum_random(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            p = generate(InstanceSpec(n=12, topology="dense", n2=20, n3=20, seed=seed))
            z0 = rng.choice(np.array([-1, 1], dtype=np.int8), size=12)
            z, _ = greedy_local_search(p, z0, rng=rng)
            assert is_local_minimum(p, z)
            assert energy(p, z) <= energy(p, z0)
            for i in range(12):
                w = z.copy()
                w[i] = -w[i]
                assert energy(p, w) >= energy(p, z)

    @given(st.integers(0, 10_000), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_energy_never_increases(self, inst, seed):
        p = chain(9, inst)
        rng = np.random.default_rng(seed)
        z0 = rng.choice(np.array([-1, 1], dtype=np.int8), size=9)
        z, _ = greedy_local_search(p, z0, GreedyConfig(sweeps=1), rng=rng)
        assert energy(p, z) <= energy(p, z0)


class TestPostProcess:
    def test_monotone(self):
        rng = np.random.default_rng(1)
        for k in range(100):
            p = chain(8, k)
            s = SampleSet.from_spins(p, rng.choice(np.array([-1, 1], dtype=np.int8), size=(20, 8)))
            out, used = greedy_post_process(p, s, GreedyConfig(top_k=5))
            assert out.energies[0] <= s.energies[0]
            assert out.total_shots == s.total_shots
            assert used > 0

    def test_local_minima_unchanged(self):
        p = chain(10, 3)
        z = brute_force(p).spins
        s = SampleSet.from_spins(p, np.stack([z, z]))
        out, _ = greedy_post_process(p, s)
        np.testing.assert_array_equal(out.spins, s.spins)
        np.testing.assert_array_equal(out.counts, s.counts)

    def test_single_record(self):
        p = chain(10, 4)
        z0 = np.ones(10, dtype=np.int8)
        out, _ = greedy_post_process(p, SampleSet.from_spins(p, z0[None]), GreedyConfig(rng_seed=3))
        z, _ = greedy_local_search(p, z0, rng=derive_rng(3, 0))
        np.testing.assert_array_equal(out.spins[0], z)


class TestBruteForce:
    def test_antiferro_pair(self):
        res = brute_force(HuboProblem.from_terms(2, quadratic={(0, 1): 1.0}))
        assert res.energy == -1.0 and res.spins[0] == -res.spins[1]

    def test_against_naive_scan(self):
        for seed in range(10):
            p = generate(InstanceSpec(n=10, topology="dense", n2=15, n3=20, seed=seed))
            res = brute_force(p, spectrum=True)
            emin, spec = naive_scan(p)
            assert res.energy == pytest.approx(emin, abs=1e-12)
            np.testing.assert_allclose(res.spectrum, spec, atol=1e-10)
            assert energy(p, res.spins) == res.energy

    def test_ferromagnet(self):
        assert brute_force(ferromagnetic_chain(16)).energy == -15.0

    def test_lowest_index_on_ties(self):
        res = brute_force(ferromagnetic_chain(4))
        assert res.index == 0 and res.spins.tolist() == [1, 1, 1, 1]

    def test_cap(self):
        with pytest.raises(CapExceededError):
            brute_force(chain(6, 0), cap=5)

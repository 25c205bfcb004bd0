import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbbdcqo.hubo import (
    HuboProblem,
    InstanceSpec,
    ProblemError,
    SampleSet,
    cvar_count,
    delta_energy,
    energies,
    energy,
    generate,
    index_to_spins,
    order_energies,
    parse,
    serialize,
    spins_to_index,
)
from dense import chain, naive_energy


@st.composite
def problems(draw, max_n=8):
    n = draw(st.integers(3, max_n))
    coef = st.floats(-2, 2, allow_nan=False).filter(lambda c: c != 0)
    lin = draw(st.dictionaries(st.integers(0, n - 1), coef, max_size=n))
    pairs = list(itertools.combinations(range(n), 2))
    triples = list(itertools.combinations(range(n), 3))
    quad = draw(st.dictionaries(st.sampled_from(pairs), coef, max_size=6))
    cub = draw(st.dictionaries(st.sampled_from(triples), coef, max_size=6))
    return HuboProblem.from_terms(n, lin, quad, cub)


def random_spins(rng, n, k=None):
    shape = (n,) if k is None else (k, n)
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=shape)


class TestEnergy:
    def test_single_linear(self):
        p = HuboProblem.from_terms(1, {0: 1.0})
        assert energy(p, [1]) == 1.0

    def test_cubic_sign_product(self):
        p = HuboProblem.from_terms(3, cubic={(0, 1, 2): 2.0})
        assert energy(p, [1, -1, 1]) == -2.0

    def test_against_term_summation(self):
        p = generate(InstanceSpec(n=10, topology="dense", n2=20, n3=30, seed=3))
        rng = np.random.default_rng(0)
        Z = random_spins(rng, 10, 1000)
        batch = energies(p, Z)
        for z, e in zip(Z, batch):
            assert e == pytest.approx(naive_energy(p, z), abs=1e-12)

    def test_length_mismatch(self):
        p = HuboProblem.from_terms(2, {0: 1.0})
        with pytest.raises(ProblemError):
            energy(p, [1, 1, 1])

    def test_non_spin_entries(self):
        p = HuboProblem.from_terms(2, {0: 1.0})
        with pytest.raises(ProblemError):
            energy(p, [1, 0])

    @given(problems(), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_global_flip(self, p, seed):
        z = random_spins(np.random.default_rng(seed), p.n)
        L, Q, C = (a[0] for a in order_energies(p, z[None]))
        assert energy(p, -z) == pytest.approx(-L + Q - C, abs=1e-12)
        assert energy(p, z) == pytest.approx(L + Q + C, abs=1e-12)

    def test_empty_problem(self):
        p = HuboProblem.from_terms(4)
        doc = serialize(p)
        q = parse(doc)
        assert q == p
        assert energy(q, [1, -1, 1, -1]) == 0.0


class TestDelta:
    def test_single_spin(self):
        p = HuboProblem.from_terms(1, {0: 1.0})
        assert delta_energy(p, [1], 0) == -2.0

    def test_matches_full_evaluations(self):
        p = chain(12, 5)
        rng = np.random.default_rng(1)
        for _ in range(100):
            z = random_spins(rng, 12)
            i = int(rng.integers(12))
            w = z.copy()
            w[i] = -w[i]
            assert delta_energy(p, z, i) == pytest.approx(energy(p, w) - energy(p, z), abs=1e-12)

    @given(problems(), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_involution(self, p, seed):
        rng = np.random.default_rng(seed)
        z = random_spins(rng, p.n)
        i = int(rng.integers(p.n))
        w = z.copy()
        w[i] = -w[i]
        assert delta_energy(p, z, i) + delta_energy(p, w, i) == pytest.approx(0.0, abs=1e-12)

    def test_index_out_of_range(self):
        p = HuboProblem.from_terms(2, {0: 1.0})
        with pytest.raises(ProblemError):
            delta_energy(p, [1, 1], 2)

    def test_flip_chains(self):
        rng = np.random.default_rng(2)
        for n in (5, 12, 20):
            p = generate(InstanceSpec(n=n, topology="dense", n2=2 * n, n3=2 * n, seed=n))
            for _ in range(10):
                z = random_spins(rng, n)
                e = energy(p, z)
                for i in rng.integers(n, size=1000):
                    e += delta_energy(p, z, int(i))
                    z[i] = -z[i]
                assert e == pytest.approx(energy(p, z), abs=1e-9)


class TestCanonicalForm:
    def test_rejects_unordered_keys(self):
        with pytest.raises(ProblemError):
            HuboProblem(3, {}, {(1, 0): 1.0}, {})

    def test_rejects_explicit_zero(self):
        with pytest.raises(ProblemError):
            HuboProblem(3, {0: 0.0}, {}, {})

    def test_rejects_out_of_range(self):
        with pytest.raises(ProblemError):
            HuboProblem.from_terms(3, {3: 1.0})

    def test_from_terms_merges_permutations(self):
        p = HuboProblem.from_terms(3, quadratic={(1, 0): 1.0, (0, 1): 0.5})
        assert p.quadratic == {(0, 1): 1.5}

    def test_fix_spins_offset(self):
        p = chain(8, 2)
        fixed = {1: -1, 4: 1}
        reduced, offset, free = p.fix_spins(fixed)
        rng = np.random.default_rng(0)
        for _ in range(50):
            zr = random_spins(rng, len(free))
            z = np.zeros(8, dtype=np.int8)
            z[free] = zr
            for i, s in fixed.items():
                z[i] = s
            assert energy(p, z) == pytest.approx(offset + energy(reduced, zr), abs=1e-12)


class TestGenerate:
    def test_156_chain_counts(self):
        p = generate(InstanceSpec(n=156, topology="sparse-chain", seed=0))
        assert (len(p.linear), len(p.quadratic), len(p.cubic)) == (156, 155, 154)

    def test_smallest_chain(self):
        p = generate(InstanceSpec(n=3, seed=0))
        assert set(p.quadratic) == {(0, 1), (1, 2)}
        assert set(p.cubic) == {(0, 1, 2)}

    def test_dense_counts(self):
        p = generate(InstanceSpec(n=20, topology="dense", n2=36, n3=48, seed=1))
        assert (len(p.quadratic), len(p.cubic)) == (36, 48)

    def test_deterministic(self):
        spec = InstanceSpec(n=30, topology="dense", n2=50, n3=60, seed=9)
        assert serialize(generate(spec)) == serialize(generate(spec))

    def test_infeasible_counts(self):
        with pytest.raises(ProblemError):
            generate(InstanceSpec(n=4, topology="dense", n2=7, n3=1))
        with pytest.raises(ProblemError):
            generate(InstanceSpec(n=4, topology="dense", n2=1, n3=5))

    def test_coefficient_range(self):
        p = generate(InstanceSpec(n=50, seed=4, low=-0.5, high=0.25))
        coefs = [c for _, c in p.terms()]
        assert min(coefs) >= -0.5 and max(coefs) < 0.25


class TestSerialization:
    def test_round_trip(self):
        for seed in range(50):
            n = 4 + seed % 9
            p = generate(InstanceSpec(n=n, topology="dense", n2=n, n3=n, seed=seed))
            assert parse(serialize(p, seed=seed)) == p

    @given(problems())
    @settings(max_examples=50, deadline=None)
    def test_round_trip_property(self, p):
        assert parse(serialize(p)) == p

    def test_duplicate_pair_rejected(self):
        doc = {"n": 3, "quadratic": [[0, 1, 1.0], [0, 1, 2.0]]}
        with pytest.raises(ProblemError):
            parse(json.dumps(doc))

    def test_permuted_duplicates_merge(self):
        doc = {"n": 3, "quadratic": [[0, 1, 1.0], [1, 0, 2.0]], "cubic": [[2, 0, 1, 1.0]]}
        p = parse(json.dumps(doc))
        assert p.quadratic == {(0, 1): 3.0}
        assert p.cubic == {(0, 1, 2): 1.0}

    @pytest.mark.parametrize(
        "doc",
        [
            "not json",
            '{"linear": []}',
            '{"n": 2, "linear": [[2, 1.0]]}',
            '{"n": 2, "linear": [[0, "a"]]}',
            '{"n": 3, "quadratic": [[0, 0, 1.0]]}',
            '{"n": 2, "extra": 1}',
            '{"n": 2, "linear": [[0.5, 1.0]]}',
        ],
    )
    def test_malformed(self, doc):
        with pytest.raises(ProblemError):
            parse(doc)


class TestSampleSet:
    def test_sorted_and_aggregated(self):
        p = chain(6, 0)
        rng = np.random.default_rng(0)
        Z = random_spins(rng, 6, 200)
        s = SampleSet.from_spins(p, Z)
        assert s.total_shots == 200
        assert np.all(np.diff(s.energies) >= 0)
        assert len(set(map(tuple, s.spins))) == len(s)
        np.testing.assert_array_equal(s.energies, energies(p, s.spins))

    def test_index_round_trip(self):
        idx = np.arange(64)
        np.testing.assert_array_equal(spins_to_index(index_to_spins(idx, 6)), idx)
        assert index_to_spins([1], 3).tolist() == [[-1, 1, 1]]

    def test_cvar(self):
        p = HuboProblem.from_terms(1, {0: 1.0})
        s = SampleSet.from_spins(p, [[1], [1], [-1]])
        assert s.cvar(1 / 3) == -1.0
        assert s.cvar(2 / 3) == 0.0
        assert s.cvar(1.0) == pytest.approx(1 / 3)

    def test_cvar_count_rounding(self):
        assert cvar_count(0.3, 10) == 3
        assert cvar_count(0.1, 1000) == 100
        assert cvar_count(1e-9, 5) == 1
        with pytest.raises(ProblemError):
            cvar_count(0.0, 10)

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbbdcqo.ledger import (
    FunctionEvalCounter,
    approximate_bbb_budget,
    derive_rng,
    derive_seed,
    ledger_merge,
    sa_budget,
)

counts = st.integers(0, 10**12)


def test_merge_of_zeros():
    assert ledger_merge(FunctionEvalCounter(), FunctionEvalCounter()).total() == 0


def test_mixed_merge():
    e = ledger_merge(FunctionEvalCounter(quantum_shots=10**4), FunctionEvalCounter(sa_flips=5 * 10**4))
    assert e.total() == 6 * 10**4


def test_presets():
    assert approximate_bbb_budget(4, 3, 15000).quantum_shots == 405_000
    assert sa_budget(156, 1000, 100).total() == 15_600_000
    assert sa_budget(156, 10000, 100).total() == 156_000_000


@given(counts, counts, counts, counts, counts, counts)
def test_componentwise(a, b, c, d, e, f):
    x, y = FunctionEvalCounter(a, b, c), FunctionEvalCounter(d, e, f)
    s = ledger_merge(x, y)
    assert s.as_dict() == {"quantum_shots": a + d, "sa_flips": b + e, "greedy_flips": c + f,
                           "total": a + b + c + d + e + f}


def test_negative_rejected():
    with pytest.raises(ValueError):
        FunctionEvalCounter(sa_flips=-1)


def test_streams():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(1, 3) != derive_seed(2, 2)
    assert derive_rng(5, 0).random() == derive_rng(5, 0).random()
    assert derive_rng(5, 0).random() != derive_rng(5, 1).random()
    assert 0 <= derive_seed(7) < 2**63

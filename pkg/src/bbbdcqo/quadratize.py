"""Cubic-to-quadratic reduction with product auxiliaries.

Spins become binaries through s = 1 - 2x. Each cubic monomial x_i x_j x_k is
reduced by replacing a pair x_i x_j with an auxiliary y and adding

    M (x_i x_j - 2 x_i y - 2 x_j y + 3 y),

which is zero when y = x_i x_j and at least M otherwise. Coefficients are
kept as exact rationals so that the reduced objective agrees with the
original one exactly on every constraint-satisfying assignment.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hubo import CapExceededError, HuboProblem, ProblemError, dumps_document, energies

SCAN_CAP = 22


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """min offset + sum_i a_i x_i + sum_{i<j} b_ij x_i x_j over x in {0,1}^m."""

    m: int
    linear: dict[int, Fraction]
    quadratic: dict[tuple[int, int], Fraction]
    offset: Fraction = Fraction(0)

    def energy_exact(self, x) -> Fraction:
        x = [int(v) for v in x]
        total = self.offset
        for i, c in self.linear.items():
            if x[i]:
                total += c
        for (i, j), c in self.quadratic.items():
            if x[i] and x[j]:
                total += c
        return total

    def energies(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.full(X.shape[0], float(self.offset))
        if self.linear:
            idx = np.fromiter(self.linear.keys(), dtype=np.int64)
            coef = np.array([float(c) for c in self.linear.values()])
            out += X[:, idx] @ coef
        if self.quadratic:
            ij = np.array(list(self.quadratic.keys()), dtype=np.int64)
            coef = np.array([float(c) for c in self.quadratic.values()])
            out += (X[:, ij[:, 0]] * X[:, ij[:, 1]]) @ coef
        return out

    def to_document(self, rmap: "ReductionMap | None" = None) -> dict:
        doc = {
            "n": self.m,
            "linear": [[i, float(c)] for i, c in sorted(self.linear.items())],
            "quadratic": [[i, j, float(c)] for (i, j), c in sorted(self.quadratic.items())],
            "offset": float(self.offset),
            "variables": "binary",
        }
        if rmap is not None:
            doc["reduction"] = {
                "original_n": rmap.original_n,
                "penalty": rmap.penalty,
                "aux": [[y, i, j] for y, (i, j) in sorted(rmap.aux.items())],
            }
        return doc

    def dumps(self, rmap: "ReductionMap | None" = None) -> str:
        return dumps_document(self.to_document(rmap))


@dataclass(frozen=True)
class ReductionMap:
    original_n: int
    aux: dict[int, tuple[int, int]]
    penalty: float


def _binary_polynomial(problem: HuboProblem) -> dict[tuple[int, ...], Fraction]:
    poly: dict[tuple[int, ...], Fraction] = {}
    for key, c in problem.terms():
        c = Fraction(c)
        for r in range(len(key) + 1):
            for sub in itertools.combinations(key, r):
                poly[sub] = poly.get(sub, Fraction(0)) + c * (-2) ** r
    return poly


def binary_max_abs_coefficient(problem: HuboProblem) -> float:
    """Largest |coefficient| of the non-constant terms of the binary polynomial."""
    poly = _binary_polynomial(problem)
    return max((abs(float(c)) for k, c in poly.items() if k and c), default=0.0)


def default_penalty(problem: HuboProblem, factor: float = 10.0) -> float:
    """``factor`` times the binary coefficient scale (1.0 for a constant objective).

    The scale is taken in the binary variables the penalty acts on: a spin
    cubic coefficient K becomes -8K on x_i x_j x_k, and an auxiliary that
    replaces a pair shared by several cubic terms must outweigh their sum.
    """
    scale = binary_max_abs_coefficient(problem)
    return factor * scale if scale > 0 else 1.0


def choose_pairs(cubic_keys) -> list[tuple[int, int]]:
    """Greedy substitution order: repeatedly take the pair shared by most monomials."""
    remaining = [tuple(k) for k in cubic_keys]
    chosen = []
    while remaining:
        counts = Counter(p for k in remaining for p in itertools.combinations(k, 2))
        top = max(counts.values())
        pair = min(p for p, c in counts.items() if c == top)
        chosen.append(pair)
        remaining = [k for k in remaining if not set(pair) <= set(k)]
    return chosen


def hubo_to_qubo(problem: HuboProblem, penalty: float) -> tuple[QuboProblem, ReductionMap]:
    if not penalty > 0:
        raise ProblemError("penalty must be positive")
    M = Fraction(penalty)
    poly = _binary_polynomial(problem)
    offset = poly.pop((), Fraction(0))
    lin: dict[int, Fraction] = {}
    quad: dict[tuple[int, int], Fraction] = {}
    cubic = {}
    for key, c in poly.items():
        if len(key) == 1:
            lin[key[0]] = lin.get(key[0], Fraction(0)) + c
        elif len(key) == 2:
            quad[key] = quad.get(key, Fraction(0)) + c
        elif c != 0:
            cubic[key] = c

    def add_q(i, j, c):
        key = (min(i, j), max(i, j))
        quad[key] = quad.get(key, Fraction(0)) + c

    aux: dict[int, tuple[int, int]] = {}
    next_var = problem.n
    for pair in choose_pairs(sorted(cubic)):
        y = next_var
        next_var += 1
        aux[y] = pair
        i, j = pair
        for key in [k for k in cubic if set(pair) <= set(k)]:
            (k,) = set(key) - set(pair)
            add_q(y, k, cubic.pop(key))
        add_q(i, j, M)
        add_q(i, y, -2 * M)
        add_q(j, y, -2 * M)
        lin[y] = lin.get(y, Fraction(0)) + 3 * M
    qubo = QuboProblem(
        next_var,
        {i: c for i, c in sorted(lin.items()) if c != 0},
        {k: c for k, c in sorted(quad.items()) if c != 0},
        offset,
    )
    return qubo, ReductionMap(problem.n, aux, float(penalty))


# -- exhaustive verification ------------------------------------------------


def _bits(start, stop, width):
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(width, dtype=np.int64)) & 1).astype(np.int8)


def _exact_minimizers(size, width, float_energy, exact_energy, scale, chunk=1 << 16):
    """All assignments attaining the exact minimum, found via a float pre-scan."""
    tol = 1e-9 * (1.0 + scale)
    best = np.inf
    cands: list[np.ndarray] = []
    for start in range(0, size, chunk):
        X = _bits(start, min(size, start + chunk), width)
        e = float_energy(X)
        lo = e.min()
        if lo < best - tol:
            cands = [c for c in cands if float_energy(c[None])[0] <= lo + tol]
            best = lo
        best = min(best, lo)
        cands.extend(X[e <= best + tol])
    exact = [(exact_energy(x), x) for x in cands]
    emin = min(v for v, _ in exact)
    return emin, [x for v, x in exact if v == emin]


def hubo_exact_energy(problem: HuboProblem, s) -> Fraction:
    total = Fraction(0)
    for key, c in problem.terms():
        sign = 1
        for i in key:
            sign *= int(s[i])
        total += Fraction(c) * sign
    return total


@dataclass(frozen=True)
class ReductionReport:
    hubo_minimum: Fraction
    qubo_minimum: Fraction
    minima_equal: bool
    constraints_satisfied: bool
    projection_optimal: bool
    qubo_minimizers: int
    minimal_penalty: float | None = None

    @property
    def passed(self) -> bool:
        return self.minima_equal and self.constraints_satisfied and self.projection_optimal


def _check(problem, qubo, rmap, hubo_min=None) -> ReductionReport:
    if qubo.m > SCAN_CAP:
        raise CapExceededError(f"{qubo.m} binary variables exceed the exhaustive cap of {SCAN_CAP}")
    n = problem.n
    if hubo_min is None:
        hubo_min, _ = _exact_minimizers(
            1 << n, n,
            lambda X: energies(problem, 1 - 2 * X.astype(np.int64)),
            lambda x: hubo_exact_energy(problem, 1 - 2 * x.astype(np.int64)),
            problem.abs_coefficient_sum(),
        )
    scale = float(abs(qubo.offset)) + sum(abs(float(c)) for c in qubo.linear.values()) + sum(
        abs(float(c)) for c in qubo.quadratic.values()
    )
    qmin, mins = _exact_minimizers(1 << qubo.m, qubo.m, qubo.energies, qubo.energy_exact, scale)
    constraints = all(x[y] == x[i] * x[j] for x in mins for y, (i, j) in rmap.aux.items())
    projection = all(
        hubo_exact_energy(problem, 1 - 2 * x[:n].astype(np.int64)) == hubo_min for x in mins
    )
    return ReductionReport(hubo_min, qmin, qmin == hubo_min, constraints, projection, len(mins))


def verify_reduction(
    problem: HuboProblem,
    qubo: QuboProblem,
    rmap: ReductionMap,
    find_minimal_penalty: bool = True,
    rel_tol: float = 1e-4,
    max_doublings: int = 40,
) -> ReductionReport:
    """Exhaustively compare the reduction with the original problem.

    With ``find_minimal_penalty`` the smallest passing penalty is located by
    bisection (passing is monotone in the penalty).
    """
    report = _check(problem, qubo, rmap)
    if not find_minimal_penalty:
        return report
    if not rmap.aux:
        return ReductionReport(**{**report.__dict__, "minimal_penalty": 0.0})

    def passes(M):
        q, r = hubo_to_qubo(problem, M)
        return _check(problem, q, r, report.hubo_minimum).passed

    hi = rmap.penalty
    for _ in range(max_doublings):
        if passes(hi):
            break
        hi *= 2
    else:
        return report
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return ReductionReport(**{**report.__dict__, "minimal_penalty": hi})

"""Cubic spin-glass problems: representation, energies, generators and I/O.

The objective over spins s_i in {+1, -1} is

    E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + sum_{i<j<k} K_ijk s_i s_j s_k

Computational-basis conventions used throughout the package:

* bit b maps to spin s = 1 - 2b, so |0> is spin +1 and |1> is spin -1;
* qubit q is bit q of a basis index (qubit 0 is the least significant bit).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from . import _kernels


class ProblemError(ValueError):
    """Invalid problem data, assignment or document."""


class CapExceededError(RuntimeError):
    """A size or budget limit of a solver would be exceeded."""


def _canonical(n: int, terms, order: int, *, strict_keys: bool = False) -> dict:
    out: dict = {}
    seen = set()
    for key, c in terms:
        key = (key,) if order == 1 and not isinstance(key, tuple) else tuple(key)
        if len(key) != order:
            raise ProblemError(f"expected {order} indices, got {key}")
        for i in key:
            if not isinstance(i, (int, np.integer)) or isinstance(i, bool):
                raise ProblemError(f"non-integer index {i!r}")
            if not 0 <= i < n:
                raise ProblemError(f"index {i} out of range for n={n}")
        if len(set(key)) != order:
            raise ProblemError(f"repeated index in term {key}")
        if strict_keys:
            if key in seen:
                raise ProblemError(f"duplicate term {key}")
            seen.add(key)
        c = float(c)
        if not math.isfinite(c):
            raise ProblemError(f"non-finite coefficient for {key}")
        ckey = tuple(int(i) for i in sorted(key))
        out[ckey] = out.get(ckey, 0.0) + c
    if order == 1:
        out = {k[0]: v for k, v in out.items()}
    return {k: out[k] for k in sorted(out) if out[k] != 0.0}


def _items(terms):
    if terms is None:
        return []
    if isinstance(terms, Mapping):
        return list(terms.items())
    return [(tuple(t[:-1]) if len(t) > 2 else t[0], t[-1]) for t in terms]


@dataclass(frozen=True, eq=False)
class HuboProblem:
    """Sparse coefficients of a cubic Ising objective over ``n`` spins.

    Use :meth:`from_terms` to build from unsorted or duplicated input; the
    constructor only accepts the canonical form (sorted index tuples, no zero
    coefficients).
    """

    n: int
    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    cubic: Mapping[tuple[int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ProblemError(f"invalid spin count {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for order, terms in ((1, self.linear), (2, self.quadratic), (3, self.cubic)):
            canon = _canonical(self.n, _items(terms), order, strict_keys=True)
            given = {(k if order > 1 else k): float(v) for k, v in dict(terms).items()}
            if canon != given:
                raise ProblemError(
                    f"order-{order} terms are not canonical; use HuboProblem.from_terms"
                )
        object.__setattr__(self, "linear", dict(self.linear))
        object.__setattr__(self, "quadratic", dict(self.quadratic))
        object.__setattr__(self, "cubic", dict(self.cubic))

    @classmethod
    def from_terms(cls, n, linear=None, quadratic=None, cubic=None) -> "HuboProblem":
        """Canonicalize: sort indices, sum permuted duplicates, drop zeros.

        Each argument may be a mapping (key -> coefficient) or a list of
        ``[i, ..., c]`` rows.
        """
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ProblemError(f"invalid spin count {n!r}")
        return cls(
            int(n),
            _canonical(n, _items(linear), 1),
            _canonical(n, _items(quadratic), 2),
            _canonical(n, _items(cubic), 3),
        )

    def __eq__(self, other):
        if not isinstance(other, HuboProblem):
            return NotImplemented
        return (
            self.n == other.n
            and self.linear == other.linear
            and self.quadratic == other.quadratic
            and self.cubic == other.cubic
        )

    def __hash__(self):
        return hash((self.n, len(self.linear), len(self.quadratic), len(self.cubic)))

    def __repr__(self):
        return (
            f"HuboProblem(n={self.n}, linear={len(self.linear)}, "
            f"quadratic={len(self.quadratic)}, cubic={len(self.cubic)})"
        )

    @property
    def num_terms(self) -> int:
        return len(self.linear) + len(self.quadratic) + len(self.cubic)

    def terms(self) -> Iterable[tuple[tuple[int, ...], float]]:
        for i, c in self.linear.items():
            yield (i,), c
        yield from self.quadratic.items()
        yield from self.cubic.items()

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for _, c in self.terms()), default=0.0)

    def abs_coefficient_sum(self) -> float:
        return math.fsum(abs(c) for _, c in self.terms())

    @cached_property
    def _arrays(self):
        def pack(terms, order):
            idx = np.array(list(terms.keys()), dtype=np.int64).reshape(-1, order)
            coef = np.array(list(terms.values()), dtype=np.float64)
            return idx, coef

        lin = {(i,): c for i, c in self.linear.items()}
        return pack(lin, 1), pack(self.quadratic, 2), pack(self.cubic, 3)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, ...]:
        """Per-spin CSR neighbourhood consumed by the compiled kernels."""
        n = self.n
        lin = np.zeros(n)
        for i, c in self.linear.items():
            lin[i] = c
        pairs = [[] for _ in range(n)]
        for (i, j), c in self.quadratic.items():
            pairs[i].append((j, c))
            pairs[j].append((i, c))
        triples = [[] for _ in range(n)]
        for (i, j, k), c in self.cubic.items():
            triples[i].append((j, k, c))
            triples[j].append((i, k, c))
            triples[k].append((i, j, c))
        p_ptr = np.zeros(n + 1, dtype=np.int64)
        p_ptr[1:] = np.cumsum([len(p) for p in pairs])
        p_nbr = np.array([j for p in pairs for j, _ in p], dtype=np.int64)
        p_coef = np.array([c for p in pairs for _, c in p], dtype=np.float64)
        t_ptr = np.zeros(n + 1, dtype=np.int64)
        t_ptr[1:] = np.cumsum([len(t) for t in triples])
        t_a = np.array([a for t in triples for a, _, _ in t], dtype=np.int64)
        t_b = np.array([b for t in triples for _, b, _ in t], dtype=np.int64)
        t_coef = np.array([c for t in triples for _, _, c in t], dtype=np.float64)
        return lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef

    def degree(self, i: int) -> int:
        _, p_ptr, _, _, t_ptr, *_ = self.adjacency
        return int(p_ptr[i + 1] - p_ptr[i] + t_ptr[i + 1] - t_ptr[i])

    def fix_spins(self, fixed: Mapping[int, int]) -> tuple["HuboProblem", float, list[int]]:
        """Substitute fixed spin values and drop those variables.

        Returns ``(reduced, offset, free)`` where ``free`` lists the original
        indices of the reduced problem's spins in order, and
        ``energy(full) == offset + energy(reduced)`` for any completion.
        """
        for i, s in fixed.items():
            if not 0 <= i < self.n or s not in (1, -1):
                raise ProblemError(f"invalid fixed spin {i}={s}")
        free = [i for i in range(self.n) if i not in fixed]
        pos = {i: k for k, i in enumerate(free)}
        offset = 0.0
        lin: dict = {}
        quad: dict = {}
        cub: dict = {}
        for key, c in self.terms():
            sign = 1
            rest = []
            for i in key:
                if i in fixed:
                    sign *= fixed[i]
                else:
                    rest.append(pos[i])
            c = c * sign
            if not rest:
                offset += c
            elif len(rest) == 1:
                lin[rest[0]] = lin.get(rest[0], 0.0) + c
            elif len(rest) == 2:
                quad[tuple(rest)] = quad.get(tuple(rest), 0.0) + c
            else:
                cub[tuple(rest)] = cub.get(tuple(rest), 0.0) + c
        reduced = HuboProblem.from_terms(len(free), lin, quad, cub)
        return reduced, offset, free


def as_spins(problem: HuboProblem, z) -> np.ndarray:
    """Validate and convert an assignment to an int8 spin vector."""
    arr = np.asarray(z)
    if arr.ndim != 1 or arr.shape[0] != problem.n:
        raise ProblemError(f"assignment has shape {arr.shape}, expected ({problem.n},)")
    if not np.all((arr == 1) | (arr == -1)):
        raise ProblemError("assignment entries must be +1 or -1")
    return arr.astype(np.int8)


def order_energies(problem: HuboProblem, spins) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linear, quadratic and cubic contributions for a batch of assignments.

    ``spins`` has shape (k, n). Each row is reduced independently, so the
    result for a row does not depend on the batch it came in.
    """
    Z = np.ascontiguousarray(spins, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != problem.n:
        raise ProblemError(f"batch has shape {Z.shape}, expected (k, {problem.n})")
    parts = []
    for idx, coef in problem._arrays:
        if coef.size == 0:
            parts.append(np.zeros(Z.shape[0]))
            continue
        prod = Z[:, idx[:, 0]]
        for col in range(1, idx.shape[1]):
            prod = prod * Z[:, idx[:, col]]
        parts.append(np.ascontiguousarray(prod * coef).sum(axis=1))
    return parts[0], parts[1], parts[2]


def energies(problem: HuboProblem, spins) -> np.ndarray:
    """Energies of a (k, n) batch of spin assignments."""
    L, Q, C = order_energies(problem, spins)
    return L + Q + C


def energy(problem: HuboProblem, z) -> float:
    z = as_spins(problem, z)
    return float(energies(problem, z[None, :])[0])


def delta_energy(problem: HuboProblem, z, i: int) -> float:
    """energy(z with spin i flipped) - energy(z), in O(degree(i))."""
    z = as_spins(problem, z)
    if not 0 <= i < problem.n:
        raise ProblemError(f"spin index {i} out of range for n={problem.n}")
    return float(_kernels.delta(z, int(i), *problem.adjacency))


# -- basis-index helpers ---------------------------------------------------


def index_to_spins(indices, n: int) -> np.ndarray:
    """Basis indices -> (k, n) int8 spins (bit q of the index is qubit q)."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def spins_to_index(spins) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(spins))
    bits = (Z == -1).astype(np.int64)
    return (bits << np.arange(Z.shape[1], dtype=np.int64)).sum(axis=1)


# -- sample sets -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct measured assignments with energies and multiplicities.

    Records are sorted by energy, ties broken by ascending basis index.
    """

    spins: np.ndarray
    energies: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if len(self.spins) != len(self.energies) or len(self.spins) != len(self.counts):
            raise ProblemError("sample set arrays differ in length")
        if len(self.counts) and np.any(self.counts <= 0):
            raise ProblemError("sample counts must be positive")
        for a in (self.spins, self.energies, self.counts):
            a.flags.writeable = False

    @classmethod
    def from_spins(cls, problem: HuboProblem, spins, counts=None) -> "SampleSet":
        """Aggregate assignments (with optional multiplicities) into records."""
        Z = np.asarray(spins, dtype=np.int8).reshape(-1, problem.n)
        idx = spins_to_index(Z) if problem.n else np.zeros(len(Z), dtype=np.int64)
        w = np.ones(len(Z), dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
        uniq, first, inv = np.unique(idx, return_index=True, return_inverse=True)
        tot = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(tot, inv.reshape(-1), w)
        Zu = Z[first]
        e = energies(problem, Zu)
        order = np.lexsort((uniq, e))
        return cls(Zu[order].copy(), e[order].copy(), tot[order].copy())

    @classmethod
    def from_indices(cls, problem: HuboProblem, indices) -> "SampleSet":
        idx = np.asarray(indices, dtype=np.int64)
        uniq, counts = np.unique(idx, return_counts=True)
        return cls.from_spins(problem, index_to_spins(uniq, problem.n), counts)

    def __len__(self):
        return len(self.counts)

    @property
    def total_shots(self) -> int:
        return int(self.counts.sum())

    @property
    def best(self) -> tuple[np.ndarray, float]:
        if not len(self):
            raise ProblemError("empty sample set")
        return self.spins[0].copy(), float(self.energies[0])

    def mean_energy(self) -> float:
        return float(np.dot(self.energies, self.counts) / self.total_shots)

    def cvar(self, alpha: float) -> float:
        """Mean energy of the lowest ceil(alpha * shots) shots."""
        m = cvar_count(alpha, self.total_shots)
        take = np.minimum(self.counts, np.maximum(m - np.concatenate(([0], np.cumsum(self.counts)[:-1])), 0))
        return float(np.dot(self.energies, take) / m)

    def merge(self, problem: HuboProblem, other: "SampleSet") -> "SampleSet":
        return SampleSet.from_spins(
            problem,
            np.concatenate([self.spins, other.spins]),
            np.concatenate([self.counts, other.counts]),
        )


def cvar_count(alpha: float, shots: int) -> int:
    """ceil(alpha * shots), guarded against binary rounding (0.3 * 10 -> 3)."""
    if not 0 < alpha <= 1:
        raise ProblemError(f"CVaR fraction must lie in (0, 1], got {alpha}")
    if shots < 1:
        raise ProblemError("no shots")
    return max(1, math.ceil(round(alpha * shots, 9)))


# -- instance generation ---------------------------------------------------

TOPOLOGIES = ("sparse-chain", "dense")


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for a random instance; coefficients are uniform on [low, high]."""

    n: int
    topology: str = "sparse-chain"
    n2: int | None = None
    n3: int | None = None
    low: float = -1.0
    high: float = 1.0
    seed: int = 0

    def validate(self):
        if self.topology not in TOPOLOGIES:
            raise ProblemError(f"unknown topology {self.topology!r}")
        if self.n < 1:
            raise ProblemError("n must be positive")
        if not self.low < self.high:
            raise ProblemError("empty coefficient range")
        if self.topology == "sparse-chain":
            if self.n < 3:
                raise ProblemError("sparse chain needs n >= 3")
        else:
            if self.n2 is None or self.n3 is None:
                raise ProblemError("dense topology needs n2 and n3")
            if not 0 <= self.n2 <= math.comb(self.n, 2):
                raise ProblemError(f"n2={self.n2} infeasible for n={self.n}")
            if not 0 <= self.n3 <= math.comb(self.n, 3):
                raise ProblemError(f"n3={self.n3} infeasible for n={self.n}")

    def metadata(self) -> dict:
        meta = {
            "topology": self.topology,
            "distribution": f"uniform[{self.low!r},{self.high!r}]",
            "distribution_note": "default choice; source instances do not state one",
            "seed": self.seed,
        }
        if self.topology == "dense":
            meta.update(n2=self.n2, n3=self.n3)
        return meta


def _draw_subsets(rng, n, r, count):
    total = math.comb(n, r)
    picks = np.sort(rng.choice(total, size=count, replace=False))
    if total <= 2_000_000:
        combos = list(itertools.combinations(range(n), r))
        return [combos[p] for p in picks]
    return [_unrank_combination(n, r, int(p)) for p in picks]


def _unrank_combination(n, r, rank):
    out = []
    start = 0
    for slot in range(r, 0, -1):
        for v in range(start, n):
            c = math.comb(n - v - 1, slot - 1)
            if rank < c:
                out.append(v)
                start = v + 1
                break
            rank -= c
    return tuple(out)


def generate(spec: InstanceSpec) -> HuboProblem:
    """Deterministic random instance for ``spec``.

    ``sparse-chain``: n linear, n-1 nearest-neighbour pairs and n-2 consecutive
    triples. ``dense``: n linear plus ``n2`` pairs and ``n3`` triples drawn
    uniformly without replacement.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    if spec.topology == "sparse-chain":
        pairs = [(i, i + 1) for i in range(n - 1)]
        triples = [(i, i + 1, i + 2) for i in range(n - 2)]
    else:
        pairs = _draw_subsets(rng, n, 2, spec.n2)
        triples = _draw_subsets(rng, n, 3, spec.n3)
    draw = lambda k: rng.uniform(spec.low, spec.high, size=k)  # noqa: E731
    h = draw(n)
    J = draw(len(pairs))
    K = draw(len(triples))
    return HuboProblem(
        n,
        {i: float(c) for i, c in enumerate(h) if c != 0.0},
        {p: float(c) for p, c in zip(pairs, J) if c != 0.0},
        {t: float(c) for t, c in zip(triples, K) if c != 0.0},
    )


# -- serialization ---------------------------------------------------------


def to_document(problem: HuboProblem, *, seed=None, metadata=None, include_cubic=True) -> dict:
    doc = {
        "n": problem.n,
        "linear": [[i, c] for i, c in problem.linear.items()],
        "quadratic": [[i, j, c] for (i, j), c in problem.quadratic.items()],
    }
    if include_cubic:
        doc["cubic"] = [[i, j, k, c] for (i, j, k), c in problem.cubic.items()]
    if seed is not None:
        doc["seed"] = seed
    if metadata:
        doc["metadata"] = metadata
    return doc


def dumps_document(doc: dict) -> str:
    """JSON with one term per line; float reprs round-trip exactly."""
    lines = ["{"]
    keys = list(doc)
    for pos, key in enumerate(keys):
        value = doc[key]
        tail = "," if pos < len(keys) - 1 else ""
        if isinstance(value, list) and value:
            lines.append(f"  {json.dumps(key)}: [")
            for r, row in enumerate(value):
                sep = "," if r < len(value) - 1 else ""
                lines.append(f"    {json.dumps(row)}{sep}")
            lines.append(f"  ]{tail}")
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(value, sort_keys=True)}{tail}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize(problem: HuboProblem, *, seed=None, metadata=None) -> str:
    return dumps_document(to_document(problem, seed=seed, metadata=metadata))


_ALLOWED_KEYS = {"n", "linear", "quadratic", "cubic", "seed", "metadata"}


def _rows(doc, key, width):
    rows = doc.get(key, [])
    if not isinstance(rows, list):
        raise ProblemError(f"{key!r} must be a list")
    out = []
    for row in rows:
        if not isinstance(row, list) or len(row) != width:
            raise ProblemError(f"malformed {key} entry {row!r}")
        *idx, c = row
        if any(isinstance(i, bool) or not isinstance(i, int) for i in idx):
            raise ProblemError(f"non-integer index in {key} entry {row!r}")
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise ProblemError(f"non-numeric coefficient in {key} entry {row!r}")
        out.append((tuple(idx) if width > 2 else idx[0], c))
    return out


def from_document(doc) -> HuboProblem:
    if not isinstance(doc, dict):
        raise ProblemError("instance document must be an object")
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise ProblemError(f"unknown fields {sorted(unknown)}")
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ProblemError("field 'n' must be a nonnegative integer")
    parts = []
    for key, width, order in (("linear", 2, 1), ("quadratic", 3, 2), ("cubic", 4, 3)):
        rows = _rows(doc, key, width)
        written = [k if order > 1 else (k,) for k, _ in rows]
        if len(set(written)) != len(written):
            raise ProblemError(f"duplicate {key} entry")
        parts.append(_canonical(n, rows, order))
    return HuboProblem(n, *parts)


def parse(text: str) -> HuboProblem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"malformed instance document: {exc}") from exc
    return from_document(doc)

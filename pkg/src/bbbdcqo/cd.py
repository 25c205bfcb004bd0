"""Counterdiabatic circuit construction.

The annealing Hamiltonian is ``H(lam) = (1 - lam) H_i + lam H_f`` with

    H_i = sum_j hx_j X_j + hb_j Z_j

and ``H_f`` the problem Hamiltonian. The first-order gauge potential is
``A = i alpha(lam) O1`` with ``O1 = [H, dH]``, ``dH = H_f - H_i``, and
``alpha`` minimizing ``Tr[(dH - i[H, A])^2]``:

    alpha = -Re <dH, O2> / <O2, O2>,    O2 = [H, O1].

Because ``dH`` does not depend on ``lam``, ``O1 = [H_i, H_f]`` is constant and
``O2 = [H_i, O1] + lam [dH, O1]`` is affine in ``lam``, so alpha is a ratio of
low-degree polynomials whose coefficients are computed once per circuit.

Only the counterdiabatic part ``lam_dot * A`` is evolved, in a single
effective step: each Hermitian string P of ``i O1`` (real coefficient c_P)
becomes the rotation ``exp(-i theta_P / 2 P)`` with

    theta_P = 2 c_P \\int_0^T lam_dot(t) alpha(lam(t)) dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .hubo import HuboProblem
from .pauli import PauliString, PauliSum, commutator, hs_inner

DEFAULT_PANELS = 64  # 129 Simpson nodes


class UndefinedCoefficientError(ArithmeticError):
    """The action has no unique minimizer (``<O2, O2> == 0``)."""


@dataclass(frozen=True)
class Schedule:
    """lam(t) = sin^2(pi/2 * sin^2(pi t / 2T)) on [0, T]."""

    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("total time must be positive")

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.T):
            raise ValueError(f"time outside [0, {self.T}]")
        return t

    def lam(self, t):
        t = self._check(t)
        u = np.sin(np.pi * t / (2 * self.T)) ** 2
        out = np.sin(0.5 * np.pi * u) ** 2
        return float(out) if out.ndim == 0 else out

    def lam_dot(self, t):
        t = self._check(t)
        u = np.sin(np.pi * t / (2 * self.T)) ** 2
        out = (np.pi**2 / (4 * self.T)) * np.sin(np.pi * u) * np.sin(np.pi * t / self.T)
        return float(out) if out.ndim == 0 else out


def schedule_lambda(t, T):
    return Schedule(T).lam(t)


def schedule_lambda_dot(t, T):
    return Schedule(T).lam_dot(t)


@dataclass(frozen=True, eq=False)
class DriverConfig:
    """Transverse fields ``hx`` and longitudinal biases ``hb`` of H_i."""

    hx: np.ndarray
    hb: np.ndarray

    def __post_init__(self):
        hx = np.asarray(self.hx, dtype=float).copy()
        hb = np.asarray(self.hb, dtype=float).copy()
        if hx.shape != hb.shape or hx.ndim != 1:
            raise ValueError("hx and hb must be vectors of equal length")
        if np.any(hx == 0):
            raise ValueError("transverse fields must be nonzero")
        hx.flags.writeable = False
        hb.flags.writeable = False
        object.__setattr__(self, "hx", hx)
        object.__setattr__(self, "hb", hb)

    @classmethod
    def uniform(cls, n: int, hx: float = -1.0, hb=None) -> "DriverConfig":
        return cls(np.full(n, float(hx)), np.zeros(n) if hb is None else hb)

    @property
    def n(self) -> int:
        return len(self.hx)


def problem_hamiltonian(problem: HuboProblem) -> PauliSum:
    n = problem.n
    return PauliSum(n, {PauliString.zs(n, key): c for key, c in problem.terms()})


def driver_hamiltonian(driver: DriverConfig) -> PauliSum:
    n = driver.n
    terms = {}
    for j in range(n):
        terms[PauliString.single(n, j, "X")] = driver.hx[j]
        terms[PauliString.single(n, j, "Z")] = driver.hb[j]
    return PauliSum(n, terms)


def _check_sizes(problem, driver):
    if problem.n != driver.n:
        raise ValueError(f"problem has {problem.n} spins, driver {driver.n}")


def build_h_ad(problem: HuboProblem, driver: DriverConfig, lam: float) -> PauliSum:
    if not 0 <= lam <= 1:
        raise ValueError("lam must lie in [0, 1]")
    _check_sizes(problem, driver)
    return driver_hamiltonian(driver) * (1 - lam) + problem_hamiltonian(problem) * lam


def nested_commutators(h: PauliSum, o0: PauliSum, order: int) -> list[PauliSum]:
    """[O_0, O_1, ..., O_order] with O_k = [h, O_{k-1}]."""
    out = [o0]
    for _ in range(order):
        out.append(commutator(h, out[-1]))
    return out


def alpha1(problem: HuboProblem, driver: DriverConfig, lam: float) -> float:
    """Action-minimizing first-order gauge coefficient at ``lam``."""
    h = build_h_ad(problem, driver, lam)
    dh = problem_hamiltonian(problem) - driver_hamiltonian(driver)
    _, _, o2 = nested_commutators(h, dh, 2)
    den = hs_inner(o2, o2).real
    if den <= 0:
        raise UndefinedCoefficientError(f"<O2, O2> vanishes at lam={lam}")
    return -hs_inner(dh, o2).real / den


def action(problem: HuboProblem, driver: DriverConfig, lam: float, alpha: float) -> float:
    """Tr[G^2] / 2**n for the trial gauge potential ``i alpha O1``."""
    h = build_h_ad(problem, driver, lam)
    dh = problem_hamiltonian(problem) - driver_hamiltonian(driver)
    _, _, o2 = nested_commutators(h, dh, 2)
    g = dh + o2 * alpha
    return hs_inner(g, g).real


@dataclass(frozen=True)
class GaugeTerms:
    """lam-independent pieces of the first-order gauge potential.

    ``generator`` is i*O1 as real coefficients per string, and alpha(lam) is
    ``-(p0 + p1 lam) / (q0 + q1 lam + q2 lam^2)``.
    """

    generator: tuple[tuple[PauliString, float], ...]
    p0: float
    p1: float
    q0: float
    q1: float
    q2: float

    def alpha(self, lam):
        lam = np.asarray(lam, dtype=float)
        num = self.p0 + self.p1 * lam
        den = self.q0 + lam * (self.q1 + lam * self.q2)
        scale = max(abs(self.q0), abs(self.q1), abs(self.q2), 1e-300)
        ok = den > 1e-13 * scale
        out = np.where(ok, -num / np.where(ok, den, 1.0), 0.0)
        return float(out) if out.ndim == 0 else out


def gauge_terms(problem: HuboProblem, driver: DriverConfig) -> GaugeTerms:
    _check_sizes(problem, driver)
    hi = driver_hamiltonian(driver)
    hf = problem_hamiltonian(problem)
    dh = hf - hi
    o1 = commutator(hi, hf)
    a = commutator(hi, o1)
    b = commutator(dh, o1)
    gen = o1 * 1j
    generator = tuple((p, c.real) for p, c in gen.sorted_items())
    return GaugeTerms(
        generator=generator,
        p0=hs_inner(dh, a).real,
        p1=hs_inner(dh, b).real,
        q0=hs_inner(a, a).real,
        q1=2 * hs_inner(a, b).real,
        q2=hs_inner(b, b).real,
    )


def prep_angles(hx, hb) -> np.ndarray:
    """Ry angles whose product state is the ground state of sum hx X + hb Z."""
    hx = np.asarray(hx, dtype=float)
    hb = np.asarray(hb, dtype=float)
    lam_min = -np.sqrt(hb**2 + hx**2)
    return 2 * np.arctan((lam_min - hb) / hx)


@dataclass(frozen=True, eq=False)
class CdCircuit:
    n: int
    prep_angles: np.ndarray
    rotations: tuple[tuple[PauliString, float], ...] = field(default_factory=tuple)

    def dump(self) -> str:
        lines = [f"Ry({q},{float(t)!r})" for q, t in enumerate(self.prep_angles)]
        lines += [f"PRot({p.label},{float(t)!r})" for p, t in self.rotations]
        return "\n".join(lines) + "\n"


def effective_angle_integral(
    gauge: GaugeTerms, schedule: Schedule, panels: int = DEFAULT_PANELS
) -> float:
    """\\int_0^T lam_dot(t) alpha(lam(t)) dt by composite Simpson."""
    if panels < 1:
        raise ValueError("need at least one quadrature panel")
    t = np.linspace(0.0, schedule.T, 2 * panels + 1)
    f = schedule.lam_dot(t) * gauge.alpha(schedule.lam(t))
    return float(simpson(f, x=t))


def build_cd_circuit(
    problem: HuboProblem,
    driver: DriverConfig,
    schedule: Schedule | None = None,
    quadrature_panels: int = DEFAULT_PANELS,
) -> CdCircuit:
    """Prep angles plus one counterdiabatic rotation per string of i*O1.

    Nodes where alpha is undefined (vanishing denominator) contribute zero.
    """
    schedule = schedule or Schedule()
    gauge = gauge_terms(problem, driver)
    integral = effective_angle_integral(gauge, schedule, quadrature_panels)
    rotations = tuple(
        (p, 2.0 * c * integral) for p, c in gauge.generator if 2.0 * c * integral != 0.0
    )
    return CdCircuit(problem.n, prep_angles(driver.hx, driver.hb), rotations)


def is_finite_circuit(circuit: CdCircuit) -> bool:
    return bool(np.all(np.isfinite(circuit.prep_angles))) and all(
        math.isfinite(t) for _, t in circuit.rotations
    )

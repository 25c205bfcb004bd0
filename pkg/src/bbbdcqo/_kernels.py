"""Compiled inner loops shared by the classical solvers.

All kernels take the per-spin adjacency in CSR form produced by
``HuboProblem.adjacency``::

    lin[i]                      linear coefficient of spin i
    p_ptr, p_nbr, p_coef        pairs (i, j) touching i  -> j, J_ij
    t_ptr, t_a, t_b, t_coef     triples touching i       -> (j, k), K_ijk

Spins are int8 in {+1, -1}. Random numbers are generated outside the kernels
so that numpy's seeding discipline is the only source of randomness.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def local_field(z, i, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef):
    f = lin[i]
    for q in range(p_ptr[i], p_ptr[i + 1]):
        f += p_coef[q] * z[p_nbr[q]]
    for q in range(t_ptr[i], t_ptr[i + 1]):
        f += t_coef[q] * z[t_a[q]] * z[t_b[q]]
    return f


@njit(cache=True)
def delta(z, i, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef):
    return -2.0 * z[i] * local_field(z, i, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef)


@njit(cache=True)
def anneal(z, temps, order, uniforms, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef):
    """One Metropolis read. ``order`` and ``uniforms`` are (sweeps, n).

    Returns the number of accepted flips; ``z`` is updated in place.
    """
    sweeps, n = order.shape
    accepted = 0
    for s in range(sweeps):
        T = temps[s]
        for q in range(n):
            i = order[s, q]
            de = delta(z, i, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef)
            if de <= 0.0:
                z[i] = -z[i]
                accepted += 1
            elif T > 0.0 and uniforms[s, q] < np.exp(-de / T):
                z[i] = -z[i]
                accepted += 1
    return accepted


@njit(cache=True)
def greedy(z, order, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef):
    """Strict-descent single-flip sweeps over the rows of ``order``.

    Returns the number of flip evaluations performed. Stops after the first
    sweep that makes no move.
    """
    sweeps, n = order.shape
    evaluated = 0
    for s in range(sweeps):
        moved = False
        for q in range(n):
            i = order[s, q]
            de = delta(z, i, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef)
            evaluated += 1
            if de < 0.0:
                z[i] = -z[i]
                moved = True
        if not moved:
            break
    return evaluated


@njit(cache=True)
def gray_scan(n, e0, tol, keep_spectrum, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef):
    """Walk all 2**n assignments in reflected Gray-code order.

    Starts from all spins +1 (basis index 0) with energy ``e0``. Returns the
    minimizing basis index (lowest index among energies within ``tol`` of the
    minimum), the running minimum, and optionally the energy of every index.
    """
    z = np.ones(n, dtype=np.int8)
    size = 1 << n
    spectrum = np.empty(size if keep_spectrum else 0, dtype=np.float64)
    e = e0
    g = 0
    best = e0
    best_idx = 0
    if keep_spectrum:
        spectrum[0] = e0
    for k in range(1, size):
        i = 0
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            i += 1
        e += delta(z, i, lin, p_ptr, p_nbr, p_coef, t_ptr, t_a, t_b, t_coef)
        z[i] = -z[i]
        g ^= 1 << i
        if keep_spectrum:
            spectrum[g] = e
        if e < best - tol:
            best = e
            best_idx = g
        elif e <= best + tol:
            if g < best_idx:
                best_idx = g
            if e < best:
                best = e
    return best_idx, best, spectrum

"""Compiled statevector kernels.

Index convention: qubit ``q`` of an ``n``-qubit register is bit ``n - 1 - q``
of the amplitude index, so qubit 0 is the most significant bit.
"""

import numpy as np
from numba import njit

# amplitudes per cache block for the low-stride rotation sweep
_BLOCK_BITS = 12


@njit(cache=True)
def ising_table(n, h_idx, h_val, j_u, j_v, j_val, constant):
    dim = 1 << n
    out = np.empty(dim)
    z = np.empty(n)
    for k in range(dim):
        for q in range(n):
            z[q] = 1.0 - 2.0 * ((k >> (n - 1 - q)) & 1)
        e = constant
        for t in range(h_idx.shape[0]):
            e += h_val[t] * z[h_idx[t]]
        for t in range(j_u.shape[0]):
            e += j_val[t] * z[j_u[t]] * z[j_v[t]]
        out[k] = e
    return out


@njit(cache=True, fastmath=True)
def apply_phase(psi, diag, theta):
    """psi *= exp(-i theta diag)."""
    for k in range(psi.shape[0]):
        t = theta * diag[k]
        psi[k] *= complex(np.cos(t), -np.sin(t))


@njit(cache=True, fastmath=True)
def _rx_range(psi, n, q, c, s, lo, hi):
    # RX = [[c, -i s], [-i s, c]] written out in real arithmetic
    stride = 1 << (n - 1 - q)
    for base in range(lo, hi, 2 * stride):
        for k in range(base, base + stride):
            a = psi[k]
            b = psi[k + stride]
            psi[k] = complex(c * a.real + s * b.imag, c * a.imag - s * b.real)
            psi[k + stride] = complex(c * b.real + s * a.imag, c * b.imag - s * a.real)


@njit(cache=True, fastmath=True)
def _rx_pair(psi, n, q1, c1, s1, q2, c2, s2):
    """RX on two qubits in one pass; ``q1`` must have the larger stride."""
    st1 = 1 << (n - 1 - q1)
    st2 = 1 << (n - 1 - q2)
    for b1 in range(0, psi.shape[0], 2 * st1):
        for b2 in range(b1, b1 + st1, 2 * st2):
            for k in range(b2, b2 + st2):
                a0 = psi[k]
                a1 = psi[k + st2]
                a2 = psi[k + st1]
                a3 = psi[k + st1 + st2]
                x0 = complex(c2 * a0.real + s2 * a1.imag, c2 * a0.imag - s2 * a1.real)
                x1 = complex(c2 * a1.real + s2 * a0.imag, c2 * a1.imag - s2 * a0.real)
                x2 = complex(c2 * a2.real + s2 * a3.imag, c2 * a2.imag - s2 * a3.real)
                x3 = complex(c2 * a3.real + s2 * a2.imag, c2 * a3.imag - s2 * a2.real)
                psi[k] = complex(c1 * x0.real + s1 * x2.imag, c1 * x0.imag - s1 * x2.real)
                psi[k + st1] = complex(c1 * x2.real + s1 * x0.imag, c1 * x2.imag - s1 * x0.real)
                psi[k + st2] = complex(c1 * x1.real + s1 * x3.imag, c1 * x1.imag - s1 * x3.real)
                psi[k + st1 + st2] = complex(c1 * x3.real + s1 * x1.imag, c1 * x3.imag - s1 * x1.real)


@njit(cache=True)
def apply_rx(psi, n, q, angle):
    """RX(angle) = exp(-i angle X / 2) on qubit ``q``."""
    _rx_range(psi, n, q, np.cos(angle / 2), np.sin(angle / 2), 0, psi.shape[0])


@njit(cache=True)
def apply_rx_layer(psi, n, qubits, angles):
    """RX on several distinct qubits.

    High-stride qubits are rotated two per pass over memory; the rest are
    swept block by block so each block stays in cache.
    """
    dim = psi.shape[0]
    block = 1 << min(_BLOCK_BITS, n)
    high = [t for t in range(qubits.shape[0]) if 2 * (1 << (n - 1 - qubits[t])) > block]
    i = 0
    while i < len(high):
        t1 = high[i]
        if i + 1 < len(high):
            t2 = high[i + 1]
            qa, qb, aa, ab = qubits[t1], qubits[t2], angles[t1], angles[t2]
            if qa > qb:
                qa, qb, aa, ab = qb, qa, ab, aa
            _rx_pair(psi, n, qa, np.cos(aa / 2), np.sin(aa / 2), qb, np.cos(ab / 2), np.sin(ab / 2))
            i += 2
        else:
            _rx_range(psi, n, qubits[t1], np.cos(angles[t1] / 2), np.sin(angles[t1] / 2), 0, dim)
            i += 1
    for lo in range(0, dim, block):
        for t in range(qubits.shape[0]):
            q = qubits[t]
            if 2 * (1 << (n - 1 - q)) <= block:
                _rx_range(psi, n, q, np.cos(angles[t] / 2), np.sin(angles[t] / 2), lo, lo + block)


@njit(cache=True)
def apply_h(psi, n, q):
    r = 1.0 / np.sqrt(2.0)
    stride = 1 << (n - 1 - q)
    for base in range(0, psi.shape[0], 2 * stride):
        for k in range(base, base + stride):
            a = psi[k]
            b = psi[k + stride]
            psi[k] = r * (a + b)
            psi[k + stride] = r * (a - b)


@njit(cache=True)
def apply_cnot(psi, n, control, target):
    cm = 1 << (n - 1 - control)
    tm = 1 << (n - 1 - target)
    for k in range(psi.shape[0]):
        if (k & cm) and not (k & tm):
            j = k | tm
            tmp = psi[k]
            psi[k] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def apply_swap(psi, n, a, b):
    am = 1 << (n - 1 - a)
    bm = 1 << (n - 1 - b)
    for k in range(psi.shape[0]):
        if (k & am) and not (k & bm):
            j = (k ^ am) | bm
            tmp = psi[k]
            psi[k] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def weighted_sum(psi, table):
    """sum_k |psi_k|^2 table_k."""
    total = 0.0
    for k in range(psi.shape[0]):
        total += (psi[k].real * psi[k].real + psi[k].imag * psi[k].imag) * table[k]
    return total

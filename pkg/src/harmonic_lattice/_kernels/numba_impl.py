"""Numba-jitted implementations of the hot kernels.

Same contracts as numpy_impl; the trigonometric prefactor matrices are
still prepared with numpy, only the O(cells * boundary * modes) loops
are compiled.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .numpy_impl import (
    _complex_sin_factor,
    _complex_sinh_ratio,
    ak_values,
    sin_matrix,
    sinh_ratio_matrix,
)

BACKEND_NAME = "numba"

_jit = {"nogil": True, "cache": True}


@nb.njit(parallel=True, **_jit)
def _kernel_table_jit(S, R, N):
    nb_cells = 2 * N - 1
    P = np.empty((nb_cells * nb_cells, 4 * nb_cells))
    for idx in nb.prange(nb_cells * nb_cells):
        m = idx // nb_cells
        n = idx % nb_cells
        for t in range(nb_cells):
            top = 0.0
            bot = 0.0
            left = 0.0
            right = 0.0
            for k in range(2 * N - 1):
                top += S[n, k] * R[k, m] * S[t, k]
                bot += S[n, k] * R[k, nb_cells - 1 - m] * S[t, k]
                left += S[m, k] * R[k, nb_cells - 1 - n] * S[t, k]
                right += S[m, k] * R[k, n] * S[t, k]
            P[idx, t] = top / N
            P[idx, nb_cells + t] = bot / N
            P[idx, 2 * nb_cells + t] = left / N
            P[idx, 3 * nb_cells + t] = right / N
    return P


def kernel_table(N: int) -> np.ndarray:
    return _kernel_table_jit(sin_matrix(N), sinh_ratio_matrix(N, ak_values(N)), N)


@nb.njit(**_jit)
def _sor_sweeps_jit(u, omega, tol, max_sweeps):
    n = u.shape[0]
    sweeps = 0
    res = np.inf
    while sweeps < max_sweeps:
        for parity in range(2):
            for i in range(1, n - 1):
                j0 = 1 + (i + 1 + parity) % 2
                for j in range(j0, n - 1, 2):
                    avg = 0.25 * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1])
                    u[i, j] += omega * (avg - u[i, j])
        sweeps += 1
        if sweeps % 8 == 0 or sweeps == max_sweeps:
            res = 0.0
            for i in range(1, n - 1):
                for j in range(1, n - 1):
                    avg = 0.25 * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1])
                    d = abs(u[i, j] - avg)
                    if d > res:
                        res = d
            if res <= tol:
                break
    return sweeps, res


def sor_solve(boundary, omega, tol, max_sweeps):
    u = boundary.copy()
    sweeps, res = _sor_sweeps_jit(u, omega, tol, max_sweeps)
    return u, sweeps, float(res)


@nb.njit(parallel=True, **_jit)
def _scan_max_jit(Z1, C1, H, C2):
    nz = Z1.shape[0]
    best = np.zeros(nz)
    for zi in nb.prange(nz):
        b = 0.0
        for c in range(C1.shape[1]):
            g = 0.0 + 0.0j
            for k in range(C1.shape[0]):
                g += Z1[zi, k] * C1[k, c]
            if abs(g) > b:
                b = abs(g)
        for c in range(C2.shape[1]):
            g = 0.0 + 0.0j
            for k in range(C2.shape[0]):
                g += H[zi, k] * C2[k, c]
            if abs(g) > b:
                b = abs(g)
        best[zi] = b
    return best


def complex_scan_max(N: int, zs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    a = ak_values(N)
    S = sin_matrix(N)
    R = sinh_ratio_matrix(N, a)
    half = N // 2
    m_rows = np.arange(-half, half + 1) + (N - 1)
    nonneg = np.arange(0, N) + (N - 1)
    Z1 = _complex_sin_factor(zs, N)
    C1 = (S[nonneg].T[:, :, None] * R[:, m_rows][:, None, :]).reshape(2 * N - 1, -1) / N
    H = _complex_sinh_ratio(zs, N, a)
    C2 = (S[nonneg].T[:, :, None] * S[m_rows].T[:, None, :]).reshape(2 * N - 1, -1) / N
    return _scan_max_jit(
        np.ascontiguousarray(Z1),
        np.ascontiguousarray(C1),
        np.ascontiguousarray(H),
        np.ascontiguousarray(C2),
    )

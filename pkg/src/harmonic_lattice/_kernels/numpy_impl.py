"""Pure numpy implementations of the hot kernels."""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def ak_values(N: int) -> np.ndarray:
    """a_k = arccosh(2 - cos(k pi / 2N)) for k = 1 .. 2N-1."""
    k = np.arange(1, 2 * N, dtype=np.float64)
    return np.arccosh(2.0 - np.cos(k * np.pi / (2 * N)))


def sin_matrix(N: int) -> np.ndarray:
    """S[j, k-1] = sin(pi k (j + N) / 2N) for j = -N+1 .. N-1."""
    j = np.arange(-N + 1, N, dtype=np.float64)
    k = np.arange(1, 2 * N, dtype=np.float64)
    return np.sin(np.pi * np.outer(j + N, k) / (2 * N))


def sinh_ratio_matrix(N: int, a: np.ndarray) -> np.ndarray:
    """R[k-1, j] = sinh(a_k (j + N)) / sinh(2 a_k N), j = -N+1 .. N-1.

    Rewritten as exp(a(j-N)) (1 - e^{-2a(j+N)}) / (1 - e^{-4aN}) so that
    no intermediate overflows for large N.
    """
    j = np.arange(-N + 1, N, dtype=np.float64)
    num = np.exp(a[:, None] * (j[None, :] - N)) * (
        1.0 - np.exp(-2.0 * a[:, None] * (j[None, :] + N))
    )
    return num / (1.0 - np.exp(-4.0 * a * N))[:, None]


def kernel_table(N: int) -> np.ndarray:
    """Dense Poisson kernel P[x, y] for interior x of Q_N.

    Rows: interior cells (|n|,|m| <= N-1), m outer / n inner, both increasing.
    Columns: boundary cells in side order top, bottom, left, right, each
    side traversed with its free coordinate increasing.
    """
    nb = 2 * N - 1
    a = ak_values(N)
    S = sin_matrix(N)
    R = sinh_ratio_matrix(N, a)
    # top[y=(n1,N)]:  P = 1/N sum_k S[n,k] R[k,m] S[n1,k]
    top = np.einsum("nk,km,jk->mnj", S, R, S, optimize=True) / N
    bottom = top[::-1, :, :]
    # left[y=(-N,m1)]: P = 1/N sum_k S[m,k] R[k,-n] S[m1,k]
    left = np.einsum("mk,kn,jk->mnj", S, R[:, ::-1], S, optimize=True) / N
    right = np.einsum("mk,kn,jk->mnj", S, R, S, optimize=True) / N
    P = np.concatenate([top, bottom, left, right], axis=2)
    return np.ascontiguousarray(P.reshape(nb * nb, 4 * nb))


def sor_solve(
    boundary: np.ndarray,
    omega: float,
    tol: float,
    max_sweeps: int,
) -> tuple[np.ndarray, int, float]:
    """Red-black SOR for the five-point mean value property on a square.

    `boundary` is the full (2N+1)^2 grid with boundary sides filled and
    interior zeros; corners are never referenced.  Red cells are those
    with even index sum.  Returns (grid, sweeps, final residual) where
    the residual is max |u - avg(four neighbors)| over the interior.
    """
    u = boundary.copy()
    n = u.shape[0]
    ii, jj = np.meshgrid(np.arange(1, n - 1), np.arange(1, n - 1), indexing="ij")
    red = (ii + jj) % 2 == 0
    black = ~red
    sweeps = 0
    res = np.inf
    while sweeps < max_sweeps:
        for mask in (red, black):
            avg = 0.25 * (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2])
            interior = u[1:-1, 1:-1]
            interior[mask] += omega * (avg[mask] - interior[mask])
        sweeps += 1
        if sweeps % 8 == 0 or sweeps == max_sweeps:
            avg = 0.25 * (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2])
            res = float(np.max(np.abs(u[1:-1, 1:-1] - avg)))
            if res <= tol:
                break
    return u, sweeps, res


def _complex_sin_factor(zs: np.ndarray, N: int) -> np.ndarray:
    """Z[z, k-1] = sin(pi k (z + 1) / 2)."""
    k = np.arange(1, 2 * N, dtype=np.float64)
    return np.sin(0.5 * np.pi * np.outer(zs + 1.0, k))


def _complex_sinh_ratio(zs: np.ndarray, N: int, a: np.ndarray) -> np.ndarray:
    """H[z, k-1] = sinh(a_k N (z + 1)) / sinh(2 a_k N), overflow-safe."""
    aN = a * N
    num = np.exp(np.multiply.outer(zs - 1.0, aN)) - np.exp(
        np.multiply.outer(-(zs + 3.0), aN)
    )
    return num / (1.0 - np.exp(-4.0 * aN))[None, :]


def complex_scan_max(N: int, zs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Per-z maximum of |g(z)| over boundary cells y and lines |m| <= N/2.

    g is the complex extension of z -> P((zN, m), y).  Reflection
    symmetries of the square reduce the scan to the top side with
    n1 >= 0 and the right side with m1 >= 0.
    """
    a = ak_values(N)
    S = sin_matrix(N)
    R = sinh_ratio_matrix(N, a)
    half = N // 2
    m_rows = np.arange(-half, half + 1) + (N - 1)  # indices into the j axis
    nonneg = np.arange(0, N) + (N - 1)

    best = np.zeros(len(zs))
    # family 1: y on the top side, z enters through the sine factor
    Z1 = _complex_sin_factor(zs, N)
    C1 = (S[nonneg].T[:, :, None] * R[:, m_rows][:, None, :]).reshape(2 * N - 1, -1) / N
    for lo in range(0, C1.shape[1], chunk):
        g = Z1 @ C1[:, lo : lo + chunk]
        np.maximum(best, np.max(np.abs(g), axis=1), out=best)
    # family 2: y on the right side, z enters through the sinh factor
    H = _complex_sinh_ratio(zs, N, a)
    C2 = (S[nonneg].T[:, :, None] * S[m_rows].T[:, None, :]).reshape(2 * N - 1, -1) / N
    for lo in range(0, C2.shape[1], chunk):
        g = H @ C2[:, lo : lo + chunk]
        np.maximum(best, np.max(np.abs(g), axis=1), out=best)
    return best

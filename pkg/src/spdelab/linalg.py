"""Shifted periodic Laplacian solves: cyclic tridiagonal and spectral diagonal."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

from spdelab.grid import Field, PeriodicGrid
from spdelab.operators import laplacian_symbol


@njit(cache=True)
def _thomas_rows(lower, cp, inv_denom, rhs, out):
    # rhs, out: (M, N); lower[i] multiplies x[i-1]
    M, N = rhs.shape
    for r in range(M):
        out[r, 0] = rhs[r, 0] * inv_denom[0]
        for i in range(1, N):
            out[r, i] = (rhs[r, i] - lower[i] * out[r, i - 1]) * inv_denom[i]
        for i in range(N - 2, -1, -1):
            out[r, i] -= cp[i] * out[r, i + 1]
    return out


class CyclicTridiagonal:
    """Solver for a cyclic tridiagonal system with fixed coefficients.

    Row ``i`` reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`` with
    indices taken mod ``N``, so ``lower[0]`` and ``upper[N-1]`` are the corner
    entries. The corners are removed by a rank-one Sherman-Morrison update
    and the remaining tridiagonal system is solved by the Thomas algorithm;
    the factorisation is computed once.
    """

    def __init__(self, lower, diag, upper):
        lower = np.asarray(lower, dtype=float).copy()
        diag = np.asarray(diag, dtype=float).copy()
        upper = np.asarray(upper, dtype=float).copy()
        N = diag.size
        if N < 3:
            raise ValueError("cyclic tridiagonal systems need N >= 3")
        beta = lower[0]        # A[0, N-1]
        alpha = upper[N - 1]   # A[N-1, 0]
        gamma = -diag[0] if diag[0] != 0 else -1.0
        diag[0] -= gamma
        diag[N - 1] -= alpha * beta / gamma
        lower[0] = 0.0
        upper[N - 1] = 0.0

        cp = np.zeros(N)
        inv_denom = np.empty(N)
        inv_denom[0] = 1.0 / diag[0]
        cp[0] = upper[0] * inv_denom[0]
        for i in range(1, N):
            denom = diag[i] - lower[i] * cp[i - 1]
            inv_denom[i] = 1.0 / denom
            cp[i] = upper[i] * inv_denom[i]
        self._lower, self._cp, self._inv = lower, cp, inv_denom
        self.N = N

        u = np.zeros(N)
        u[0], u[N - 1] = gamma, alpha
        self._z = self._thomas(u[np.newaxis, :])[0]
        self._v0, self._vN = 1.0, beta / gamma
        self._denom = 1.0 + self._v0 * self._z[0] + self._vN * self._z[N - 1]

    def _thomas(self, rhs2d):
        out = np.empty_like(rhs2d)
        return _thomas_rows(self._lower, self._cp, self._inv, rhs2d, out)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        shape = rhs.shape
        flat = np.ascontiguousarray(rhs.reshape(-1, self.N))
        y = self._thomas(flat)
        coef = (self._v0 * y[:, 0] + self._vN * y[:, -1]) / self._denom
        return (y - coef[:, np.newaxis] * self._z).reshape(shape)


@lru_cache(maxsize=64)
def shifted_fd_solver(N: int, alpha: float) -> CyclicTridiagonal:
    """Solver for ``(I - alpha * Delta_N)`` with the three-point periodic Laplacian."""
    delta = PeriodicGrid(N).delta
    off = np.full(N, -alpha / delta ** 2)
    diag = np.full(N, 1.0 + 2.0 * alpha / delta ** 2)
    return CyclicTridiagonal(off, diag, off)


BACKENDS = ("cyclic_tridiagonal", "spectral_diagonal")
BACKEND_OPERATOR = {"cyclic_tridiagonal": "fd_laplacian",
                    "spectral_diagonal": "galerkin_laplacian"}


def solve_shifted_linear(backend: str, alpha: float, rhs):
    """Solve ``(I - alpha L) x = rhs`` along the last axis of ``rhs``.

    ``rhs`` may be an array or a :class:`~spdelab.grid.Field`; the result has
    the same type.
    """
    if isinstance(rhs, Field):
        return Field(rhs.grid, solve_shifted_linear(backend, alpha, rhs.values))
    if alpha < 0:
        raise ValueError("shift alpha must be nonnegative")
    rhs = np.asarray(rhs, dtype=float)
    if alpha == 0:
        return rhs.copy()
    N = rhs.shape[-1]
    if backend == "cyclic_tridiagonal":
        return shifted_fd_solver(N, float(alpha)).solve(rhs)
    if backend == "spectral_diagonal":
        lam = laplacian_symbol("galerkin_laplacian", PeriodicGrid(N))
        return np.fft.irfft(np.fft.rfft(rhs, axis=-1) / (1.0 - alpha * lam), n=N, axis=-1)
    raise ValueError(f"unknown backend {backend!r}")


def dense_operator_matrix(kind: str, grid: PeriodicGrid) -> np.ndarray:
    """Dense matrix of a periodic Laplacian (for tests and small problems only)."""
    from spdelab.operators import linear_operator_array
    return linear_operator_array(kind, np.eye(grid.N), grid).T

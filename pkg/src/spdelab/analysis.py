"""Correction constants, bipolar coordinates and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from spdelab.grid import Field, PeriodicGrid


@dataclass(frozen=True)
class CorrectionQuery:
    """Which correction constant to compute.

    kind is one of ``continuum_two_point`` (uses ``a``, ``b``),
    ``general_stencil`` (uses ``c``), ``fd_discrete`` and
    ``galerkin_discrete`` (use ``N``).
    """

    kind: str
    sigma: float = 1.0
    nu: float = 1.0
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    N: int = 64

    def __post_init__(self):
        if self.kind not in ("continuum_two_point", "general_stencil",
                             "fd_discrete", "galerkin_discrete"):
            raise ValueError(f"unknown correction kind {self.kind!r}")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.kind == "continuum_two_point" and not (
                self.a >= 0 and self.b >= 0 and self.a + self.b > 0):
            raise ValueError("continuum_two_point needs a, b >= 0 and a + b > 0")
        if self.kind in ("fd_discrete", "galerkin_discrete") and (self.N <= 0 or self.N % 2):
            raise ValueError("N must be a positive even integer")


def fd_eta_squared(N: int) -> np.ndarray:
    """``eta_n^2 = (2/delta sin(n delta / 2))^2`` for ``n = 1..N/2``."""
    delta = 2 * math.pi / N
    n = np.arange(1, N // 2 + 1)
    return (2.0 / delta * np.sin(n * delta / 2.0)) ** 2


def fd_correction_terms(N: int) -> np.ndarray:
    """Summands ``(cos(n delta) - 1) / (delta eta_n^2)``; each equals ``-delta/2``."""
    delta = 2 * math.pi / N
    n = np.arange(1, N // 2 + 1)
    return (np.cos(n * delta) - 1.0) / (delta * fd_eta_squared(N))


def galerkin_correction_sum(N: int) -> float:
    """``(1/2pi) sum_{n=1}^{N/2} (1 - cos(n delta)) / (delta n^2)``."""
    delta = 2 * math.pi / N
    n = np.arange(1, N // 2 + 1, dtype=float)
    return float(np.sum((1.0 - np.cos(n * delta)) / (delta * n ** 2)) / (2 * math.pi))


def correction_constant(q: CorrectionQuery) -> float:
    """Constant drift picked up by the one-sided nonlinearity under white noise.

    ``general_stencil`` returns the closed form ``-c sigma^2 / (8 nu)``.
    Evaluating the underlying mode integral (or
    :func:`discrete_stencil_constant` for large N) gives ``-c sigma^2 / (4 nu)``
    instead, and simulations of the c-family scheme pick up the latter.
    """
    scale = q.sigma ** 2 / q.nu
    if q.kind == "continuum_two_point":
        return scale / 4.0 * (q.a - q.b) / (q.a + q.b)
    if q.kind == "general_stencil":
        return -q.c * scale / 8.0
    if q.kind == "fd_discrete":
        return -scale / (2 * math.pi) * float(np.sum(fd_correction_terms(q.N)))
    return scale * galerkin_correction_sum(q.N)


def discrete_stencil_constant(stencil, N: int, operator: str = "fd_laplacian",
                              sigma: float = 1.0, nu: float = 1.0) -> float:
    """Predicted constant correction for any stencil on an N-point grid.

    Stationary Fourier coefficients of the linear solution satisfy
    ``E|c_n|^2 = sigma^2 / (4 pi nu eta_n^2)``, so the mean of ``-v D v`` is
    ``-sigma^2/(2 pi nu) sum_{n=1}^{N/2} Re s(n) / eta_n^2`` with ``s`` the
    stencil symbol. For the right-sided stencil this is the fd or Galerkin
    constant depending on ``operator``.
    """
    from spdelab.operators import laplacian_symbol

    grid = PeriodicGrid(N)
    n = np.arange(1, N // 2 + 1)
    eta2 = -laplacian_symbol(operator, grid)[1:N // 2 + 1]
    re = np.real(stencil.symbol(n, grid.delta))
    return float(-sigma ** 2 / (2 * math.pi * nu) * np.sum(re / eta2))


def galerkin_limit_constant() -> float:
    """``(Si(pi) - 2/pi) / (2 pi)``, the ``N -> infinity`` limit of the Galerkin sum."""
    from scipy.special import sici
    return (sici(math.pi)[0] - 2.0 / math.pi) / (2 * math.pi)


@dataclass(frozen=True)
class BipolarPoint:
    x: float
    y: float
    d0: float
    d1: float
    D: float
    clamped: bool = False


def bipolar_coordinates(d0: float, d1: float, D: float) -> BipolarPoint:
    """Planar point at distance ``d0`` from (0, 0) and ``d1`` from (D, 0), with ``y >= 0``.

    If the three distances violate the triangle inequality by more than
    ``1e-9 * D`` the height is clamped to zero and ``clamped`` is set.
    """
    if not D > 0:
        raise ValueError("centre separation D must be positive")
    x = (D ** 2 + d0 ** 2 - d1 ** 2) / (2 * D)
    h2 = d0 ** 2 - x ** 2
    clamped = h2 < 0 and (abs(d0 - d1) > D * (1 + 1e-9) or d0 + d1 < D * (1 - 1e-9))
    return BipolarPoint(x, math.sqrt(max(0.0, h2)), d0, d1, D, bool(clamped))


@dataclass(frozen=True)
class SpectrumStats:
    """Per-mode mean of ``|c_n|^2`` over samples, with standard errors.

    Coefficients follow the grid convention ``u_j = sum_n c_n exp(i n x_j)``,
    under which the stationary heat equation has ``E|c_n|^2 = sigma^2 / (4 pi nu n^2)``.
    """

    modes: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    count: int


def stationary_mode_variance(n, sigma: float = 1.0, nu: float = 1.0, eigenvalue=None):
    """Expected ``|c_n|^2`` of the stationary linear equation; ``eigenvalue`` defaults to ``-n^2``."""
    n = np.asarray(n, dtype=float)
    lam = -n ** 2 if eigenvalue is None else np.asarray(eigenvalue)
    return sigma ** 2 / (2 * nu * -lam) / (2 * math.pi)


def spectrum_stats(samples: Sequence) -> SpectrumStats:
    arrays = [s.values[0] if isinstance(s, Field) else np.asarray(s) for s in samples]
    if len(arrays) < 2:
        raise ValueError("spectrum_stats needs at least two samples")
    data = np.stack(arrays)
    N = data.shape[-1]
    power = np.abs(np.fft.rfft(data, axis=-1) / N) ** 2
    return SpectrumStats(np.arange(N // 2 + 1), power.mean(axis=0),
                         power.std(axis=0, ddof=1) / math.sqrt(len(arrays)), len(arrays))


@dataclass(frozen=True)
class QuantileSummary:
    edges: np.ndarray
    counts: np.ndarray
    q05: float
    q95: float


def histogram_quantiles(values, nbins: int = 40) -> QuantileSummary:
    """Equal-width histogram over [min, max] plus the 5% and 95% quantiles.

    Quantiles use linear interpolation between order statistics: for sorted
    data ``x_0..x_{n-1}`` the q-quantile is read at fractional index ``q (n-1)``.
    """
    values = np.asarray(values, dtype=float).ravel()
    values = values[np.isfinite(values)]
    if values.size == 0:
        raise ValueError("histogram_quantiles needs at least one finite value")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        edges = np.array([lo, hi])
        counts = np.array([values.size])
    else:
        counts, edges = np.histogram(values, bins=nbins, range=(lo, hi))
    q05, q95 = np.quantile(values, [0.05, 0.95], method="linear")
    return QuantileSummary(edges, counts, float(q05), float(q95))

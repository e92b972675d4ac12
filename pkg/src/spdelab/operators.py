"""Difference stencils, periodic Laplacians and related Fourier multipliers.

Array-level functions act on the last axis of arrays of any shape and take
the grid spacing explicitly; the :class:`~spdelab.grid.Field` wrappers are
the public entry points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from spdelab.grid import Field, PeriodicGrid


@dataclass(frozen=True)
class StencilSpec:
    """First-derivative stencil on grid offsets, in units of the grid spacing.

    ``two_point(a, b)`` is ``(u(x + a*eps) - u(x - b*eps)) / ((a + b)*eps)``;
    ``general(c)`` is the second-order family
    ``(c u(x+2eps) + (1-3c) u(x+eps) + 3c u(x) - (1+c) u(x-eps)) / (2 eps)``.
    """

    variant: str
    a: int = 0
    b: int = 0
    c: float = 0.0

    def __post_init__(self):
        if self.variant == "two_point":
            for name, v in (("a", self.a), ("b", self.b)):
                if v < 0 or int(v) != v:
                    raise ValueError(f"stencil {name} must be a nonnegative integer, got {v}")
            if self.a + self.b <= 0:
                raise ValueError("stencil requires a + b > 0")
            object.__setattr__(self, "a", int(self.a))
            object.__setattr__(self, "b", int(self.b))
        elif self.variant != "general":
            raise ValueError(f"unknown stencil variant {self.variant!r}")

    @classmethod
    def two_point(cls, a: int, b: int) -> "StencilSpec":
        return cls("two_point", a=a, b=b)

    @classmethod
    def general(cls, c: float) -> "StencilSpec":
        return cls("general", c=float(c))

    @property
    def label(self) -> str:
        if self.variant == "general":
            return f"general(c={self.c:g})"
        return {(1, 0): "right", (1, 1): "centred", (0, 1): "left"}.get(
            (self.a, self.b), f"two_point({self.a},{self.b})")

    def coefficients(self) -> dict[int, float]:
        """Map offset -> weight, to be divided by the grid spacing."""
        if self.variant == "general":
            c = self.c
            return {2: c / 2, 1: (1 - 3 * c) / 2, 0: 3 * c / 2, -1: -(1 + c) / 2}
        w = 1.0 / (self.a + self.b)
        coeffs = {self.a: w}
        coeffs[-self.b] = coeffs.get(-self.b, 0.0) - w
        return coeffs

    def symbol(self, n, delta: float):
        """Complex multiplier of the stencil acting on ``exp(i n x)``."""
        n = np.asarray(n, dtype=float)
        return sum(w * np.exp(1j * n * k * delta) for k, w in self.coefficients().items()) / delta


RIGHT = StencilSpec.two_point(1, 0)
CENTRED = StencilSpec.two_point(1, 1)
LEFT = StencilSpec.two_point(0, 1)


def stencil_array(s: StencilSpec, u: np.ndarray, delta: float) -> np.ndarray:
    out = np.zeros_like(u, dtype=float)
    for k, w in s.coefficients().items():
        if w:
            # value at x + k*delta lives at index j + k
            out += w * np.roll(u, -k, axis=-1)
    return out / delta


def apply_stencil(s: StencilSpec, f: Field) -> Field:
    return Field(f.grid, stencil_array(s, f.values, f.grid.delta))


def conservative_derivative(G: Callable, s: StencilSpec, f: Field) -> Field:
    """Stencil applied to the pointwise composition ``G(f)``."""
    return Field(f.grid, stencil_array(s, G(f.values), f.grid.delta))


@dataclass(frozen=True)
class LinearOperatorSpec:
    """Periodic Laplacian: three-point finite differences or spectral Galerkin."""

    kind: str
    grid: PeriodicGrid

    def __post_init__(self):
        if self.kind not in ("fd_laplacian", "galerkin_laplacian"):
            raise ValueError(f"unknown linear operator {self.kind!r}")

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalue for each half-spectrum mode ``n = 0..N/2``."""
        return laplacian_symbol(self.kind, self.grid)


def laplacian_symbol(kind: str, grid: PeriodicGrid) -> np.ndarray:
    n = grid.modes.astype(float)
    if kind == "fd_laplacian":
        return -(2.0 / grid.delta * np.sin(n * grid.delta / 2.0)) ** 2
    if kind == "galerkin_laplacian":
        return -n ** 2
    raise ValueError(f"unknown linear operator {kind!r}")


def fd_laplacian_array(u: np.ndarray, delta: float) -> np.ndarray:
    return (np.roll(u, -1, axis=-1) - 2.0 * u + np.roll(u, 1, axis=-1)) / delta ** 2


def spectral_multiply(u: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """Apply a real half-spectrum multiplier along the last axis."""
    N = u.shape[-1]
    return np.fft.irfft(np.fft.rfft(u, axis=-1) * multiplier, n=N, axis=-1)


def linear_operator_array(kind: str, u: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    if kind == "fd_laplacian":
        return fd_laplacian_array(u, grid.delta)
    return spectral_multiply(u, laplacian_symbol(kind, grid))


def apply_linear_operator(op: LinearOperatorSpec, f: Field) -> Field:
    return Field(f.grid, linear_operator_array(op.kind, f.values, op.grid))


def multiplier_gap(eps: float, k: float) -> float:
    """``|M_eps(k)|`` for ``M_eps(k) = (exp(i k eps) - 1 - i k eps) / eps``.

    This is the symbol of the one-sided difference quotient minus the exact
    derivative. For small ``k*eps`` the direct formula cancels catastrophically,
    so the Taylor series is used there.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    theta = k * eps
    if abs(theta) < 1e-3:
        # e^{it} - 1 - it = -t^2/2 - i t^3/6 + t^4/24 + ...
        re = -theta ** 2 / 2 + theta ** 4 / 24
        im = -theta ** 3 / 6 + theta ** 5 / 120
        return float(np.hypot(re, im) / eps)
    return float(abs(np.expm1(1j * theta) - 1j * theta) / eps)


def multiplier_bound(eps: float, k: float) -> float:
    """Candidate bound ``|k| * min(eps*|k|, 1)`` on :func:`multiplier_gap`.

    It holds for ``eps*|k| <= 2.3311`` (the root of ``tan(t/2) = t``) and fails
    on parts of larger arguments; ``1.2596`` times it holds everywhere.
    """
    return abs(k) * min(eps * abs(k), 1.0)


def godunov_flux_difference(u: np.ndarray, delta: float) -> np.ndarray:
    """Conservative upwind approximation of ``d_x(u^2/2)`` (Godunov flux for Burgers).

    Interface ``j+1/2`` sits between ``u_j`` and ``u_{j+1}``; the returned value
    at ``j`` is ``(F_{j+1/2} - F_{j-1/2}) / delta``.
    """
    ul = u
    ur = np.roll(u, -1, axis=-1)
    f_l = 0.5 * ul ** 2
    f_r = 0.5 * ur ** 2
    # exact Riemann solution: min over [ul, ur] if ul <= ur, else max over [ur, ul]
    rarefaction = np.where((ul < 0) & (ur > 0), 0.0, np.minimum(f_l, f_r))
    flux = np.where(ul <= ur, rarefaction, np.maximum(f_l, f_r))
    return (flux - np.roll(flux, 1, axis=-1)) / delta

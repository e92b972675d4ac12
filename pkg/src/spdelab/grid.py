"""Periodic grids on [0, 2*pi), field containers and the half-spectrum transform.

Conventions
-----------
* A field with ``d`` components on an ``N`` point grid is stored as a
  ``(d, N)`` array; gridpoint ``j`` sits at ``x_j = j * delta``.
* The grid L2 norm carries the weight ``delta`` so that norms computed on
  different resolutions are comparable (Riemann sum of the continuum norm).
* Spectral coefficients are normalised so that
  ``u_j = sum_n c_n exp(i n x_j)`` over ``n = -N/2+1 .. N/2``; only the
  half spectrum ``n = 0 .. N/2`` is stored (``numpy.fft.rfft(u) / N``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid with ``N`` points on the periodic interval [0, 2*pi)."""

    N: int
    length: float = field(default=TWO_PI, init=False)

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N <= 0:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if self.N % 2:
            raise ValueError(f"N must be even, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def delta(self) -> float:
        return self.length / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.delta

    @property
    def modes(self) -> np.ndarray:
        """Nonnegative mode numbers 0..N/2 of the half spectrum."""
        return np.arange(self.N // 2 + 1)

    def coarsen(self, m: int) -> "PeriodicGrid":
        if m <= 0 or self.N % m:
            raise ValueError(f"refine factor {m} does not divide N = {self.N}")
        return PeriodicGrid(self.N // m)

    def refine(self, m: int) -> "PeriodicGrid":
        if m <= 0:
            raise ValueError(f"refine factor must be positive, got {m}")
        return PeriodicGrid(self.N * m)


class Field:
    """Real field with ``components`` rows sampled on a :class:`PeriodicGrid`.

    The value array is copied on construction and marked read-only, so a
    ``Field`` can be shared freely.
    """

    __slots__ = ("grid", "_values")

    def __init__(self, grid: PeriodicGrid, values):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if values.ndim != 2 or values.shape[1] != grid.N:
            raise ValueError(
                f"values must have shape (d, {grid.N}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self._values = values

    @classmethod
    def from_function(cls, grid: PeriodicGrid, *funcs) -> "Field":
        x = grid.x
        return cls(grid, np.array([np.broadcast_to(f(x), x.shape) for f in funcs]))

    @classmethod
    def zeros(cls, grid: PeriodicGrid, components: int = 1) -> "Field":
        return cls(grid, np.zeros((components, grid.N)))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def components(self) -> int:
        return self._values.shape[0]

    def __getitem__(self, idx):
        # cyclic indexing along the grid axis
        c, j = idx
        return self._values[c, j % self.grid.N]

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self._values, other._values)

    def __repr__(self):
        return f"Field(N={self.grid.N}, components={self.components})"

    def __add__(self, other):
        return Field(self.grid, self._values + _as_values(other))

    def __sub__(self, other):
        return Field(self.grid, self._values - _as_values(other))

    def __mul__(self, scalar):
        return Field(self.grid, self._values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self._values)


def _as_values(other):
    return other.values if isinstance(other, Field) else other


@dataclass(frozen=True)
class SpectralCoeffs:
    """Half-spectrum ``c_0 .. c_{N/2}`` of a one-component real field."""

    grid: PeriodicGrid
    coeffs: np.ndarray

    def energy(self) -> float:
        """Squared grid L2 norm computed from the coefficients (Parseval)."""
        return spectral_energy(self.coeffs, self.grid.N)


def spectral_energy(coeffs: np.ndarray, N: int) -> float:
    weights = np.full(coeffs.shape[-1], 2.0)
    weights[0] = 1.0
    weights[N // 2] = 1.0
    return float(TWO_PI * np.sum(weights * np.abs(coeffs) ** 2))


def l2_norm(f: Field) -> float:
    """Grid L2 norm ``sqrt(delta * sum_{c,j} f_{c,j}^2)``."""
    return math.sqrt(f.grid.delta * float(np.sum(f.values ** 2)))


def l2_norm_array(values: np.ndarray, delta: float) -> np.ndarray:
    """Grid L2 norm over the trailing ``(d, N)`` axes of a batched array."""
    return np.sqrt(delta * np.sum(values ** 2, axis=(-2, -1)))


def restrict_to_coarse(fine: Field, m: int) -> Field:
    """Sample ``fine`` at every ``m``-th gridpoint (shared points, no interpolation)."""
    coarse = fine.grid.coarsen(m)
    return Field(coarse, fine.values[:, ::m])


def spectral_transform(f: Field) -> SpectralCoeffs:
    if f.components != 1:
        raise ValueError("spectral_transform expects a one-component field")
    coeffs = np.fft.rfft(f.values[0]) / f.grid.N
    return SpectralCoeffs(f.grid, coeffs)


def inverse_spectral_transform(s: SpectralCoeffs) -> Field:
    return Field(s.grid, np.fft.irfft(s.coeffs * s.grid.N, n=s.grid.N))


def write_field_csv(f: Field, path, digits: int = 17) -> Path:
    """Write ``x,u_0[,u_1,...]`` with one row per gridpoint."""
    path = Path(path)
    header = ["x"] + [f"u_{c}" for c in range(f.components)]
    rows = np.vstack([f.grid.x, f.values]).T
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v, digits) for v in row])
    return path


def read_field_csv(path) -> Field:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    if header[0] != "x" or data.ndim != 2:
        raise ValueError(f"{path}: not a field CSV")
    return Field(PeriodicGrid(data.shape[0]), data[:, 1:].T)


def format_float(v: float, digits: int = 17) -> str:
    return f"{v:.{digits}g}"

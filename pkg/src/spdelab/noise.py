"""Discretised space-time noise with counter-based, coupling-friendly streams.

Every increment is a pure function of ``(master_seed, run_id, step)``: the
generator for one step is a Philox instance keyed by ``(master_seed, run_id)``
with the step number placed in the high word of the counter. Runs can
therefore be generated in any order, or batched, without changing a sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from spdelab.grid import PeriodicGrid


@dataclass(frozen=True)
class NoiseSpec:
    """White noise, or noise coloured by the multiplier ``(1 + n^2)^(-colour_exponent)``.

    A negative ``colour_exponent`` gives noise rougher than white noise.
    """

    kind: str = "white"
    colour_exponent: float = 0.0
    components: int = 1

    def __post_init__(self):
        if self.kind not in ("white", "coloured"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "white" and self.colour_exponent != 0.0:
            raise ValueError("white noise has colour_exponent 0")
        if self.components < 1:
            raise ValueError("components must be >= 1")

    @classmethod
    def coloured(cls, exponent: float, components: int = 1) -> "NoiseSpec":
        return cls("coloured", float(exponent), components)


@dataclass(frozen=True)
class NoiseIncrement:
    """One time step of discretised noise, ``xi * sqrt(dt / delta)`` per gridpoint."""

    grid: PeriodicGrid
    dt: float
    values: np.ndarray


def _stream_key(master_seed: int, run_id: int) -> np.ndarray:
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(run_id)])
    return ss.generate_state(2, dtype=np.uint64)


def standard_normals(master_seed: int, run_id: int, step: int, shape) -> np.ndarray:
    """Standard normal block for one ``(seed, run, step)`` label."""
    bitgen = np.random.Philox(key=_stream_key(master_seed, run_id),
                              counter=[0, 0, 0, int(step)])
    return np.random.Generator(bitgen).standard_normal(shape)


def colour_multiplier(N: int, exponent: float) -> np.ndarray:
    n = np.arange(N // 2 + 1)
    return (1.0 + n.astype(float) ** 2) ** (-exponent)


def colourise(values: np.ndarray, exponent: float) -> np.ndarray:
    """Apply ``(1 - d_x^2)^(-exponent)`` along the last axis via the half spectrum."""
    if exponent == 0.0:
        return values
    N = values.shape[-1]
    spec = np.fft.rfft(values, axis=-1) * colour_multiplier(N, exponent)
    return np.fft.irfft(spec, n=N, axis=-1)


@dataclass
class NoiseStream:
    """Labelled noise source for one run; ``step_counter`` is the next step to draw."""

    master_seed: int
    run_id: int
    grid: PeriodicGrid
    step_counter: int = 0

    def increment(self, step: int, spec: NoiseSpec, dt: float) -> NoiseIncrement:
        """Increment for an explicit step number; does not touch ``step_counter``."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        xi = standard_normals(self.master_seed, self.run_id, step,
                              (spec.components, self.grid.N))
        values = colourise(xi * np.sqrt(dt / self.grid.delta), spec.colour_exponent)
        return NoiseIncrement(self.grid, dt, values)

    def next_increment(self, spec: NoiseSpec, dt: float) -> NoiseIncrement:
        inc = self.increment(self.step_counter, spec, dt)
        self.step_counter += 1
        return inc


def next_increment(stream: NoiseStream, spec: NoiseSpec, dt: float) -> NoiseIncrement:
    return stream.next_increment(spec, dt)


def make_paired_streams(master_seed: int, run_ids: Sequence[int],
                        grid: PeriodicGrid) -> list[NoiseStream]:
    run_ids = [int(r) for r in run_ids]
    if len(set(run_ids)) != len(run_ids):
        raise ValueError(f"duplicate run ids in {run_ids}")
    return [NoiseStream(master_seed, r, grid) for r in run_ids]


def block_mean_array(values: np.ndarray, m: int) -> np.ndarray:
    """Average consecutive blocks of ``m`` entries along the last axis."""
    N = values.shape[-1]
    if m <= 0 or N % m:
        raise ValueError(f"block size {m} does not divide N = {N}")
    if m == 1:
        return values
    return values.reshape(values.shape[:-1] + (N // m, m)).mean(axis=-1)


def block_mean(fine: NoiseIncrement, m: int) -> NoiseIncrement:
    """Coarse increment whose entry ``j`` is the mean of fine entries ``j*m .. j*m+m-1``.

    Averaging ``m`` fine cells of variance ``dt/delta_fine`` gives variance
    ``dt/delta_coarse``, i.e. the coarse cell average of the same white noise.
    """
    return NoiseIncrement(fine.grid.coarsen(m), fine.dt, block_mean_array(fine.values, m))


@dataclass
class NoiseBank:
    """Precomputed increments for a batch of runs, shape ``(steps, runs, d, N)``.

    Sweeps evaluate many models against one noise realisation, so the
    increments are drawn once and replayed.
    """

    master_seed: int
    run_ids: tuple
    grid: PeriodicGrid
    spec: NoiseSpec
    dt: float
    steps: int
    values: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.run_ids = tuple(int(r) for r in self.run_ids)
        if len(set(self.run_ids)) != len(self.run_ids):
            raise ValueError(f"duplicate run ids in {self.run_ids}")
        if self.values is None:
            shape = (self.spec.components, self.grid.N)
            scale = np.sqrt(self.dt / self.grid.delta)
            out = np.empty((self.steps, len(self.run_ids)) + shape)
            for b, run in enumerate(self.run_ids):
                for k in range(self.steps):
                    out[k, b] = standard_normals(self.master_seed, run, k, shape)
            out *= scale
            self.values = colourise(out, self.spec.colour_exponent)

    def coarsened(self, m: int) -> "NoiseBank":
        return NoiseBank(self.master_seed, self.run_ids, self.grid.coarsen(m), self.spec,
                         self.dt, self.steps, block_mean_array(self.values, m))

    def __getitem__(self, step: int) -> np.ndarray:
        return self.values[step]


@dataclass
class BatchNoise:
    """Per-step increments for a batch of runs, drawn on demand.

    Calling ``source(k)`` returns the step-``k`` increments, shape
    ``(runs, d, N / coarsen)``: drawn on ``grid`` and, when ``coarsen > 1``,
    block-averaged so that a coarse run sees the same noise as a fine one.
    Nothing is stored, so memory stays flat for long or wide runs.
    """

    master_seed: int
    run_ids: tuple
    grid: PeriodicGrid
    spec: NoiseSpec
    dt: float
    coarsen: int = 1

    def __post_init__(self):
        self.run_ids = tuple(int(r) for r in self.run_ids)
        if len(set(self.run_ids)) != len(self.run_ids):
            raise ValueError(f"duplicate run ids in {self.run_ids}")

    def __call__(self, step: int) -> np.ndarray:
        shape = (self.spec.components, self.grid.N)
        out = np.stack([standard_normals(self.master_seed, run, step, shape)
                        for run in self.run_ids])
        out *= np.sqrt(self.dt / self.grid.delta)
        out = colourise(out, self.spec.colour_exponent)
        return block_mean_array(out, self.coarsen) if self.coarsen > 1 else out

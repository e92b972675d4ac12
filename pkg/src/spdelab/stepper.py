"""Semi-implicit theta-method for ``du = nu L u dt + F(u) dt + s(u) dW``.

One step solves

    (I - nu theta dt L) u1 = (I + nu (1-theta) dt L) u0 + F(u0) dt + s(u0) * xi

where ``xi`` already carries the ``sqrt(dt/delta)`` scaling. The viscous
term is implicit, the drift and the noise coefficient are evaluated at the
start of the step (Ito).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from spdelab.grid import Field, PeriodicGrid
from spdelab.linalg import BACKEND_OPERATOR, BACKENDS, shifted_fd_solver
from spdelab.models import Linear, ModelSpec, drift_array, noise_coefficient_array
from spdelab.noise import NoiseIncrement, NoiseSpec, NoiseStream
from spdelab.operators import fd_laplacian_array, laplacian_symbol

# states whose sup norm exceeds this are treated as numerically blown up
BLOWUP_THRESHOLD = 1e8


class CFLViolation(RuntimeError):
    pass


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    theta: float = 0.5
    backend: str = "cyclic_tridiagonal"
    courant_limit: float = 0.5
    cfl_policy: str = "warn"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not self.courant_limit > 0:
            raise ValueError("courant_limit must be positive")
        if self.cfl_policy not in ("reject", "warn"):
            raise ValueError(f"cfl_policy must be 'reject' or 'warn', got {self.cfl_policy!r}")

    @property
    def operator(self) -> str:
        return BACKEND_OPERATOR[self.backend]


@dataclass(frozen=True)
class TrajectoryState:
    time: float
    field: Field
    step_index: int


def default_dt(delta: float, speed: float, courant_limit: float = 0.5, cap: float = 1e-3) -> float:
    """Largest step allowed by ``speed * dt / delta <= courant_limit``, capped at ``cap``."""
    if speed <= 0:
        return cap
    return min(cap, courant_limit * delta / speed)


def cfl_courant(f, dt: float, delta: float) -> float:
    """``max |f| * dt / delta`` over all gridpoints and components."""
    values = f.values if isinstance(f, Field) else np.asarray(f)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values))) * dt / delta


class LinearPropagator:
    """Applies ``(I - a L)^{-1} [(I + b L) u + rest]`` for one backend and step size."""

    def __init__(self, backend: str, grid: PeriodicGrid, nu: float, theta: float, dt: float):
        self.backend = backend
        self.grid = grid
        self.a = nu * theta * dt
        self.b = nu * (1.0 - theta) * dt
        if backend == "spectral_diagonal":
            lam = laplacian_symbol("galerkin_laplacian", grid)
            self._explicit = 1.0 + self.b * lam
            self._implicit = 1.0 / (1.0 - self.a * lam)
        else:
            self._solver = shifted_fd_solver(grid.N, float(self.a)) if self.a > 0 else None

    def __call__(self, u: np.ndarray, rest: np.ndarray) -> np.ndarray:
        N = self.grid.N
        if self.backend == "spectral_diagonal":
            spec = self._explicit * np.fft.rfft(u, axis=-1) + np.fft.rfft(rest, axis=-1)
            return np.fft.irfft(spec * self._implicit, n=N, axis=-1)
        rhs = u + rest
        if self.b:
            rhs = rhs + self.b * fd_laplacian_array(u, self.grid.delta)
        if self._solver is None:
            return rhs
        return self._solver.solve(rhs)


def _check_cfl(u, cfg: StepperConfig, delta: float, warned: list) -> None:
    # linear models have no transport, so callers skip this check for them
    finite = u[np.isfinite(u)]
    c = cfl_courant(finite, cfg.dt, delta)
    if c > cfg.courant_limit:
        msg = f"Courant number {c:.3g} exceeds limit {cfg.courant_limit:g}"
        if cfg.cfl_policy == "reject":
            raise CFLViolation(msg)
        if not warned:
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
            warned.append(True)


def theta_step(state: TrajectoryState, model: ModelSpec, cfg: StepperConfig,
               xi: NoiseIncrement) -> TrajectoryState:
    """Advance one step of size ``cfg.dt`` using the noise increment ``xi``."""
    grid = state.field.grid
    u = state.field.values
    if xi.values.shape != u.shape:
        raise ValueError(f"noise shape {xi.values.shape} does not match state {u.shape}")
    if not isinstance(model.nonlinearity, Linear):
        _check_cfl(u, cfg, grid.delta, [])
    prop = LinearPropagator(cfg.backend, grid, model.viscosity, cfg.theta, cfg.dt)
    rest = drift_array(model, u, grid.delta) * cfg.dt + noise_coefficient_array(model, u) * xi.values
    new = prop(u, rest)
    if not np.all(np.isfinite(new)):
        raise DivergenceError(f"non-finite state after step {state.step_index + 1}")
    return TrajectoryState((state.step_index + 1) * cfg.dt, Field(grid, new), state.step_index + 1)


def steps_for(T: float, dt: float) -> int:
    K = int(round(T / dt))
    if T < 0 or abs(K * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T = {T} is not an integer multiple of dt = {dt}")
    return K


@dataclass
class BatchResult:
    """Outcome of a batched run; member ``b`` diverged iff ``divergence_step[b] >= 0``."""

    final: np.ndarray
    divergence_step: np.ndarray
    dt: float
    snapshots: list = field(default_factory=list)

    @property
    def diverged(self) -> np.ndarray:
        return self.divergence_step >= 0

    @property
    def divergence_time(self) -> np.ndarray:
        return np.where(self.diverged, self.divergence_step * self.dt, np.nan)


def simulate(model: ModelSpec, grid: PeriodicGrid, cfg: StepperConfig, u0: np.ndarray,
             noise: Callable[[int], np.ndarray], steps: int,
             record_every: Optional[int] = None,
             observer: Optional[Callable[[int, np.ndarray], None]] = None) -> BatchResult:
    """Run a batch of independent trajectories that share model and step size.

    ``u0`` has shape ``(B, d, N)`` and ``noise(k)`` returns the scaled
    increments for step ``k`` with the same shape. Members that blow up are
    flagged with the step at which it happened and frozen at NaN; the rest
    continue. ``observer(k, u)`` is called after every step (and with k=0 on
    the initial state) when given.
    """
    u = np.array(u0, dtype=float)
    if u.ndim != 3 or u.shape[1:] != (model.components, grid.N):
        raise ValueError(f"u0 must have shape (B, {model.components}, {grid.N}), got {u.shape}")
    prop = LinearPropagator(cfg.backend, grid, model.viscosity, cfg.theta, cfg.dt)
    additive = not callable(getattr(model.noise, "f", None))
    transport = not isinstance(model.nonlinearity, Linear)
    sigma = model.sigma
    div_step = np.full(u.shape[0], -1)
    snaps = []
    warned: list = []
    if record_every:
        snaps.append((0, u.copy()))
    if observer is not None:
        observer(0, u)
    with np.errstate(all="ignore"):
        for k in range(steps):
            if transport:
                _check_cfl(u, cfg, grid.delta, warned)
            xi = noise(k)
            if additive:
                rest = drift_array(model, u, grid.delta) * cfg.dt + sigma * xi
            else:
                rest = drift_array(model, u, grid.delta) * cfg.dt + noise_coefficient_array(model, u) * xi
            u = prop(u, rest)
            bad = ~np.all(np.isfinite(u) & (np.abs(u) < BLOWUP_THRESHOLD), axis=(1, 2))
            newly = bad & (div_step < 0)
            if newly.any():
                div_step[newly] = k + 1
            if bad.any():
                u[bad] = np.nan
            if record_every and (k + 1) % record_every == 0:
                snaps.append((k + 1, u.copy()))
            if observer is not None:
                observer(k + 1, u)
    return BatchResult(u, div_step, cfg.dt, snaps)


@dataclass
class Trajectory:
    final: TrajectoryState
    snapshots: list
    diverged: bool = False
    divergence_time: float = math.nan


def integrate(model: ModelSpec, cfg: StepperConfig, stream: NoiseStream, spec: NoiseSpec,
              u0: Field, T: float, record_every: Optional[int] = None) -> Trajectory:
    """Integrate one trajectory to time ``T``, drawing increments from ``stream`` in order.

    A non-finite state, or one exceeding ``BLOWUP_THRESHOLD`` in magnitude,
    stops the run; the returned trajectory then reports ``diverged=True`` with
    the last state and the divergence time.
    """
    K = steps_for(T, cfg.dt)
    if spec.components != model.components:
        raise ValueError("noise components do not match the model")
    state = TrajectoryState(0.0, u0, 0)
    snaps = [state] if record_every else []
    for _ in range(K):
        xi = stream.next_increment(spec, cfg.dt)
        try:
            with np.errstate(all="ignore"):
                state = theta_step(state, model, cfg, xi)
        except DivergenceError:
            return Trajectory(state, snaps, True, (state.step_index + 1) * cfg.dt)
        if np.abs(state.field.values).max() >= BLOWUP_THRESHOLD:
            return Trajectory(state, snaps, True, state.time)
        if record_every and state.step_index % record_every == 0:
            snaps.append(state)
    return Trajectory(state, snaps)

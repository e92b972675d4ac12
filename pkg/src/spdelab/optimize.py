"""Nelder-Mead simplex minimisation and correction-polynomial fitting."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimplexConfig:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    initial_step: float = 0.1
    max_evals: int = 5000
    f_tolerance: float = 1e-14
    x_tolerance: float = 1e-10

    def __post_init__(self):
        for name in ("reflection", "expansion", "contraction", "shrink", "initial_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.expansion > self.reflection:
            raise ValueError("expansion must exceed reflection")
        if self.contraction >= 1 or self.shrink >= 1:
            raise ValueError("contraction and shrink must be < 1")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")


@dataclass
class FitResult:
    best_params: np.ndarray
    best_value: float
    evals_used: int
    converged: bool
    evaluation_log: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_params": [float(v) for v in self.best_params],
            "best_value": float(self.best_value),
            "evals_used": int(self.evals_used),
            "converged": bool(self.converged),
            "evaluation_log": [
                {"params": [float(v) for v in p], "value": _json_float(v)}
                for p, v in self.evaluation_log
            ],
        }


def _json_float(v: float):
    return float(v) if math.isfinite(v) else None


class _BudgetExhausted(Exception):
    pass


def nelder_mead(objective: Callable[[np.ndarray], float], x0: Sequence[float],
                cfg: SimplexConfig = SimplexConfig()) -> FitResult:
    """Minimise ``objective`` from ``x0`` with the Nelder-Mead simplex method.

    The initial simplex is ``x0`` plus one axis step of ``cfg.initial_step``
    per coordinate. Iteration stops when the simplex diameter drops below
    ``x_tolerance``, the spread of vertex values drops below ``f_tolerance``,
    or the evaluation budget is spent. Non-finite objective values are
    treated as +inf, except at ``x0`` itself where they are an error.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    k = x0.size
    log_: list = []
    best = [None, math.inf]

    def f(x):
        if len(log_) >= cfg.max_evals:
            raise _BudgetExhausted
        try:
            v = float(objective(x))
        except (ArithmeticError, ValueError) as exc:
            log.warning("objective failed at %s: %s", x, exc)
            v = math.inf
        if not math.isfinite(v):
            v = math.inf
        log_.append((x.copy(), v))
        if v < best[1] or best[0] is None:
            best[0], best[1] = x.copy(), v
        return v

    def result(converged):
        return FitResult(best[0], best[1], len(log_), converged, log_)

    simplex = np.vstack([x0] + [x0 + cfg.initial_step * np.eye(k)[i] for i in range(k)])
    try:
        values = np.array([f(v) for v in simplex])
    except _BudgetExhausted:
        return result(False)
    if not np.isfinite(values[0]):
        raise ValueError("objective is not finite at the starting point")
    if not np.all(np.isfinite(values)):
        log.warning("objective not finite at %d initial vertices", int(np.sum(~np.isfinite(values))))

    a, g, c, s = cfg.reflection, cfg.expansion, cfg.contraction, cfg.shrink
    try:
        while True:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]
            spread = values[-1] - values[0]
            diameter = np.max(np.abs(simplex[1:] - simplex[0]))
            if spread <= cfg.f_tolerance or diameter <= cfg.x_tolerance:
                return result(True)

            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            xr = centroid + a * (centroid - worst)
            fr = f(xr)
            if fr < values[0]:
                xe = centroid + g * (centroid - worst)
                fe = f(xe)
                if fe < fr:
                    simplex[-1], values[-1] = xe, fe
                else:
                    simplex[-1], values[-1] = xr, fr
                continue
            if fr < values[-2]:
                simplex[-1], values[-1] = xr, fr
                continue
            if fr < values[-1]:
                xc = centroid + c * (xr - centroid)      # outside contraction
                fc = f(xc)
                if fc <= fr:
                    simplex[-1], values[-1] = xc, fc
                    continue
            else:
                xc = centroid + c * (worst - centroid)   # inside contraction
                fc = f(xc)
                if fc < values[-1]:
                    simplex[-1], values[-1] = xc, fc
                    continue
            for i in range(1, k + 1):
                simplex[i] = simplex[0] + s * (simplex[i] - simplex[0])
                values[i] = f(simplex[i])
    except _BudgetExhausted:
        return result(False)


def fit_correction_polynomial(reference_run: np.ndarray,
                              solver_factory: Callable[[np.ndarray], np.ndarray],
                              degree: int, cfg: SimplexConfig = SimplexConfig(),
                              delta: float = None, refine_factor: int = 1,
                              x0: Sequence[float] = None) -> FitResult:
    """Fit monomial coefficients ``p_0..p_degree`` of a correction polynomial.

    ``reference_run`` holds the final coarse states, shape ``(B, d, N)``;
    ``solver_factory(coeffs)`` returns the corresponding final fine states
    ``(B, d, N * refine_factor)`` of the corrected equation, driven by noise
    coupled to the reference. The objective is the root mean square over
    the batch of the grid L2 distance after restricting the fine states to
    the coarse grid. Solver failures (non-finite states or raised numerical
    errors) score +inf.
    """
    reference_run = np.asarray(reference_run, dtype=float)
    if delta is None:
        delta = 2 * math.pi / reference_run.shape[-1]
    if degree < 0:
        raise ValueError("degree must be nonnegative")

    def objective(coeffs):
        fine = solver_factory(np.asarray(coeffs, dtype=float))
        coarse = np.asarray(fine)[..., ::refine_factor]
        diff = coarse - reference_run
        if not np.all(np.isfinite(diff)):
            return math.inf
        d2 = delta * np.sum(diff ** 2, axis=(-2, -1))
        return math.sqrt(float(np.mean(d2)))

    start = np.zeros(degree + 1) if x0 is None else np.asarray(x0, dtype=float)
    return nelder_mead(objective, start, cfg)

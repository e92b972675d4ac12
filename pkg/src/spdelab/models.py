"""Right-hand sides of the Burgers-type SPDEs: nonlinearities, correction drifts, noise.

A :class:`ModelSpec` describes everything except the viscous term, which the
time stepper treats implicitly. Arrays passed to the ``*_array`` evaluators
have shape ``(..., d, N)``.

Correction drifts
-----------------
``ConstantCorrection(gamma)``    ``+ gamma * sigma^2 / nu``
``ConstantForcing(value)``       ``+ value``
``PolynomialCorrection(coeffs)`` ``- sigma^2 / (4 nu) * p(u)``, monomial
                                 coefficients in increasing degree; for
                                 state-dependent noise the ``sigma^2`` factor
                                 is dropped (``- p(u) / (4 nu)``).
``DivergenceCorrection()``       ``- sigma^2 / (4 nu) * sum_j d_j G_ij(u)``
``MultiplicativeRule()``         ``- g'(u) f(u)^2 / (4 nu)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import polynomial as P

from spdelab.grid import Field
from spdelab.operators import (LEFT, RIGHT, StencilSpec, godunov_flux_difference,
                                stencil_array)

MAX_POLY_DEGREE = 8


# -- nonlinearities ----------------------------------------------------------

@dataclass(frozen=True)
class Linear:
    """No nonlinearity (stochastic heat equation)."""


@dataclass(frozen=True)
class Burgers:
    """``- u * D u``."""

    stencil: StencilSpec = RIGHT


@dataclass(frozen=True)
class Conservative:
    """``- D G(u)``; ``G(u) = u^2/2`` gives the conservative Burgers flux."""

    G: Callable = None
    stencil: StencilSpec = LEFT

    def __post_init__(self):
        if self.G is None:
            object.__setattr__(self, "G", half_square)


@dataclass(frozen=True)
class GodunovBurgers:
    """``- d_x(u^2/2)`` by the conservative upwind (Godunov) flux; used for shock references."""


@dataclass(frozen=True)
class Gradient:
    """``h'(u) * D u`` for scalar ``u``; ``h`` and ``h''`` travel along for corrections."""

    h_prime: Callable
    stencil: StencilSpec = RIGHT
    h: Optional[Callable] = None
    h_second: Optional[Callable] = None


@dataclass(frozen=True)
class NonGradient:
    """``sum_j G_ij(u) D u_j + f(u)``.

    ``G`` maps ``(..., d, N)`` to ``(..., d, d, N)``; ``G_div`` returns the row
    divergence ``sum_j d_j G_ij(u)`` with shape ``(..., d, N)``.
    """

    G: Callable
    f: Optional[Callable] = None
    stencil: StencilSpec = RIGHT
    G_div: Optional[Callable] = None


@dataclass(frozen=True)
class Multiplicative:
    """``g(u) * D u``; ``G`` is an antiderivative of ``g`` (for conservative forms)."""

    g: Callable
    stencil: StencilSpec = RIGHT
    g_prime: Optional[Callable] = None
    G: Optional[Callable] = None


Nonlinearity = Union[Linear, Burgers, Conservative, GodunovBurgers, Gradient, NonGradient,
                     Multiplicative]


# -- corrections -------------------------------------------------------------

@dataclass(frozen=True)
class NoCorrection:
    pass


@dataclass(frozen=True)
class ConstantCorrection:
    gamma: float


@dataclass(frozen=True)
class ConstantForcing:
    """Plain additive source ``+ value``, independent of the noise strength."""

    value: float


@dataclass(frozen=True)
class PolynomialCorrection:
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) - 1 > MAX_POLY_DEGREE:
            raise ValueError(f"polynomial correction degree must be <= {MAX_POLY_DEGREE}")
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, u):
        return P.polyval(u, self.coeffs)


@dataclass(frozen=True)
class DivergenceCorrection:
    pass


@dataclass(frozen=True)
class MultiplicativeRule:
    pass


Correction = Union[NoCorrection, ConstantCorrection, ConstantForcing, PolynomialCorrection,
                   DivergenceCorrection, MultiplicativeRule]


# -- noise coefficients ------------------------------------------------------

@dataclass(frozen=True)
class Additive:
    sigma: float


@dataclass(frozen=True)
class StateDependent:
    f: Callable


@dataclass(frozen=True)
class ModelSpec:
    nonlinearity: Nonlinearity
    correction: Correction = field(default_factory=NoCorrection)
    noise: Union[Additive, StateDependent] = field(default_factory=lambda: Additive(1.0))
    viscosity: float = 1.0
    components: int = 1
    name: str = ""

    def __post_init__(self):
        if not self.viscosity > 0:
            raise ValueError(f"viscosity must be positive, got {self.viscosity}")
        if self.components < 1:
            raise ValueError("components must be >= 1")
        nl, corr = self.nonlinearity, self.correction
        if self.components > 1 and not isinstance(nl, (NonGradient, Linear)):
            raise ValueError(f"{type(nl).__name__} nonlinearity is scalar-only")
        if isinstance(corr, DivergenceCorrection) and not (
                isinstance(nl, NonGradient) and nl.G_div is not None):
            raise ValueError("divergence correction needs a NonGradient model with G_div")
        if isinstance(corr, MultiplicativeRule) and not (
                isinstance(nl, Multiplicative) and nl.g_prime is not None
                and isinstance(self.noise, StateDependent)):
            raise ValueError("multiplicative rule needs g' and a state-dependent noise")

    @property
    def sigma(self) -> float:
        """Additive noise amplitude (1 for state-dependent noise)."""
        return self.noise.sigma if isinstance(self.noise, Additive) else 1.0

    def with_correction(self, correction: Correction, **changes) -> "ModelSpec":
        return replace(self, correction=correction, **changes)


# -- evaluation --------------------------------------------------------------

def _check_shape(m: ModelSpec, u: np.ndarray):
    if u.ndim < 2 or u.shape[-2] != m.components:
        raise ValueError(
            f"state has shape {u.shape}, model expects {m.components} component(s)")


def nonlinearity_array(m: ModelSpec, u: np.ndarray, delta: float) -> np.ndarray:
    nl = m.nonlinearity
    if isinstance(nl, Linear):
        return np.zeros_like(u)
    if isinstance(nl, Burgers):
        return -u * stencil_array(nl.stencil, u, delta)
    if isinstance(nl, Conservative):
        return -stencil_array(nl.stencil, nl.G(u), delta)
    if isinstance(nl, GodunovBurgers):
        return -godunov_flux_difference(u, delta)
    if isinstance(nl, Gradient):
        return nl.h_prime(u) * stencil_array(nl.stencil, u, delta)
    if isinstance(nl, Multiplicative):
        return nl.g(u) * stencil_array(nl.stencil, u, delta)
    if isinstance(nl, NonGradient):
        du = stencil_array(nl.stencil, u, delta)
        out = np.einsum("...ijn,...jn->...in", nl.G(u), du)
        if nl.f is not None:
            out = out + nl.f(u)
        return out
    raise TypeError(f"unknown nonlinearity {nl!r}")


def correction_array(m: ModelSpec, u: np.ndarray) -> np.ndarray:
    corr, nu = m.correction, m.viscosity
    if isinstance(corr, NoCorrection):
        return np.zeros_like(u)
    if isinstance(corr, ConstantCorrection):
        return np.full_like(u, corr.gamma * m.sigma ** 2 / nu)
    if isinstance(corr, ConstantForcing):
        return np.full_like(u, corr.value)
    if isinstance(corr, PolynomialCorrection):
        return -m.sigma ** 2 / (4 * nu) * corr(u)
    if isinstance(corr, DivergenceCorrection):
        return -m.sigma ** 2 / (4 * nu) * m.nonlinearity.G_div(u)
    if isinstance(corr, MultiplicativeRule):
        return -m.nonlinearity.g_prime(u) * m.noise.f(u) ** 2 / (4 * nu)
    raise TypeError(f"unknown correction {corr!r}")


def drift_array(m: ModelSpec, u: np.ndarray, delta: float) -> np.ndarray:
    """Explicitly integrated drift: nonlinearity plus correction (no viscous term)."""
    _check_shape(m, u)
    return nonlinearity_array(m, u, delta) + correction_array(m, u)


def noise_coefficient_array(m: ModelSpec, u: np.ndarray) -> np.ndarray:
    _check_shape(m, u)
    if isinstance(m.noise, Additive):
        return np.full_like(u, m.noise.sigma)
    return m.noise.f(u)


def eval_drift(m: ModelSpec, f: Field) -> Field:
    return Field(f.grid, drift_array(m, f.values, f.grid.delta))


def eval_noise_coefficient(m: ModelSpec, f: Field) -> Field:
    return Field(f.grid, noise_coefficient_array(m, f.values))


# -- built-in coefficient functions -----------------------------------------

def half_square(u):
    return 0.5 * u ** 2


def identity(u):
    return u


def sin_squared(u):
    return np.sin(u) ** 2


def sin_squared_antiderivative(u):
    return 0.5 * u - 0.25 * np.sin(2 * u)


def sin_double(u):
    """``d/du sin(u)^2 = sin(2u)``."""
    return np.sin(2 * u)


def negative_identity(u):
    return -u


def minus_one(u):
    return -np.ones_like(u)


def neg_half_square(u):
    return -0.5 * u ** 2


def one_plus_half_cos3(u):
    return 1.0 + 0.5 * np.cos(3 * u)


def _strange_G(u, sigma):
    u1, u2 = u[..., 0, :], u[..., 1, :]
    off = (2.0 / sigma ** 2) * (np.cos(u2) - np.sin(u1))
    zero = np.zeros_like(off)
    return np.stack([np.stack([zero, off], axis=-2),
                     np.stack([-off, zero], axis=-2)], axis=-3)


def _strange_f(u, sigma):
    u1, u2 = u[..., 0, :], u[..., 1, :]
    return (4.0 / sigma ** 2) * np.stack(
        [np.sin(u1) * np.cos(u1), -np.cos(u2) * np.sin(u2)], axis=-2)


def _strange_G_div(u, sigma):
    # row 1: d/du2 G_12 = -(2/s^2) sin u2; row 2: d/du1 G_21 = (2/s^2) cos u1
    u1, u2 = u[..., 0, :], u[..., 1, :]
    return (2.0 / sigma ** 2) * np.stack([-np.sin(u2), np.cos(u1)], axis=-2)


# -- catalog -----------------------------------------------------------------

def burgers_fd(a: int = 1, b: int = 0, nu: float = 1.0, sigma: float = 1.0,
               correction: Correction = None) -> ModelSpec:
    return ModelSpec(Burgers(StencilSpec.two_point(a, b)), correction or NoCorrection(),
                     Additive(sigma), nu, name=f"burgers_fd({a},{b})")


def burgers_general(c: float, nu: float = 1.0, sigma: float = 1.0) -> ModelSpec:
    return ModelSpec(Burgers(StencilSpec.general(c)), NoCorrection(), Additive(sigma), nu,
                     name=f"burgers_general({c:g})")


def burgers_conservative(nu: float = 1.0, sigma: float = 1.0,
                         correction: Correction = None) -> ModelSpec:
    """Left-sided conservative flux ``(u_j^2 - u_{j-1}^2) / (2 delta)``."""
    return ModelSpec(Conservative(half_square, LEFT), correction or NoCorrection(),
                     Additive(sigma), nu, name="burgers_conservative")


def linear_heat(nu: float = 1.0, sigma: float = 1.0) -> ModelSpec:
    return ModelSpec(Linear(), NoCorrection(), Additive(sigma), nu, name="linear_heat")


def gradient_sin2(nu: float = 1.0, sigma: float = 1.0, stencil: StencilSpec = RIGHT) -> ModelSpec:
    """``h'(u) = sin(u)^2``; the predicted correction polynomial is ``h''(u) = sin(2u)``."""
    nl = Gradient(sin_squared, stencil, h=sin_squared_antiderivative, h_second=sin_double)
    return ModelSpec(nl, NoCorrection(), Additive(sigma), nu, name="gradient_sin2")


def strange_spde(sigma: float = 1.0, stencil: StencilSpec = RIGHT,
                 correction: Correction = None) -> ModelSpec:
    """Two-component SPDE whose transport matrix has no antiderivative."""
    nl = NonGradient(partial(_strange_G, sigma=sigma), partial(_strange_f, sigma=sigma),
                     stencil, partial(_strange_G_div, sigma=sigma))
    return ModelSpec(nl, correction or NoCorrection(), Additive(math.sqrt(2.0)),
                     1.0 / sigma ** 2, components=2, name=f"strange_spde({sigma:g})")


def multiplicative_cos3(nu: float = 1.0, stencil: StencilSpec = RIGHT,
                        correction: Correction = None) -> ModelSpec:
    """``g(u) = -u`` with noise coefficient ``f(u) = 1 + cos(3u)/2`` (Ito)."""
    nl = Multiplicative(negative_identity, stencil, g_prime=minus_one, G=neg_half_square)
    return ModelSpec(nl, correction or NoCorrection(), StateDependent(one_plus_half_cos3),
                     nu, name="multiplicative_cos3")


def limit_burgers(c: float, eps_ref: float) -> ModelSpec:
    """Deterministic ``du = eps_ref u_xx - (u^2/2)_x + c/4`` with an upwind flux."""
    return ModelSpec(GodunovBurgers(), ConstantForcing(c / 4.0), Additive(0.0), eps_ref,
                     name=f"limit_burgers(c={c:g})")


def inviscid_regime(eps: float, stencil: StencilSpec = RIGHT) -> ModelSpec:
    """Viscosity ``eps`` and noise ``sqrt(eps)``: the small noise/viscosity scaling."""
    return ModelSpec(Burgers(stencil), NoCorrection(), Additive(math.sqrt(eps)), eps,
                     name=f"inviscid_regime({eps:g})")


MODEL_FACTORIES = {
    "burgers_fd": burgers_fd,
    "burgers_general": burgers_general,
    "burgers_conservative": burgers_conservative,
    "linear_heat": linear_heat,
    "gradient_sin2": gradient_sin2,
    "strange_spde": strange_spde,
    "multiplicative_cos3": multiplicative_cos3,
    "inviscid_regime": inviscid_regime,
}

MODEL_DESCRIPTIONS = {
    "burgers_fd": "du = nu u_xx - u D_{a,b} u + sigma dw (two-point stencil)",
    "burgers_general": "du = nu u_xx - u D~_c u + sigma dw (second-order c-family stencil)",
    "burgers_conservative": "du = nu u_xx - (u_j^2 - u_{j-1}^2)/(2 delta) + sigma dw",
    "linear_heat": "dv = nu v_xx + sigma dw",
    "gradient_sin2": "du = nu u_xx + sin(u)^2 D u + sigma dw; predicted p = sin(2u)",
    "strange_spde": "R^2-valued, nu = 1/s^2, G without antiderivative, noise sqrt(2)",
    "multiplicative_cos3": "du = nu u_xx - u D u + (1 + cos(3u)/2) dw (Ito)",
    "inviscid_regime": "du = eps u_xx - u D u + sqrt(eps) dw",
}


def builtin_models() -> dict[str, ModelSpec]:
    """Named catalog with each model at its default parameters."""
    return {
        "burgers_fd": burgers_fd(1, 0),
        "burgers_general": burgers_general(1.0),
        "burgers_conservative": burgers_conservative(),
        "linear_heat": linear_heat(),
        "gradient_sin2": gradient_sin2(),
        "strange_spde": strange_spde(1.0),
        "multiplicative_cos3": multiplicative_cos3(),
        "inviscid_regime": inviscid_regime(0.01),
    }


def predicted_polynomial_target(m: ModelSpec) -> Callable:
    """Function the fitted correction ``p`` should approach for a one-sided model.

    ``h''`` for gradient models and ``g' f^2`` for multiplicative noise; both are
    then scaled by ``-sigma^2/(4 nu)`` (resp. ``-1/(4 nu)``) in the drift.
    """
    nl = m.nonlinearity
    if isinstance(nl, Gradient) and nl.h_second is not None:
        return nl.h_second
    if isinstance(nl, Multiplicative) and nl.g_prime is not None:
        f = m.noise.f if isinstance(m.noise, StateDependent) else (lambda u: m.sigma)
        return lambda u: nl.g_prime(u) * f(u) ** 2
    if isinstance(nl, Burgers):
        return lambda u: -np.ones_like(u)
    raise ValueError(f"no predicted polynomial correction for {m.name or nl!r}")


def corrected_counterpart(m: ModelSpec, correction: Correction) -> ModelSpec:
    """Conservatively discretised limit equation of a scalar model, with ``correction``.

    The transport term is rewritten as a flux difference with the left-sided
    stencil: ``u D u -> D(u^2/2)``, ``h'(u) D u -> D h(u)``, ``g(u) D u -> D G(u)``.
    """
    nl = m.nonlinearity
    if isinstance(nl, Burgers):
        flux = half_square
    elif isinstance(nl, Gradient):
        if nl.h is None:
            raise ValueError("gradient model needs its antiderivative h")
        flux = partial(_negated, nl.h)
    elif isinstance(nl, Multiplicative):
        if nl.G is None:
            raise ValueError("multiplicative model needs an antiderivative G of g")
        flux = partial(_negated, nl.G)
    else:
        raise ValueError(f"no conservative counterpart for {type(nl).__name__}")
    return replace(m, nonlinearity=Conservative(flux, LEFT), correction=correction,
                   name=f"{m.name}+corrected")


def _negated(fn, u):
    return -fn(u)

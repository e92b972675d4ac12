import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdelab.grid import Field, PeriodicGrid
from spdelab.operators import (CENTRED, LEFT, RIGHT, LinearOperatorSpec, StencilSpec,
                               apply_linear_operator, apply_stencil, conservative_derivative,
                               godunov_flux_difference, multiplier_bound, multiplier_gap)

STENCILS = [RIGHT, CENTRED, LEFT, StencilSpec.two_point(2, 1), StencilSpec.general(0.7),
            StencilSpec.general(-1.0)]


def rand(N, seed=0):
    return Field(PeriodicGrid(N), np.random.default_rng(seed).standard_normal(N))


def test_stencil_validation():
    with pytest.raises(ValueError):
        StencilSpec.two_point(0, 0)
    with pytest.raises(ValueError):
        StencilSpec.two_point(-1, 1)
    with pytest.raises(ValueError):
        StencilSpec.two_point(0.5, 1)


def test_general_coefficients():
    c = 0.3
    coeffs = StencilSpec.general(c).coefficients()
    assert coeffs == pytest.approx({2: c / 2, 1: (1 - 3 * c) / 2, 0: 3 * c / 2, -1: -(1 + c) / 2})


@pytest.mark.parametrize("s", STENCILS, ids=lambda s: s.label)
def test_constant_in_kernel(s):
    f = Field(PeriodicGrid(32), np.full(32, 3.0))
    assert np.allclose(apply_stencil(s, f).values, 0.0, atol=1e-12)


@pytest.mark.parametrize("s", STENCILS, ids=lambda s: s.label)
def test_zero_sum(s):
    assert abs(apply_stencil(s, rand(64, 1)).values.sum()) < 1e-10


def test_centred_symbol():
    g = PeriodicGrid(64)
    n = 3
    re = apply_stencil(CENTRED, Field.from_function(g, lambda x: np.cos(n * x))).values[0]
    im = apply_stencil(CENTRED, Field.from_function(g, lambda x: np.sin(n * x))).values[0]
    got = re + 1j * im
    expected = 1j * math.sin(n * g.delta) / g.delta * np.exp(1j * n * g.x)
    assert np.allclose(got, expected, atol=1e-10)
    assert CENTRED.symbol(n, g.delta) == pytest.approx(1j * math.sin(n * g.delta) / g.delta)


def test_general_c0_is_centred():
    f = rand(48, 2)
    assert np.allclose(apply_stencil(StencilSpec.general(0.0), f).values,
                       apply_stencil(CENTRED, f).values, atol=1e-12)


@pytest.mark.parametrize("s", STENCILS, ids=lambda s: s.label)
def test_exact_on_linear_index_data(s):
    # exact derivative of a linear function away from the periodic seam
    g = PeriodicGrid(64)
    f = Field(g, 2.0 * g.x)
    out = apply_stencil(s, f).values[0]
    assert np.allclose(out[3:-3], 2.0, atol=1e-10)


def test_right_and_left_index_oracle():
    f = rand(16, 3)
    v, d = f.values[0], f.grid.delta
    right = [(v[(j + 1) % 16] - v[j]) / d for j in range(16)]
    left = [(v[j] - v[j - 1]) / d for j in range(16)]
    assert np.allclose(apply_stencil(RIGHT, f).values[0], right, atol=1e-12)
    assert np.allclose(apply_stencil(LEFT, f).values[0], left, atol=1e-12)


@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 50))
@settings(max_examples=30, deadline=None)
def test_operators_linear(a, b, seed):
    f, g = rand(32, seed), rand(32, seed + 1000)
    for s in (RIGHT, StencilSpec.general(0.4)):
        lhs = apply_stencil(s, f * a + g * b).values
        rhs = a * apply_stencil(s, f).values + b * apply_stencil(s, g).values
        assert np.allclose(lhs, rhs, atol=1e-9)
    for kind in ("fd_laplacian", "galerkin_laplacian"):
        op = LinearOperatorSpec(kind, f.grid)
        lhs = apply_linear_operator(op, f * a + g * b).values
        rhs = a * apply_linear_operator(op, f).values + b * apply_linear_operator(op, g).values
        assert np.allclose(lhs, rhs, atol=1e-8)


@pytest.mark.parametrize("kind", ["fd_laplacian", "galerkin_laplacian"])
def test_laplacian_kills_constants(kind):
    g = PeriodicGrid(32)
    out = apply_linear_operator(LinearOperatorSpec(kind, g), Field(g, np.full(32, 1.5)))
    assert np.allclose(out.values, 0.0, atol=1e-10)


def test_fd_laplacian_eigenvalue():
    g = PeriodicGrid(64)
    n = 5
    f = Field.from_function(g, lambda x: np.cos(n * x))
    lam = -(2 / g.delta * math.sin(n * g.delta / 2)) ** 2
    out = apply_linear_operator(LinearOperatorSpec("fd_laplacian", g), f)
    assert np.allclose(out.values, lam * f.values, atol=1e-10)


def test_galerkin_laplacian_eigenvalue():
    g = PeriodicGrid(64)
    f = Field.from_function(g, lambda x: np.cos(5 * x))
    out = apply_linear_operator(LinearOperatorSpec("galerkin_laplacian", g), f)
    assert np.allclose(out.values, -25 * f.values, atol=1e-10)


@pytest.mark.parametrize("N", [8, 64, 1000])
def test_fd_symbol_identity(N):
    g = PeriodicGrid(N)
    n = np.arange(N // 2 + 1)
    lam = LinearOperatorSpec("fd_laplacian", g).eigenvalues()
    assert np.allclose(lam, 2 / g.delta ** 2 * (np.cos(n * g.delta) - 1), atol=1e-10 * N ** 2)


def test_galerkin_symmetric():
    f, h = rand(64, 5), rand(64, 6)
    op = LinearOperatorSpec("galerkin_laplacian", f.grid)
    lhs = np.dot(apply_linear_operator(op, f).values[0], h.values[0])
    rhs = np.dot(f.values[0], apply_linear_operator(op, h).values[0])
    assert lhs == pytest.approx(rhs, abs=1e-10 * abs(lhs))


def test_multiplier_gap_examples():
    assert multiplier_gap(0.3, 0.0) == 0.0
    expected = abs(np.exp(0.1j) - 1 - 0.1j) / 0.1
    assert multiplier_gap(0.1, 1.0) == pytest.approx(expected, rel=1e-12)
    assert multiplier_gap(0.1, 1.0) == pytest.approx(0.04996, abs=5e-5)
    assert multiplier_gap(0.1, 1.0) <= multiplier_bound(0.1, 1.0)


def test_multiplier_gap_small_argument_branch():
    # the series and the direct formula agree where both are accurate
    for theta in (2e-3, 5e-3):
        eps = 0.01
        k = theta / eps
        direct = abs(np.exp(1j * theta) - 1 - 1j * theta) / eps
        assert multiplier_gap(eps, k) == pytest.approx(direct, rel=1e-6)
        assert multiplier_gap(eps, k * 0.4) == pytest.approx(
            math.hypot(1 - math.cos(0.4 * theta), 0.4 * theta - math.sin(0.4 * theta)) / eps, rel=1e-6)


@given(eps=st.floats(1e-3, 1.0), k=st.floats(-1e3, 1e3))
@settings(max_examples=300, deadline=None)
def test_bound_holds_below_first_crossing(eps, k):
    # |e^{it} - 1 - it| <= t for t > 1 iff 1 - cos t <= t sin t, i.e. tan(t/2) <= t,
    # first violated at t ~ 2.3311
    if abs(eps * k) <= 2.33:
        assert multiplier_gap(eps, k) <= multiplier_bound(eps, k) * (1 + 1e-12) + 1e-300


@given(eps=st.floats(1e-3, 1.0), k=st.floats(-1e3, 1e3))
@settings(max_examples=300, deadline=None)
def test_bound_holds_with_sharp_constant(eps, k):
    # sup of |e^{it} - 1 - it| / (t min(t, 1)) over t > 0 is about 1.2596, at t ~ 4.086
    assert multiplier_gap(eps, k) <= 1.2596 * multiplier_bound(eps, k) * (1 + 1e-12) + 1e-300


def test_bound_fails_past_first_crossing():
    from scipy.optimize import brentq

    t0 = brentq(lambda t: math.tan(t / 2) - t, 2.0, 3.0)
    assert t0 == pytest.approx(2.3311, abs=1e-4)
    for theta in (t0 + 1e-3, 3.0, 4.0, 6.2, 10.0):
        assert multiplier_gap(1.0, theta) > multiplier_bound(1.0, theta)
    for theta in (t0 - 1e-3, 6.4, 9.0):
        assert multiplier_gap(1.0, theta) <= multiplier_bound(1.0, theta)


def test_conservative_derivative_examples():
    g = PeriodicGrid(128)
    const = Field(g, np.full(128, 2.0))
    assert np.allclose(conservative_derivative(lambda u: u ** 2 / 2, LEFT, const).values, 0.0)
    f = rand(128, 7)
    for s in (RIGHT, CENTRED, StencilSpec.general(0.5)):
        assert np.array_equal(conservative_derivative(lambda u: u, s, f).values,
                              apply_stencil(s, f).values)
    sine = Field.from_function(g, np.sin)
    v = sine.values[0]
    oracle = [(v[j] ** 2 - v[j - 1] ** 2) / (2 * g.delta) for j in range(128)]
    out = conservative_derivative(lambda u: u ** 2 / 2, LEFT, sine).values[0]
    assert np.allclose(out, oracle, atol=1e-12)


def test_godunov_flux_smooth_and_conservative():
    g = PeriodicGrid(512)
    u = 1.5 + np.sin(g.x)
    out = godunov_flux_difference(u, g.delta)
    # upwind for positive speed: (u_j^2 - u_{j-1}^2) / (2 delta)
    assert np.allclose(out, (u ** 2 - np.roll(u, 1) ** 2) / (2 * g.delta), atol=1e-12)
    assert np.max(np.abs(out - u * np.cos(g.x))) < 0.05
    assert abs(godunov_flux_difference(np.sin(g.x) - 0.3, g.delta).sum()) < 1e-9


def test_godunov_transonic_rarefaction_flux_is_zero():
    u = np.array([-1.0, 1.0, 1.0, -1.0])
    # interface fluxes: 0|1 transonic rarefaction 0, 1|2 1/2, 2|3 shock 1/2, 3|0 1/2
    out = godunov_flux_difference(u, 1.0)
    assert np.allclose(out, [-0.5, 0.5, 0.0, 0.0])

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdelab.grid import (Field, PeriodicGrid, inverse_spectral_transform, l2_norm,
                          read_field_csv, restrict_to_coarse, spectral_transform,
                          write_field_csv)

even_N = st.integers(1, 64).map(lambda k: 2 * k)


def random_field(N, seed=0, d=1):
    return Field(PeriodicGrid(N), np.random.default_rng(seed).standard_normal((d, N)))


def test_grid_geometry():
    g = PeriodicGrid(64)
    assert g.delta * g.N == pytest.approx(2 * math.pi, abs=1e-14)
    assert g.x[5] == pytest.approx(5 * g.delta)
    assert g.x.shape == (64,)


@pytest.mark.parametrize("N", [0, -4, 7])
def test_grid_rejects_bad_N(N):
    with pytest.raises(ValueError):
        PeriodicGrid(N)


def test_field_rejects_nonfinite_and_is_immutable():
    g = PeriodicGrid(8)
    with pytest.raises(ValueError):
        Field(g, [0, 1, np.nan, 0, 0, 0, 0, 0])
    f = Field(g, np.arange(8.0))
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_cyclic_indexing():
    f = Field(PeriodicGrid(8), np.arange(8.0))
    assert f[0, 8] == f[0, 0]
    assert f[0, -1] == 7.0


def test_l2_norm_examples():
    assert l2_norm(Field.zeros(PeriodicGrid(16))) == 0.0
    assert l2_norm(Field(PeriodicGrid(8), np.ones(8))) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-14)
    f = Field.from_function(PeriodicGrid(256), np.sin)
    assert abs(l2_norm(f) - math.sqrt(math.pi)) < 1e-3


def test_l2_norm_sums_components():
    f = random_field(16, d=2)
    parts = [l2_norm(Field(f.grid, f.values[c])) for c in range(2)]
    assert l2_norm(f) == pytest.approx(math.hypot(*parts), rel=1e-13)


@given(lam=st.floats(-1e3, 1e3).filter(lambda v: v == 0 or abs(v) > 1e-100),
       seed=st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_l2_norm_homogeneous(lam, seed):
    f = random_field(32, seed)
    assert l2_norm(f * lam) == pytest.approx(abs(lam) * l2_norm(f), rel=1e-12, abs=1e-300)


def test_restrict_examples():
    fine = Field(PeriodicGrid(64), np.full(64, 2.5))
    assert np.all(restrict_to_coarse(fine, 4).values == 2.5)
    s = Field.from_function(PeriodicGrid(64), np.sin)
    assert np.array_equal(restrict_to_coarse(s, 4).values[0], np.sin(PeriodicGrid(16).x))
    r = random_field(32, 3)
    coarse = restrict_to_coarse(r, 2)
    assert all(coarse[0, j] == r[0, 2 * j] for j in range(16))


def test_restrict_rejects_non_divisor():
    with pytest.raises(ValueError):
        restrict_to_coarse(random_field(12), 5)


@given(m1=st.sampled_from([1, 2, 4]), m2=st.sampled_from([1, 2, 4]), seed=st.integers(0, 100))
@settings(max_examples=30, deadline=None)
def test_restrict_composes(m1, m2, seed):
    f = random_field(64, seed)
    assert restrict_to_coarse(restrict_to_coarse(f, m1), m2) == restrict_to_coarse(f, m1 * m2)


def test_spectral_examples():
    g = PeriodicGrid(32)
    c = spectral_transform(Field(g, np.ones(32))).coeffs
    assert c[0] == pytest.approx(1.0)
    assert np.allclose(c[1:], 0, atol=1e-15)
    c3 = spectral_transform(Field.from_function(g, lambda x: np.cos(3 * x))).coeffs
    nonzero = np.flatnonzero(np.abs(c3) > 1e-12)
    assert list(nonzero) == [3]


def test_spectral_real_endpoints():
    c = spectral_transform(random_field(32, 1)).coeffs
    assert c[0].imag == 0.0 and c[-1].imag == 0.0


@given(N=even_N, seed=st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_spectral_round_trip(N, seed):
    f = random_field(N, seed)
    back = inverse_spectral_transform(spectral_transform(f))
    assert np.allclose(back.values, f.values, rtol=1e-12, atol=1e-12 * np.abs(f.values).max())


@pytest.mark.parametrize("N", [8, 32, 256])
def test_parseval(N):
    for seed in range(5):
        f = random_field(N, seed)
        assert spectral_transform(f).energy() == pytest.approx(l2_norm(f) ** 2, rel=1e-10)


def test_spectral_requires_one_component():
    with pytest.raises(ValueError):
        spectral_transform(random_field(8, d=2))


def test_field_csv_round_trip(tmp_path):
    f = random_field(16, 4, d=2)
    path = write_field_csv(f, tmp_path / "f.csv")
    text = path.read_bytes()
    assert text.startswith(b"x,u_0,u_1\n") and b"\r" not in text
    assert read_field_csv(path) == f

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_field
from sphere_swave.fields import (
    ProductState,
    SpectralField,
    TruncationMismatch,
    from_complex,
    linear_combine,
    product_norm,
    project,
    sobolev_norm,
    sobolev_weights,
    to_complex,
)
from sphere_swave.grid import build_grid, synthesize
from sphere_swave.harmonics import mode_index, sph_harm_complex


def test_sobolev_norm_of_unit_modes():
    for l, m in ((0, 0), (1, -1), (3, 2)):
        u = SpectralField.unit(4, l, m)
        for s in (-1.0, 0.0, 0.5, 2.0):
            assert sobolev_norm(u, s) == pytest.approx((1 + l * (l + 1)) ** (s / 2))


def test_sobolev_weights():
    np.testing.assert_allclose(sobolev_weights(1, 1.0), [1.0, 3.0, 3.0, 3.0])


def test_product_norm_components():
    X = ProductState(SpectralField.unit(2, 1, 0), 2.0 * SpectralField.unit(2, 2, 1))
    # velocity in H^-1: 4 / 7
    assert product_norm(X) == pytest.approx(math.sqrt(1 + 4 / 7))
    assert product_norm(X, 1.0) == pytest.approx(math.sqrt(3 + 4))


def test_norm_monotone_in_s(rng):
    u = random_field(rng, 8)
    vals = [sobolev_norm(u, s) for s in (-2, -1, 0, 1, 2)]
    assert vals == sorted(vals)


def test_project_truncates_and_pads(rng):
    u = random_field(rng, 5)
    v = project(u, 2)
    assert v.kappa == 2
    np.testing.assert_array_equal(v.coeffs, u.coeffs[:9])
    w = project(v, 5)
    assert np.all(w.coeffs[9:] == 0)
    assert project(u, 5) is u
    with pytest.raises(ValueError):
        project(u, -1)


def test_arithmetic_checks_truncation(rng):
    u, w = random_field(rng, 3), random_field(rng, 4)
    with pytest.raises(TruncationMismatch):
        u + w
    with pytest.raises(TruncationMismatch):
        linear_combine(1.0, u, 1.0, w)
    with pytest.raises(TruncationMismatch):
        ProductState(u, w)


def test_field_is_immutable(rng):
    u = random_field(rng, 2)
    with pytest.raises(ValueError):
        u.coeffs[0] = 1.0


def test_field_rejects_bad_input():
    with pytest.raises(ValueError):
        SpectralField(2, np.zeros(8))
    with pytest.raises(ValueError):
        SpectralField(1, np.array([0.0, np.nan, 0.0, 0.0]))


def test_indexing_and_from_dict():
    u = SpectralField.from_dict(3, {(2, -1): 1.5, (0, 0): -1.0})
    assert u[2, -1] == 1.5
    assert u[0, 0] == -1.0
    assert u.coeffs[mode_index(2, -1)] == 1.5
    with pytest.raises(KeyError):
        u[4, 0]


def test_complex_coefficients_synthesize_same_field(rng):
    # sum_lm z_lm Y_lm must reproduce the real expansion
    kappa = 4
    u = random_field(rng, kappa)
    z = to_complex(u)
    g = build_grid(kappa)
    th, ph = np.meshgrid(g.theta, g.phi, indexing="ij")
    total = np.zeros(th.shape, dtype=complex)
    for l in range(kappa + 1):
        for m in range(-l, l + 1):
            total += z[mode_index(l, m)] * sph_harm_complex(l, m, th, ph)
    np.testing.assert_allclose(total.imag, 0.0, atol=1e-12)
    np.testing.assert_allclose(total.real, synthesize(u, g).values, atol=1e-12)


def test_complex_round_trip(rng):
    u = random_field(rng, 6)
    np.testing.assert_allclose(from_complex(to_complex(u), 6).coeffs, u.coeffs, atol=1e-15)


def test_complex_sign_convention():
    # c = 1, s = 1 at (1, +-1): u^{1,1} = (1 - i)/sqrt2
    u = SpectralField.from_dict(1, {(1, 1): 1.0, (1, -1): 1.0})
    z = to_complex(u)
    assert z[mode_index(1, 1)] == pytest.approx((1 - 1j) / math.sqrt(2))
    assert z[mode_index(1, -1)] == pytest.approx(-(1 + 1j) / math.sqrt(2))


def test_csv_round_trip(tmp_path, rng):
    u = random_field(rng, 3)
    p = tmp_path / "c.csv"
    u.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "l,m,value"
    assert lines[1] == f"0,0,{u.coeffs[0]:.17g}"
    assert len(lines) == 17
    np.testing.assert_array_equal(SpectralField.from_csv(p).coeffs, u.coeffs)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 12), st.floats(-1, 3), st.integers(0, 2**31))
def test_norm_homogeneous_and_triangle(kappa, s, seed):
    r = np.random.default_rng(seed)
    u, w = random_field(r, kappa), random_field(r, kappa)
    assert sobolev_norm(-2.5 * u, s) == pytest.approx(2.5 * sobolev_norm(u, s))
    assert sobolev_norm(u + w, s) <= sobolev_norm(u, s) + sobolev_norm(w, s) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10), st.integers(0, 10), st.integers(0, 2**31))
def test_projection_is_idempotent_contraction(k1, k2, seed):
    u = random_field(np.random.default_rng(seed), k1)
    p = project(u, k2)
    np.testing.assert_array_equal(project(p, k2).coeffs, p.coeffs)
    assert sobolev_norm(p, 0.0) <= sobolev_norm(u, 0.0) + 1e-15

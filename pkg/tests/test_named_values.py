"""Small closed-form values for each module, checked directly."""
import math

import numpy as np
import pytest

from conftest import random_field
from sphere_swave.fields import ProductState, SpectralField, product_norm, sobolev_norm
from sphere_swave.grid import GridField, analyze, build_grid, gauss_legendre, synthesize
from sphere_swave.harmonics import normalized_legendre, sph_harm_complex, sph_harm_real
from sphere_swave.model import apply_g_increment, eval_f, initial_state
from sphere_swave.noise import coarsen_time, power_spectrum, sample_path, trace_q
from sphere_swave.propagator import apply_trig, group_mode_matrix, si_mode_matrix


def test_normalized_legendre_values():
    assert normalized_legendre(0, 0, 1.234) == pytest.approx(0.28209479177387814)
    assert normalized_legendre(1, 0, 0.0) == pytest.approx(0.4886025119029199)
    assert normalized_legendre(1, 1, math.pi / 2) == pytest.approx(-math.sqrt(3 / (8 * math.pi)))


def test_harmonic_values():
    assert sph_harm_complex(0, 0, 0.4, 2.0) == pytest.approx(1 / math.sqrt(4 * math.pi))
    th = 0.8
    assert sph_harm_real(1, 0, th, 1.3) == pytest.approx(math.sqrt(3 / (4 * math.pi)) * math.cos(th))
    assert sph_harm_real(1, 1, math.pi / 2, 0.0) == pytest.approx(-math.sqrt(3 / (4 * math.pi)))


def test_small_quadrature_rules():
    x, w = gauss_legendre(1)
    assert x[0] == 0.0 and w[0] == 2.0
    g = build_grid(0)
    assert g.nlat == 1 and g.nlon >= 1
    _, w2 = gauss_legendre(2)
    np.testing.assert_allclose(w2, [1.0, 1.0], rtol=1e-15)


def test_synthesis_of_low_modes():
    g = build_grid(3)
    np.testing.assert_allclose(synthesize(SpectralField.unit(3, 0, 0), g).values, 1 / math.sqrt(4 * math.pi))
    vals = synthesize(SpectralField.unit(3, 1, 0), g).values
    np.testing.assert_allclose(vals, np.sqrt(3 / (4 * np.pi)) * np.cos(g.theta)[:, None] * np.ones(g.nlon), atol=1e-15)


def test_constant_field_analysis():
    g = build_grid(4)
    out = analyze(GridField(np.full(g.shape, 2.5), g), 4)
    assert out[0, 0] == pytest.approx(2.5 * math.sqrt(4 * math.pi), rel=1e-14)
    assert np.max(np.abs(out.coeffs[1:])) < 1e-14


def test_unit_mode_round_trip_low_degree():
    g = build_grid(6)
    for l in range(7):
        for m in range(-l, l + 1):
            e = SpectralField.unit(6, l, m)
            np.testing.assert_allclose(analyze(synthesize(e, g), 6).coeffs, e.coeffs, atol=1e-10)


def test_norm_values():
    u = SpectralField.from_dict(2, {(1, 0): 1.0, (2, 0): 1.0})
    assert sobolev_norm(u, -1.0) == pytest.approx(math.sqrt(1 / 3 + 1 / 7))
    e = SpectralField.unit(2, 1, 0)
    assert product_norm(ProductState(SpectralField.zeros(2), e)) == pytest.approx(3**-0.5)
    assert product_norm(ProductState(e, e), 1.0) == pytest.approx(2.0)


def test_propagator_values():
    np.testing.assert_allclose(group_mode_matrix(1, math.pi / math.sqrt(2)).as_array(), -np.eye(2), atol=1e-15)
    assert apply_trig("scaled-sine", SpectralField.unit(1, 1, 0), 1.0)[1, 0] == pytest.approx(0.69846, abs=1e-5)
    h = 0.3
    assert tuple(si_mode_matrix(0, h)) == (1.0, h, 0.0, 1.0)
    np.testing.assert_allclose(si_mode_matrix(1, 1.0).as_array(), np.array([[1, 1], [-2, 1]]) / 3)


def test_noise_values():
    assert power_spectrum(2.0, 2)[2] == 0.25
    assert trace_q(power_spectrum(2.0, 2), 2) == pytest.approx(5.25)
    ones = power_spectrum(50.0, 1)
    assert trace_q(type(ones)(np.ones(2)), 1) == 4.0


def test_coarsened_variance():
    A = power_spectrum(2.0 + 1e-6, 1)
    h, factor, draws = 0.1, 4, 20000
    x = coarsen_time(sample_path((5, 0), A, 1, h, draws * factor), factor).to_array()
    var = np.mean(x * x, axis=0)
    expect = A.values[[0, 1, 1, 1]] * h * factor
    assert np.all(np.abs(var - expect) <= 5 * expect * math.sqrt(2 / draws))


def test_coefficientwise_sine_value():
    u = SpectralField.unit(3, 1, 0) * (math.pi / 2)
    out = eval_f("coef-sine", u)
    assert out[1, 0] == pytest.approx(1.0)
    assert np.count_nonzero(out.coeffs) == 1


def test_pointwise_sine_small_amplitude_oversampled():
    rng = np.random.default_rng(1)
    u = random_field(rng, 6, decay=2.0) * 1e-3
    a = eval_f("sine", u, build_grid(6))
    b = eval_f("sine", u, build_grid(12))
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-8)


def test_rational_at_zero_is_identity_noise():
    rng = np.random.default_rng(2)
    dW = random_field(rng, 5)
    out = apply_g_increment("rational", SpectralField.zeros(5), dW, build_grid(5))
    np.testing.assert_allclose(out.coeffs, dW.coeffs, atol=1e-10)


def test_initial_velocity_value():
    assert initial_state(1.5, 3).v[2, 0] == pytest.approx(2**-0.5)

import math

import numpy as np
import pytest

from app.core.errors import (DegenerateZeroSetError, InvalidFamilyError, InvalidInputError,
                             UnsupportedDimensionError)
from app.services import model_spaces as ms
from app.services.contours import crossing_segments, segment_lengths
from app.services.cycle_spectra import (FunctionBasis, ScalarField, bisect_balls, signed_ball_volumes,
                                        volume_spectrum_scaling, zero_set_length)


def seno(u, v):
    return np.sin(2 * np.pi * u)


# =========================
# CONJUNTOS DE CEROS
# =========================
def test_two_parallel_loops(unit_torus):
    f = ScalarField.from_function(unit_torus, 64, seno)
    assert zero_set_length(f) == pytest.approx(2.0, abs=1e-9)


def test_loops_on_hexagonal_torus(hex_torus):
    f = ScalarField.from_function(hex_torus, 64, seno)
    assert zero_set_length(f) == pytest.approx(2.0, abs=1e-9)


def test_grid_of_four_lines(unit_torus):
    f = ScalarField.from_function(unit_torus, 128, lambda u, v: np.sin(2 * np.pi * u) * np.sin(2 * np.pi * v))
    assert zero_set_length(f) == pytest.approx(4.0, rel=0.01)


def test_small_circle_length(unit_torus):
    f = ScalarField.from_function(unit_torus, 128, lambda u, v: (u - 0.5) ** 2 + (v - 0.5) ** 2 - 0.04)
    assert zero_set_length(f) == pytest.approx(2 * math.pi * 0.2, rel=0.01)


def test_constant_has_empty_zero_set(unit_torus):
    f = ScalarField(unit_torus, np.ones((32, 32)))
    assert zero_set_length(f) == 0.0
    assert crossing_segments(f.values).shape == (0, 2, 2)


def test_identically_zero_rejected(unit_torus):
    with pytest.raises(DegenerateZeroSetError):
        zero_set_length(ScalarField(unit_torus, np.zeros((32, 32))))


def test_length_is_scale_invariant(unit_torus, rng):
    f = ScalarField(unit_torus, rng.standard_normal((32, 32)))
    assert zero_set_length(f.scaled(3.7)) == pytest.approx(zero_set_length(f), rel=1e-12)
    assert zero_set_length(f.scaled(-1.0)) == pytest.approx(zero_set_length(f), rel=1e-12)


def test_refinement_converges(unit_torus):
    def circulo(u, v):
        return (u - 0.4) ** 2 + (v - 0.6) ** 2 - 0.09

    largos = [zero_set_length(ScalarField.from_function(unit_torus, m, circulo)) for m in (32, 64, 128)]
    errores = [abs(x - 2 * math.pi * 0.3) for x in largos]
    assert errores[2] < errores[0]


def test_segment_lengths_use_basis():
    seg = np.array([[[0.0, 0.0], [0.5, 0.0]]])
    assert segment_lengths(seg, np.array([[2.0, 0.0], [0.0, 1.0]])) == pytest.approx([1.0])


def test_scalar_field_validation(unit_torus, circle):
    with pytest.raises(InvalidInputError):
        ScalarField(unit_torus, np.ones((8, 8)))
    with pytest.raises(InvalidInputError):
        ScalarField(unit_torus, np.ones((16, 20)))
    with pytest.raises(InvalidInputError):
        ScalarField(unit_torus, np.full((16, 16), np.nan))
    with pytest.raises(UnsupportedDimensionError):
        ScalarField(circle, np.ones((16, 16)))


# =========================
# BASES
# =========================
def test_trigonometric_basis_is_orthonormal(hex_torus):
    base = FunctionBasis.trigonometric(hex_torus, 64, 7)
    assert base.k == 7
    assert np.allclose(base.gram(), np.eye(7), atol=1e-10)


def test_basis_errors(unit_torus):
    with pytest.raises(InvalidFamilyError):
        FunctionBasis.trigonometric(unit_torus, 16, 16)
    with pytest.raises(InvalidFamilyError):
        FunctionBasis.from_fields(unit_torus, [np.ones((32, 32)), 2 * np.ones((32, 32))])
    with pytest.raises(InvalidFamilyError):
        FunctionBasis.from_fields(unit_torus, [])
    base = FunctionBasis.trigonometric(unit_torus, 32, 3)
    with pytest.raises(InvalidInputError):
        base.combine([1.0, 0.0])


# =========================
# BISECCION
# =========================
def test_bisects_one_ball(unit_torus):
    base = FunctionBasis.trigonometric(unit_torus, 64, 2)
    res = bisect_balls(base, [([0.3, 0.3], 0.15)], np.random.default_rng(1))
    assert res.max_residual <= 1e-3
    assert np.linalg.norm(res.coefficients) == pytest.approx(1.0)


def test_bisects_two_balls(unit_torus):
    base = FunctionBasis.trigonometric(unit_torus, 64, 3)
    balls = [([0.25, 0.25], 0.15), ([0.75, 0.75], 0.15)]
    res = bisect_balls(base, balls, np.random.default_rng(2))
    assert np.all(np.abs(signed_ball_volumes(base, balls, res.coefficients)) <= 1e-3)
    assert zero_set_length(res.field) > 0


def test_signed_volumes_are_odd(unit_torus, rng):
    base = FunctionBasis.trigonometric(unit_torus, 64, 4)
    balls = [([0.2, 0.2], 0.1), ([0.7, 0.2], 0.1), ([0.4, 0.7], 0.1)]
    c = rng.standard_normal(4)
    assert np.array_equal(signed_ball_volumes(base, balls, -c), -signed_ball_volumes(base, balls, c))


def test_bisection_input_errors(unit_torus, rng):
    base = FunctionBasis.trigonometric(unit_torus, 64, 3)
    with pytest.raises(InvalidFamilyError):
        bisect_balls(base, [([0.3, 0.3], 0.1)], rng)
    with pytest.raises(InvalidInputError):
        bisect_balls(base, [([0.3, 0.3], 0.2), ([0.4, 0.3], 0.2)], rng)
    with pytest.raises(InvalidInputError):
        bisect_balls(base, [([0.3, 0.3], 0.001), ([0.7, 0.7], 0.1)], rng)


def test_scaling_needs_two_sizes(unit_torus, rng):
    with pytest.raises(InvalidInputError):
        volume_spectrum_scaling(unit_torus, [4], rng)


@pytest.mark.slow
def test_zero_set_length_grows_with_square_root(unit_torus):
    exponente, prefactor, tabla = volume_spectrum_scaling(
        unit_torus, [2, 4, 8, 16, 32], np.random.default_rng(3), m=128, restarts=2, iterations=100)
    assert tabla["meets_floor"].all()
    assert exponente == pytest.approx(0.5, abs=0.2)
    assert prefactor > 0

import math

import numpy as np
import pytest

from app.core.errors import InvalidFamilyError, InvalidInputError
from app.services.geometric_inequalities import Polyline, circle_polygon
from app.services.minkowski import N_HARMONICS, LatitudeFamily, equator, sweepout_waist_upper, tube_volume


# =========================
# TUBOS
# =========================
def test_equator_tube_on_sphere():
    est = tube_volume(equator(), 0.1, 200_000, np.random.default_rng(1), ambient="sphere")
    esperado = 4 * math.pi * math.sin(0.1)
    assert abs(est.volume - esperado) <= 4 * est.stderr
    assert est.mink == pytest.approx(2 * math.pi, rel=0.03)


def test_circle_tube_in_space():
    est = tube_volume(circle_polygon(256), 0.1, 200_000, np.random.default_rng(2), ambient="r3")
    esperado = 2 * math.pi ** 2 * 0.1 ** 2
    assert abs(est.volume - esperado) <= 4 * est.stderr
    assert est.to_dict()["ambient"] == "r3"


def test_tube_is_deterministic_for_a_seed():
    a = tube_volume(equator(64), 0.2, 10_000, np.random.default_rng(3), ambient="sphere")
    b = tube_volume(equator(64), 0.2, 10_000, np.random.default_rng(3), ambient="sphere")
    assert a.volume == b.volume


def test_tube_errors(rng):
    with pytest.raises(InvalidInputError):
        tube_volume(equator(), 0.0, 100, rng)
    with pytest.raises(InvalidInputError):
        tube_volume(Polyline([[0, 0], [1, 0], [0, 1]]), 0.1, 100, rng)
    with pytest.raises(InvalidInputError):
        tube_volume(circle_polygon(32, radius=2.0), 0.1, 100, rng, ambient="sphere")
    with pytest.raises(InvalidInputError):
        tube_volume(equator(), 0.1, 100, rng, ambient="hyperbolic")


# =========================
# BARRIDOS
# =========================
def test_latitudes_have_equator_as_longest_level():
    fam = LatitudeFamily(np.zeros(N_HARMONICS))
    assert fam.two_critical_points()
    largo, nivel = fam.max_level_length()
    assert largo == pytest.approx(2 * math.pi, abs=1e-6)
    assert nivel == pytest.approx(0.0, abs=1e-3)


def test_latitude_level_length():
    fam = LatitudeFamily(np.zeros(N_HARMONICS))
    assert fam.level_length(0.6) == pytest.approx(2 * math.pi * 0.8, rel=1e-3)
    assert fam.level_length(2.0) == 0.0


def test_family_errors():
    with pytest.raises(InvalidFamilyError):
        LatitudeFamily(np.zeros(3))
    with pytest.raises(InvalidFamilyError):
        LatitudeFamily(np.full(N_HARMONICS, 0.5))


def test_sweepout_upper_bound_stays_near_two_pi():
    res = sweepout_waist_upper(np.random.default_rng(4), restarts=2, maxfev=10)
    assert res.passed
    assert res.minmax <= 2 * math.pi + 1e-6
    assert res.to_dict()["lower_bound"] == pytest.approx(2 * math.pi)


def test_sweepout_needs_a_restart(rng):
    with pytest.raises(InvalidInputError):
        sweepout_waist_upper(rng, restarts=0)

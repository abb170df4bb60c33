import itertools
import math

import numpy as np
import pytest

from app.core.errors import InvalidInputError, SingularConfigurationError, UndefinedSeparationError
from app.services import model_spaces as ms
from app.services.packing_core import (Configuration, EnergyKind, covering_packing_numbers, crosses_collision,
                                       distance_to_diagonal, energy, energy_ordering, hausdorff_sum, is_packing,
                                       min_symmetrize, ordered_distance, quotient_distance, separation)


def conf(space, pts):
    return Configuration.from_points(space, pts)


# =========================
# SEPARACION Y ENERGIA
# =========================
def test_separation_examples(circle):
    assert separation(conf(circle, [0.0, 0.5])) == pytest.approx(0.5)
    assert separation(conf(circle, [0.0, 1 / 3, 2 / 3])) == pytest.approx(1 / 3)


def test_separation_needs_two_points(circle):
    with pytest.raises(UndefinedSeparationError):
        separation(conf(circle, [0.2]))


def test_separation_is_diagonal_distance(unit_torus, rng):
    c = conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=5))
    diagonal = min(distance_to_diagonal(c, i, j) for i, j in itertools.combinations(range(5), 2))
    assert separation(c) == pytest.approx(math.sqrt(2) * diagonal, abs=1e-10)


def test_two_ball_diagonal_identity(sphere2, rng):
    for _ in range(50):
        c = conf(sphere2, ms.sample_uniform(sphere2, rng, size=2))
        d = float(ms.distance(sphere2, c.points[0], c.points[1]))
        assert d == pytest.approx(math.sqrt(2) * distance_to_diagonal(c, 0, 1), abs=1e-10)


def test_separation_permutation_invariant(unit_torus, rng):
    c = conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=6))
    assert separation(c.permuted(rng.permutation(6))) == separation(c)


def test_energy_values(circle):
    assert energy(conf(circle, [0.0, 0.5]), EnergyKind.NEGLOG) == pytest.approx(math.log(2))
    assert energy(conf(circle, [0.0, 0.25]), EnergyKind.RECIPROCAL) == pytest.approx(4.0)
    assert energy(conf(circle, [0.0, 0.25]), EnergyKind.NEGATIVE) == pytest.approx(-0.25)


def test_energy_singular(circle):
    with pytest.raises(SingularConfigurationError):
        energy(conf(circle, [0.3, 0.3]), EnergyKind.RECIPROCAL)
    assert energy(conf(circle, [0.3, 0.3]), EnergyKind.NEGATIVE) == 0.0


def test_energy_kinds_share_ordering(unit_torus, rng):
    configs = [conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=4)) for _ in range(100)]
    ordenes = [energy_ordering(configs, k) for k in EnergyKind]
    assert all(np.array_equal(ordenes[0], o) for o in ordenes[1:])


def test_neglog_is_one_lipschitz_in_log_rho(circle):
    rho = np.linspace(0.05, 0.5, 40)
    e = np.array([energy(conf(circle, [0.0, r]), EnergyKind.NEGLOG) for r in rho])
    pendiente = np.diff(e) / np.diff(np.log(rho))
    assert np.allclose(pendiente, -1.0)


def test_min_symmetrize_trivial_group(circle):
    sim = min_symmetrize(lambda c: energy(c, EnergyKind.NEGLOG), [[0, 1, 2]])
    c = conf(circle, [0.0, 0.2, 0.7])
    assert sim(c) == energy(c, EnergyKind.NEGLOG)


def test_min_symmetrize_picks_minimum(circle):
    # energia no simetrica: posicion del primer punto
    sim = min_symmetrize(lambda c: float(c.points[0, 0]), [[0, 1, 2], [1, 2, 0], [2, 0, 1]])
    assert sim(conf(circle, [0.6, 0.1, 0.4])) == pytest.approx(0.1)


# =========================
# EMPAQUES
# =========================
def test_is_packing_examples(circle, interval):
    assert is_packing(conf(circle, [0.0, 0.5]), [0.25, 0.25])
    assert not is_packing(conf(circle, [0.0, 0.4]), [0.25, 0.25])
    assert is_packing(conf(interval, [0.1, 0.5, 0.9]), [0.2, 0.2, 0.2])


def test_is_packing_rejects_bad_radii(circle):
    with pytest.raises(InvalidInputError):
        is_packing(conf(circle, [0.0, 0.5]), [0.25, 0.0])
    with pytest.raises(InvalidInputError):
        is_packing(conf(circle, [0.0, 0.5]), [0.25])


def test_is_packing_matches_separation(unit_torus, rng):
    for _ in range(1000):
        c = conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=4))
        r = float(rng.uniform(0.0, 0.4)) + 1e-6
        assert is_packing(c, np.full(4, r)) == (separation(c) >= 2 * r)


def test_hausdorff_sum():
    assert hausdorff_sum([0.5, 0.5], 1) == pytest.approx(2.0)
    assert hausdorff_sum([1.0], 2) == pytest.approx(math.pi)


# =========================
# METRICA COCIENTE
# =========================
def test_quotient_distance_of_permutation_is_zero(unit_torus, rng):
    c = conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=5))
    assert quotient_distance(c, c.permuted([4, 2, 0, 1, 3])) == 0.0


def test_quotient_distance_small_move(circle):
    c1 = conf(circle, [0.1, 0.4, 0.7])
    c2 = conf(circle, [0.1, 0.43, 0.7])
    assert quotient_distance(c1, c2) == pytest.approx(0.03)


def test_quotient_distance_brute_force(unit_torus, rng):
    for _ in range(20):
        c1 = conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=5))
        c2 = conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=5))
        esperado = min(ordered_distance(c1, c2.permuted(p)) for p in itertools.permutations(range(5)))
        assert quotient_distance(c1, c2) == pytest.approx(esperado, abs=1e-15)


def test_quotient_distance_matching_path(circle, rng):
    # N = 10 usa busqueda binaria con matching bipartito
    base = (np.arange(10) + rng.uniform(-0.01, 0.01, 10)) / 10.0 % 1.0
    c1 = conf(circle, base)
    c2 = conf(circle, ((base + 0.013) % 1.0)[rng.permutation(10)])
    assert quotient_distance(c1, c2) == pytest.approx(0.013, abs=1e-12)
    assert quotient_distance(c1, c1.permuted(rng.permutation(10))) == 0.0


def test_quotient_triangle_inequality(unit_torus, rng):
    for _ in range(1000):
        a, b, c = (conf(unit_torus, ms.sample_uniform(unit_torus, rng, size=4)) for _ in range(3))
        assert quotient_distance(a, b) <= quotient_distance(a, c) + quotient_distance(c, b) + 1e-12


def test_quotient_distance_mismatched(circle, unit_torus):
    with pytest.raises(InvalidInputError):
        quotient_distance(conf(circle, [0.1, 0.2]), conf(circle, [0.1, 0.2, 0.3]))
    with pytest.raises(InvalidInputError):
        quotient_distance(conf(circle, [0.1, 0.2]), conf(ms.ModelSpace.circle(2.0), [0.1, 0.2]))


# =========================
# CUBRIMIENTO / EMPAQUE
# =========================
def test_covering_single_point(circle):
    assert covering_packing_numbers(np.full((100, 1), 0.3), circle, 0.1) == (1, 1)


def test_covering_equispaced(circle):
    pts = (np.arange(10) / 10.0)[:, None]
    assert covering_packing_numbers(pts, circle, 0.05) == (10, 10)


def test_covering_uniform_bracket(circle, rng):
    pts = ms.sample_uniform(circle, rng, size=1000)
    cover, pack = covering_packing_numbers(pts, circle, 0.01)
    assert 50 <= cover <= 100
    assert pack <= cover


def test_covering_rejects_nonpositive_delta(circle):
    with pytest.raises(InvalidInputError):
        covering_packing_numbers([[0.1]], circle, 0.0)


# =========================
# CRUCE DEL DIAGONAL
# =========================
@pytest.mark.parametrize("desde, hasta, cruza", [
    ([0.1, 0.15], [0.2, 0.12], True),
    ([0.1, 0.6], [0.15, 0.65], False),
    ([0.95, 0.05], [0.05, 0.1], False),
    ([0.95, 0.02], [0.05, 0.01], True),
])
def test_crosses_collision_on_circle(circle, desde, hasta, cruza):
    lote = np.array(desde)[None, :, None]
    assert crosses_collision(circle, lote, np.array(hasta)[:, None]).tolist() == [cruza]


def test_crosses_collision_on_interval_and_torus(interval, unit_torus, rng):
    lote = np.array([[[0.2], [0.3]], [[0.4], [0.1]]])
    assert crosses_collision(interval, lote, np.array([[0.35], [0.25]])).tolist() == [True, False]
    pts = ms.sample_uniform(unit_torus, rng, size=(5, 3))
    assert not crosses_collision(unit_torus, pts, pts[0]).any()

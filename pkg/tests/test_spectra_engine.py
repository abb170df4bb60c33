import itertools
import math

import numpy as np
import pytest

from app.core.errors import ClassNotFoundError, InvalidInputError
from app.services import model_spaces as ms
from app.services.persistence import FilteredComplex, persistence_reduce
from app.services.spectra_engine import (ConfigSample, SpectrumParams, _ClassTracker, above_floor, build_filtration,
                                         births_stable, format_polynomial, landmark_cells, landmark_select,
                                         packing_spectrum, poincare_polynomial_at, sample_configs,
                                         spectral_surface, upper_lower_duality)

CHICO = SpectrumParams(count=2000, mcmc_steps=100, n_landmarks=60)
COMPLETO = SpectrumParams(count=40000, mcmc_steps=150, n_landmarks=150)
# N = 3: piso alto para que la region quede delgada y eps no tape el lazo
TRES = SpectrumParams(count=40000, mcmc_steps=150, n_landmarks=150, rho_floor=0.75)


# =========================
# MUESTREO Y LANDMARKS
# =========================
def test_mcmc_never_lowers_separation(circle):
    base = sample_configs(circle, 3, 400, np.random.default_rng(3), mcmc_steps=0)
    movida = sample_configs(circle, 3, 400, np.random.default_rng(3), mcmc_steps=60)
    assert np.all(base.rho > 0)
    assert np.all(movida.rho >= base.rho)
    # las cadenas que suben llegan cerca de la cima L/N
    assert movida.rho[1::2].max() > 0.3


def test_above_floor_keeps_the_top(circle, rng):
    muestras = sample_configs(circle, 2, 500, rng, mcmc_steps=0)
    arriba = above_floor(muestras, 0.5)
    assert 0 < len(arriba) < len(muestras)
    assert np.all(arriba.rho >= 0.5 * muestras.rho.max())
    assert arriba.rho.max() == muestras.rho.max()
    assert above_floor(muestras, 0.0) is muestras
    with pytest.raises(InvalidInputError):
        above_floor(muestras, 1.0)


def test_first_landmark_has_largest_separation(unit_torus, rng):
    muestras = sample_configs(unit_torus, 2, 300, rng, mcmc_steps=20)
    lm = landmark_select(muestras, 20, metric="ordered")
    assert lm.indices[0] == int(np.argmax(muestras.rho))
    assert len(set(lm.indices.tolist())) == 20
    assert lm.covering_radius > 0


def test_lift_takes_best_sample_of_each_cell(circle, rng):
    muestras = sample_configs(circle, 2, 500, rng, mcmc_steps=0)
    plano = landmark_select(muestras, 30)
    alzado = landmark_select(muestras, 30, lift=True)
    assert np.array_equal(plano.indices, alzado.indices)
    assert np.array_equal(plano.points, alzado.points)
    assert np.all(alzado.rho >= plano.rho)
    assert alzado.rho.max() == muestras.rho.max()
    for j in range(30):
        assert alzado.rho[j] == muestras.rho[alzado.cells == j].max()


def test_landmark_cells_nearest(circle):
    lm = np.array([[[0.1], [0.6]], [[0.3], [0.8]]])
    pts = np.array([[[0.12], [0.61]], [[0.29], [0.79]], [[0.61], [0.12]]])
    assert landmark_cells(circle, pts, lm, quotient=False).tolist() == [0, 1, 1]
    # en el cociente la tercera configuracion es la primera permutada
    assert landmark_cells(circle, pts, lm, quotient=True).tolist() == [0, 1, 0]


def test_landmark_select_errors(circle, rng):
    muestras = sample_configs(circle, 2, 50, rng, mcmc_steps=0)
    with pytest.raises(InvalidInputError):
        landmark_select(muestras, 0)
    with pytest.raises(InvalidInputError):
        landmark_select(muestras, 51)
    with pytest.raises(InvalidInputError):
        landmark_select(muestras, 5, metric="hausdorff")
    with pytest.raises(InvalidInputError):
        ConfigSample.from_configs([])


def test_tiny_scale_gives_discrete_complex(circle, rng):
    muestras = sample_configs(circle, 2, 100, rng, mcmc_steps=0)
    lm = landmark_select(muestras, 10, metric="quotient")
    fc = build_filtration(lm, circle, 1e-9)
    assert fc.count_by_dim() == {0: 10}
    assert fc.warning is not None
    assert np.allclose(sorted(fc.values), sorted(-lm.rho))


def test_ordered_edges_never_cross_the_diagonal(interval, rng):
    muestras = sample_configs(interval, 2, 400, rng, mcmc_steps=0)
    lm = landmark_select(muestras, 40, metric="ordered")
    fc = build_filtration(lm, interval, 10.0, max_dim=1)
    aristas = [s for s in fc.simplices if len(s) == 2]
    assert aristas
    # los dos ordenes x_0 < x_1 y x_1 < x_0 nunca quedan unidos
    for u, v in aristas:
        assert np.sign(np.diff(lm.points[u, :, 0])) == np.sign(np.diff(lm.points[v, :, 0]))
    assert len(aristas) < 40 * 39 // 2


# =========================
# ESPECTRO
# =========================
def test_circle_two_points_unordered_spectrum(circle, single_thread):
    espectro = packing_spectrum(circle, 2, True, np.random.default_rng(7), COMPLETO)
    assert len(espectro.barcode.essential(0)) == 1
    assert len(espectro.barcode.essential(1)) == 1
    assert espectro.essential_birth_radii(0)[0] == pytest.approx(0.25, abs=0.02)
    assert espectro.essential_birth_radii(1)[0] == pytest.approx(0.25, abs=0.02)
    assert espectro.essential_birth_radii(0)[0] == pytest.approx(espectro.bottom_radius)
    assert poincare_polynomial_at(espectro.barcode, -0.4) == (1, 1)
    assert poincare_polynomial_at(espectro.barcode, -0.6) == ()
    assert espectro.warning is None


def test_circle_two_points_births_stable_across_seeds(circle):
    a = packing_spectrum(circle, 2, True, np.random.default_rng(11), COMPLETO)
    b = packing_spectrum(circle, 2, True, np.random.default_rng(12), COMPLETO)
    assert births_stable(a, b, 0)
    assert births_stable(a, b, 1)


def test_ordered_and_unordered_pairs_agree(circle):
    cociente = packing_spectrum(circle, 2, True, np.random.default_rng(8), COMPLETO)
    ordenado = packing_spectrum(circle, 2, False, np.random.default_rng(8), COMPLETO)
    for d in (0, 1):
        assert len(ordenado.barcode.essential(d)) == len(cociente.barcode.essential(d)) == 1
        assert ordenado.essential_birth_radii(d)[0] == pytest.approx(cociente.essential_birth_radii(d)[0], abs=0.02)


def test_duality_with_known_maximum(circle):
    espectro = packing_spectrum(circle, 2, True, np.random.default_rng(12), CHICO)
    dual = upper_lower_duality(espectro, r_max=0.25)
    assert dual["h0_birth_matches"]
    assert dual["below_r_max"]
    assert dual["spectrum_bottom_radius"] <= 0.25 + 1e-9


def test_interval_ordered_pair_has_two_components(interval):
    espectro = packing_spectrum(interval, 2, False, np.random.default_rng(13), COMPLETO)
    assert len(espectro.barcode.essential(0)) == 2
    assert len(espectro.barcode.essential(1)) == 0
    assert espectro.barcode.betti_at(-0.7, max_dim=1)[0] == 2
    assert espectro.warning is not None


def test_spectrum_is_deterministic_for_a_seed(circle):
    a = packing_spectrum(circle, 2, True, np.random.default_rng(21), SpectrumParams(count=400, n_landmarks=60))
    b = packing_spectrum(circle, 2, True, np.random.default_rng(21), SpectrumParams(count=400, n_landmarks=60))
    assert a.barcode.intervals == b.barcode.intervals
    assert births_stable(a, b, 0)
    assert a.to_frame().equals(b.to_frame())


def test_summary_is_consistent(circle):
    espectro = packing_spectrum(circle, 2, True, np.random.default_rng(22), SpectrumParams(count=400, n_landmarks=60))
    resumen = espectro.summary()
    assert resumen["stability_bound"] == pytest.approx(2 * resumen["covering_radius"])
    assert resumen["spectral_radii"] == sorted(resumen["spectral_radii"])
    assert resumen["bottom_radius"] <= 0.25 + 1e-12


@pytest.mark.slow
def test_circle_three_points_unordered_loop():
    espectro = packing_spectrum(ms.ModelSpace.circle(1.0), 3, True, np.random.default_rng(31), TRES)
    radios = espectro.essential_birth_radii(1)
    assert radios
    assert radios[0] == pytest.approx(1 / 6, abs=0.02)
    assert radios[0] <= 1 / 6 + 1e-12


# =========================
# POLINOMIO DE POINCARE
# =========================
def test_poincare_polynomial_of_hollow_triangle():
    fc = FilteredComplex([(0,), (1,), (2,), (0, 1), (1, 2), (0, 2)], [0, 0, 0, 1, 2, 3], max_dim=1)
    barcode = persistence_reduce(fc)
    assert poincare_polynomial_at(barcode, 3.0) == (1, 1)
    assert poincare_polynomial_at(barcode, 2.0) == (1,)
    assert poincare_polynomial_at(barcode, -1.0) == ()


@pytest.mark.parametrize("coef, texto", [((1, 1), "1 + t"), ((1, 0, 2), "1 + 2t^2"), ((), "0"), ((2, 3), "2 + 3t")])
def test_format_polynomial(coef, texto):
    assert format_polynomial(coef) == texto


# =========================
# RASTREO DE CLASES
# =========================
def _cuadrado(relleno: bool) -> FilteredComplex:
    simplices = [(0,), (1,), (2,), (3,), (0, 1), (1, 2), (2, 3), (0, 3)]
    if relleno:
        simplices += [(0, 2), (0, 1, 2), (0, 2, 3)]
    return FilteredComplex(simplices, np.zeros(len(simplices)), max_dim=2)


def test_tracker_loop_survives_only_with_the_whole_square():
    tracker = _ClassTracker(_cuadrado(False), 1, "any")
    assert not tracker.vanishes(np.ones(4, dtype=bool))
    for v in range(4):
        mask = np.ones(4, dtype=bool)
        mask[v] = False
        assert tracker.vanishes(mask)


def test_tracker_filled_square_has_no_loop():
    with pytest.raises(ClassNotFoundError):
        _ClassTracker(_cuadrado(True), 1, "any")
    tracker = _ClassTracker(_cuadrado(True), 0, 0)
    assert not tracker.vanishes(np.array([False, False, True, False]))
    assert tracker.vanishes(np.zeros(4, dtype=bool))


def test_tracker_rejects_higher_dimensions():
    with pytest.raises(InvalidInputError):
        _ClassTracker(_cuadrado(True), 2, "any")
    with pytest.raises(ClassNotFoundError):
        _ClassTracker(_cuadrado(False), 1, 3)


# =========================
# SUPERFICIE ESPECTRAL
# =========================
def test_surface_rejects_bad_pairs(circle, rng):
    with pytest.raises(InvalidInputError):
        spectral_surface(circle, 2, [(0, 0)], [[1.0, 2.0]], rng)
    with pytest.raises(InvalidInputError):
        spectral_surface(circle, 2, [(0, 2)], [[1.0, 2.0]], rng)
    with pytest.raises(InvalidInputError):
        spectral_surface(circle, 2, [(0, 1)], [[1.0], [2.0]], rng)
    with pytest.raises(InvalidInputError):
        spectral_surface(circle, 2, [(0, 1)], [[1.0, 2.0]], rng, tracked=(2, "any"))


def test_circle_pair_surface_crosses_at_two(circle, single_thread):
    # la clase del anillo {d(x_0, x_1) > 1/e} aparece apenas e supera 2
    eje = np.linspace(1.5, 3.0, 31)
    superficie = spectral_surface(circle, 2, [(0, 1)], [eje], np.random.default_rng(41), params=COMPLETO)
    cruce = superficie.axis_crossing(0)
    assert abs(cruce - 2.0) <= 0.1
    # monotonia: una vez presente, sigue presente
    anula = superficie.grid
    assert not np.any(~anula[:-1] & anula[1:])
    df = superficie.to_frame()
    assert list(df.columns) == ["e_0_1", "vanishes"]
    assert len(df) == 31
    assert math.isfinite(cruce)


@pytest.mark.slow
def test_circle_triple_surface_crosses_diagonal_at_three(circle):
    pares = [(0, 1), (1, 2), (0, 2)]
    eje = np.linspace(2.8, 3.4, 7)
    params = SpectrumParams(count=40000, mcmc_steps=150, n_landmarks=300, rho_floor=0.75)
    superficie = spectral_surface(circle, 3, pares, [eje] * 3, np.random.default_rng(43), params=params)
    assert abs(superficie.diagonal_crossing() - 3.0) <= 0.15 + 1e-9
    # ejes iguales: la grilla es invariante bajo Sym_3
    for p in itertools.permutations(range(3)):
        assert np.array_equal(superficie.grid, superficie.grid.transpose(p))

"""
Un experimento por subcomando. Cada funcion recibe el RunConfig validado y
devuelve un Resultado: valores para el JSON, tablas para CSV/xlsx y, si el
experimento verifica una desigualdad, si paso.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from app.config import settings
from app.core.errors import ClassNotFoundError, InvalidInputError, NotApplicableError
from app.core.streams import split, stream
from app.models.schemas import RunConfig
from app.services import model_spaces as ms
from app.services.cycle_spectra import (FunctionBasis, ScalarField, bisect_balls, volume_spectrum_scaling,
                                        zero_set_length)
from app.services.extremal_packing import exact_oracle_1d, max_packing_radius, packing_constant_fit
from app.services.federer_fleming import ff_constant, ff_project
from app.services.geometric_inequalities import (circle_polygon, crossing_linking_number, curve_distance,
                                                 far_axis_loop, gauss_map_degree, gehring_check, hopf_link,
                                                 linking_number, random_closed_curve, torus_link)
from app.services.laplace_localization import (arc_partition, laplace_spectrum, localization_check,
                                               resolved_band, square_partition, voronoi_partition, weyl_fit)
from app.services.minkowski import equator, sweepout_waist_upper, tube_volume
from app.services.polyline_io import read_polylines
from app.services.spectra_engine import (SpectrumParams, format_polynomial, packing_spectrum,
                                         poincare_polynomial_at, spectral_surface, upper_lower_duality)

logger = logging.getLogger(__name__)

# Constantes de empaque de referencia por dimension
PACKING_CONSTANTS = {1: 0.5, 2: 1.0 / math.sqrt(12.0)}

TEST_FUNCTIONS = {
    "sinx": lambda u, v: np.sin(2 * np.pi * u),
    "sinx_siny": lambda u, v: np.sin(2 * np.pi * u) + np.sin(2 * np.pi * v),
    "cosx_cosy": lambda u, v: np.cos(2 * np.pi * u) * np.cos(2 * np.pi * v),
    "const": lambda u, v: np.ones_like(u),
}


@dataclass
class Resultado:
    results: dict
    tables: dict = field(default_factory=dict)
    passed: bool | None = None


# =========================
# AUXILIARES
# =========================
def construir_espacio(cfg: RunConfig) -> ms.ModelSpace:
    if cfg.space == "interval":
        return ms.ModelSpace.interval(cfg.length)
    if cfg.space == "circle":
        return ms.ModelSpace.circle(cfg.length)
    if cfg.space == "torus":
        if cfg.basis is not None:
            return ms.ModelSpace.torus(cfg.basis)
        return ms.ModelSpace.torus(np.eye(cfg.dim) * cfg.length)
    if cfg.space == "hextorus":
        return ms.ModelSpace.hexagonal_torus(area=cfg.length ** 2)
    if cfg.space == "box":
        return ms.ModelSpace.box(cfg.sides if cfg.sides is not None else [cfg.length] * cfg.dim)
    return ms.ModelSpace.sphere(cfg.dim)


def _requerido(cfg: RunConfig, nombre: str):
    valor = getattr(cfg, nombre)
    if valor is None:
        raise InvalidInputError(f"El subcomando {cfg.subcommand} requiere '{nombre}'")
    return valor


def _spectrum_params(cfg: RunConfig) -> SpectrumParams:
    base = SpectrumParams()
    return SpectrumParams(
        count=cfg.samples or base.count,
        mcmc_steps=cfg.mcmc_steps if cfg.mcmc_steps is not None else base.mcmc_steps,
        n_landmarks=cfg.landmarks or base.n_landmarks,
        eps_factor=cfg.eps_factor,
        rho_floor=cfg.rho_floor,
    )


def _presupuesto(cfg: RunConfig) -> tuple:
    return cfg.restarts or settings.PACKING_RESTARTS, cfg.iterations or settings.PACKING_ITERATIONS


def _par_de_curvas(cfg: RunConfig) -> tuple:
    """W y W' desde archivos de poligonales o desde una curva con nombre."""
    if cfg.w is not None:
        primeras = read_polylines(cfg.w)
        if cfg.wprime is not None:
            return primeras[0], read_polylines(cfg.wprime)[0]
        if len(primeras) < 2:
            raise InvalidInputError(f"{cfg.w} tiene una sola componente y falta 'wprime'")
        return primeras[0], primeras[1]
    nombre = cfg.curve or "hopf"
    if nombre == "hopf":
        return hopf_link(cfg.m or 64)
    if nombre == "torus_link":
        a, b = torus_link(2, 4, cfg.m or 128)
        return a, b
    if nombre == "axis":
        return circle_polygon(cfg.m or 256), far_axis_loop()
    raise InvalidInputError(f"Curva desconocida: {nombre} (hopf, torus_link, axis)")


# =========================
# ESPECTROS
# =========================
def spectra(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    n = _requerido(cfg, "n")
    sp = packing_spectrum(space, n, cfg.quotient, stream(cfg.seed, "spectra"), _spectrum_params(cfg))
    results = sp.summary()
    results["poincare_polynomial"] = format_polynomial(poincare_polynomial_at(sp.barcode, math.inf))

    passed = None
    r_max = exact_oracle_1d(space, n) if space.kind in ("interval", "circle") else None
    try:
        dualidad = upper_lower_duality(sp, r_max)
        results["duality"] = dualidad
        passed = dualidad.get("below_r_max")
    except ClassNotFoundError as e:
        logger.warning("Sin verificacion de dualidad: %s", e)
    return Resultado(results, {"barcode": sp.to_frame()}, passed)


def surface(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    n = _requerido(cfg, "n")
    pairs = cfg.pairs or [(0, 1)]
    grid = cfg.grid or [1.0, 4.0, 32]
    if len(grid) != 3:
        raise InvalidInputError("grid es 'desde,hasta,cantidad'")
    lo, hi, cantidad = float(grid[0]), float(grid[1]), int(grid[2])
    ejes = [np.linspace(lo, hi, cantidad) for _ in pairs]
    sup = spectral_surface(space, n, pairs, ejes, stream(cfg.seed, "surface"),
                           tracked=(cfg.tracked_dim, "any"), params=_spectrum_params(cfg))
    results = {
        "pairs": [list(p) for p in sup.pairs],
        "shape": list(sup.grid.shape),
        "diagonal_crossing": sup.diagonal_crossing(),
        "boundary_cells": len(sup.boundary),
        "vanishing_cells": int(sup.grid.sum()),
    }
    return Resultado(results, {"surface": sup.to_frame()})


# =========================
# EMPAQUES
# =========================
def rmax(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    n = _requerido(cfg, "n")
    restarts, iterations = _presupuesto(cfg)
    res = max_packing_radius(space, n, stream(cfg.seed, "rmax"), restarts, iterations)
    results = res.to_dict()
    if space.kind in ("interval", "circle"):
        exacto = exact_oracle_1d(space, n)
        results["exact"] = exacto
        results["gap"] = exacto - res.radius
    puntos = pd.DataFrame(res.config.points, columns=[f"x{i}" for i in range(res.config.points.shape[1])])
    traza = pd.DataFrame({"step": np.arange(len(res.curve)), "best_separation": res.curve})
    return Resultado(results, {"packing": puntos, "trace": traza})


def packconst(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    n_list = _requerido(cfg, "n_list")
    restarts, iterations = _presupuesto(cfg)
    constante, tabla = packing_constant_fit(space, n_list, stream(cfg.seed, "packconst"), restarts, iterations)
    results = {
        "constant": constante,
        "reference": PACKING_CONSTANTS.get(space.intrinsic_dimension),
        "monotone": bool(tabla["monotone"].all()),
    }
    return Resultado(results, {"scaling": tabla})


# =========================
# CONJUNTOS DE CEROS
# =========================
def zerosets(cfg: RunConfig) -> Resultado:
    torus = construir_espacio(cfg)
    if cfg.function not in TEST_FUNCTIONS:
        raise InvalidInputError(f"Funcion desconocida: {cfg.function} ({', '.join(TEST_FUNCTIONS)})")
    func = TEST_FUNCTIONS[cfg.function]
    grillas = cfg.m_list or [cfg.m or settings.GRID_M]
    filas = []
    for m in grillas:
        largo = zero_set_length(ScalarField.from_function(torus, m, func))
        filas.append({"M": m, "h": 1.0 / m, "length": largo})
    tabla = pd.DataFrame(filas)
    results = {"function": cfg.function, "lengths": tabla["length"].tolist()}

    # Richardson con grillas que se duplican
    L = tabla["length"].to_numpy()
    if len(L) >= 3 and all(b == 2 * a for a, b in zip(grillas, grillas[1:])):
        d1, d2 = L[-2] - L[-3], L[-1] - L[-2]
        if d2 != 0 and d1 / d2 > 1:
            orden = math.log2(d1 / d2)
            results["order"] = orden
            results["richardson"] = float(L[-1] + d2 / (2 ** orden - 1))
        else:
            results["richardson"] = float(L[-1])
    return Resultado(results, {"refinement": tabla})


def bisect(cfg: RunConfig) -> Resultado:
    torus = construir_espacio(cfg)
    m = cfg.m or settings.GRID_M
    multistart = cfg.multistart or settings.MULTISTART
    restarts, iterations = _presupuesto(cfg)
    rng = stream(cfg.seed, "bisect")

    if cfg.n_list is not None:
        pendiente, prefactor, tabla = volume_spectrum_scaling(torus, cfg.n_list, rng, m, restarts, iterations,
                                                              multistart)
        tabla = tabla[["N", "length", "K", "radius", "floor", "meets_floor", "residual"]]
        results = {"exponent": pendiente, "prefactor": prefactor,
                   "max_residual": float(tabla["residual"].max())}
        return Resultado(results, {"scaling": tabla}, bool(tabla["meets_floor"].all()))

    n = _requerido(cfg, "n")
    empaque_rng, biseccion_rng = split(rng, 2)
    if n >= 2:
        emp = max_packing_radius(torus, n, empaque_rng, restarts, iterations)
        centros, radio = emp.config.points, emp.radius
    else:
        centros, radio = np.array([[0.5, 0.5]]), ms.torus_systole(torus) / 4.0
    base = FunctionBasis.trigonometric(torus, m, n + 1)
    bis = bisect_balls(base, [(c, radio) for c in centros], biseccion_rng, multistart=multistart)
    results = {
        "coefficients": bis.coefficients.tolist(),
        "residuals": bis.residuals.tolist(),
        "max_residual": bis.max_residual,
        "start": bis.start,
        "radius": radio,
        "zero_set_length": zero_set_length(bis.field),
    }
    bolas = pd.DataFrame({"u": centros[:, 0], "v": centros[:, 1], "radius": radio, "residual": bis.residuals})
    return Resultado(results, {"balls": bolas})


# =========================
# LAPLACIANO
# =========================
def laplace(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    espectro = laplace_spectrum(space, cfg.m or settings.GRID_M, cfg.k or 10)
    return Resultado({"eigenvalues": espectro.eigenvalues.tolist(), "m": espectro.m},
                     {"eigenvalues": espectro.to_frame()})


def localize(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    rng = stream(cfg.seed, "localize")
    if space.kind == "circle":
        m = cfg.m or settings.GRID_M
        if cfg.arcs is not None:
            largos = cfg.arcs
        else:
            n = _requerido(cfg, "n")
            # cada arco mide al menos L/(n+1)
            largos = space.length * (1.0 + rng.dirichlet(np.ones(n))) / (n + 1)
        piezas = arc_partition(space, m, largos)
    elif space.kind == "torus":
        m = cfg.m or 64
        if cfg.squares is not None:
            piezas = square_partition(space, m, cfg.squares)
        else:
            n = _requerido(cfg, "n")
            restarts, iterations = _presupuesto(cfg)
            emp = max_packing_radius(space, n, rng, restarts, iterations)
            piezas = voronoi_partition(space, m, emp.config.points)
    else:
        raise NotApplicableError(f"La localizacion se verifica en circulo o toro ({space.kind})")
    rep = localization_check(space, piezas)
    tabla = pd.DataFrame({"piece": np.arange(len(piezas)), "cells": [int(p.sum()) for p in piezas],
                          "e1": rep.piece_values})
    return Resultado(rep.to_dict(), {"pieces": tabla}, rep.passed)


def weyl(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    m = cfg.m or settings.GRID_M
    e_range = cfg.e_range or [resolved_band(space, m) / 100.0, resolved_band(space, m)]
    fit = weyl_fit(space, m, e_range)
    objetivo = space.intrinsic_dimension / 2.0
    results = fit.to_dict()
    results["expected_exponent"] = objetivo
    return Resultado(results, {"scaling": fit.counts}, abs(fit.exponent - objetivo) <= 0.05)


# =========================
# DESIGUALDADES GEOMETRICAS
# =========================
def linking(cfg: RunConfig) -> Resultado:
    w, w2 = _par_de_curvas(cfg)
    lk = linking_number(w, w2)
    grado = gauss_map_degree(w, w2, stream(cfg.seed, "gauss"))
    results = {
        "linking_number": lk,
        "crossing_count": crossing_linking_number(w, w2),
        "gauss_degree": grado,
        "distance": curve_distance(w, w2),
    }
    return Resultado(results, passed=grado == lk)


def gehring(cfg: RunConfig) -> Resultado:
    w, w2 = _par_de_curvas(cfg)
    rep = gehring_check(w, w2)
    return Resultado(rep.to_dict(), passed=rep.passed)


def ff(cfg: RunConfig) -> Resultado:
    if cfg.y is not None:
        corpus = read_polylines(cfg.y)
    else:
        flujos = split(stream(cfg.seed, "ff"), cfg.n or 8)
        corpus = [random_closed_curve(r, dim=2) for r in flujos]
    filas = []
    for i, y in enumerate(corpus):
        proy = ff_project(y, cfg.r_factor * y.length)
        filas.append({"curve": i, "length": y.length, **proy.to_dict()})
    tabla = pd.DataFrame(filas)
    results = {"ff_constant": ff_constant(corpus, cfg.r_factor), "curves": len(corpus), "r_factor": cfg.r_factor}
    conexas = bool((tabla["components_out"] <= tabla["components_in"]).all())
    return Resultado(results, {"projections": tabla}, conexas)


def _equator_tube(delta: float) -> float:
    return 4.0 * math.pi * math.sin(delta)


def _circle_tube(delta: float) -> float:
    """Toro solido de radios 1 y delta."""
    return 2.0 * math.pi ** 2 * delta * delta


def tubes(cfg: RunConfig) -> Resultado:
    deltas = cfg.delta or [0.05, 0.1, 0.2]
    samples = cfg.samples or settings.TUBE_SAMPLES
    if cfg.y is not None:
        y, descriptor, exacto = read_polylines(cfg.y)[0], cfg.y, None
    elif cfg.ambient == "sphere":
        y, descriptor = equator(cfg.m or 256), "equator"
        exacto = _equator_tube
    else:
        y, descriptor = circle_polygon(cfg.m or 256), "unit_circle"
        exacto = _circle_tube

    flujos = split(stream(cfg.seed, "tubes"), len(deltas))
    filas = []
    for d, flujo in zip(deltas, flujos):
        fila = tube_volume(y, d, samples, flujo, cfg.ambient, descriptor).to_dict()
        if exacto is not None:
            fila["exact"] = exacto(d)
            fila["z"] = (fila["volume"] - fila["exact"]) / fila["stderr"] if fila["stderr"] > 0 else 0.0
        filas.append(fila)
    tabla = pd.DataFrame(filas)
    results = {"delta_mink": tabla["delta_mink"].tolist()}
    if len(deltas) >= 2:
        # Mink_delta = Mink + a * delta^2
        _, intercepto = np.polyfit(np.asarray(deltas) ** 2, tabla["delta_mink"], 1)
        results["mink_limit"] = float(intercepto)
    passed = bool((tabla["z"].abs() <= 3.0).all()) if exacto is not None else None
    return Resultado(results, {"tubes": tabla}, passed)


def waist(cfg: RunConfig) -> Resultado:
    res = sweepout_waist_upper(stream(cfg.seed, "waist"), cfg.restarts or settings.WAIST_RESTARTS, m=cfg.m or 48)
    results = res.to_dict()
    results["upper_slack"] = 0.15
    traza = pd.DataFrame({"restart": np.arange(len(res.curve)), "minmax": res.curve})
    return Resultado(results, {"trace": traza}, res.passed and res.minmax <= 2.0 * math.pi + 0.15)


def systole(cfg: RunConfig) -> Resultado:
    space = construir_espacio(cfg)
    if space.kind != "torus" or space.dim != 2:
        raise NotApplicableError(f"La sistole se calcula en toros planos de dimension 2 ({space.kind})")
    b1, b2 = ms.gauss_reduce(space.basis[0], space.basis[1])
    razon = ms.loewner_ratio(space)
    cota = 2.0 / math.sqrt(3.0)
    results = {
        "systole": ms.torus_systole(space),
        "area": ms.volume(space),
        "loewner_ratio": razon,
        "hexagonal_bound": cota,
        "reduced_basis": [np.asarray(b1).tolist(), np.asarray(b2).tolist()],
    }
    return Resultado(results, passed=razon <= cota * (1 + 1e-12))


EXPERIMENTS = {
    "spectra": spectra,
    "surface": surface,
    "rmax": rmax,
    "packconst": packconst,
    "zerosets": zerosets,
    "bisect": bisect,
    "laplace": laplace,
    "localize": localize,
    "weyl": weyl,
    "linking": linking,
    "gehring": gehring,
    "ff": ff,
    "tubes": tubes,
    "waist": waist,
    "systole": systole,
}

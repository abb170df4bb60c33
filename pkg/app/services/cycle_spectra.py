"""
Espectros de volumen de conjuntos de ceros en el 2-toro plano: longitud de
Y = f^{-1}(0), funciones que bisecan N bolas (Borsuk-Ulam) y el escalamiento
N^{1/2} de la longitud maxima.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from app.config import settings
from app.core.errors import (
    DegenerateZeroSetError,
    InvalidFamilyError,
    InvalidInputError,
    SearchFailureError,
    UnsupportedDimensionError,
)
from app.core.parallel import map_ordered
from app.core.streams import split
from app.services import model_spaces as ms
from app.services.contours import crossing_segments, segment_lengths
from app.services.extremal_packing import max_packing_radius

logger = logging.getLogger(__name__)

MIN_GRID = 16


def _check_torus(torus: ms.ModelSpace):
    if torus.kind != "torus" or torus.dim != 2:
        raise UnsupportedDimensionError("Los espectros de ceros se calculan en toros planos de dimension 2")


def grid_centers(m: int) -> tuple:
    """Coordenadas fraccionarias (U, V) de los centros de celda, indexadas [i, j]."""
    g = (np.arange(m) + 0.5) / m
    return np.meshgrid(g, g, indexing="ij")


@dataclass(frozen=True, eq=False)
class ScalarField:
    torus: ms.ModelSpace
    values: np.ndarray

    def __post_init__(self):
        _check_torus(self.torus)
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise InvalidInputError(f"La grilla debe ser M x M (forma {vals.shape})")
        if vals.shape[0] < MIN_GRID:
            raise InvalidInputError(f"M debe ser >= {MIN_GRID} (M={vals.shape[0]})")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("Valores no finitos en la grilla")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, torus: ms.ModelSpace, m: int, func) -> "ScalarField":
        """`func(u, v)` recibe coordenadas fraccionarias de los centros de celda."""
        u, v = grid_centers(m)
        return cls(torus, np.broadcast_to(func(u, v), (m, m)))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def cell_area(self) -> float:
        return ms.volume(self.torus) / self.m ** 2

    def scaled(self, factor: float) -> "ScalarField":
        return ScalarField(self.torus, self.values * factor)


def zero_set_length(f: ScalarField) -> float:
    """Longitud del contorno f = 0 por marching squares con interpolacion lineal."""
    if np.all(f.values == 0):
        raise DegenerateZeroSetError("La funcion es identicamente cero en la grilla")
    segmentos = crossing_segments(f.values)
    if len(segmentos) == 0:
        return 0.0
    return float(segment_lengths(segmentos, f.torus.basis).sum())


# =========================
# BASES DE FUNCIONES
# =========================
@dataclass(frozen=True, eq=False)
class FunctionBasis:
    torus: ms.ModelSpace
    values: np.ndarray

    def __post_init__(self):
        _check_torus(self.torus)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2] or vals.shape[1] < MIN_GRID:
            raise InvalidFamilyError(f"Base con forma invalida {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def gram(self) -> np.ndarray:
        area = ms.volume(self.torus) / self.m ** 2
        flat = self.values.reshape(self.k, -1)
        return flat @ flat.T * area

    def combine(self, coef) -> ScalarField:
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.k,):
            raise InvalidInputError(f"Se esperaban {self.k} coeficientes")
        return ScalarField(self.torus, np.tensordot(coef, self.values, axes=1))

    @classmethod
    def from_fields(cls, torus: ms.ModelSpace, fields) -> "FunctionBasis":
        """Ortonormaliza (QR en el producto interno de la grilla) una lista de grillas."""
        fields = [np.asarray(f.values if isinstance(f, ScalarField) else f, dtype=float) for f in fields]
        if not fields:
            raise InvalidFamilyError("La familia esta vacia")
        m = fields[0].shape[0]
        area = ms.volume(torus) / m ** 2
        A = np.stack([f.reshape(-1) for f in fields], axis=1) * np.sqrt(area)
        q, r = np.linalg.qr(A)
        diag = np.abs(np.diag(r))
        if np.any(diag <= 1e-10 * max(diag.max(), 1.0)):
            raise InvalidFamilyError("La familia de funciones es linealmente dependiente en la grilla")
        q = q * np.sign(np.diag(r))
        return cls(torus, (q / np.sqrt(area)).T.reshape(len(fields), m, m))

    @classmethod
    def trigonometric(cls, torus: ms.ModelSpace, m: int, k: int) -> "FunctionBasis":
        """Primeros K monomios trigonometricos ordenados por |numero de onda|."""
        _check_torus(torus)
        if k < 1:
            raise InvalidFamilyError("K debe ser >= 1")
        if m < 8 * int(np.ceil(np.sqrt(k))):
            raise InvalidFamilyError(f"M={m} no resuelve {k} monomios")
        u, v = grid_centers(m)
        inv = np.linalg.inv(torus.basis)
        radio = int(np.ceil(np.sqrt(k))) + 1
        frecuencias = [
            (a, b) for a in range(0, radio + 1) for b in range(-radio, radio + 1)
            if a > 0 or b > 0
        ]
        frecuencias.sort(key=lambda kv: (float(np.linalg.norm(inv @ np.array(kv, dtype=float))), kv))
        campos = [np.ones((m, m))]
        for a, b in frecuencias:
            if len(campos) >= k:
                break
            fase = 2.0 * np.pi * (a * u + b * v)
            campos.append(np.cos(fase))
            if len(campos) < k:
                campos.append(np.sin(fase))
        return cls.from_fields(torus, campos[:k])


# =========================
# BISECCION DE BOLAS
# =========================
@dataclass
class BisectionResult:
    coefficients: np.ndarray
    residuals: np.ndarray
    field: ScalarField
    start: int

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self.residuals) else 0.0


class _BallResidual:
    """Volumen con signo de f sobre cada bola, con fraccion de area sub-celda."""

    def __init__(self, basis: FunctionBasis, balls):
        torus = basis.torus
        m = basis.m
        u, v = grid_centers(m)
        centros = np.stack([u, v], axis=-1).reshape(-1, 2)
        self.h = float(np.sqrt(ms.volume(torus) / m ** 2))
        inv = np.linalg.inv(torus.basis)

        # gradiente cartesiano por diferencias centradas periodicas
        du = (np.roll(basis.values, -1, axis=1) - np.roll(basis.values, 1, axis=1)) * (m / 2.0)
        dv = (np.roll(basis.values, -1, axis=2) - np.roll(basis.values, 1, axis=2)) * (m / 2.0)
        grad_u = np.stack([du, dv], axis=-1).reshape(basis.k, -1, 2)
        grad_x = grad_u @ inv.T

        self.masks, self.vals, self.grads = [], [], []
        flat = basis.values.reshape(basis.k, -1)
        for c, r in balls:
            d = ms.distance(torus, centros, np.asarray(c, dtype=float))
            mask = d < r
            if mask.sum() < 4:
                raise InvalidInputError(f"La bola en {c} de radio {r} cubre menos de 4 celdas")
            self.masks.append(mask)
            self.vals.append(flat[:, mask])
            self.grads.append(grad_x[:, mask])

    def __call__(self, coef: np.ndarray) -> np.ndarray:
        res = np.empty(len(self.vals))
        for i, (vals, grads) in enumerate(zip(self.vals, self.grads)):
            f = coef @ vals
            g = np.linalg.norm(np.tensordot(coef, grads, axes=1), axis=-1)
            escala = np.maximum(g * self.h, 1e-300)
            signo = np.clip(2.0 * f / escala, -1.0, 1.0)
            res[i] = signo.mean()
        return res


def _balls_disjoint(torus, balls) -> bool:
    for a in range(len(balls)):
        for b in range(a + 1, len(balls)):
            d = float(ms.distance(torus, np.asarray(balls[a][0], float), np.asarray(balls[b][0], float)))
            if d < balls[a][1] + balls[b][1]:
                return False
    return True


def bisect_balls(basis: FunctionBasis, balls, rng: np.random.Generator,
                 tol: float = settings.BISECT_TOL, multistart: int = settings.MULTISTART) -> BisectionResult:
    """
    Coeficientes unitarios c (K = N+1) tales que sign(sum c_k b_k) parte cada
    bola en dos mitades de igual volumen, por minimos cuadrados multiarranque.
    """
    balls = [(np.asarray(c, dtype=float), float(r)) for c, r in balls]
    if basis.k != len(balls) + 1:
        raise InvalidFamilyError(f"Para N={len(balls)} bolas la base debe tener dimension {len(balls) + 1}")
    if any(r <= 0 for _, r in balls):
        raise InvalidInputError("Radios de bola deben ser > 0")
    if not _balls_disjoint(basis.torus, balls):
        raise InvalidInputError("Las bolas no son disjuntas")
    residuo = _BallResidual(basis, balls)

    def fun(c):
        n = np.linalg.norm(c)
        return np.concatenate([residuo(c / n), [n * n - 1.0]])

    for inicio in range(multistart):
        c0 = rng.standard_normal(basis.k)
        c0 /= np.linalg.norm(c0)
        sol = least_squares(fun, c0, method="trf", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=200 * basis.k)
        c = sol.x / np.linalg.norm(sol.x)
        res = residuo(c)
        if np.max(np.abs(res)) <= tol:
            logger.info("Biseccion de %d bolas en el arranque %d, residuo %.2e", len(balls), inicio, np.abs(res).max())
            return BisectionResult(c, res, basis.combine(c), inicio)
    raise SearchFailureError(f"No se encontro funcion bisectora en {multistart} arranques")


def signed_ball_volumes(basis: FunctionBasis, balls, coef) -> np.ndarray:
    balls = [(np.asarray(c, dtype=float), float(r)) for c, r in balls]
    return _BallResidual(basis, balls)(np.asarray(coef, dtype=float))


# =========================
# ESCALAMIENTO
# =========================
def volume_spectrum_scaling(torus: ms.ModelSpace, n_list, rng: np.random.Generator, m: int = settings.GRID_M,
                            restarts: int = settings.PACKING_RESTARTS,
                            iterations: int = settings.PACKING_ITERATIONS,
                            multistart: int = settings.MULTISTART):
    """
    Para cada N: empaque eficiente de N bolas, funcion bisectora en la base
    trigonometrica de dimension N+1 y longitud de su conjunto de ceros.
    Devuelve (exponente ajustado, prefactor, tabla).
    """
    _check_torus(torus)
    n_list = [int(v) for v in n_list]
    if len(n_list) < 2:
        raise InvalidInputError("Se requieren al menos dos valores de N para ajustar el exponente")
    flujos = split(rng, len(n_list))

    def _uno(par):
        n, flujo = par
        empaque_rng, biseccion_rng = split(flujo, 2)
        if n >= 2:
            emp = max_packing_radius(torus, n, empaque_rng, restarts, iterations)
            centros, radio = emp.config.points, emp.radius
        else:
            centros, radio = np.array([[0.5, 0.5]]), ms.torus_systole(torus) / 4.0
        base = FunctionBasis.trigonometric(torus, m, n + 1)
        bis = bisect_balls(base, [(c, radio) for c in centros], biseccion_rng, multistart=multistart)
        largo = zero_set_length(bis.field)
        piso = n * 2.0 * radio
        logger.info("N=%d: r_N=%.5f, largo=%.5f, piso N*2r_N=%.5f", n, radio, largo, piso)
        return {"N": n, "K": n + 1, "radius": radio, "length": largo, "floor": piso,
                "meets_floor": largo >= piso * (1 - 2e-2), "residual": bis.max_residual}

    tabla = pd.DataFrame(map_ordered(_uno, list(zip(n_list, flujos))))
    pendiente, intercepto = np.polyfit(np.log(tabla["N"]), np.log(tabla["length"]), 1)
    logger.info("Exponente ajustado %.4f, prefactor %.4f", pendiente, np.exp(intercepto))
    return float(pendiente), float(np.exp(intercepto)), tabla

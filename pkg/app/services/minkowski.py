"""
Volumenes delta-Minkowski de curvas (Monte Carlo) y cota superior de la
cintura de S^2 por barridos de conjuntos de nivel.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize, minimize_scalar

from app.config import settings
from app.core.errors import InvalidFamilyError, InvalidInputError
from app.core.parallel import map_ordered
from app.core.streams import split
from app.core.validator import validar_entero_minimo, validar_positivo
from app.services import model_spaces as ms
from app.services.contours import crossing_segments
from app.services.geometric_inequalities import Polyline

logger = logging.getLogger(__name__)

CHUNK = 4_000


@dataclass
class TubeEstimate:
    descriptor: str
    delta: float
    ambient: str
    samples: int
    volume: float
    stderr: float
    mink: float

    def to_dict(self) -> dict:
        return {"Y": self.descriptor, "delta": self.delta, "ambient": self.ambient, "samples": self.samples,
                "volume": self.volume, "stderr": self.stderr, "delta_mink": self.mink}


# =========================
# DISTANCIAS A CURVAS
# =========================
def _sphere_arc_distance(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distancia esferica de cada punto x a cada arco de circulo maximo [a, b] (forma (P, S))."""
    n = np.cross(a, b)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    xn = x @ n.T
    proy = x[:, None, :] - xn[..., None] * n[None]
    norma = np.linalg.norm(proy, axis=-1)
    dentro = (np.einsum("sk,psk->ps", np.cross(a, n) * -1.0, proy) >= 0) & \
             (np.einsum("sk,psk->ps", np.cross(b, n), proy) >= 0)
    al_circulo = np.arctan2(np.abs(xn), norma)
    da = 2.0 * np.arctan2(np.linalg.norm(x[:, None] - a[None], axis=-1), np.linalg.norm(x[:, None] + a[None], axis=-1))
    db = 2.0 * np.arctan2(np.linalg.norm(x[:, None] - b[None], axis=-1), np.linalg.norm(x[:, None] + b[None], axis=-1))
    return np.where(dentro & (norma > 0), al_circulo, np.minimum(da, db))


def _segment_distance(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    t = np.einsum("psk,sk->ps", x[:, None, :] - a[None], d) / np.sum(d * d, axis=1)
    t = np.clip(t, 0.0, 1.0)
    cerca = a[None] + t[..., None] * d[None]
    return np.linalg.norm(x[:, None, :] - cerca, axis=-1)


# =========================
# TUBOS
# =========================
def tube_volume(y: Polyline, delta: float, samples: int, rng: np.random.Generator,
                ambient: str = "r3", descriptor: str = "polyline") -> TubeEstimate:
    """
    vol_n(U_delta(Y)) por Monte Carlo con error estandar, y
    delta-Mink_1(Y) = vol / (delta^{n-1} beta_{n-1}).
    En la esfera S^2 los vertices de Y son unitarios y las aristas son arcos de circulo maximo.
    """
    validar_positivo("delta", delta)
    validar_entero_minimo("samples", samples, 1)
    if y.dim != 3:
        raise InvalidInputError("tube_volume requiere vertices en R^3")
    a, b = y.segments
    trozos = [CHUNK] * (samples // CHUNK) + ([samples % CHUNK] if samples % CHUNK else [])
    flujos = split(rng, len(trozos))

    if ambient == "sphere":
        esfera = ms.ModelSpace.sphere(2)
        if not np.allclose(np.linalg.norm(y.vertices, axis=1), 1.0, atol=1e-12):
            raise InvalidInputError("Los vertices deben estar en la esfera unitaria")
        total_vol = ms.volume(esfera)
        n = 2

        def contar(par):
            k, flujo = par
            x = ms.sample_uniform(esfera, flujo, size=k)
            return int(np.sum(_sphere_arc_distance(x, a, b).min(axis=1) <= delta))
    elif ambient == "r3":
        lo = y.vertices.min(axis=0) - delta
        hi = y.vertices.max(axis=0) + delta
        total_vol = float(np.prod(hi - lo))
        n = 3

        def contar(par):
            k, flujo = par
            x = lo + flujo.random((k, 3)) * (hi - lo)
            return int(np.sum(_segment_distance(x, a, b).min(axis=1) <= delta))
    else:
        raise InvalidInputError(f"Ambiente desconocido: {ambient}")

    dentro = sum(map_ordered(contar, list(zip(trozos, flujos))))
    p = dentro / samples
    vol = total_vol * p
    se = total_vol * math.sqrt(p * (1.0 - p) / samples)
    mink = vol / (delta ** (n - 1) * ms.euclidean_ball_volume(n - 1))
    logger.info("Tubo %s delta=%g: vol %.6g +- %.2g, Mink %.6g", ambient, delta, vol, se, mink)
    return TubeEstimate(descriptor, float(delta), ambient, int(samples), float(vol), float(se), float(mink))


def equator(m: int = 256) -> Polyline:
    t = 2.0 * np.pi * np.arange(m) / m
    return Polyline(np.stack([np.cos(t), np.sin(t), np.zeros(m)], axis=1))


# =========================
# BARRIDOS DE S^2
# =========================
def _harmonics(x: np.ndarray) -> np.ndarray:
    """Perturbaciones: armonicos de grado 1 (x1, x2) y los cinco de grado 2."""
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack([
        x1, x2,
        x1 * x2, x2 * x3, x1 * x3,
        (x1 ** 2 - x2 ** 2) / 2.0,
        (3.0 * x3 ** 2 - 1.0) / (2.0 * math.sqrt(3.0)),
    ], axis=-1)


N_HARMONICS = 7


def _sphere_point(theta, phi) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


class LatitudeFamily:
    """Niveles de f_c(x) = x3 + sum c_k Y_k(x) en una grilla (theta, phi) de centros de celda."""

    def __init__(self, coef, m: int = 48, bound: float = settings.WAIST_COEF_BOUND, check: bool = True):
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (N_HARMONICS,):
            raise InvalidFamilyError(f"Se esperaban {N_HARMONICS} coeficientes")
        if np.linalg.norm(coef) > bound * (1 + 1e-12):
            raise InvalidFamilyError(f"|c| = {np.linalg.norm(coef):.4f} excede la cota {bound}")
        self.coef = coef
        self.m = m
        th = (np.arange(m) + 0.5) / m * np.pi
        ph = (np.arange(2 * m) + 0.5) / (2 * m) * 2.0 * np.pi
        self.theta, self.phi = np.meshgrid(th, ph, indexing="ij")
        self.values = self.f(_sphere_point(self.theta, self.phi))
        if check and not self.two_critical_points():
            raise InvalidFamilyError("La perturbacion no conserva exactamente un maximo y un minimo")

    def f(self, x: np.ndarray) -> np.ndarray:
        return x[..., 2] + _harmonics(x) @ self.coef

    def _extremos(self, signo: float) -> int:
        v = signo * self.values
        relleno = np.pad(v, ((1, 1), (0, 0)), mode="constant", constant_values=-np.inf)
        relleno = np.concatenate([relleno[:, -1:], relleno, relleno[:, :1]], axis=1)
        vecinos = ndimage.maximum_filter(relleno, size=3, mode="constant", cval=-np.inf)[1:-1, 1:-1]
        es_max = v >= vecinos
        etiquetas, n = ndimage.label(es_max, structure=np.ones((3, 3)))
        # unir etiquetas a traves de la costura phi = 0
        padre = list(range(n + 1))

        def raiz(k):
            while padre[k] != k:
                k = padre[k]
            return k

        for i in range(self.m):
            a, b = etiquetas[i, 0], etiquetas[i, -1]
            if a and b:
                padre[raiz(a)] = raiz(b)
        return len({raiz(k) for k in range(1, n + 1)})

    def two_critical_points(self) -> bool:
        return self._extremos(1.0) == 1 and self._extremos(-1.0) == 1

    def _secant(self, theta, phi, varia_theta, t, pasos: int = 4):
        """Refina puntos de cruce sobre aristas de la grilla resolviendo f = t por secante."""
        paso = np.pi / self.m
        a = np.where(varia_theta, theta, phi)
        b = a + 1e-3 * paso

        def g(s):
            th = np.where(varia_theta, s, theta)
            ph = np.where(varia_theta, phi, s)
            return self.f(_sphere_point(th, ph)) - t

        ga, gb = g(a), g(b)
        for _ in range(pasos):
            den = gb - ga
            ok = den != 0
            c = np.where(ok, b - gb * (b - a) / np.where(ok, den, 1.0), b)
            a, ga = b, gb
            b, gb = c, g(c)
        th = np.where(varia_theta, b, theta)
        ph = np.where(varia_theta, phi, b)
        return _sphere_point(th, ph)

    def level_length(self, t: float) -> float:
        segs = crossing_segments(self.values - t)
        if len(segs) == 0:
            return 0.0
        tope = (self.m - 0.5) / self.m
        segs = segs[np.all(segs[..., 0] <= tope + 1e-12, axis=1)]
        if len(segs) == 0:
            return 0.0
        pts = segs.reshape(-1, 2)
        filas = pts[:, 0] * self.m - 0.5
        varia_theta = np.abs(filas - np.round(filas)) > 1e-9
        p = self._secant(pts[:, 0] * np.pi, pts[:, 1] * 2.0 * np.pi, varia_theta, t).reshape(-1, 2, 3)
        u, v = p[:, 0], p[:, 1]
        arcos = 2.0 * np.arctan2(np.linalg.norm(u - v, axis=1), np.linalg.norm(u + v, axis=1))
        return float(arcos.sum())

    def max_level_length(self, scan: int = 25) -> tuple:
        lo, hi = float(self.values.min()), float(self.values.max())
        niveles = np.linspace(lo, hi, scan + 2)[1:-1]
        largos = np.array([self.level_length(t) for t in niveles])
        k = int(np.argmax(largos))
        a = niveles[max(k - 1, 0)]
        b = niveles[min(k + 1, len(niveles) - 1)]
        res = minimize_scalar(lambda t: -self.level_length(t), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-10})
        if -res.fun >= largos[k]:
            return float(-res.fun), float(res.x)
        return float(largos[k]), float(niveles[k])


@dataclass
class SweepoutResult:
    minmax: float
    coefficients: np.ndarray
    level: float
    restarts: int
    passed: bool
    curve: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"minmax_length": self.minmax, "coefficients": self.coefficients.tolist(), "level": self.level,
                "restarts": self.restarts, "lower_bound": 2.0 * math.pi, "pass": self.passed}


def sweepout_waist_upper(rng: np.random.Generator, restarts: int = settings.WAIST_RESTARTS,
                         bound: float = settings.WAIST_COEF_BOUND, m: int = 48, maxfev: int = 60,
                         tol: float = 0.02) -> SweepoutResult:
    """
    min sobre c (|c| <= bound) del maximo largo de nivel de f_c. El reinicio 0 parte
    de la familia de latitudes pura (c = 0).
    """
    validar_entero_minimo("restarts", restarts, 1)

    def objetivo(c):
        norma = np.linalg.norm(c)
        if norma > bound:
            c = c * (bound / norma)
        try:
            return LatitudeFamily(c, m, bound).max_level_length()[0]
        except InvalidFamilyError:
            return math.inf

    flujos = split(rng, restarts)

    def uno(k):
        if k == 0:
            c0 = np.zeros(N_HARMONICS)
        else:
            c0 = flujos[k].standard_normal(N_HARMONICS)
            c0 *= flujos[k].uniform(0.0, bound) / np.linalg.norm(c0)
        res = minimize(objetivo, c0, method="Nelder-Mead",
                       options={"maxfev": maxfev, "initial_simplex": c0 + np.vstack([np.zeros(N_HARMONICS),
                                                                                      0.05 * bound * np.eye(N_HARMONICS)])})
        c = res.x
        if np.linalg.norm(c) > bound:
            c = c * (bound / np.linalg.norm(c))
        valor = objetivo(c)
        return (valor, c) if valor <= objetivo(c0) else (objetivo(c0), c0)

    salidas = map_ordered(uno, range(restarts))
    mejor = min(range(restarts), key=lambda k: (salidas[k][0], k))
    valor, c = salidas[mejor]
    fam = LatitudeFamily(c, m, bound)
    largo, nivel = fam.max_level_length()
    paso = largo >= 2.0 * math.pi * (1.0 - tol / (2.0 * math.pi))
    logger.info("Barrido: min-max %.9f (2*pi = %.9f), reinicio %d", largo, 2.0 * math.pi, mejor)
    return SweepoutResult(float(largo), c, nivel, restarts, bool(paso), [s[0] for s in salidas])

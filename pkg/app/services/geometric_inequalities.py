"""
Numeros de enlace de poligonales cerradas en R^3, grado del mapa de Gauss y la
desigualdad de Gehring length(W) >= 2*pi*dist(W, W').
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from app.config import settings
from app.core.errors import DegenerateLinkError, InvalidInputError, NotApplicableError, SearchFailureError

logger = logging.getLogger(__name__)

DISJOINT_TOL = 1e-9
PROJECTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise InvalidInputError(f"Los vertices deben tener forma (n, 2) o (n, 3), llego {v.shape}")
        minimo = 3 if self.closed else 2
        if v.shape[0] < minimo:
            raise InvalidInputError(f"Se requieren al menos {minimo} vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("Vertices no finitos")
        a, b = self._ends(v)
        if np.any(np.linalg.norm(b - a, axis=1) == 0):
            raise InvalidInputError("La poligonal tiene aristas de longitud cero")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def _ends(self, v):
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def segments(self) -> tuple:
        return self._ends(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.segments[0])

    @property
    def length(self) -> float:
        a, b = self.segments
        return float(np.linalg.norm(b - a, axis=1).sum())

    def transformed(self, rotation=None, shift=None, scale: float = 1.0) -> "Polyline":
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=float).T
        if shift is not None:
            v = v + np.asarray(shift, dtype=float)
        return Polyline(v, self.closed)

    def rolled(self, k: int) -> "Polyline":
        return Polyline(np.roll(self.vertices, k, axis=0), self.closed)

    def reversed(self) -> "Polyline":
        return Polyline(self.vertices[::-1], self.closed)


# =========================
# GENERADORES DE CURVAS
# =========================
def circle_polygon(m: int, radius: float = 1.0, center=(0.0, 0.0, 0.0), plane: str = "xy") -> Polyline:
    t = 2.0 * np.pi * np.arange(m) / m
    c, s = radius * np.cos(t), radius * np.sin(t)
    cero = np.zeros(m)
    ejes = {"xy": (c, s, cero), "xz": (c, cero, s), "yz": (cero, c, s)}
    if plane not in ejes:
        raise InvalidInputError(f"Plano desconocido: {plane}")
    return Polyline(np.stack(ejes[plane], axis=1) + np.asarray(center, dtype=float))


def hopf_link(m: int = 64) -> tuple:
    """Dos circulos unitarios en planos ortogonales, cada uno por el centro del otro."""
    return circle_polygon(m, plane="xy"), circle_polygon(m, center=(1.0, 0.0, 0.0), plane="xz")


def torus_link(p: int = 2, q: int = 4, m: int = 128, big: float = 2.0, small: float = 1.0) -> list:
    """Enlace toroidal T(p, q): gcd(p, q) componentes sobre un toro de revolucion."""
    c = math.gcd(p, q)
    pp, qq = p // c, q // c
    if qq == 0:
        raise InvalidInputError("q debe ser no nulo")
    t = 2.0 * np.pi * np.arange(m) / m
    componentes = []
    for j in range(c):
        theta = pp * t + 2.0 * np.pi * j / (c * qq)
        phi = qq * t
        r = big + small * np.cos(phi)
        componentes.append(Polyline(np.stack([r * np.cos(theta), r * np.sin(theta), small * np.sin(phi)], axis=1)))
    return componentes


def far_axis_loop(radius: float = 1e3) -> Polyline:
    """El eje z cerrado por un rectangulo lejano en el semiplano x > 0."""
    return Polyline(np.array([
        [0.0, 0.0, -radius],
        [0.0, 0.0, radius],
        [radius, 0.0, radius],
        [radius, 0.0, -radius],
    ]))


def random_closed_curve(rng: np.random.Generator, m: int = 128, harmonics: int = 4,
                        amplitude: float = 0.3, dim: int = 2, center=None) -> Polyline:
    """Curva estrellada r(t) = 1 + sum a_k cos(k t + fase_k), con una perturbacion en z si dim = 3."""
    t = 2.0 * np.pi * np.arange(m) / m
    a = rng.uniform(-1.0, 1.0, harmonics) * amplitude / np.arange(1, harmonics + 1)
    fase = rng.uniform(0.0, 2.0 * np.pi, harmonics)
    r = 1.0 + sum(a[k] * np.cos((k + 1) * t + fase[k]) for k in range(harmonics))
    r = np.clip(r, 0.2, None)
    pts = [r * np.cos(t), r * np.sin(t)]
    if dim == 3:
        pts.append(amplitude * np.sin(2 * t + rng.uniform(0.0, 2.0 * np.pi)))
    v = np.stack(pts, axis=1)
    if center is not None:
        v = v + np.asarray(center, dtype=float)
    return Polyline(v)


def perturbed(curve: Polyline, rng: np.random.Generator, sigma: float) -> Polyline:
    return Polyline(curve.vertices + rng.normal(0.0, sigma, curve.vertices.shape), curve.closed)


# =========================
# DISTANCIAS ENTRE SEGMENTOS
# =========================
def segment_distances(a0, a1, b0, b1) -> np.ndarray:
    """Distancia minima entre todos los pares de segmentos (n x m)."""
    p1, q1 = a0[:, None, :], a1[:, None, :]
    p2, q2 = b0[None, :, :], b1[None, :, :]
    d1, d2, r = q1 - p1, q2 - p2, p1 - p2
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    den = a * e - b * b
    s = np.where(den > 1e-300, np.clip((b * f - c * e) / np.where(den > 1e-300, den, 1.0), 0.0, 1.0), 0.0)
    t = (b * s + f) / e
    s = np.where(t < 0, np.clip(-c / a, 0.0, 1.0), np.where(t > 1, np.clip((b - c) / a, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)
    diff = (p1 + s[..., None] * d1) - (p2 + t[..., None] * d2)
    return np.linalg.norm(diff, axis=-1)


def curve_distance(w: Polyline, w2: Polyline) -> float:
    a0, a1 = w.segments
    b0, b1 = w2.segments
    return float(segment_distances(a0, a1, b0, b1).min())


def _check_link_pair(w: Polyline, w2: Polyline) -> float:
    if w.dim != 3 or w2.dim != 3:
        raise InvalidInputError("El numero de enlace requiere curvas en R^3")
    if not (w.closed and w2.closed):
        raise InvalidInputError("El numero de enlace requiere curvas cerradas")
    d = curve_distance(w, w2)
    if d <= DISJOINT_TOL:
        raise DegenerateLinkError(f"Las curvas se intersecan (distancia {d:.3e})")
    return d


# =========================
# NUMERO DE ENLACE
# =========================
def _solid_angle_sum(w: Polyline, w2: Polyline) -> float:
    """Suma exacta de angulos solidos por par de segmentos (formula de Klenin-Langowski)."""
    p1, p2 = w.segments
    p3, p4 = w2.segments
    p1, p2 = p1[:, None, :], p2[:, None, :]
    p3, p4 = p3[None, :, :], p4[None, :, :]
    r13, r14, r23, r24 = p3 - p1, p4 - p1, p3 - p2, p4 - p2
    r12, r34 = p2 - p1, p4 - p3

    def unit(v):
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        return np.divide(v, n, out=np.zeros_like(v), where=n > 0)

    n1 = unit(np.cross(r13, r14))
    n2 = unit(np.cross(r14, r24))
    n3 = unit(np.cross(r24, r23))
    n4 = unit(np.cross(r23, r13))

    def asin_dot(a, b):
        return np.arcsin(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))

    omega = asin_dot(n1, n2) + asin_dot(n2, n3) + asin_dot(n3, n4) + asin_dot(n4, n1)
    signo = np.sign(np.sum(np.cross(r34, r12) * r13, axis=-1))
    return float(np.sum(omega * signo) / (4.0 * np.pi))


def _cross2(x, y):
    return x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]


def _plane_basis(v: np.ndarray) -> tuple:
    v = v / np.linalg.norm(v)
    aux = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(v, aux)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return v, e1, e2


def projected_crossings(w: Polyline, w2: Polyline, direction) -> list | None:
    """
    Cruces de la proyeccion sobre el plano ortogonal a `direction` (visto desde +direction).
    Devuelve [(signo, w_arriba)], o None si la proyeccion es degenerada.
    """
    v, e1, e2 = _plane_basis(np.asarray(direction, dtype=float))
    a0, a1 = w.segments
    b0, b1 = w2.segments

    def plano(x):
        return np.stack([x @ e1, x @ e2], axis=-1)

    A0, dA = plano(a0), plano(a1 - a0)
    B0, dB = plano(b0), plano(b1 - b0)
    den = _cross2(dA[:, None, :], dB[None, :, :])
    delta = B0[None, :, :] - A0[:, None, :]
    escala = np.linalg.norm(dA, axis=-1)[:, None] * np.linalg.norm(dB, axis=-1)[None, :]
    paralelo = np.abs(den) <= PROJECTION_TOL * np.maximum(escala, 1e-300)
    den_seguro = np.where(paralelo, 1.0, den)
    s = _cross2(delta, dB[None, :, :]) / den_seguro
    t = _cross2(delta, dA[:, None, :]) / den_seguro

    cerca = (s > -PROJECTION_TOL) & (s < 1 + PROJECTION_TOL) & (t > -PROJECTION_TOL) & (t < 1 + PROJECTION_TOL)
    if np.any(paralelo):
        # segmentos paralelos proyectados que se tocan hacen la proyeccion no generica
        dist = segment_distances(
            np.pad(A0, ((0, 0), (0, 1))), np.pad(A0 + dA, ((0, 0), (0, 1))),
            np.pad(B0, ((0, 0), (0, 1))), np.pad(B0 + dB, ((0, 0), (0, 1))),
        )
        if np.any(paralelo & (dist <= PROJECTION_TOL * (1 + escala))):
            return None
        cerca &= ~paralelo
    borde = cerca & ((np.abs(s) <= PROJECTION_TOL) | (np.abs(s - 1) <= PROJECTION_TOL)
                     | (np.abs(t) <= PROJECTION_TOL) | (np.abs(t - 1) <= PROJECTION_TOL))
    if np.any(borde):
        return None

    ii, jj = np.nonzero(cerca)
    cruces = []
    for i, j in zip(ii, jj):
        pa = a0[i] + s[i, j] * (a1[i] - a0[i])
        pb = b0[j] + t[i, j] * (b1[j] - b0[j])
        ha, hb = pa @ v, pb @ v
        if abs(ha - hb) <= DISJOINT_TOL:
            return None
        w_arriba = ha > hb
        over, under = (dA[i], dB[j]) if w_arriba else (dB[j], dA[i])
        cruces.append((int(np.sign(_cross2(over, under))), bool(w_arriba)))
    return cruces


def crossing_linking_number(w: Polyline, w2: Polyline, rng: np.random.Generator | None = None) -> int:
    """Mitad de la suma de signos de cruces de una proyeccion generica; reproyecta si es degenerada."""
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    direccion = np.array([0.3141592653589793, 0.2718281828459045, 0.9101])
    for _ in range(settings.GAUSS_REDRAWS):
        cruces = projected_crossings(w, w2, direccion)
        if cruces is not None:
            total = sum(sg for sg, _ in cruces)
            if total % 2:
                raise SearchFailureError("Conteo impar de cruces: proyeccion inconsistente")
            return total // 2
        direccion = rng.standard_normal(3)
    raise SearchFailureError("No se encontro una proyeccion generica")


def linking_number(w: Polyline, w2: Polyline) -> int:
    """Numero de enlace por angulo solido exacto, verificado contra el conteo de cruces."""
    _check_link_pair(w, w2)
    gauss = _solid_angle_sum(w, w2)
    entero = int(round(gauss))
    if abs(gauss - entero) > 1e-6:
        raise SearchFailureError(f"La suma de angulos solidos no es entera ({gauss:.9f})")
    cruces = crossing_linking_number(w, w2)
    if cruces != entero:
        raise SearchFailureError(f"Metodos discrepan: angulo solido {entero}, cruces {cruces}")
    return entero


def _gauss_preimages(w: Polyline, w2: Polyline, v: np.ndarray) -> list | None:
    """
    Preimagenes de v por (s, t) -> F/|F| con F = w(s) - w'(t), parche por parche:
    s dA - t dB - lam v = b0 - a0 con lam > 0. Devuelve el signo del jacobiano de
    cada una, o None si v no es un valor regular.
    """
    a0, a1 = w.segments
    b0, b1 = w2.segments
    dA, dB = a1 - a0, b1 - b0
    na, nb = len(a0), len(b0)
    M = np.empty((na, nb, 3, 3))
    M[..., 0] = dA[:, None, :]
    M[..., 1] = -dB[None, :, :]
    M[..., 2] = -v
    rhs = b0[None, :, :] - a0[:, None, :]
    det = np.linalg.det(M)
    escala = np.linalg.norm(dA, axis=-1)[:, None] * np.linalg.norm(dB, axis=-1)[None, :] * np.linalg.norm(v)
    singular = np.abs(det) <= PROJECTION_TOL * escala
    M[singular] = np.eye(3)
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    s, t, lam = sol[..., 0], sol[..., 1], sol[..., 2]
    dentro = (s > -PROJECTION_TOL) & (s < 1 + PROJECTION_TOL) & (t > -PROJECTION_TOL) & (t < 1 + PROJECTION_TOL)
    dentro &= lam > 0
    if np.any(dentro & singular):
        return None
    borde = dentro & ((np.abs(s) <= PROJECTION_TOL) | (np.abs(s - 1) <= PROJECTION_TOL)
                      | (np.abs(t) <= PROJECTION_TOL) | (np.abs(t - 1) <= PROJECTION_TOL))
    if np.any(borde):
        return None
    # det[dA, -dB, -v] = det[dA, dB, v]: orientacion del toro (w', w)
    return [int(np.sign(d)) for d in det[dentro & ~singular]]


def gauss_map_degree(w: Polyline, w2: Polyline, rng: np.random.Generator | None = None) -> int:
    """
    Grado de (w, w') -> (w - w')/|w - w'| contando con signo las preimagenes de un
    valor regular v, resolviendo en cada par de segmentos. El toro de parametros se
    orienta como (w', w).
    """
    _check_link_pair(w, w2)
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    for intento in range(settings.GAUSS_REDRAWS):
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        signos = _gauss_preimages(w, w2, v)
        if signos is None:
            logger.debug("Valor no regular en el intento %d, se vuelve a sortear", intento)
            continue
        return int(sum(signos))
    raise SearchFailureError(f"Sin valor regular tras {settings.GAUSS_REDRAWS} intentos")


# =========================
# GEHRING
# =========================
@dataclass
class GehringReport:
    distance: float
    length: float
    bound: float
    tolerance: float
    linking: int
    passed: bool

    def to_dict(self) -> dict:
        return {"d": self.distance, "length": self.length, "bound": self.bound,
                "tol_discr": self.tolerance, "linking_number": self.linking, "pass": self.passed}


def polygon_shortfall(m: int) -> float:
    """Defecto relativo de un m-gono inscrito: 1 - (m/pi) sin(pi/m)."""
    return 1.0 - (m / math.pi) * math.sin(math.pi / m)


def gehring_check(w: Polyline, w2: Polyline) -> GehringReport:
    """length(W) >= 2*pi*d*(1 - tol) para curvas enlazadas."""
    lk = linking_number(w, w2)
    if lk == 0:
        raise NotApplicableError("Las curvas no estan enlazadas")
    d = curve_distance(w, w2)
    tol = polygon_shortfall(w.n_edges)
    cota = 2.0 * math.pi * d
    paso = w.length >= cota * (1.0 - tol) - 1e-12 * cota
    logger.info("Gehring: largo %.9f, 2*pi*d %.9f, tol %.3e, pasa=%s", w.length, cota, tol, paso)
    return GehringReport(d, w.length, cota, tol, lk, bool(paso))

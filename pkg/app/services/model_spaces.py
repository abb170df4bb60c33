"""
Espacios modelo: intervalo, circulo, toro plano, caja y esfera unitaria.

Convenciones de coordenadas (el ultimo eje de cada arreglo son las coordenadas):
- intervalo: x en [0, L]
- circulo: posicion por longitud de arco en [0, L)
- toro: coordenadas fraccionarias u en [0,1)^d; posicion cartesiana u @ B
  (las filas de B son los vectores de la red). Los vectores tangentes son cartesianos.
- caja: coordenadas cartesianas en [0, lado_k]
- esfera S^d: vector unitario en R^{d+1}
Todas las operaciones aceptan lotes y hacen broadcasting sobre los ejes iniciales.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from app.core.errors import InvalidInputError, UnsupportedDimensionError

KINDS = ("interval", "circle", "torus", "box", "sphere")


@dataclass(frozen=True, eq=False)
class ModelSpace:
    kind: str
    dim: int
    length: float = 0.0
    basis: np.ndarray | None = None
    sides: np.ndarray | None = None
    _reduced: np.ndarray | None = field(default=None, repr=False)

    # =========================
    # CONSTRUCTORES
    # =========================
    @classmethod
    def interval(cls, length: float = 1.0) -> "ModelSpace":
        if not length > 0:
            raise InvalidInputError(f"Longitud del intervalo debe ser > 0 ({length})")
        return cls("interval", 1, length=float(length))

    @classmethod
    def circle(cls, length: float = 1.0) -> "ModelSpace":
        if not length > 0:
            raise InvalidInputError(f"Longitud del circulo debe ser > 0 ({length})")
        return cls("circle", 1, length=float(length))

    @classmethod
    def torus(cls, basis) -> "ModelSpace":
        basis = np.array(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise InvalidInputError(f"La base del toro debe ser d x d (forma {basis.shape})")
        if abs(np.linalg.det(basis)) < 1e-14:
            raise InvalidInputError("La base del toro es singular")
        basis.setflags(write=False)
        d = basis.shape[0]
        reduced = _reduce_basis(basis)
        reduced.setflags(write=False)
        return cls("torus", d, basis=basis, _reduced=reduced)

    @classmethod
    def unit_torus(cls, d: int = 2) -> "ModelSpace":
        return cls.torus(np.eye(d))

    @classmethod
    def hexagonal_torus(cls, area: float = None) -> "ModelSpace":
        base = np.array([[1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
        if area is not None:
            base = base * math.sqrt(area / (math.sqrt(3.0) / 2.0))
        return cls.torus(base)

    @classmethod
    def box(cls, sides) -> "ModelSpace":
        sides = np.array(sides, dtype=float).reshape(-1)
        if sides.size == 0 or np.any(sides <= 0):
            raise InvalidInputError(f"Los lados de la caja deben ser > 0 ({sides})")
        sides.setflags(write=False)
        return cls("box", sides.size, sides=sides)

    @classmethod
    def sphere(cls, d: int = 2) -> "ModelSpace":
        if d not in (1, 2, 3):
            raise UnsupportedDimensionError(f"Esfera soportada solo en d in {{1,2,3}} (d={d})")
        return cls("sphere", d)

    # =========================
    # PROPIEDADES
    # =========================
    @property
    def intrinsic_dimension(self) -> int:
        return self.dim

    @property
    def coord_dim(self) -> int:
        if self.kind in ("interval", "circle"):
            return 1
        if self.kind == "sphere":
            return self.dim + 1
        return self.dim

    @property
    def tangent_dim(self) -> int:
        return self.coord_dim

    @property
    def length_scale(self) -> float:
        return volume(self) ** (1.0 / self.dim)

    @property
    def injectivity_bound(self) -> float:
        if self.kind == "circle":
            return self.length / 2.0
        if self.kind == "torus":
            return float(np.min(np.linalg.norm(self._reduced, axis=1))) / 2.0
        if self.kind == "sphere":
            return math.pi
        return math.inf

    def describe(self) -> dict:
        info = {"kind": self.kind, "dim": self.dim}
        if self.kind in ("interval", "circle"):
            info["length"] = self.length
        elif self.kind == "torus":
            info["basis"] = self.basis.tolist()
        elif self.kind == "box":
            info["sides"] = self.sides.tolist()
        return info


def _reduce_basis(basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] == 2:
        b1, b2 = gauss_reduce(basis[0], basis[1])
        return np.array([b1, b2])
    return basis.copy()


def gauss_reduce(b1, b2):
    """Reduccion de Lagrange-Gauss de una base del plano: |b1| <= |b2| y |b1.b2| <= |b1|^2/2."""
    b1 = np.array(b1, dtype=float)
    b2 = np.array(b2, dtype=float)
    if b1 @ b1 > b2 @ b2:
        b1, b2 = b2, b1
    while True:
        mu = round(float(b1 @ b2) / float(b1 @ b1))
        b2 = b2 - mu * b1
        if b2 @ b2 < b1 @ b1:
            b1, b2 = b2, b1
        else:
            return b1, b2


# =========================
# VALIDACION DE PUNTOS
# =========================
def as_points(space: ModelSpace, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.shape[-1] != space.coord_dim:
        raise InvalidInputError(
            f"Dimension de punto {p.shape[-1]} no corresponde a {space.kind} (esperado {space.coord_dim})"
        )
    return p


def is_valid_point(space: ModelSpace, p, tol: float = 1e-12) -> bool:
    p = as_points(space, p)
    if not np.all(np.isfinite(p)):
        return False
    k = space.kind
    if k == "interval":
        return bool(np.all((p >= 0) & (p <= space.length)))
    if k == "circle":
        return bool(np.all((p >= 0) & (p < space.length)))
    if k == "torus":
        return bool(np.all((p >= 0) & (p < 1)))
    if k == "box":
        return bool(np.all((p >= 0) & (p <= space.sides)))
    return bool(np.all(np.abs(np.linalg.norm(p, axis=-1) - 1.0) <= tol))


def canonical(space: ModelSpace, p) -> np.ndarray:
    """Representante canonico: envuelve circulo/toro, normaliza la esfera."""
    p = as_points(space, p)
    k = space.kind
    if k == "circle":
        return _wrap(p, space.length)
    if k == "torus":
        return _wrap(p, 1.0)
    if k == "sphere":
        return p / np.linalg.norm(p, axis=-1, keepdims=True)
    return p


def _wrap(x, period):
    y = np.mod(x, period)
    return np.where(y >= period, 0.0, y)


def _reflect(x, upper):
    y = np.mod(x, 2.0 * upper)
    return np.where(y > upper, 2.0 * upper - y, y)


# =========================
# METRICA
# =========================
def _torus_min_vector(space: ModelSpace, diff_frac: np.ndarray) -> np.ndarray:
    """Vector cartesiano mas corto en la clase de `diff_frac` modulo la red."""
    reduced = space._reduced
    cart = diff_frac @ space.basis
    coef = cart @ np.linalg.inv(reduced)
    coef = coef - np.round(coef)
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=space.dim)), dtype=float)
    cand = (coef[..., None, :] + offsets) @ reduced
    idx = np.argmin(np.einsum("...ij,...ij->...i", cand, cand), axis=-1)
    return np.take_along_axis(cand, idx[..., None, None], axis=-2)[..., 0, :]


def distance(space: ModelSpace, p, q):
    """Distancia geodesica; hace broadcasting sobre lotes."""
    p = as_points(space, p)
    q = as_points(space, q)
    k = space.kind
    if k == "interval":
        return np.abs(p[..., 0] - q[..., 0])
    if k == "circle":
        d = np.mod(np.abs(p[..., 0] - q[..., 0]), space.length)
        return np.minimum(d, space.length - d)
    if k == "box":
        return np.linalg.norm(p - q, axis=-1)
    if k == "torus":
        return np.linalg.norm(_torus_min_vector(space, q - p), axis=-1)
    # 2*atan2(|p-q|, |p+q|) es estable cerca de 0 y de pi
    return 2.0 * np.arctan2(np.linalg.norm(p - q, axis=-1), np.linalg.norm(p + q, axis=-1))


def pairwise_distances(space: ModelSpace, pts, other=None) -> np.ndarray:
    pts = as_points(space, pts)
    other = pts if other is None else as_points(space, other)
    return distance(space, pts[..., :, None, :], other[..., None, :, :])


def log_map(space: ModelSpace, p, q) -> np.ndarray:
    """Vector tangente en p que apunta a q con longitud dist(p, q)."""
    p = as_points(space, p)
    q = as_points(space, q)
    k = space.kind
    if k in ("interval", "box"):
        return q - p
    if k == "circle":
        half = space.length / 2.0
        return np.mod(q - p + half, space.length) - half
    if k == "torus":
        return _torus_min_vector(space, q - p)
    w = q - np.sum(p * q, axis=-1, keepdims=True) * p
    nw = np.linalg.norm(w, axis=-1, keepdims=True)
    ang = distance(space, p, q)[..., None]
    return np.where(nw > 0, w / np.where(nw > 0, nw, 1.0) * ang, 0.0)


def volume(space: ModelSpace) -> float:
    k = space.kind
    if k in ("interval", "circle"):
        return space.length
    if k == "torus":
        return float(abs(np.linalg.det(space.basis)))
    if k == "box":
        return float(np.prod(space.sides))
    return sphere_area(space.dim)


def euclidean_ball_volume(k: int) -> float:
    """beta_k = pi^{k/2} / Gamma(k/2 + 1)."""
    if k < 0:
        raise InvalidInputError(f"k debe ser >= 0 ({k})")
    return float(math.pi ** (k / 2.0) / gamma(k / 2.0 + 1.0))


def sphere_area(d: int) -> float:
    """Volumen de la esfera unitaria S^d."""
    return float(2.0 * math.pi ** ((d + 1) / 2.0) / gamma((d + 1) / 2.0))


# =========================
# MUESTREO Y GEODESICAS
# =========================
def sample_uniform(space: ModelSpace, rng: np.random.Generator, size=None) -> np.ndarray:
    shape = () if size is None else (size,) if isinstance(size, int) else tuple(size)
    k = space.kind
    if k in ("interval", "circle"):
        x = rng.uniform(0.0, space.length, size=shape + (1,))
        return _wrap(x, space.length) if k == "circle" else x
    if k == "torus":
        return _wrap(rng.random(shape + (space.dim,)), 1.0)
    if k == "box":
        return rng.random(shape + (space.dim,)) * space.sides
    g = rng.standard_normal(shape + (space.dim + 1,))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def random_tangent(space: ModelSpace, p, rng: np.random.Generator) -> np.ndarray:
    p = as_points(space, p)
    v = rng.standard_normal(p.shape)
    if space.kind == "sphere":
        v = v - np.sum(v * p, axis=-1, keepdims=True) * p
    return v


def geodesic_step(space: ModelSpace, p, direction, step=1.0) -> np.ndarray:
    """
    Avanza `step * |direction|` (acotado por el radio de inyectividad) a lo largo
    de la geodesica. El toro y el circulo envuelven; intervalo y caja reflejan.
    """
    p = as_points(space, p)
    v = np.asarray(direction, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.shape[-1] != space.tangent_dim:
        raise InvalidInputError(f"Direccion de dimension {v.shape[-1]} invalida para {space.kind}")
    if space.kind == "sphere":
        v = v - np.sum(v * p, axis=-1, keepdims=True) * p
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise InvalidInputError("La direccion del paso geodesico es nula")
    step = np.asarray(step, dtype=float)
    if step.ndim > 0:
        step = step[..., None]
    dist = np.minimum(norm * step, space.injectivity_bound)
    unit = v / norm
    k = space.kind
    if k == "interval":
        return _reflect(p + unit * dist, space.length)
    if k == "box":
        return _reflect(p + unit * dist, space.sides)
    if k == "circle":
        return _wrap(p + unit * dist, space.length)
    if k == "torus":
        return _wrap(p + (unit * dist) @ np.linalg.inv(space.basis), 1.0)
    out = np.cos(dist) * p + np.sin(dist) * unit
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def tangent_basis(space: ModelSpace, p) -> np.ndarray:
    """Base ortonormal del espacio tangente en p como columnas (coord_dim x dim)."""
    p = as_points(space, p)
    if space.kind != "sphere":
        return np.eye(space.coord_dim)
    # complemento ortogonal de p via SVD
    _, _, vt = np.linalg.svd(p.reshape(1, -1))
    return vt[1:].T


# =========================
# SISTOLE DEL TORO
# =========================
def torus_systole(space: ModelSpace) -> float:
    if space.kind != "torus" or space.dim != 2:
        raise UnsupportedDimensionError("La sistole se calcula solo para toros planos de dimension 2")
    b1, _ = gauss_reduce(space.basis[0], space.basis[1])
    return float(math.sqrt(b1 @ b1))


def loewner_ratio(space: ModelSpace) -> float:
    """sistole^2 / area; el maximo 2/sqrt(3) lo alcanza la red hexagonal."""
    s = torus_systole(space)
    return s * s / volume(space)

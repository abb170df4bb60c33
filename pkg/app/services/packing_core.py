"""
Configuraciones, separacion rho, energias de empaque, criterio de empaque por bolas,
metrica cociente (cuello de botella) y numeros de cubrimiento/empaque.
"""
import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from app.core.errors import InvalidInputError, SingularConfigurationError
from app.core.validator import validar_n_puntos, validar_positivo, validar_radios
from app.services import model_spaces as ms

BRUTE_FORCE_MAX_N = 8


@dataclass(frozen=True, eq=False)
class Configuration:
    space: ms.ModelSpace
    points: np.ndarray

    def __post_init__(self):
        pts = ms.as_points(self.space, self.points)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InvalidInputError(f"Una configuracion es una lista de N >= 1 puntos (forma {pts.shape})")
        if not ms.is_valid_point(self.space, pts, tol=1e-12):
            raise InvalidInputError("Hay puntos fuera del espacio modelo")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, space: ms.ModelSpace, points) -> "Configuration":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1 and space.coord_dim == 1:
            pts = pts[:, None]
        return cls(space, ms.canonical(space, pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def permuted(self, perm) -> "Configuration":
        return Configuration(self.space, self.points[np.asarray(perm)])


class EnergyKind(str, Enum):
    RECIPROCAL = "reciprocal"
    NEGATIVE = "negative"
    NEGLOG = "neglog"


# =========================
# SEPARACION Y ENERGIA
# =========================
def separations(space: ms.ModelSpace, batch: np.ndarray) -> np.ndarray:
    """rho de un lote de configuraciones con forma (..., N, c)."""
    d = ms.pairwise_distances(space, batch)
    n = d.shape[-1]
    d = np.where(np.eye(n, dtype=bool), np.inf, d)
    return d.min(axis=(-2, -1))


def separation(c: Configuration) -> float:
    validar_n_puntos(c.n)
    return float(separations(c.space, c.points))


def energy_from_separation(rho, kind: EnergyKind):
    kind = EnergyKind(kind)
    rho = np.asarray(rho, dtype=float)
    if kind is EnergyKind.NEGATIVE:
        return -rho
    if np.any(rho <= 0):
        raise SingularConfigurationError(f"rho = 0 no admite la energia {kind.value}")
    if kind is EnergyKind.RECIPROCAL:
        return 1.0 / rho
    return -np.log(rho)


def energy(c: Configuration, kind: EnergyKind) -> float:
    return float(energy_from_separation(separation(c), kind))


def energy_ordering(configs, kind: EnergyKind) -> np.ndarray:
    """Indices de las configuraciones ordenadas por energia (estable)."""
    valores = np.array([energy(c, kind) for c in configs])
    return np.argsort(valores, kind="stable")


def min_symmetrize(energy_fn, permutations):
    """
    Min-simetrizacion: psi -> min_g E(g psi) para un grupo finito dado como
    permutaciones de los indices de los puntos.
    """
    perms = [np.asarray(p) for p in permutations]

    def symmetrized(c: Configuration) -> float:
        return min(energy_fn(c.permuted(p)) for p in perms)

    return symmetrized


# =========================
# CRITERIO DE EMPAQUE
# =========================
def is_packing(c: Configuration, radii) -> bool:
    radios = validar_radios(radii, c.n)
    if c.n < 2:
        return True
    d = ms.pairwise_distances(c.space, c.points)
    req = radios[:, None] + radios[None, :]
    iu = np.triu_indices(c.n, 1)
    # igualdad permitida: interiores disjuntos
    return bool(np.all(d[iu] >= req[iu]))


def hausdorff_sum(radii, k: int) -> float:
    """Suma de cubrimiento sum beta_k r_i^k (lectura Σ r_i^k)."""
    radios = np.asarray(radii, dtype=float)
    return float(ms.euclidean_ball_volume(k) * np.sum(radios ** k))


def distance_to_diagonal(c: Configuration, i: int, j: int) -> float:
    """
    Distancia en X^I (metrica producto L2) de psi a la diagonal Diag_ij, construida
    moviendo x_i y x_j al punto medio geodesico.
    """
    xi, xj = c.points[i], c.points[j]
    v = ms.log_map(c.space, xi, xj)
    if np.linalg.norm(v) == 0:
        return 0.0
    mid = ms.geodesic_step(c.space, xi, v, 0.5)
    return float(math.hypot(ms.distance(c.space, xi, mid), ms.distance(c.space, xj, mid)))


# =========================
# METRICA COCIENTE
# =========================
def _check_pair(c1: Configuration, c2: Configuration):
    if c1.space.describe() != c2.space.describe() or c1.n != c2.n:
        raise InvalidInputError("Las configuraciones deben compartir espacio y N")


def _bottleneck(cost: np.ndarray) -> float:
    n = cost.shape[0]
    if n <= BRUTE_FORCE_MAX_N:
        perms = np.array(list(itertools.permutations(range(n))))
        return float(cost[np.arange(n), perms].max(axis=1).min())
    # busqueda binaria sobre los valores de costo + matching bipartito perfecto
    valores = np.unique(cost)
    lo, hi = 0, len(valores) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        grafo = csr_matrix((cost <= valores[mid]).astype(np.int8))
        match = maximum_bipartite_matching(grafo, perm_type="column")
        if np.all(match >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(valores[lo])


def quotient_distance(c1: Configuration, c2: Configuration) -> float:
    _check_pair(c1, c2)
    cost = ms.pairwise_distances(c1.space, c1.points, c2.points)
    return _bottleneck(cost)


def ordered_distance(c1: Configuration, c2: Configuration) -> float:
    _check_pair(c1, c2)
    return float(np.max(ms.distance(c1.space, c1.points, c2.points)))


def config_distances(space: ms.ModelSpace, batch: np.ndarray, ref: np.ndarray, quotient: bool) -> np.ndarray:
    """
    Distancias (sup, o su cociente por Sym_N) de cada configuracion del lote (S, N, c)
    a la configuracion de referencia (N, c).
    """
    n = ref.shape[0]
    if not quotient:
        return ms.distance(space, batch, ref[None]).max(axis=-1)
    cost = ms.distance(space, batch[:, :, None, :], ref[None, None, :, :])
    if n <= BRUTE_FORCE_MAX_N:
        out = np.full(batch.shape[0], np.inf)
        filas = np.arange(n)
        for perm in itertools.permutations(range(n)):
            out = np.minimum(out, cost[:, filas, perm].max(axis=1))
        return out
    return np.array([_bottleneck(c) for c in cost])


def crosses_collision(space: ms.ModelSpace, batch: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """
    True si el camino geodesico punto a punto de cada configuracion del lote (S, N, 1)
    a la de referencia (N, 1) hace chocar dos puntos. Solo pasa en dimension 1, donde
    el diagonal separa los ordenes.
    """
    if space.kind not in ("interval", "circle"):
        return np.zeros(batch.shape[0], dtype=bool)
    a = batch[..., 0]
    delta = ms.log_map(space, batch, np.broadcast_to(ref, batch.shape))[..., 0]
    i, j = np.triu_indices(a.shape[1], k=1)
    g0 = a[:, j] - a[:, i]
    g1 = g0 + delta[:, j] - delta[:, i]
    lo, hi = np.minimum(g0, g1), np.maximum(g0, g1)
    if space.kind == "interval":
        choque = (lo <= 0) & (hi >= 0)
    else:
        # algun multiplo de L en [lo, hi]
        choque = np.floor(hi / space.length) >= np.ceil(lo / space.length)
    return choque.any(axis=1)


# =========================
# CUBRIMIENTO Y EMPAQUE
# =========================
def covering_packing_numbers(pts, space: ms.ModelSpace, delta: float, rel_tol: float = 1e-9):
    """
    (cover_count, pack_count): cubrimiento voraz por recorrido del punto mas lejano y
    subconjunto maximal 2*delta-separado.
    """
    validar_positivo("delta", delta)
    pts = ms.as_points(space, pts)
    if pts.ndim == 1:
        pts = pts[None]
    if pts.shape[0] == 0:
        raise InvalidInputError("Se requiere al menos un punto")

    # Recorrido del punto mas lejano
    mind = ms.distance(space, pts, pts[0])
    cover = 1
    while mind.max() > delta * (1 + rel_tol):
        nuevo = int(np.argmax(mind))
        mind = np.minimum(mind, ms.distance(space, pts, pts[nuevo]))
        cover += 1

    # Empaque maximal voraz en orden de entrada
    elegidos = [pts[0]]
    for p in pts[1:]:
        d = ms.distance(space, np.array(elegidos), p)
        if d.min() >= 2 * delta * (1 - rel_tol):
            elegidos.append(p)
    return cover, len(elegidos)

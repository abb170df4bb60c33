"""
Espectros de empaque: muestreo de configuraciones, landmarks, complejo de
Vietoris-Rips a escala fija con filtracion lower-star de -rho, persistencia y
superficies espectrales multidimensionales.
"""
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from app.config import settings
from app.core.errors import ClassNotFoundError, InvalidInputError
from app.core.parallel import map_ordered
from app.core.validator import validar_entero_minimo, validar_n_puntos, validar_positivo
from app.services import model_spaces as ms
from app.services.packing_core import Configuration, config_distances, crosses_collision, separations
from app.services.persistence import Barcode, FilteredComplex, persistence_reduce, reduce_complex

logger = logging.getLogger(__name__)


@dataclass
class SpectrumParams:
    count: int = settings.SPECTRUM_SAMPLES
    mcmc_steps: int = settings.SPECTRUM_MCMC_STEPS
    n_landmarks: int = settings.SPECTRUM_LANDMARKS
    eps_factor: float = settings.EPS_FACTOR
    max_dim: int = settings.SPECTRUM_MAX_DIM
    lift: bool = True
    rho_floor: float = settings.SPECTRUM_RHO_FLOOR


# =========================
# MUESTREO
# =========================
@dataclass
class ConfigSample:
    space: ms.ModelSpace
    points: np.ndarray
    rho: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    def __getitem__(self, i) -> Configuration:
        return Configuration(self.space, self.points[i])

    def configs(self) -> list:
        return [self[i] for i in range(len(self))]

    @classmethod
    def from_configs(cls, configs) -> "ConfigSample":
        configs = list(configs)
        if not configs:
            raise InvalidInputError("Muestra vacia")
        space = configs[0].space
        pts = np.stack([c.points for c in configs])
        return cls(space, pts, separations(space, pts))


def sample_configs(space: ms.ModelSpace, n: int, count: int, rng: np.random.Generator,
                   mcmc_steps: int = settings.SPECTRUM_MCMC_STEPS) -> ConfigSample:
    """
    Siembra uniforme + movimientos MCMC de esfera dura de un punto por vez.
    Las cadenas pares mantienen el diametro duro inicial (exploran el superlevel);
    las impares solo aceptan movimientos que no bajan rho (suben hacia la cima).
    """
    validar_n_puntos(n)
    validar_entero_minimo("count", count, 1)
    pts = ms.sample_uniform(space, rng, size=(count, n))
    rho = separations(space, pts)
    while np.any(rho <= 0):
        malos = np.flatnonzero(rho <= 0)
        pts[malos] = ms.sample_uniform(space, rng, size=(len(malos), n))
        rho[malos] = separations(space, pts[malos])

    sube = (np.arange(count) % 2) == 1
    sigma = rho.copy()
    escala = 0.1 * space.length_scale
    for t in range(mcmc_steps):
        k = t % n
        paso = escala * max(0.05, 0.98 ** t)
        v = ms.random_tangent(space, pts[:, k], rng)
        propuesta = pts.copy()
        propuesta[:, k] = ms.geodesic_step(space, pts[:, k], v, paso)
        nuevo = separations(space, propuesta)
        acepta = np.where(sube, nuevo >= rho, nuevo >= sigma) & (nuevo > 0)
        pts[acepta] = propuesta[acepta]
        rho[acepta] = nuevo[acepta]
    logger.info("Muestreo: %d configuraciones N=%d, rho max %.6f", count, n, rho.max())
    return ConfigSample(space, pts, rho)


def above_floor(samples: ConfigSample, fraction: float) -> ConfigSample:
    """Descarta las muestras con rho < fraction * max rho (la zona cerca de las colisiones)."""
    if not 0.0 <= fraction < 1.0:
        raise InvalidInputError(f"La fraccion de piso debe estar en [0, 1): {fraction}")
    if fraction == 0.0:
        return samples
    quedan = samples.rho >= fraction * samples.rho.max()
    logger.info("Piso de rho %.5f: quedan %d de %d muestras", fraction * samples.rho.max(), quedan.sum(), len(samples))
    return ConfigSample(samples.space, samples.points[quedan], samples.rho[quedan])


# =========================
# LANDMARKS
# =========================
@dataclass
class Landmarks:
    indices: np.ndarray
    points: np.ndarray
    rho: np.ndarray
    covering_radius: float
    quotient: bool
    cells: np.ndarray | None = None


def landmark_cells(space: ms.ModelSpace, points: np.ndarray, landmark_points: np.ndarray,
                   quotient: bool) -> np.ndarray:
    """Landmark mas cercano a cada configuracion (celda de Voronoi); empates por menor indice."""
    mejor = np.full(points.shape[0], np.inf)
    celda = np.zeros(points.shape[0], dtype=int)
    for j, q in enumerate(landmark_points):
        d = config_distances(space, points, q, quotient)
        nuevo = d < mejor
        celda[nuevo] = j
        mejor[nuevo] = d[nuevo]
    return celda


def landmark_select(samples: ConfigSample, n_landmarks: int, metric: str = "quotient",
                    lift: bool = False) -> Landmarks:
    """
    Submuestra maxmin (punto mas lejano). El primer landmark es la muestra de
    mayor rho; empates por menor indice. Con `lift`, el valor de cada landmark es
    el mayor rho de las muestras de su celda de Voronoi (los puntos no se mueven).
    """
    if len(samples) == 0:
        raise InvalidInputError("No hay muestras para elegir landmarks")
    if metric not in ("ordered", "quotient"):
        raise InvalidInputError(f"Metrica desconocida: {metric}")
    if not 1 <= n_landmarks <= len(samples):
        raise InvalidInputError(f"L={n_landmarks} debe estar entre 1 y {len(samples)}")
    quotient = metric == "quotient"
    X, space = samples.points, samples.space

    primero = int(np.argmax(samples.rho))
    elegidos = [primero]
    mind = config_distances(space, X, X[primero], quotient)
    for _ in range(n_landmarks - 1):
        cand = mind.copy()
        cand[elegidos] = -np.inf
        nuevo = int(np.argmax(cand))
        elegidos.append(nuevo)
        mind = np.minimum(mind, config_distances(space, X, X[nuevo], quotient))
    radio = float(mind.max())

    idx = np.array(elegidos, dtype=int)
    valores = samples.rho[idx].copy()
    celdas = None
    if lift:
        celdas = landmark_cells(space, X, X[idx], quotient)
        np.maximum.at(valores, celdas, samples.rho)
    logger.info("Landmarks: L=%d, radio de cobertura %.5f", len(idx), radio)
    return Landmarks(idx, X[idx], valores, radio, quotient, celdas)


def landmark_distance_matrix(space: ms.ModelSpace, points: np.ndarray, quotient: bool) -> np.ndarray:
    filas = map_ordered(lambda i: config_distances(space, points, points[i], quotient), range(len(points)))
    D = np.array(filas)
    D = np.minimum(D, D.T)
    if not quotient:
        # en dimension 1 un lado no puede atravesar el diagonal
        cruza = np.array(map_ordered(lambda i: crosses_collision(space, points, points[i]), range(len(points))))
        D[cruza | cruza.T] = np.inf
    return D


# =========================
# FILTRACION
# =========================
def build_filtration(landmarks: Landmarks, space: ms.ModelSpace, eps: float,
                     max_dim: int = settings.SPECTRUM_MAX_DIM, dist: np.ndarray | None = None) -> FilteredComplex:
    """
    Complejo de Vietoris-Rips a escala fija eps; cada simplice recibe el maximo de
    -rho sobre sus vertices (lower-star de la energia Negative).
    """
    validar_positivo("eps", eps)
    D = landmark_distance_matrix(space, landmarks.points, landmarks.quotient) if dist is None else dist
    L = D.shape[0]
    vert = -np.asarray(landmarks.rho, dtype=float)
    adj = (D <= eps) & ~np.eye(L, dtype=bool)
    arriba = [set(int(j) for j in np.flatnonzero(adj[i]) if j > i) for i in range(L)]

    simplices = [(i,) for i in range(L)]
    actuales = list(simplices)
    for _ in range(max_dim):
        siguientes = []
        for s in actuales:
            comunes = set.intersection(*(arriba[v] for v in s))
            siguientes.extend(s + (w,) for w in sorted(comunes))
        simplices.extend(siguientes)
        actuales = siguientes
        if not actuales:
            break
    valores = np.array([vert[list(s)].max() for s in simplices])

    aviso = None
    if not adj.any():
        aviso = "eps demasiado chico: el complejo es 0-dimensional"
        logger.warning(aviso)
    fc = FilteredComplex(simplices, valores, max_dim, vertices=landmarks.points, warning=aviso)
    logger.info("Complejo VR: %s", fc.count_by_dim())
    return fc


# =========================
# ESPECTRO DE EMPAQUE
# =========================
@dataclass
class PackingSpectrum:
    barcode: Barcode
    landmarks: Landmarks
    eps: float
    complex_sizes: dict
    warning: str | None = None
    rho_samples_max: float = 0.0

    @property
    def spectral_values(self) -> np.ndarray:
        ends = {b for _, b, _ in self.barcode.intervals}
        ends |= {m for _, _, m in self.barcode.intervals if math.isfinite(m)}
        return np.array(sorted(ends))

    @property
    def spectral_radii(self) -> np.ndarray:
        return np.sort(-self.spectral_values / 2.0)

    def essential_birth_radii(self, dim: int) -> list:
        return sorted((-b / 2.0 for _, b, _ in self.barcode.essential(dim)), reverse=True)

    @property
    def bottom_radius(self) -> float:
        """Borde inferior del espectro: radio max(rho)/2 del primer landmark."""
        return float(self.landmarks.rho.max() / 2.0)

    def to_frame(self) -> pd.DataFrame:
        df = self.barcode.to_frame()
        df["birth_radius"] = -df["birth"] / 2.0
        df["death_radius"] = -df["death"] / 2.0
        return df

    def summary(self) -> dict:
        return {
            "essential_h0_birth_radii": self.essential_birth_radii(0),
            "essential_h1_birth_radii": self.essential_birth_radii(1),
            "bottom_radius": self.bottom_radius,
            "covering_radius": self.landmarks.covering_radius,
            "stability_bound": 2.0 * self.landmarks.covering_radius,
            "eps": self.eps,
            "complex_sizes": {str(k): v for k, v in self.complex_sizes.items()},
            "spectral_radii": self.spectral_radii.tolist(),
            "warning": self.warning,
        }


def _eps_from(landmarks: Landmarks, D: np.ndarray, factor: float) -> float:
    radio = landmarks.covering_radius
    if radio <= 0:
        otros = np.where(np.eye(len(D), dtype=bool), np.inf, D)
        radio = float(np.median(otros.min(axis=1)))
    return factor * radio


def packing_spectrum(space: ms.ModelSpace, n: int, quotient: bool, rng: np.random.Generator,
                     params: SpectrumParams | None = None) -> PackingSpectrum:
    """Muestra -> landmarks -> filtracion -> persistencia."""
    params = params or SpectrumParams()
    validar_n_puntos(n)
    validar_entero_minimo("max_dim", params.max_dim, 1)
    muestras = above_floor(sample_configs(space, n, params.count, rng, params.mcmc_steps), params.rho_floor)
    lm = landmark_select(muestras, min(params.n_landmarks, len(muestras)),
                         "quotient" if quotient else "ordered", lift=params.lift)
    D = landmark_distance_matrix(space, lm.points, lm.quotient)
    eps = _eps_from(lm, D, params.eps_factor)
    fc = build_filtration(lm, space, eps, params.max_dim, dist=D)
    completo = persistence_reduce(fc)
    # los ciclos de la dimension tope no tienen simplices que los maten
    barcode = Barcode([t for t in completo.intervals if t[0] < fc.max_dim])

    aviso = fc.warning
    componentes = len(barcode.essential(0))
    if componentes > 1 and aviso is None:
        aviso = f"El complejo completo tiene {componentes} componentes a eps={eps:.5g}"
        logger.warning(aviso)
    return PackingSpectrum(barcode, lm, eps, fc.count_by_dim(), aviso, float(muestras.rho.max()))


def births_stable(a: PackingSpectrum, b: PackingSpectrum, dim: int) -> bool:
    """
    Prueba de humo de estabilidad: mismas clases esenciales, y cada nacimiento (en
    radios) se mueve a lo sumo el radio de cobertura de los landmarks.
    """
    ra, rb = a.essential_birth_radii(dim), b.essential_birth_radii(dim)
    if len(ra) != len(rb):
        return False
    cota = max(a.landmarks.covering_radius, b.landmarks.covering_radius)
    return all(abs(x - y) <= cota + 1e-12 for x, y in zip(ra, rb))


def poincare_polynomial_at(barcode: Barcode, e: float) -> tuple:
    """Coeficiente de t^i = intervalos esenciales de dimension i nacidos en <= e."""
    coef = {}
    for d, b, m in barcode.intervals:
        if math.isinf(m) and b <= e:
            coef[d] = coef.get(d, 0) + 1
    if not coef:
        return ()
    return tuple(coef.get(i, 0) for i in range(max(coef) + 1))


def format_polynomial(coef: tuple) -> str:
    terminos = []
    for i, c in enumerate(coef):
        if c == 0:
            continue
        base = "" if i == 0 else ("t" if i == 1 else f"t^{i}")
        if i == 0:
            terminos.append(str(c))
        else:
            terminos.append(base if c == 1 else f"{c}{base}")
    return " + ".join(terminos) if terminos else "0"


# =========================
# SUPERFICIE ESPECTRAL
# =========================
@dataclass
class SpectralSurfaceGrid:
    pairs: list
    axes: list
    grid: np.ndarray
    boundary: list = field(default_factory=list)

    def diagonal_crossing(self) -> float:
        """Valor e donde la diagonal e_1=...=e_J cruza Sigma_h (requiere ejes iguales)."""
        k = min(len(a) for a in self.axes)
        diag = np.array([self.grid[(i,) * len(self.axes)] for i in range(k)])
        eje = self.axes[0][:k]
        return _crossing(eje, diag)

    def axis_crossing(self, axis: int = 0, at: tuple | None = None) -> float:
        at = at or tuple(len(a) - 1 for a in self.axes)
        idx = list(at)
        linea = []
        for i in range(len(self.axes[axis])):
            idx[axis] = i
            linea.append(self.grid[tuple(idx)])
        return _crossing(self.axes[axis], np.array(linea))

    def to_frame(self) -> pd.DataFrame:
        filas = []
        for idx in np.ndindex(self.grid.shape):
            fila = {f"e_{a}_{b}": self.axes[j][idx[j]] for j, (a, b) in enumerate(self.pairs)}
            fila["vanishes"] = bool(self.grid[idx])
            filas.append(fila)
        return pd.DataFrame(filas)


def _crossing(eje, valores) -> float:
    """Punto medio entre la ultima celda 'se anula' y la primera 'presente'."""
    valores = np.asarray(valores, dtype=bool)
    presentes = np.flatnonzero(~valores)
    if len(presentes) == 0:
        return math.inf
    k = int(presentes[0])
    if k == 0:
        return float(eje[0])
    return float((eje[k - 1] + eje[k]) / 2.0)


class _ClassTracker:
    """
    Decide si la clase rastreada sobrevive en el subcomplejo inducido por una mascara
    de vertices. En dimension 1 cada arista lleva la clase (mascara de bits sobre las
    clases esenciales) de su ciclo fundamental en el complejo completo.
    """

    def __init__(self, fc: FilteredComplex, dim: int, which):
        if dim not in (0, 1):
            raise InvalidInputError(f"Solo se rastrean clases de dimension 0 o 1 (pedida {dim})")
        self.red = reduce_complex(fc)
        red = self.red
        self.dim = dim
        esenciales = sorted((k for k in red.essential if red.dims[k] == dim), key=lambda k: (red.values[k], k))
        if not esenciales:
            raise ClassNotFoundError(f"No hay clases esenciales de dimension {dim} en el complejo completo")
        if which == "any":
            bits = list(range(len(esenciales)))
        else:
            if not 0 <= int(which) < len(esenciales):
                raise ClassNotFoundError(f"Clase {which} inexistente (hay {len(esenciales)})")
            bits = [int(which)]
        self.esenciales = esenciales
        self.tracked = [esenciales[b] for b in bits]
        self.tracked_bits = [1 << b for b in bits]
        self.n_vertices = int(np.sum(red.dims == 0))
        self.edges = [(k, red.simplices[k]) for k in range(len(red.simplices)) if red.dims[k] == 1]
        if dim == 0:
            self._components()
        else:
            self._annotate()

    def _components(self):
        padre = list(range(self.n_vertices))

        def raiz(x):
            while padre[x] != x:
                padre[x] = padre[padre[x]]
                x = padre[x]
            return x

        for _, (u, v) in self.edges:
            padre[raiz(u)] = raiz(v)
        self.root = np.array([raiz(v) for v in range(self.n_vertices)])
        self.tracked_roots = {self.root[self.red.simplices[k][0]] for k in self.tracked}

    @staticmethod
    def _reduce(col: set, pivots: dict) -> tuple:
        """Reduce una cadena contra los pivotes; devuelve el resto y los bits de clase usados."""
        col, tag = set(col), 0
        while col:
            p = pivots.get(max(col))
            if p is None:
                break
            col ^= p[0]
            tag ^= p[1]
        return col, tag

    def _annotate(self):
        red = self.red
        pivots = {max(col): (col, 0) for j, col in red.reduced.items() if red.dims[j] == 2}
        for bit, k in enumerate(self.esenciales):
            col, tag = self._reduce(red.cycle_of(k), pivots)
            if col:
                pivots[max(col)] = (col, tag ^ (1 << bit))

        # bosque BFS del grafo completo; las aristas del arbol llevan clase 0
        ady = {}
        for k, (u, v) in self.edges:
            ady.setdefault(u, []).append((v, k))
            ady.setdefault(v, []).append((u, k))
        padre, arista, prof = {}, {}, {}
        for s in sorted(ady):
            if s in padre:
                continue
            padre[s], arista[s], prof[s] = None, None, 0
            cola = deque([s])
            while cola:
                u = cola.popleft()
                for v, k in ady[u]:
                    if v not in padre:
                        padre[v], arista[v], prof[v] = u, k, prof[u] + 1
                        cola.append(v)
        arbol = set(arista.values())
        self.annotation = {}
        for k, (u, v) in self.edges:
            if k in arbol:
                self.annotation[k] = 0
                continue
            ciclo = {k}
            a, b = u, v
            while a != b:
                if prof[a] >= prof[b]:
                    ciclo ^= {arista[a]}
                    a = padre[a]
                else:
                    ciclo ^= {arista[b]}
                    b = padre[b]
            self.annotation[k] = self._reduce(ciclo, pivots)[1]

    @staticmethod
    def _rank(vectores) -> int:
        base = {}
        for x in vectores:
            while x:
                alto = x.bit_length() - 1
                if alto not in base:
                    base[alto] = x
                    break
                x ^= base[alto]
        return len(base)

    def _image(self, mask: np.ndarray) -> list:
        """Clases en el complejo completo de los ciclos fundamentales del subgrafo."""
        ady = {}
        for k, (u, v) in self.edges:
            if mask[u] and mask[v]:
                ady.setdefault(u, []).append((v, k))
                ady.setdefault(v, []).append((u, k))
        pot, vistas, clases = {}, set(), []
        for s in sorted(ady):
            if s in pot:
                continue
            pot[s] = 0
            cola = deque([s])
            while cola:
                u = cola.popleft()
                for v, k in ady[u]:
                    if k in vistas:
                        continue
                    vistas.add(k)
                    if v not in pot:
                        pot[v] = pot[u] ^ self.annotation[k]
                        cola.append(v)
                    else:
                        clases.append(pot[u] ^ pot[v] ^ self.annotation[k])
        return clases

    def vanishes(self, mask: np.ndarray) -> bool:
        if self.dim == 0:
            return not any(self.root[v] in self.tracked_roots for v in np.flatnonzero(mask))
        imagen = self._image(mask)
        # dim(I ∩ T) = dim I + dim T - dim(I + T)
        r_i, r_t = self._rank(imagen), self._rank(self.tracked_bits)
        return r_i + r_t - self._rank(imagen + self.tracked_bits) == 0


def _orbit_closure(points: np.ndarray) -> np.ndarray:
    n = points.shape[1]
    perms = list(itertools.permutations(range(n)))
    return np.concatenate([points[:, list(p)] for p in perms], axis=0)


def spectral_surface(space: ms.ModelSpace, n: int, pairs: list, grid: list, rng: np.random.Generator,
                     tracked: tuple = (1, "any"), params: SpectrumParams | None = None,
                     symmetric: bool = True) -> SpectralSurfaceGrid:
    """
    Omega_h sobre una grilla de energias de pares E_ij = 1/dist(x_i, x_j): la celda es
    True si la clase rastreada se anula en el subcomplejo {E_j < e_j para todo j}.
    Un landmark entra al subcomplejo si alguna muestra de su celda de Voronoi cumple
    todas las cotas. Con `symmetric`, landmarks y muestras se cierran bajo Sym_N.
    """
    params = params or SpectrumParams()
    validar_n_puntos(n)
    if int(tracked[0]) not in (0, 1):
        raise InvalidInputError(f"Solo se rastrean clases de dimension 0 o 1 (pedida {tracked[0]})")
    J = len(pairs)
    if not 1 <= J <= 3 or len(grid) != J:
        raise InvalidInputError("Se admiten 1 a 3 energias de pares, con un eje de grilla por energia")
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n and i != j):
            raise InvalidInputError(f"Par invalido ({i}, {j}) para N={n}")
    ejes = [np.asarray(a, dtype=float) for a in grid]

    muestras = above_floor(sample_configs(space, n, params.count, rng, params.mcmc_steps), params.rho_floor)
    n_rep = params.n_landmarks // math.factorial(n) if symmetric else params.n_landmarks
    lm = landmark_select(muestras, max(1, min(n_rep, len(muestras))), "quotient" if symmetric else "ordered")
    if symmetric:
        puntos, testigos = _orbit_closure(lm.points), _orbit_closure(muestras.points)
    else:
        puntos, testigos = lm.points, muestras.points
    celda = landmark_cells(space, testigos, puntos, quotient=False)
    rho = separations(space, puntos)
    ordenados = Landmarks(np.arange(len(puntos)), puntos, rho, lm.covering_radius, quotient=False)
    D = landmark_distance_matrix(space, puntos, quotient=False)
    eps = _eps_from(ordenados, D, params.eps_factor)
    fc = build_filtration(ordenados, space, eps, params.max_dim, dist=D)
    tracker = _ClassTracker(fc, int(tracked[0]), tracked[1])

    E = np.stack([1.0 / ms.distance(space, testigos[:, i], testigos[:, j]) for i, j in pairs], axis=1)
    forma = tuple(len(a) for a in ejes)
    celdas = np.zeros(forma, dtype=bool)
    verdaderas, falsas = [], []
    for idx in np.ndindex(forma):
        punto = np.array(idx)
        # monotonia: dominado por una celda que se anula, o domina una presente
        if verdaderas and np.any(np.all(punto <= np.array(verdaderas), axis=1)):
            celdas[idx] = True
            continue
        if falsas and np.any(np.all(punto >= np.array(falsas), axis=1)):
            continue
        umbral = np.array([ejes[j][idx[j]] for j in range(J)])
        mask = np.zeros(len(puntos), dtype=bool)
        mask[celda[np.all(E < umbral, axis=1)]] = True
        se_anula = tracker.vanishes(mask)
        celdas[idx] = se_anula
        (verdaderas if se_anula else falsas).append(idx)

    borde = []
    for idx in zip(*np.nonzero(celdas)):
        for j in range(J):
            vecino = list(idx)
            vecino[j] += 1
            if vecino[j] < forma[j] and not celdas[tuple(vecino)]:
                borde.append(tuple(int(i) for i in idx))
                break
    return SpectralSurfaceGrid([tuple(p) for p in pairs], ejes, celdas, borde)


def upper_lower_duality(spectrum: PackingSpectrum, r_max: float | None = None, tol: float = 1e-9) -> dict:
    """
    El primer nacimiento esencial de H_0 es -max rho de los landmarks; en radios
    nunca supera r_max(X;N).
    """
    h0 = spectrum.barcode.essential(0)
    if not h0:
        raise ClassNotFoundError("El espectro no tiene clases esenciales de H_0")
    primero = min(b for _, b, _ in h0)
    resultado = {
        "spectrum_bottom_radius": -primero / 2.0,
        "landmark_max_rho_over_2": spectrum.bottom_radius,
        "h0_birth_matches": abs(-primero - float(spectrum.landmarks.rho.max())) <= tol,
    }
    if r_max is not None:
        resultado["r_max"] = float(r_max)
        resultado["below_r_max"] = resultado["spectrum_bottom_radius"] <= r_max * (1 + 1e-6) + tol
    return resultado

"""
Espectros de la energia de Dirichlet por diferencias finitas en el circulo y en el
2-toro plano, cota de localizacion por particiones (Neumann por pieza) y ley de Weyl.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from app.config import settings
from app.core.errors import InvalidInputError, InvalidPartitionError, ResolutionError, UnsupportedDimensionError
from app.core.parallel import map_ordered
from app.services import model_spaces as ms

logger = logging.getLogger(__name__)

MIN_CELLS = 4


@dataclass
class EigenSpectrum:
    eigenvalues: np.ndarray
    m: int
    space: dict

    def __post_init__(self):
        self.eigenvalues = np.sort(np.asarray(self.eigenvalues, dtype=float))

    def __len__(self):
        return len(self.eigenvalues)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"index": np.arange(len(self)), "eigenvalue": self.eigenvalues})


# =========================
# OPERADORES
# =========================
def _grid_spacing(space: ms.ModelSpace, m: int):
    if space.kind == "circle":
        return space.length / m
    if space.kind == "torus" and space.dim == 2:
        if not np.allclose(space.basis, np.diag(np.diag(space.basis))):
            raise UnsupportedDimensionError("El laplaciano por diferencias finitas requiere un toro rectangular")
        return tuple(np.abs(np.diag(space.basis)) / m)
    raise UnsupportedDimensionError(f"Laplaciano no soportado en {space.kind} de dimension {space.dim}")


def periodic_laplacian_1d(m: int, h: float) -> sparse.csr_matrix:
    """-d^2/dx^2 periodico de segundo orden (semidefinido positivo)."""
    diag = np.full(m, 2.0)
    off = np.full(m - 1, -1.0)
    lap = sparse.diags([off, diag, off], [-1, 0, 1], shape=(m, m), format="lil")
    lap[0, m - 1] = -1.0
    lap[m - 1, 0] = -1.0
    return lap.tocsr() / (h * h)


def torus_laplacian(space: ms.ModelSpace, m: int) -> sparse.csr_matrix:
    hx, hy = _grid_spacing(space, m)
    lx = periodic_laplacian_1d(m, hx)
    ly = periodic_laplacian_1d(m, hy)
    eye = sparse.identity(m, format="csr")
    return (sparse.kron(lx, eye) + sparse.kron(eye, ly)).tocsr()


def laplace_spectrum(space: ms.ModelSpace, m: int, k: int) -> EigenSpectrum:
    """K autovalores mas chicos del laplaciano periodico por diferencias finitas."""
    if k < 1:
        raise InvalidInputError("K debe ser >= 1")
    if m < 8 * k:
        raise ResolutionError(f"Grilla M={m} insuficiente para K={k} (se requiere M >= 8K)")
    _grid_spacing(space, m)
    if space.kind == "circle":
        h = space.length / m
        # el stencil sin escalar y luego /h^2 mantiene la escala exacta entre longitudes
        base = periodic_laplacian_1d(m, 1.0).toarray()
        vals = eigh(base, eigvals_only=True, subset_by_index=[0, k - 1]) / (h * h)
    else:
        lap = torus_laplacian(space, m)
        vals = eigsh(lap, k=k, sigma=-1.0, which="LM", tol=settings.EIGEN_TOL, return_eigenvectors=False)
    vals = np.clip(np.sort(vals), 0.0, None)
    vals[np.abs(vals) < 1e-9] = 0.0
    return EigenSpectrum(vals, m, space.describe())


def torus_fd_eigenvalues(space: ms.ModelSpace, m: int) -> np.ndarray:
    """Todos los autovalores del laplaciano del toro rectangular, por suma de Kronecker exacta."""
    hx, hy = _grid_spacing(space, m)
    j = np.arange(m)
    lx = 4.0 / hx ** 2 * np.sin(np.pi * j / m) ** 2
    ly = 4.0 / hy ** 2 * np.sin(np.pi * j / m) ** 2
    return np.sort((lx[:, None] + ly[None, :]).ravel())


def circle_fd_eigenvalues(space: ms.ModelSpace, m: int) -> np.ndarray:
    h = space.length / m
    j = np.arange(m)
    return np.sort(4.0 / h ** 2 * np.sin(np.pi * j / m) ** 2)


# =========================
# NEUMANN EN SUBDOMINIOS
# =========================
def _mask_laplacian(space: ms.ModelSpace, mask: np.ndarray) -> sparse.csr_matrix:
    """Laplaciano de grafo (Neumann) de las celdas de la mascara con vecindad periodica."""
    if space.kind == "circle":
        h = space.length / mask.shape[0]
        idx = np.flatnonzero(mask)
        pos = -np.ones(mask.shape[0], dtype=int)
        pos[idx] = np.arange(len(idx))
        vecino = np.roll(np.arange(mask.shape[0]), -1)
        a = idx[mask[vecino[idx]]]
        filas, cols, pesos = pos[a], pos[vecino[a]], np.full(len(a), 1.0 / h ** 2)
    else:
        m = mask.shape[0]
        hx, hy = _grid_spacing(space, m)
        idx = np.flatnonzero(mask.ravel())
        pos = -np.ones(m * m, dtype=int)
        pos[idx] = np.arange(len(idx))
        ii, jj = np.unravel_index(idx, (m, m))
        filas, cols, pesos = [], [], []
        for di, dj, h in ((1, 0, hx), (0, 1, hy)):
            vec = np.ravel_multi_index(((ii + di) % m, (jj + dj) % m), (m, m))
            ok = mask.ravel()[vec]
            filas.append(pos[idx[ok]])
            cols.append(pos[vec[ok]])
            pesos.append(np.full(ok.sum(), 1.0 / h ** 2))
        filas, cols, pesos = np.concatenate(filas), np.concatenate(cols), np.concatenate(pesos)
    n = len(idx)
    w = sparse.coo_matrix((pesos, (filas, cols)), shape=(n, n))
    w = (w + w.T).tocsr()
    grado = np.asarray(w.sum(axis=1)).ravel()
    return (sparse.diags(grado) - w).tocsr()


def neumann_first_eigenvalue(space: ms.ModelSpace, mask: np.ndarray) -> float:
    """Menor autovalor no nulo de Neumann del subdominio (mascara booleana de celdas)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.sum() < MIN_CELLS:
        raise ResolutionError(f"El subdominio tiene {int(mask.sum())} celdas (< {MIN_CELLS})")
    lap = _mask_laplacian(space, mask)
    n = lap.shape[0]
    if space.kind == "circle" and n < mask.shape[0]:
        partes, _ = connected_components(lap, directed=False)
        if partes == 1:
            # un arco es un camino con bordes de Neumann: tridiagonal exacta
            h = space.length / mask.shape[0]
            d = np.full(n, 2.0)
            d[0] = d[-1] = 1.0
            vals = eigh_tridiagonal(d, np.full(n - 1, -1.0), eigvals_only=True,
                                    select="i", select_range=(0, 1))
            return float(vals[1] / (h * h))
    if n <= 2000:
        vals = eigh(lap.toarray(), eigvals_only=True, subset_by_index=[0, 1])
    else:
        vals = eigsh(lap, k=2, sigma=-1.0, which="LM", tol=settings.EIGEN_TOL, return_eigenvectors=False)
    return float(np.sort(vals)[1])


def arc_mask(space: ms.ModelSpace, m: int, start: float, length: float) -> np.ndarray:
    """Celdas del circulo cuyos centros caen en el arco [start, start + length)."""
    centros = (np.arange(m) + 0.5) * space.length / m
    rel = np.mod(centros - start, space.length)
    return rel < length


def arc_partition(space: ms.ModelSpace, m: int, lengths) -> list:
    lengths = np.asarray(lengths, dtype=float)
    if not np.isclose(lengths.sum(), space.length, rtol=1e-9):
        raise InvalidPartitionError("Las longitudes de los arcos deben sumar L")
    inicios = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    return [arc_mask(space, m, s, l) for s, l in zip(inicios, lengths)]


def square_partition(space: ms.ModelSpace, m: int, k: int) -> list:
    """Particion del toro en k x k rectangulos de celdas."""
    if m % k:
        raise InvalidPartitionError(f"M={m} no es divisible por k={k}")
    b = m // k
    piezas = []
    for a in range(k):
        for c in range(k):
            mask = np.zeros((m, m), dtype=bool)
            mask[a * b:(a + 1) * b, c * b:(c + 1) * b] = True
            piezas.append(mask)
    return piezas


def voronoi_partition(space: ms.ModelSpace, m: int, centers) -> list:
    """Particion de Dirichlet-Voronoi de la grilla del toro inducida por un empaque."""
    centers = np.asarray(centers, dtype=float)
    g = (np.arange(m) + 0.5) / m
    u, v = np.meshgrid(g, g, indexing="ij")
    celdas = np.stack([u, v], axis=-1).reshape(-1, 2)
    d = ms.distance(space, celdas[:, None, :], centers[None, :, :])
    duenio = np.argmin(d, axis=1).reshape(m, m)
    return [duenio == i for i in range(len(centers))]


def validate_partition(masks, shape) -> None:
    if not masks:
        raise InvalidPartitionError("La particion esta vacia")
    cuenta = np.zeros(shape, dtype=int)
    for mk in masks:
        mk = np.asarray(mk, dtype=bool)
        if mk.shape != shape:
            raise InvalidPartitionError(f"Pieza de forma {mk.shape}, se esperaba {shape}")
        cuenta += mk
    if np.any(cuenta > 1):
        raise InvalidPartitionError("Las piezas de la particion se superponen")
    if np.any(cuenta == 0):
        raise InvalidPartitionError("La particion no cubre la grilla")


@dataclass
class LocalizationReport:
    e_n: float
    min_piece: float
    piece_values: list
    passed: bool
    slack: float

    def to_dict(self) -> dict:
        return {"e_N": self.e_n, "min_e1": self.min_piece, "pieces": self.piece_values,
                "pass": self.passed, "slack": self.slack}


def localization_check(space: ms.ModelSpace, partition, n: int | None = None,
                       slack: float = settings.LOCALIZATION_SLACK) -> LocalizationReport:
    """e_N(X) >= min_i e_1(U_i) con N = numero de piezas, con holgura relativa."""
    partition = [np.asarray(p, dtype=bool) for p in partition]
    shape = partition[0].shape if partition else ()
    validate_partition(partition, shape)
    n = len(partition) if n is None else n
    m = shape[0]
    if space.kind == "circle":
        todos = circle_fd_eigenvalues(space, m)
    else:
        todos = torus_fd_eigenvalues(space, m)
    e_n = float(todos[n])
    piezas = map_ordered(lambda mk: neumann_first_eigenvalue(space, mk), partition)
    minimo = float(min(piezas))
    paso = e_n >= minimo * (1.0 - slack)
    logger.info("Localizacion: e_%d=%.6g, min e1=%.6g, pasa=%s", n, e_n, minimo, paso)
    return LocalizationReport(e_n, minimo, [float(p) for p in piezas], bool(paso), slack)


def rayleigh_quotient(space: ms.ModelSpace, mask: np.ndarray, psi: np.ndarray) -> float:
    """E_Dir(psi) = <L psi, psi> / <psi, psi> para psi sobre las celdas del subdominio."""
    lap = _mask_laplacian(space, np.asarray(mask, dtype=bool))
    psi = np.asarray(psi, dtype=float)
    return float(psi @ (lap @ psi) / (psi @ psi))


def rayleigh_upper_bound(space: ms.ModelSpace, mask: np.ndarray, rng: np.random.Generator,
                         trials: int = 1000) -> float:
    """Minimo del cociente de Rayleigh sobre vectores aleatorios de media cero (cota superior de e_1)."""
    n = int(np.asarray(mask, dtype=bool).sum())
    mejor = math.inf
    for _ in range(trials):
        psi = rng.standard_normal(n)
        psi -= psi.mean()
        mejor = min(mejor, rayleigh_quotient(space, mask, psi))
    return mejor


# =========================
# LEY DE WEYL
# =========================
@dataclass
class WeylFit:
    exponent: float
    prefactor: float
    expected_prefactor: float
    points: int
    counts: pd.DataFrame = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "expected_prefactor": self.expected_prefactor, "points": self.points}


def resolved_band(space: ms.ModelSpace, m: int) -> float:
    """Autovalor maximo sin dispersion apreciable: numeros de onda hasta M/8."""
    largo = space.length if space.kind == "circle" else float(np.max(np.abs(np.diag(space.basis))))
    return (2.0 * np.pi * m / (8.0 * largo)) ** 2


def weyl_fit(space: ms.ModelSpace, m: int, e_range) -> WeylFit:
    """
    Ajuste log-log de la funcion de conteo N(e) ~ C e^{n/2}, muestreada en los
    puntos medios entre autovalores distintos consecutivos.
    """
    lo, hi = float(e_range[0]), float(e_range[1])
    if not 0 < lo < hi:
        raise InvalidInputError(f"Rango de energias invalido: {e_range}")
    if hi > resolved_band(space, m) * (1 + 1e-12):
        raise ResolutionError(f"e={hi} excede la banda resuelta {resolved_band(space, m):.6g} para M={m}")
    vals = circle_fd_eigenvalues(space, m) if space.kind == "circle" else torus_fd_eigenvalues(space, m)

    # racimos de autovalores (multiplicidades numericas)
    distintos = [vals[0]]
    for v in vals[1:]:
        if v - distintos[-1] > 5e-3 * max(v, 1.0):
            distintos.append(v)
    distintos = np.array(distintos)
    medios = (distintos[:-1] + distintos[1:]) / 2.0
    medios = medios[(medios >= lo) & (medios <= hi)]
    if len(medios) < 3:
        raise InvalidInputError(f"Muy pocos autovalores en [{lo}, {hi}]")
    cuenta = np.searchsorted(vals, medios, side="right")
    pendiente, _ = np.polyfit(np.log(medios), np.log(cuenta), 1)

    # prefactor con el exponente teorico n/2 fijo
    n = space.intrinsic_dimension
    prefactor = float(np.exp(np.mean(np.log(cuenta) - (n / 2.0) * np.log(medios))))
    esperado = ms.volume(space) * ms.euclidean_ball_volume(n) / (2.0 * np.pi) ** n
    logger.info("Weyl: exponente %.4f, prefactor %.5f (esperado %.5f)", pendiente, prefactor, esperado)
    return WeylFit(float(pendiente), prefactor, float(esperado), int(len(medios)),
                   pd.DataFrame({"e": medios, "count": cuenta}))

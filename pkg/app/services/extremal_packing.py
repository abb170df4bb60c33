"""
Radio maximo de empaque r_max(X;N) y ajuste de la constante asintotica de empaque.

Cada reinicio corre tres etapas:
1. inflado tipo Lubachevsky-Stillinger (repulsion de pares solapados con paso decreciente)
2. ascenso por gradiente de la soft-min de las distancias (temperatura eps_t = eps_0 * 0.95^t)
3. pulido maximin por programacion lineal secuencial con region de confianza
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from app.config import settings
from app.core.errors import NotApplicableError, SearchFailureError
from app.core.parallel import map_ordered
from app.core.streams import split
from app.core.validator import validar_creciente, validar_n_puntos, validar_presupuesto
from app.services import model_spaces as ms
from app.services.packing_core import Configuration, is_packing, separations

logger = logging.getLogger(__name__)

SLP_MAX_ITER = 200


@dataclass
class PackingResult:
    radius: float
    config: Configuration
    restarts: int
    iterations: int
    best_restart: int
    curve: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "n": self.config.n,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "best_restart": self.best_restart,
            "points": self.config.points.tolist(),
        }


# =========================
# AUXILIARES GEOMETRICOS
# =========================
def _sep(space, X) -> float:
    return float(separations(space, X))


def _move(space, X, disp) -> np.ndarray:
    out = X.copy()
    nz = np.linalg.norm(disp, axis=-1) > 0
    if nz.any():
        out[nz] = ms.geodesic_step(space, X[nz], disp[nz], 1.0)
    return out


def _pair_geometry(space, X):
    """V[i, j] = log_map(x_i, x_j) y D[i, j] = |V[i, j]| (diagonal = inf)."""
    V = ms.log_map(space, X[:, None, :], X[None, :, :])
    D = np.linalg.norm(V, axis=-1)
    np.fill_diagonal(D, np.inf)
    return V, D


def _tangent_frames(space, X) -> np.ndarray:
    if space.kind != "sphere":
        return np.broadcast_to(np.eye(space.coord_dim), (len(X), space.coord_dim, space.coord_dim))
    return np.stack([ms.tangent_basis(space, p) for p in X])


def _initial(space, n, rng, lattice: bool) -> np.ndarray:
    if lattice and space.kind == "circle":
        return (np.arange(n) * space.length / n)[:, None]
    if lattice and space.kind == "interval":
        return (np.arange(n) * space.length / (n - 1))[:, None]
    k = math.isqrt(n)
    if lattice and k * k == n and space.kind in ("torus", "box") and space.dim == 2:
        g = (np.arange(k) + 0.5) / k
        frac = np.array([(a, b) for a in g for b in g])
        if space.kind == "box":
            return frac * space.sides
        return frac
    X = ms.sample_uniform(space, rng, size=n)
    while _sep(space, X) <= 0:
        X = ms.sample_uniform(space, rng, size=n)
    return X


# =========================
# ETAPAS
# =========================
def _inflate(space, X, steps: int, curve: list):
    mejor, mejor_sep = X, _sep(space, X)
    for t in range(steps):
        V, D = _pair_geometry(space, X)
        sep = D.min()
        sigma = sep * (1.0 + 0.2 * 0.9 ** t)
        solape = np.clip(sigma - D, 0.0, None)
        solape[~np.isfinite(D)] = 0.0
        unit = V / np.where(np.isfinite(D), D, 1.0)[..., None]
        empuje = -0.5 * np.einsum("ij,ijk->ik", solape, unit)
        X = _move(space, X, empuje)
        s = _sep(space, X)
        if s > mejor_sep:
            mejor, mejor_sep = X.copy(), s
        curve.append(mejor_sep)
    return mejor


def _softmin_ascent(space, X, steps: int, curve: list):
    mejor, mejor_sep = X, _sep(space, X)
    eps0 = mejor_sep / 10.0
    paso0 = 0.05 * mejor_sep
    for t in range(steps):
        eps = eps0 * settings.SOFTMIN_DECAY ** t
        V, D = _pair_geometry(space, X)
        dmin = D.min()
        w = np.exp(-(D - dmin) / eps)
        w[~np.isfinite(D)] = 0.0
        w /= w.sum()
        unit = V / np.where(np.isfinite(D), D, 1.0)[..., None]
        grad = -np.einsum("ij,ijk->ik", w, unit)
        norma = np.linalg.norm(grad, axis=-1).max()
        if norma == 0:
            break
        paso = paso0 * max(0.02, 0.97 ** t)
        X = _move(space, X, grad * (paso / norma))
        s = _sep(space, X)
        if s > mejor_sep:
            mejor, mejor_sep = X.copy(), s
        curve.append(mejor_sep)
    return mejor


def _slp_polish(space, X, curve: list, max_iter: int = SLP_MAX_ITER):
    """Maximin por programas lineales con region de confianza en caja."""
    n = len(X)
    sep = _sep(space, X)
    tau_max = 0.1 * sep
    tau = 0.05 * sep
    piso = 1e-13 * space.length_scale
    for _ in range(max_iter):
        if tau < piso:
            break
        T = _tangent_frames(space, X)
        k = T.shape[-1]
        V, D = _pair_geometry(space, X)
        ii, jj = np.nonzero(np.triu(D <= sep + 4.0 * tau, 1))
        if len(ii) == 0:
            break
        u_ij = V[ii, jj] / D[ii, jj, None]
        u_ji = V[jj, ii] / D[jj, ii, None]
        # variables: delta (n*k, escaladas por tau) y s (t = sep + tau*s)
        A = np.zeros((len(ii), n * k + 1))
        a_i = np.einsum("pc,pck->pk", u_ij, T[ii])
        a_j = np.einsum("pc,pck->pk", u_ji, T[jj])
        for p in range(len(ii)):
            A[p, ii[p] * k:(ii[p] + 1) * k] += a_i[p]
            A[p, jj[p] * k:(jj[p] + 1) * k] += a_j[p]
        A[:, -1] = 1.0
        b = (D[ii, jj] - sep) / tau
        lo = np.full((n, k), -1.0)
        hi = np.full((n, k), 1.0)
        if space.kind in ("interval", "box"):
            tope = np.full(k, space.length) if space.kind == "interval" else space.sides
            lo = np.maximum(lo, -X / tau)
            hi = np.minimum(hi, (tope - X) / tau)
        bounds = list(zip(lo.ravel(), hi.ravel())) + [(-10.0, 10.0)]
        c = np.zeros(n * k + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs",
                      options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
        if not res.success or res.x[-1] <= 0:
            tau /= 2.0
            continue
        delta = res.x[:-1].reshape(n, k) * tau
        disp = np.einsum("nck,nk->nc", T, delta)
        Xn = _move(space, X, disp)
        if space.kind in ("interval", "box"):
            Xn = np.clip(Xn, 0.0, space.length if space.kind == "interval" else space.sides)
        sn = _sep(space, Xn)
        if sn > sep:
            X, sep = Xn, sn
            tau = min(tau * 1.5, tau_max)
        else:
            tau /= 2.0
        curve.append(sep)
    return X


def _one_restart(space, n, iterations, rng, index):
    curve = []
    X = _initial(space, n, rng, lattice=index == 0)
    tercio = max(1, iterations // 3)
    X = _inflate(space, X, tercio, curve)
    X = _softmin_ascent(space, X, iterations - tercio, curve)
    X = _slp_polish(space, X, curve)
    return _sep(space, X), X, curve


# =========================
# OPERACIONES
# =========================
def max_packing_radius(space: ms.ModelSpace, n: int, rng: np.random.Generator,
                       restarts: int = settings.PACKING_RESTARTS,
                       iterations: int = settings.PACKING_ITERATIONS) -> PackingResult:
    """Mejor empaque encontrado (cota inferior de r_max), certificado con is_packing."""
    validar_n_puntos(n)
    validar_presupuesto(restarts, iterations)
    flujos = split(rng, restarts)
    salidas = map_ordered(lambda k: _one_restart(space, n, iterations, flujos[k], k), range(restarts))
    mejor = max(range(restarts), key=lambda k: (salidas[k][0], -k))
    sep, X, curve = salidas[mejor]

    config = Configuration.from_points(space, X)
    radio = separations(space, config.points) / 2.0
    if not is_packing(config, np.full(n, radio)):
        raise SearchFailureError(f"El mejor empaque no pasa la verificacion (r={radio})")
    logger.info("r_max(%s; N=%d) >= %.12g (reinicio %d de %d)", space.kind, n, radio, mejor, restarts)
    return PackingResult(float(radio), config, restarts, iterations, mejor, curve)


def exact_oracle_1d(space: ms.ModelSpace, n: int) -> float:
    validar_n_puntos(n)
    if space.kind == "interval":
        return space.length / (2.0 * (n - 1))
    if space.kind == "circle":
        return space.length / (2.0 * n)
    raise NotApplicableError(f"El oraculo exacto solo cubre intervalo y circulo ({space.kind})")


def packing_constant_fit(space: ms.ModelSpace, n_list, rng: np.random.Generator,
                         restarts: int = settings.PACKING_RESTARTS,
                         iterations: int = settings.PACKING_ITERATIONS):
    """
    Tabla de N * r^n / vol(X) y la constante estimada como mediana del cuartil
    superior de valores de N.
    """
    n_list = [int(v) for v in n_list]
    if not n_list:
        raise NotApplicableError("La lista de N esta vacia")
    for v in n_list:
        validar_n_puntos(v)
    validar_creciente("N", n_list)

    dim = space.intrinsic_dimension
    vol = ms.volume(space)
    flujos = split(rng, len(n_list))
    filas = []
    for v, flujo in zip(n_list, flujos):
        res = max_packing_radius(space, v, flujo, restarts, iterations)
        filas.append({"N": v, "radius": res.radius, "ratio": v * res.radius ** dim / vol})
    tabla = pd.DataFrame(filas)
    tabla["monotone"] = tabla["radius"].cummin().eq(tabla["radius"])
    if not tabla["monotone"].all():
        logger.warning("r_max no es monotono en N: %s (presupuesto insuficiente)",
                       tabla.loc[~tabla["monotone"], "N"].tolist())

    top = max(1, math.ceil(len(tabla) / 4))
    constante = float(tabla["ratio"].iloc[-top:].median())
    return constante, tabla

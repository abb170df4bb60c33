"""
Primera etapa de la proyeccion de Federer-Fleming: una poligonal del plano se
proyecta radialmente, celda por celda de una grilla de lado R, sobre el
1-esqueleto de la grilla, y se mide el desplazamiento maximo.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.neighbors import KDTree

from app.core.errors import CellSaturatedError, InvalidInputError
from app.core.validator import validar_positivo
from app.services.geometric_inequalities import Polyline

logger = logging.getLogger(__name__)

CENTER_CANDIDATES = 24
REFINE_ROUNDS = 6


@dataclass
class FFProjection:
    image: list
    displacement: float
    ratio: float
    cells: int
    components_in: int
    components_out: int

    def to_dict(self) -> dict:
        return {"sup_displacement": self.displacement, "ratio": self.ratio, "cells": self.cells,
                "components_in": self.components_in, "components_out": self.components_out}


def _pieces(a: np.ndarray, b: np.ndarray, R: float) -> list:
    """Parte el segmento [a, b] en los cruces con las rectas x = kR, y = kR."""
    cortes = {0.0, 1.0}
    d = b - a
    for eje in range(2):
        if d[eje] == 0:
            continue
        lo, hi = sorted((a[eje], b[eje]))
        for k in range(math.ceil(lo / R), math.floor(hi / R) + 1):
            t = (k * R - a[eje]) / d[eje]
            if 0.0 < t < 1.0:
                cortes.add(t)
    ts = sorted(cortes)
    return [(a + t0 * d, a + t1 * d) for t0, t1 in zip(ts, ts[1:])]


def _samples(p: np.ndarray, q: np.ndarray, h: float) -> np.ndarray:
    n = max(2, int(math.ceil(np.linalg.norm(q - p) / h)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return p + t * (q - p)


def _radial(points: np.ndarray, c: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Proyeccion radial desde c sobre el borde del cuadrado [lo, hi]."""
    d = points - c
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(d > 0, (hi - c) / d, np.where(d < 0, (lo - c) / d, np.inf))
    lam = lam.min(axis=1, keepdims=True)
    return c + lam * d


def _as_cycle(y) -> list:
    curvas = [y] if isinstance(y, Polyline) else list(y)
    if not curvas:
        raise InvalidInputError("ff_project necesita al menos una poligonal")
    if any(c.dim != 2 for c in curvas):
        raise InvalidInputError("ff_project trabaja con poligonales del plano")
    return curvas


def ff_project(y, R: float, density: int = 256) -> FFProjection:
    """
    Proyecta una poligonal, o un ciclo formado por varias, sobre el 1-esqueleto.
    Dentro de cada celda, el centro de proyeccion es el punto interior candidato
    mas lejano de Y (KD-tree sobre muestras densas de Y).
    """
    validar_positivo("R", R)
    curvas = _as_cycle(y)
    largo = sum(c.length for c in curvas)
    h = min(R / density, largo / (4 * density))

    # 1. Trozos por celda y muestras densas
    trozos = []
    for curva in curvas:
        a0, a1 = curva.segments
        for p, q in zip(a0, a1):
            for u, v in _pieces(p, q, R):
                celda = tuple(np.floor((u + v) / (2.0 * R)).astype(int))
                trozos.append((celda, _samples(u, v, h)))
    todas = np.concatenate([s for _, s in trozos])
    arbol = KDTree(todas)

    # 2. Centro de proyeccion por celda
    centros = {}
    g = (np.arange(CENTER_CANDIDATES) + 0.5) / CENTER_CANDIDATES
    grilla = np.array([(a, b) for a in g for b in g])
    for celda in sorted({c for c, _ in trozos}):
        lo = np.array(celda, dtype=float) * R
        cand = lo + grilla * R
        dist, _ = arbol.query(cand, k=1)
        mejor = int(np.argmax(dist[:, 0]))
        if dist[mejor, 0] <= R / (4 * CENTER_CANDIDATES):
            raise CellSaturatedError(f"La celda {celda} esta saturada por Y (R={R} muy chico)")
        centros[celda] = cand[mejor]

    # 3. Proyeccion con refinamiento donde la imagen salta
    imagen, sup = [], 0.0
    for celda, muestras in trozos:
        lo = np.array(celda, dtype=float) * R
        hi = lo + R
        c = centros[celda]
        for _ in range(REFINE_ROUNDS):
            img = _radial(muestras, c, lo, hi)
            salto = np.linalg.norm(np.diff(img, axis=0), axis=1)
            malos = np.flatnonzero(salto > R / 8.0)
            if len(malos) == 0:
                break
            medios = (muestras[malos] + muestras[malos + 1]) / 2.0
            muestras = np.insert(muestras, malos + 1, medios, axis=0)
        img = _radial(muestras, c, lo, hi)
        sup = max(sup, float(np.linalg.norm(img - muestras, axis=1).max()))
        imagen.append(img)

    en_esqueleto = np.concatenate(imagen)
    resto = np.abs(en_esqueleto / R - np.round(en_esqueleto / R))
    if not np.all(resto.min(axis=1) <= 1e-9 * max(1.0, float(np.abs(en_esqueleto / R).max()))):
        raise InvalidInputError("La imagen no quedo en el 1-esqueleto")

    tol = 1e-9 * max(R, float(np.abs(en_esqueleto).max()))
    entrada = _input_components(curvas, tol)
    salida = _image_components(imagen, tol)
    logger.info("FF: %d celdas, desplazamiento %.6g, cociente %.6g, componentes %d -> %d",
                len(centros), sup, sup / largo, entrada, salida)
    return FFProjection(imagen, sup, sup / largo, len(centros), entrada, salida)


# =========================
# COMPONENTES CONEXAS
# =========================
def _count_unions(n: int, pares) -> int:
    padre = list(range(n))

    def raiz(x):
        while padre[x] != x:
            padre[x] = padre[padre[x]]
            x = padre[x]
        return x

    for i, j in pares:
        padre[raiz(i)] = raiz(j)
    return len({raiz(k) for k in range(n)})


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distancias (m, n) de los puntos p (m, 2) a los segmentos [a, b] (n, 2)."""
    d = b - a
    dd = np.einsum("nk,nk->n", d, d)
    t = np.einsum("mnk,nk->mn", p[:, None] - a[None], d) / np.where(dd > 0, dd, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p[:, None] - (a[None] + t[..., None] * d[None]), axis=-1)


def _curves_touch(y: Polyline, z: Polyline, tol: float) -> bool:
    a0, a1 = y.segments
    b0, b1 = z.segments
    da, db = a1 - a0, b1 - b0

    def cruz(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    o1 = cruz(da[:, None], b0[None] - a0[:, None])
    o2 = cruz(da[:, None], b1[None] - a0[:, None])
    o3 = cruz(db[None], a0[:, None] - b0[None])
    o4 = cruz(db[None], a1[:, None] - b0[None])
    if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
        return True
    cerca = min(_point_segment_distance(a0, b0, b1).min(), _point_segment_distance(a1, b0, b1).min(),
                _point_segment_distance(b0, a0, a1).min(), _point_segment_distance(b1, a0, a1).min())
    return bool(cerca <= tol)


def _input_components(curvas: list, tol: float) -> int:
    """Cada poligonal es conexa; dos poligonales se unen si se cortan o se tocan."""
    pares = [(i, j) for i in range(len(curvas)) for j in range(i + 1, len(curvas))
             if _curves_touch(curvas[i], curvas[j], tol)]
    return _count_unions(len(curvas), pares)


def _image_components(imagen: list, tol: float) -> int:
    """
    Dos trozos proyectados quedan en la misma componente si algun punto de uno cae
    sobre una cuerda (muestras consecutivas) del otro.
    """
    a = np.concatenate([im[:-1] for im in imagen])
    b = np.concatenate([im[1:] for im in imagen])
    dueno_c = np.concatenate([np.full(len(im) - 1, k) for k, im in enumerate(imagen)])
    puntos = np.concatenate(imagen)
    dueno_p = np.concatenate([np.full(len(im), k) for k, im in enumerate(imagen)])
    radio = float(np.linalg.norm(b - a, axis=1).max()) / 2.0 + tol
    candidatas = KDTree((a + b) / 2.0).query_radius(puntos, r=radio)
    pares = set()
    for i, cs in enumerate(candidatas):
        cs = cs[dueno_c[cs] != dueno_p[i]]
        if len(cs) == 0:
            continue
        d = _point_segment_distance(puntos[i:i + 1], a[cs], b[cs])[0]
        pares.update((int(dueno_p[i]), int(dueno_c[j])) for j in cs[d <= tol])
    return _count_unions(len(imagen), pares)


def ff_constant(corpus, factor: float = 2.0) -> float:
    """Maximo sobre un corpus de curvas de desplazamiento / largo con R = factor * largo."""
    return max(ff_project(y, factor * y.length).ratio for y in corpus)

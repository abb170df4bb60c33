"""
Marching squares periodico sobre grillas de centros de celda del toro plano.
Los segmentos se devuelven en coordenadas fraccionarias locales a cada celda
(sin envolver), asi su longitud se mide directamente con la base del toro.
"""
import numpy as np


def crossing_segments(values: np.ndarray, positive=None) -> np.ndarray:
    """
    Segmentos del conjunto de nivel 0 de una grilla periodica M x M.
    Devuelve un arreglo (S, 2, 2) con extremos en coordenadas fraccionarias.
    `positive` permite fijar la clasificacion de signo (por defecto f > 0).
    """
    f = np.asarray(values, dtype=float)
    m0, m1 = f.shape
    pos = f > 0 if positive is None else positive

    v00 = f
    v10 = np.roll(f, -1, axis=0)
    v01 = np.roll(f, -1, axis=1)
    v11 = np.roll(v10, -1, axis=1)
    p00 = pos
    p10 = np.roll(pos, -1, axis=0)
    p01 = np.roll(pos, -1, axis=1)
    p11 = np.roll(p10, -1, axis=1)

    ii, jj = np.meshgrid(np.arange(m0), np.arange(m1), indexing="ij")
    x0 = (ii + 0.5) / m0
    y0 = (jj + 0.5) / m1
    hx, hy = 1.0 / m0, 1.0 / m1

    def _t(a, b):
        den = a - b
        return np.divide(a, den, out=np.full_like(a, 0.5), where=den != 0)

    # extremos sobre cada arista (abajo, derecha, arriba, izquierda)
    bordes = {
        "b": (p00 != p10, x0 + _t(v00, v10) * hx, y0),
        "r": (p10 != p11, x0 + hx, y0 + _t(v10, v11) * hy),
        "t": (p01 != p11, x0 + _t(v01, v11) * hx, y0 + hy),
        "l": (p00 != p01, x0, y0 + _t(v00, v01) * hy),
    }
    cortes = sum(b[0].astype(int) for b in bordes.values())
    segmentos = []

    def _agregar(mask, a, b):
        if not mask.any():
            return
        pa = np.stack([bordes[a][1][mask], bordes[a][2][mask]], axis=-1)
        pb = np.stack([bordes[b][1][mask], bordes[b][2][mask]], axis=-1)
        segmentos.append(np.stack([pa, pb], axis=1))

    dos = cortes == 2
    pares = (("b", "r"), ("b", "t"), ("b", "l"), ("r", "t"), ("r", "l"), ("t", "l"))
    for a, b in pares:
        _agregar(dos & bordes[a][0] & bordes[b][0], a, b)

    # silla: el signo del centro decide que esquinas quedan aisladas
    cuatro = cortes == 4
    if cuatro.any():
        centro = (v00 + v10 + v01 + v11) / 4.0
        mismo = (centro > 0) == p00
        _agregar(cuatro & mismo, "b", "r")
        _agregar(cuatro & mismo, "l", "t")
        _agregar(cuatro & ~mismo, "b", "l")
        _agregar(cuatro & ~mismo, "r", "t")

    if not segmentos:
        return np.zeros((0, 2, 2))
    return np.concatenate(segmentos, axis=0)


def segment_lengths(segments: np.ndarray, basis: np.ndarray) -> np.ndarray:
    delta = (segments[:, 1] - segments[:, 0]) @ basis
    return np.linalg.norm(delta, axis=-1)

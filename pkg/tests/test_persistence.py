import math
from itertools import combinations

import numpy as np
import pytest

from app.core.errors import InvalidInputError
from app.services.persistence import Barcode, FilteredComplex, persistence_reduce, reduce_complex


def rango_z2(M: np.ndarray) -> int:
    """Rango sobre Z2 por eliminacion gaussiana densa."""
    M = (M % 2).astype(np.uint8)
    filas, cols = M.shape
    r = 0
    for c in range(cols):
        if r == filas:
            break
        piv = np.flatnonzero(M[r:, c])
        if len(piv) == 0:
            continue
        p = r + piv[0]
        M[[r, p]] = M[[p, r]]
        otras = np.flatnonzero(M[:, c])
        otras = otras[otras != r]
        M[otras] ^= M[r]
        r += 1
    return r


def betti_denso(simplices, values, e, max_dim):
    sub = [s for s, v in zip(simplices, values) if v <= e]
    por_dim = [[s for s in sub if len(s) - 1 == d] for d in range(max_dim + 2)]
    rangos = [0]
    for d in range(1, max_dim + 2):
        filas, cols = por_dim[d - 1], por_dim[d]
        if not filas or not cols:
            rangos.append(0)
            continue
        idx = {s: i for i, s in enumerate(filas)}
        B = np.zeros((len(filas), len(cols)), dtype=np.uint8)
        for j, s in enumerate(cols):
            for f in combinations(s, len(s) - 1):
                B[idx[f], j] = 1
        rangos.append(rango_z2(B))
    return [len(por_dim[d]) - rangos[d] - rangos[d + 1] for d in range(max_dim + 1)]


def complejo_aleatorio(rng, n_vertices=25, n_triangulos=40):
    simplices = set()
    for _ in range(n_triangulos):
        t = tuple(sorted(int(v) for v in rng.choice(n_vertices, 3, replace=False)))
        for k in (1, 2, 3):
            simplices.update(combinations(t, k))
    for _ in range(15):
        a, b = sorted(int(v) for v in rng.choice(n_vertices, 2, replace=False))
        simplices.update([(a,), (b,), (a, b)])
    simplices = sorted(simplices, key=lambda s: (len(s), s))
    valores = {}
    for s in simplices:
        base = max((valores[f] for f in combinations(s, len(s) - 1)), default=0.0) if len(s) > 1 else 0.0
        # valores enteros chicos fuerzan empates
        valores[s] = base + float(rng.integers(0, 3))
    return simplices, np.array([valores[s] for s in simplices])


def test_betti_numbers_match_dense_rank_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        simplices, valores = complejo_aleatorio(rng)
        assert len(simplices) <= 500
        barcode = persistence_reduce(FilteredComplex(simplices, valores, max_dim=2))
        cortes = np.quantile(valores, [0.1, 0.3, 0.5, 0.7, 1.0])
        for e in cortes:
            assert barcode.betti_at(e, max_dim=2) == betti_denso(simplices, valores, e, 2)


def test_barcode_ignores_order_of_tied_simplices():
    rng = np.random.default_rng(77)
    for _ in range(20):
        simplices, valores = complejo_aleatorio(rng)
        base = sorted(persistence_reduce(FilteredComplex(simplices, valores, max_dim=2)).intervals)
        # reetiquetar vertices y barajar la lista cambia el desempate entre valores iguales
        sigma = rng.permutation(25)
        orden = rng.permutation(len(simplices))
        otros = [tuple(sorted(int(sigma[v]) for v in simplices[i])) for i in orden]
        barcode = persistence_reduce(FilteredComplex(otros, valores[orden], max_dim=2))
        assert sorted(barcode.intervals) == base


def hueco_triangular(con_relleno: bool):
    simplices = [(0,), (1,), (2,), (0, 1), (1, 2), (0, 2)]
    valores = [0.0, 0.0, 0.0, 1.0, 2.0, 3.0]
    if con_relleno:
        simplices.append((0, 1, 2))
        valores.append(5.0)
    return FilteredComplex(simplices, valores, max_dim=2)


def test_hollow_triangle_has_essential_loop():
    barcode = persistence_reduce(hueco_triangular(False))
    assert barcode.essential(1) == [(1, 3.0, math.inf)]
    assert barcode.essential(0) == [(0, 0.0, math.inf)]
    assert barcode.betti_at(3.0) == [1, 1]


def test_filled_triangle_kills_loop():
    barcode = persistence_reduce(hueco_triangular(True))
    assert barcode.of_dim(1) == [(1, 3.0, 5.0)]
    assert barcode.betti_at(4.0, max_dim=1) == [1, 1]
    assert barcode.betti_at(5.0, max_dim=1) == [1, 0]


def test_reduction_exposes_cycle_representatives():
    red = reduce_complex(hueco_triangular(False))
    (k,) = [k for k in red.essential if red.dims[k] == 1]
    ciclo = {red.simplices[i] for i in red.cycle_of(k)}
    assert ciclo == {(0, 1), (1, 2), (0, 2)}


def test_non_monotone_filtration_rejected():
    with pytest.raises(InvalidInputError):
        persistence_reduce(FilteredComplex([(0,), (1,), (0, 1)], [0.0, 2.0, 1.0], max_dim=1))


def test_missing_face_rejected():
    with pytest.raises(InvalidInputError):
        persistence_reduce(FilteredComplex([(0,), (0, 1)], [0.0, 1.0], max_dim=1))


def test_simplex_above_max_dim_rejected():
    with pytest.raises(InvalidInputError):
        FilteredComplex([(0,), (1,), (2,), (0, 1, 2)], [0, 0, 0, 0], max_dim=1)


def test_empty_barcode_frame_keeps_header():
    df = Barcode([]).to_frame()
    assert list(df.columns) == ["dim", "birth", "death"]
    assert len(df) == 0

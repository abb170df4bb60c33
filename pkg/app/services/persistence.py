"""
Complejos filtrados y reduccion de la matriz de borde sobre Z2 (con clearing/twist).
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import pandas as pd

from app.core.errors import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass
class FilteredComplex:
    simplices: list
    values: np.ndarray
    max_dim: int
    vertices: np.ndarray | None = None
    warning: str | None = None

    def __post_init__(self):
        self.simplices = [tuple(int(v) for v in s) for s in self.simplices]
        self.values = np.asarray(self.values, dtype=float)
        if len(self.simplices) != len(self.values):
            raise InvalidInputError("Cada simplice necesita un valor de filtracion")
        for s in self.simplices:
            if len(s) - 1 > self.max_dim:
                raise InvalidInputError(f"Simplice {s} excede max_dim={self.max_dim}")
            if any(b <= a for a, b in zip(s, s[1:])):
                raise InvalidInputError(f"Los vertices de {s} deben ser estrictamente crecientes")

    def __len__(self):
        return len(self.simplices)

    def count_by_dim(self) -> dict:
        cuenta = {}
        for s in self.simplices:
            cuenta[len(s) - 1] = cuenta.get(len(s) - 1, 0) + 1
        return cuenta


@dataclass
class Barcode:
    intervals: list = field(default_factory=list)

    def __post_init__(self):
        self.intervals = sorted(
            ((int(d), float(b), float(e)) for d, b, e in self.intervals),
            key=lambda t: (t[0], t[1], t[2]),
        )

    def __len__(self):
        return len(self.intervals)

    def betti_at(self, e: float, max_dim: int | None = None) -> list:
        top = max_dim if max_dim is not None else max((d for d, _, _ in self.intervals), default=0)
        betti = [0] * (top + 1)
        for d, b, m in self.intervals:
            if d <= top and b <= e < m:
                betti[d] += 1
        return betti

    def essential(self, dim: int | None = None) -> list:
        return [t for t in self.intervals if math.isinf(t[2]) and (dim is None or t[0] == dim)]

    def of_dim(self, dim: int) -> list:
        return [t for t in self.intervals if t[0] == dim]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.intervals, columns=["dim", "birth", "death"])


@dataclass
class Reduction:
    """Resultado completo de la reduccion, en el orden canonico de la filtracion."""

    simplices: list
    values: np.ndarray
    dims: np.ndarray
    index: dict
    reduced: dict
    cycles: dict
    pairs: list
    essential: list

    def cycle_of(self, column: int) -> set:
        return self.cycles[column]


def canonical_order(fc: FilteredComplex) -> list:
    return sorted(range(len(fc)), key=lambda i: (fc.values[i], len(fc.simplices[i]), fc.simplices[i]))


def boundary_columns(simplices: list, index: dict) -> list:
    cols = []
    for s in simplices:
        if len(s) == 1:
            cols.append(set())
        else:
            cols.append({index[f] for f in combinations(s, len(s) - 1)})
    return cols


def reduce_complex(fc: FilteredComplex) -> Reduction:
    orden = canonical_order(fc)
    simplices = [fc.simplices[i] for i in orden]
    values = fc.values[orden]
    dims = np.array([len(s) - 1 for s in simplices], dtype=int)
    index = {s: k for k, s in enumerate(simplices)}
    if len(index) != len(simplices):
        raise InvalidInputError("Simplices repetidos en el complejo")

    # Validacion: caras presentes y filtracion monotona
    for k, s in enumerate(simplices):
        if len(s) == 1:
            continue
        for f in combinations(s, len(s) - 1):
            j = index.get(f)
            if j is None:
                raise InvalidInputError(f"Falta la cara {f} de {s}")
            if values[j] > values[k]:
                raise InvalidInputError(f"Filtracion no monotona: {f}={values[j]} > {s}={values[k]}")

    borde = boundary_columns(simplices, index)
    reduced, cycles, pivots = {}, {}, {}
    cleared = set()
    top = int(dims.max()) if len(dims) else 0

    # twist: dimensiones de mayor a menor, limpiando las columnas ya emparejadas
    for d in range(top, 0, -1):
        for j in np.flatnonzero(dims == d):
            j = int(j)
            if j in cleared:
                continue
            col = set(borde[j])
            v = {j}
            while col:
                low = max(col)
                p = pivots.get(low)
                if p is None:
                    break
                col ^= reduced[p]
                v ^= cycles[p]
            cycles[j] = v
            if col:
                low = max(col)
                reduced[j] = col
                pivots[low] = j
                cleared.add(low)
                cycles[low] = col

    pairs, essential = [], []
    for low, j in sorted(pivots.items()):
        pairs.append((low, j))
    paired = set(pivots) | set(pivots.values())
    for k in range(len(simplices)):
        if k not in paired:
            essential.append(k)
            cycles.setdefault(k, {k})
    logger.debug("Reduccion: %d simplices, %d pares, %d esenciales", len(simplices), len(pairs), len(essential))
    return Reduction(simplices, values, dims, index, reduced, cycles, pairs, essential)


def persistence_reduce(fc: FilteredComplex) -> Barcode:
    red = reduce_complex(fc)
    intervalos = []
    for low, j in red.pairs:
        b, m = red.values[low], red.values[j]
        if m > b:
            intervalos.append((red.dims[low], b, m))
    for k in red.essential:
        intervalos.append((red.dims[k], red.values[k], math.inf))
    return Barcode(intervalos)

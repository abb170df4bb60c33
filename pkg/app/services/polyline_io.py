from pathlib import Path

import numpy as np

from app.core.errors import InvalidInputError
from app.services.geometric_inequalities import Polyline

OPEN_MARKER = "# open"


def parse_polylines(text: str) -> list:
    """
    Formato de intercambio: un vertice por linea "x y [z]", componentes separadas
    por lineas en blanco, comentarios con '#'. La linea "# open" marca una
    componente abierta.
    """
    componentes, actual, abierta = [], [], False

    def cerrar():
        nonlocal actual, abierta
        if actual:
            componentes.append(Polyline(np.array(actual, dtype=float), closed=not abierta))
        actual, abierta = [], False

    for nro, linea in enumerate(text.splitlines(), start=1):
        limpia = linea.strip()
        # 1. Separadores y comentarios
        if not limpia:
            cerrar()
            continue
        if limpia.startswith("#"):
            if limpia == OPEN_MARKER:
                abierta = True
            continue
        # 2. Vertices
        campos = limpia.split()
        if len(campos) not in (2, 3):
            raise InvalidInputError(f"Linea {nro}: se esperaban 2 o 3 coordenadas, llegaron {len(campos)}")
        try:
            actual.append([float(c) for c in campos])
        except ValueError:
            raise InvalidInputError(f"Linea {nro}: coordenadas no numericas: {limpia!r}")
        if len(actual[-1]) != len(actual[0]):
            raise InvalidInputError(f"Linea {nro}: dimension inconsistente dentro de la componente")
    cerrar()
    if not componentes:
        raise InvalidInputError("El archivo no contiene poligonales")
    return componentes


def format_polylines(polylines) -> str:
    """repr de float es la representacion mas corta que vuelve al mismo double."""
    bloques = []
    for p in polylines:
        lineas = [] if p.closed else [OPEN_MARKER]
        lineas += [" ".join(repr(float(x)) for x in v) for v in p.vertices]
        bloques.append("\n".join(lineas))
    return "\n\n".join(bloques) + "\n"


def read_polylines(path) -> list:
    try:
        texto = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidInputError(f"No se pudo leer {path}: {e}")
    return parse_polylines(texto)


def write_polylines(path, polylines) -> Path:
    destino = Path(path)
    destino.write_text(format_polylines(polylines), encoding="utf-8")
    return destino

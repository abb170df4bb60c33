import numpy as np

from app.core.errors import InvalidInputError, UndefinedSeparationError


def validar_positivo(nombre: str, valor: float):
    if not np.isfinite(valor) or valor <= 0:
        raise InvalidInputError(f"{nombre} debe ser > 0 (recibido {valor})")


def validar_entero_minimo(nombre: str, valor: int, minimo: int):
    if int(valor) != valor or valor < minimo:
        raise InvalidInputError(f"{nombre} debe ser entero >= {minimo} (recibido {valor})")


def validar_n_puntos(n: int):
    if n < 2:
        raise UndefinedSeparationError(f"Se requieren al menos 2 puntos (N={n})")


def validar_radios(radios, n: int) -> np.ndarray:
    radios = np.asarray(radios, dtype=float)
    if radios.shape != (n,):
        raise InvalidInputError(f"Se esperaban {n} radios, llegaron {radios.shape}")
    if np.any(~np.isfinite(radios)) or np.any(radios <= 0):
        raise InvalidInputError("Todos los radios deben ser positivos")
    return radios


def validar_presupuesto(restarts: int, iterations: int):
    if restarts < 1 or iterations < 1:
        raise InvalidInputError(f"Presupuesto vacio: restarts={restarts}, iterations={iterations}")


def validar_creciente(nombre: str, valores):
    valores = list(valores)
    if any(b <= a for a, b in zip(valores, valores[1:])):
        raise InvalidInputError(f"{nombre} debe ser estrictamente creciente: {valores}")

import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """
    Flujo aleatorio con nombre: una sola semilla gobierna toda la corrida y
    cada etapa recibe su propio flujo independiente.
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


def split(rng: np.random.Generator, n: int) -> list:
    return list(rng.spawn(n))

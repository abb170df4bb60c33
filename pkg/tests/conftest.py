import numpy as np
import pytest

from app.services import model_spaces as ms


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def circle():
    return ms.ModelSpace.circle(1.0)


@pytest.fixture
def interval():
    return ms.ModelSpace.interval(1.0)


@pytest.fixture
def unit_torus():
    return ms.ModelSpace.unit_torus(2)


@pytest.fixture
def hex_torus():
    return ms.ModelSpace.hexagonal_torus()


@pytest.fixture
def sphere2():
    return ms.ModelSpace.sphere(2)


@pytest.fixture
def single_thread(monkeypatch):
    from app.config import settings
    monkeypatch.setattr(settings, "THREADS", 1)

import math

import numpy as np
import pytest

from app.core.errors import CellSaturatedError, InvalidInputError
from app.services.federer_fleming import ff_constant, ff_project
from app.services.geometric_inequalities import Polyline, random_closed_curve


def circulo_plano(radio, centro, m=64):
    t = 2 * np.pi * np.arange(m) / m
    return Polyline(np.stack([centro[0] + radio * np.cos(t), centro[1] + radio * np.sin(t)], axis=1))


def test_small_circle_inside_one_cell():
    y = circulo_plano(0.05, (0.3, 0.3))
    res = ff_project(y, 1.0)
    assert res.cells == 1
    assert 0 < res.displacement <= math.sqrt(2)
    assert res.ratio == pytest.approx(res.displacement / y.length)
    assert res.components_out <= res.components_in


def test_segment_on_grid_line_does_not_move():
    y = Polyline([[0.1, 0.0], [0.9, 0.0]], closed=False)
    assert ff_project(y, 1.0).displacement == pytest.approx(0.0, abs=1e-12)


def test_displacement_scales_with_the_curve():
    y = circulo_plano(0.4, (0.45, 0.55))
    a = ff_project(y, 0.5)
    b = ff_project(y.transformed(scale=3.0), 1.5)
    assert b.displacement == pytest.approx(3 * a.displacement, rel=1e-9)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-9)


def test_curve_across_cells(rng):
    y = random_closed_curve(rng, dim=2)
    res = ff_project(y, 0.5)
    assert res.cells > 1
    assert res.displacement <= 0.5 * math.sqrt(2)
    assert res.components_out == 1


def test_saturated_cell_rejected():
    xs = 0.01 + 0.02 * np.arange(50)
    vertices = []
    for k, x in enumerate(xs):
        ys = (0.001, 0.999) if k % 2 == 0 else (0.999, 0.001)
        vertices += [(x, ys[0]), (x, ys[1])]
    with pytest.raises(CellSaturatedError):
        ff_project(Polyline(vertices, closed=False), 1.0)


def test_invalid_requests():
    with pytest.raises(InvalidInputError):
        ff_project(circulo_plano(0.1, (0.5, 0.5)), 0.0)
    with pytest.raises(InvalidInputError):
        ff_project(Polyline([[0, 0, 0], [1, 0, 0], [0, 1, 0]]), 1.0)


def test_ff_constant_is_bounded(rng):
    corpus = [random_closed_curve(rng, dim=2, center=rng.uniform(0, 3, 2)) for _ in range(5)]
    c = ff_constant(corpus, factor=2.0)
    assert 0 < c <= 2 * math.sqrt(2)


# =========================
# COMPONENTES
# =========================
def test_two_disjoint_loops_keep_two_components():
    a = circulo_plano(0.1, (0.5, 0.5))
    b = circulo_plano(0.1, (3.5, 0.5))
    res = ff_project([a, b], 1.0)
    assert res.components_in == 2
    assert res.components_out == 2
    assert res.cells == 2
    assert res.ratio == pytest.approx(res.displacement / (a.length + b.length))


def test_crossing_loops_are_one_component():
    a = circulo_plano(0.2, (0.4, 0.5))
    b = circulo_plano(0.2, (0.6, 0.5))
    res = ff_project([a, b], 1.0)
    assert res.components_in == 1
    assert res.components_out == 1


def test_empty_cycle_rejected():
    with pytest.raises(InvalidInputError):
        ff_project([], 1.0)

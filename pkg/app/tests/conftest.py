from pathlib import Path

import pytest

from src.oracles import (
    make_piecewise_cake,
    make_quasilinear_market,
    make_triangle_sperner,
    make_weighted_argmax_rkkm,
)

INSTANCES = Path(__file__).resolve().parent.parent / "data" / "instances"

TRIANGLE4_COLORS = [2, 2, 1, 1, 1, 2, 2, 1, 1, 0, 0, 0, 0, 0, 0]


@pytest.fixture
def instances_dir() -> Path:
    return INSTANCES


@pytest.fixture
def quasi2():
    return make_quasilinear_market([[0.9, 0.1], [0.1, 0.9]])


@pytest.fixture
def argmax12():
    return make_weighted_argmax_rkkm([[1.0, 2.0], [1.0, 2.0]])


@pytest.fixture
def argmax123():
    return make_weighted_argmax_rkkm([[1.0, 2.0, 3.0]] * 3)


@pytest.fixture
def cake3():
    return make_piecewise_cake([
        [(0.0, 1.0, 1.0)],
        [(0.0, 0.5, 1.5), (0.5, 1.0, 0.5)],
        [(0.0, 0.5, 0.5), (0.5, 1.0, 1.5)],
    ])


@pytest.fixture
def triangle4():
    return make_triangle_sperner(4, TRIANGLE4_COLORS)

# tests/conftest.py
from pathlib import Path

import pytest

from core.labeler import FULL_ADDER_TWO_ROUND_SWAPS, apply_label_swaps, conventional_scheme
from core.permutation import compose, full_adder4, maximal_sets, swap_qubits
from core.topology import TopologyKind, build_topology

FIXTURES_DIR = Path(__file__).parent / "fixtures"

# 全加器對照表 (輸入 i 的輸出)
FULL_ADDER_MAP = (0, 1, 2, 3, 6, 7, 5, 4, 10, 11, 9, 8, 13, 12, 15, 14)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def full_adder():
    return full_adder4()


@pytest.fixture
def swap24():
    return swap_qubits(4, 2, 4)


@pytest.fixture
def full_adder_then_swap(full_adder, swap24):
    return compose(full_adder, swap24)


@pytest.fixture
def chain4():
    return build_topology(TopologyKind.QUADRUPOLAR_CHAIN, 4)


@pytest.fixture
def hypercube4():
    return build_topology(TopologyKind.SPIN_HALF_HYPERCUBE, 4)


@pytest.fixture
def two_round_scheme(full_adder, hypercube4):
    """全加器在超立方體上可排成兩輪的標記 (CL 再交換兩組標記)。"""
    return apply_label_swaps(conventional_scheme(hypercube4), FULL_ADDER_TWO_ROUND_SWAPS,
                             maximal_sets(full_adder))

# core/topology.py
"""
能階之間的單量子躍遷圖，以及建立在圖上的標準標記。

- 四極核鏈 (quadrupolar_chain)：2^N 個能階排成一條路徑，能階 0 的 m 最高。
- 自旋 1/2 超立方體 (spin_half_hypercube)：能階即自旋狀態位元 (α=0, β=1)，
  每翻轉一個自旋就是一條躍遷。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property

import networkx as nx

from core.errors import TopologyError
from core.permutation import MAX_QUBITS, format_state

log = logging.getLogger('topology')


class TopologyKind(str, Enum):
    QUADRUPOLAR_CHAIN = "quadrupolar_chain"
    SPIN_HALF_HYPERCUBE = "spin_half_hypercube"

    @classmethod
    def parse(cls, value: str) -> TopologyKind:
        aliases = {
            "chain": cls.QUADRUPOLAR_CHAIN,
            "quadrupolar": cls.QUADRUPOLAR_CHAIN,
            "hypercube": cls.SPIN_HALF_HYPERCUBE,
            "spin_half": cls.SPIN_HALF_HYPERCUBE,
        }
        key = value.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise TopologyError(f"未知的拓樸: {value!r}") from None


@dataclass(frozen=True, eq=False)
class Topology:
    kind: TopologyKind
    n_qubits: int
    graph: nx.Graph

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def is_chain(self) -> bool:
        return self.kind is TopologyKind.QUADRUPOLAR_CHAIN

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """依字典序排列的躍遷 (a < b)。"""
        return tuple(sorted((min(a, b), max(a, b)) for a, b in self.graph.edges))

    @cached_property
    def distances(self) -> tuple[tuple[int, ...], ...]:
        lengths = dict(nx.all_pairs_shortest_path_length(self.graph))
        return tuple(tuple(lengths[a][b] for b in range(self.dim)) for a in range(self.dim))

    def has_edge(self, a: int, b: int) -> bool:
        return self.graph.has_edge(a, b)

    def neighbors(self, level: int) -> list[int]:
        return sorted(self.graph.neighbors(level))

    def adjacency_lines(self) -> list[str]:
        return [f"{level}: {' '.join(map(str, self.neighbors(level)))}" for level in range(self.dim)]


def build_topology(kind: TopologyKind | str, n_qubits: int) -> Topology:
    if isinstance(kind, str):
        kind = TopologyKind.parse(kind)
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise TopologyError(f"量子位元數必須介於 1 與 {MAX_QUBITS} 之間，收到 {n_qubits}")

    dim = 1 << n_qubits
    if kind is TopologyKind.QUADRUPOLAR_CHAIN:
        graph = nx.path_graph(dim)
    else:
        graph = nx.Graph()
        graph.add_nodes_from(range(dim))
        graph.add_edges_from(
            (level, level ^ (1 << bit))
            for level in range(dim) for bit in range(n_qubits)
            if level < level ^ (1 << bit)
        )
    log.debug(f"建立拓樸 {kind.value} (N={n_qubits})，共 {graph.number_of_edges()} 條躍遷")
    return Topology(kind, n_qubits, graph)


def single_quantum_distance(t: Topology, a: int, b: int) -> int:
    return t.distances[a][b]


# --- 標記 ---

@dataclass(frozen=True)
class Labeling:
    """能階與 N 位元邏輯標記之間的雙射；level_to_label[i] 為能階 i 的標記。"""
    n_qubits: int
    level_to_label: tuple[int, ...]

    def __post_init__(self):
        size = 1 << self.n_qubits
        if len(self.level_to_label) != size or set(self.level_to_label) != set(range(size)):
            raise TopologyError("標記不是能階與標記之間的雙射")

    @cached_property
    def label_to_level(self) -> tuple[int, ...]:
        inverse = [0] * len(self.level_to_label)
        for level, label in enumerate(self.level_to_label):
            inverse[label] = level
        return tuple(inverse)

    def label_of(self, level: int) -> int:
        return self.level_to_label[level]

    def level_of(self, label: int) -> int:
        return self.label_to_level[label]

    def swap_labels(self, a: int, b: int) -> Labeling:
        """交換兩個標記所在的能階。"""
        mapping = list(self.level_to_label)
        la, lb = self.level_of(a), self.level_of(b)
        mapping[la], mapping[lb] = b, a
        return Labeling(self.n_qubits, tuple(mapping))

    def format_label(self, level: int) -> str:
        return format_state(self.label_of(level), self.n_qubits)


def conventional_labeling(t: Topology) -> Labeling:
    return Labeling(t.n_qubits, tuple(range(t.dim)))


def gray_labeling(t: Topology) -> Labeling:
    """反射二進位格雷碼：能階 i 的標記為 i ⊕ (i >> 1)。"""
    return Labeling(t.n_qubits, tuple(i ^ (i >> 1) for i in range(t.dim)))


def magnetic_quantum_number(t: Topology, level: int) -> Fraction:
    """鏈上能階的磁量子數 m = I − level，I = (2^N − 1)/2。"""
    return Fraction(t.dim - 1, 2) - level


def format_m(m: Fraction) -> str:
    return str(m)


def spin_state(level: int, n_qubits: int) -> str:
    return "".join("α" if bit == "0" else "β" for bit in format_state(level, n_qubits))

# core/labeler.py
"""
最佳標記方案 (OLS)：把每個最大集合的轉換鏈放到拓樸上一條相連的能階路徑，
讓鏈上相鄰的狀態之間只需要一個躍遷選擇性 π 脈衝。
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

from core.errors import LabelingError, PulseProgramError, TopologyError, UnrepairableChainError
from core.permutation import MaximalSet, MaximalSetDecomposition, format_state
from core.topology import (
    Labeling,
    Topology,
    TopologyKind,
    conventional_labeling,
    format_m,
    gray_labeling,
    magnetic_quantum_number,
)

log = logging.getLogger('labeler')

# 全加器在超立方體上的兩輪排程標記 (以 CL 為起點的標記交換)。
FULL_ADDER_TWO_ROUND_SWAPS = ((0b0100, 0b0111), (0b1000, 0b1011))


class Provenance(str, Enum):
    CONVENTIONAL = "conventional"
    GRAY = "gray"
    OLS = "ols"
    RELABELED_PAIRSWAP = "relabeled_pairswap"
    MANUAL = "manual"


class Orientation(str, Enum):
    ASCENDING = "ascending"
    DESCENDING = "descending"


@dataclass(frozen=True)
class SetPlacement:
    """一個最大集合在拓樸上佔據的能階，依鏈的順序排列。"""
    chain: MaximalSet
    levels: tuple[int, ...]
    orientation: Orientation = Orientation.ASCENDING


@dataclass(frozen=True)
class LabelingScheme:
    labeling: Labeling
    provenance: Provenance
    placements: tuple[SetPlacement, ...] = ()

    @property
    def n_qubits(self) -> int:
        return self.labeling.n_qubits

    def covers(self, d: MaximalSetDecomposition) -> bool:
        """放置位置是否恰好對應 d 的所有多元素集合 (讀回的標記表沒有放置資訊)。"""
        return {pl.chain for pl in self.placements} == set(d.nontrivial)

    def is_path_embedded(self, t: Topology) -> bool:
        """每個多元素集合的相鄰鏈元素是否都落在拓樸相鄰的能階上；沒有多元素集合時恆成立。"""
        return all(
            t.has_edge(a, b)
            for placement in self.placements
            for a, b in zip(placement.levels, placement.levels[1:])
        )


def _check_size(d: MaximalSetDecomposition, t: Topology):
    if d.n_qubits != t.n_qubits:
        raise TopologyError(
            f"分解有 {1 << d.n_qubits} 個狀態，但拓樸有 {t.dim} 個能階")


def _placements_for(d: MaximalSetDecomposition, labeling: Labeling) -> tuple[SetPlacement, ...]:
    return tuple(
        SetPlacement(s, tuple(labeling.level_of(state) for state in s))
        for s in d.nontrivial
    )


def scheme_from_labeling(labeling: Labeling, provenance: Provenance,
                         d: MaximalSetDecomposition | None = None) -> LabelingScheme:
    placements = _placements_for(d, labeling) if d is not None else ()
    return LabelingScheme(labeling, provenance, placements)


def conventional_scheme(t: Topology) -> LabelingScheme:
    return LabelingScheme(conventional_labeling(t), Provenance.CONVENTIONAL)


def gray_scheme(t: Topology) -> LabelingScheme:
    if not t.is_chain:
        raise LabelingError("格雷碼標記只適用於四極核鏈")
    return LabelingScheme(gray_labeling(t), Provenance.GRAY)


# --- 四極核鏈 ---

def _placement_order(d: MaximalSetDecomposition) -> list[MaximalSet]:
    # sorted 是穩定排序，同樣大小時保留分解的標準順序
    return sorted(d.sets, key=len, reverse=True)


def _layout(order, orientations) -> tuple[tuple[int, ...], tuple[SetPlacement, ...]]:
    level_to_label = []
    placements = []
    for s, orientation in zip(order, orientations):
        start = len(level_to_label)
        states = s.chain if orientation is Orientation.ASCENDING else s.chain[::-1]
        level_to_label.extend(states)
        if len(s) > 1:
            levels = tuple(range(start, start + len(s)))
            if orientation is Orientation.DESCENDING:
                levels = levels[::-1]
            placements.append(SetPlacement(s, levels, orientation))
    return tuple(level_to_label), tuple(placements)


def ols_quadrupolar(d: MaximalSetDecomposition, t: Topology) -> LabelingScheme:
    """
    依集合大小遞減 (同大小依標準順序) 從能階 0 開始連續擺放，
    每個集合的狀態依鏈的順序升冪排列。
    """
    if t.kind is not TopologyKind.QUADRUPOLAR_CHAIN:
        raise LabelingError("ols_quadrupolar 只適用於四極核鏈")
    _check_size(d, t)
    order = _placement_order(d)
    level_to_label, placements = _layout(order, [Orientation.ASCENDING] * len(order))
    scheme = LabelingScheme(Labeling(t.n_qubits, level_to_label), Provenance.OLS,
                            _ordered_placements(d, placements))
    log.info(f"✅ 已產生四極核鏈的最佳標記 ({len(placements)} 個多元素集合)")
    return scheme


def _ordered_placements(d: MaximalSetDecomposition, placements) -> tuple[SetPlacement, ...]:
    """放置資訊一律依分解的標準集合順序排列，以便合成時依序輸出脈衝。"""
    index = {s.chain: i for i, s in enumerate(d.sets)}
    return tuple(sorted(placements, key=lambda pl: index[pl.chain.chain]))


def enumerate_ols_quadrupolar(d: MaximalSetDecomposition, t: Topology,
                              limit: int | None = None) -> Iterator[LabelingScheme]:
    """
    逐一產生所有最佳標記：集合的排列 × 每個多元素集合的升冪/降冪方向。
    全部列舉時總數為 M!·2^k。limit 為 None 時不設上限。
    """
    if t.kind is not TopologyKind.QUADRUPOLAR_CHAIN:
        raise LabelingError("enumerate_ols_quadrupolar 只適用於四極核鏈")
    _check_size(d, t)
    if limit is not None and limit < 1:
        return

    produced = 0
    for order in itertools.permutations(d.sets):
        flippable = [i for i, s in enumerate(order) if len(s) > 1]
        for flips in itertools.product((Orientation.ASCENDING, Orientation.DESCENDING),
                                       repeat=len(flippable)):
            orientations = [Orientation.ASCENDING] * len(order)
            for i, orientation in zip(flippable, flips):
                orientations[i] = orientation
            level_to_label, placements = _layout(order, orientations)
            yield LabelingScheme(Labeling(t.n_qubits, level_to_label), Provenance.OLS,
                                 _ordered_placements(d, placements))
            produced += 1
            if limit is not None and produced >= limit:
                return


# --- 自旋 1/2 超立方體 ---

def _broken_pairs(chains: list[MaximalSet], labeling: Labeling, t: Topology) -> list[int]:
    """每條鏈中尚未落在躍遷上的相鄰狀態對數目。"""
    return [
        sum(not t.has_edge(labeling.level_of(a), labeling.level_of(b))
            for a, b in zip(s.chain, s.chain[1:]))
        for s in chains
    ]


def relabel_pairswap_spin_half(d: MaximalSetDecomposition, t: Topology) -> LabelingScheme:
    """
    從傳統標記出發，逐條鏈 (大者優先) 以成對交換標記修補，
    直到每條鏈上的相鄰狀態都由一條躍遷相連。

    每一步選擇讓未相連的狀態對總數最少的交換 (同分時取字典序最小的標記對)，
    並且不得破壞已修補完成的鏈。
    """
    if t.kind is not TopologyKind.SPIN_HALF_HYPERCUBE:
        raise LabelingError("relabel_pairswap_spin_half 只適用於自旋 1/2 超立方體")
    _check_size(d, t)

    labeling = conventional_labeling(t)
    chains = [s for s in _placement_order(d) if len(s) > 1]
    for position, chain in enumerate(chains):
        while True:
            broken = _broken_pairs(chains, labeling, t)
            if broken[position] == 0:
                break
            best = None
            members = set(chain.chain)
            for a in range(t.dim):
                for b in range(a + 1, t.dim):
                    if a not in members and b not in members:
                        continue
                    candidate = labeling.swap_labels(a, b)
                    after = _broken_pairs(chains, candidate, t)
                    if any(after[i] for i in range(position)):
                        continue
                    if sum(after) >= sum(broken) or after[position] >= broken[position]:
                        continue
                    if best is None or sum(after) < best[0]:
                        best = (sum(after), candidate, (a, b))
            if best is None:
                raise UnrepairableChainError(
                    chain, f"無法以成對交換標記修補鏈 {chain.format_chain()}")
            labeling = best[1]
            a, b = best[2]
            log.info(f"🔧 交換標記 {format_state(a, t.n_qubits)} <-> {format_state(b, t.n_qubits)}")

    scheme = scheme_from_labeling(labeling, Provenance.RELABELED_PAIRSWAP, d)
    log.info("✅ 已完成超立方體上的成對交換標記")
    return scheme


def apply_label_swaps(scheme: LabelingScheme, swaps, d: MaximalSetDecomposition | None = None) -> LabelingScheme:
    """在既有標記上依序套用明確指定的標記交換，產生 manual 方案。"""
    labeling = scheme.labeling
    for a, b in swaps:
        for label in (a, b):
            if not 0 <= label < len(labeling.level_to_label):
                raise LabelingError(f"標記 {label} 超出範圍")
        labeling = labeling.swap_labels(a, b)
    return scheme_from_labeling(labeling, Provenance.MANUAL, d)


# --- 標記表文件 ---

def format_labeling_table(scheme: LabelingScheme, t: Topology) -> str:
    """每行 `level  [m]  label`；只有鏈會輸出 m。"""
    lines = [f"# provenance: {scheme.provenance.value}"]
    for level in range(t.dim):
        label = scheme.labeling.format_label(level)
        if t.is_chain:
            lines.append(f"{level}  {format_m(magnetic_quantum_number(t, level))}  {label}")
        else:
            lines.append(f"{level}  {label}")
    return "\n".join(lines) + "\n"


def parse_labeling_table(text: str, n_qubits: int) -> LabelingScheme:
    provenance = Provenance.MANUAL
    entries: dict[int, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("# provenance:"):
            try:
                provenance = Provenance(stripped.split(":", 1)[1].strip())
            except ValueError:
                raise PulseProgramError(f"未知的標記來源: {stripped!r}", line_no) from None
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise PulseProgramError(f"標記表的列應為 `level [m] label`: {raw.strip()!r}", line_no)
        try:
            level = int(fields[0])
            label = int(fields[-1], 2)
        except ValueError:
            raise PulseProgramError(f"無法解析的標記表列: {raw.strip()!r}", line_no) from None
        if len(fields[-1]) != n_qubits:
            raise PulseProgramError(f"標記長度應為 {n_qubits}", line_no)
        if level in entries:
            raise PulseProgramError(f"能階 {level} 重複出現", line_no)
        entries[level] = label

    size = 1 << n_qubits
    if sorted(entries) != list(range(size)):
        raise PulseProgramError(f"標記表必須恰好涵蓋能階 0..{size - 1}")
    try:
        labeling = Labeling(n_qubits, tuple(entries[i] for i in range(size)))
    except TopologyError as e:
        raise PulseProgramError(str(e)) from e
    return LabelingScheme(labeling, provenance)

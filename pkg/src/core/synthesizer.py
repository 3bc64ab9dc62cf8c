# core/synthesizer.py
"""
由置換與標記方案產生躍遷選擇性 π_y 脈衝序列。

- 路徑嵌入的方案 (OLS、成對交換)：每個最大集合沿鏈的反向順序施加 |S|−1 個脈衝。
- 固定標記 (CL、Gray 或手動)：把能階上的「代幣」送到目的能階，
  鏈上用氣泡排序 (恰為反序數)，超立方體上用有界的迭代加深搜尋。
- 排程：互不共用能階的脈衝可以同時施加。
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace

import networkx as nx

from core.errors import LabelingError, PulseProgramError, RoutingDepthExceeded, SynthesisError
from core.labeler import (
    LabelingScheme,
    Provenance,
    conventional_scheme,
    gray_scheme,
    ols_quadrupolar,
    relabel_pairswap_spin_half,
)
from core.permutation import (
    MaximalSet,
    Permutation,
    count_optimal_labelings,
    format_state,
    maximal_sets,
    min_pulse_count,
)
from core.topology import Labeling, Topology

log = logging.getLogger('synthesizer')

AXIS = "y"
DEFAULT_NODE_LIMIT = 300_000


@dataclass(frozen=True)
class SynthesisConfig:
    depth_cap: int | None = None
    node_limit: int = DEFAULT_NODE_LIMIT


@dataclass(frozen=True)
class Pulse:
    """一個作用在躍遷 (level_a, level_b) 上的 π_y 脈衝，level_a < level_b。"""
    level_a: int
    level_b: int
    label_a: int | None = None
    label_b: int | None = None
    number: int = 0

    def __post_init__(self):
        if self.level_a == self.level_b:
            raise SynthesisError(f"脈衝的兩端必須是不同能階: {self.level_a}")
        if self.level_a > self.level_b:
            a, b, la, lb = self.level_b, self.level_a, self.label_b, self.label_a
            object.__setattr__(self, "level_a", a)
            object.__setattr__(self, "level_b", b)
            object.__setattr__(self, "label_a", la)
            object.__setattr__(self, "label_b", lb)

    @property
    def levels(self) -> tuple[int, int]:
        return self.level_a, self.level_b

    def shares_level(self, other: Pulse) -> bool:
        return bool({self.level_a, self.level_b} & {other.level_a, other.level_b})


@dataclass(frozen=True)
class PulseSequence:
    """依施加順序排列的脈衝，分成若干輪；同一輪內的脈衝同時施加。"""
    n_qubits: int
    rounds: tuple[tuple[Pulse, ...], ...] = ()
    optimal: bool = True

    @classmethod
    def sequential(cls, n_qubits: int, pulses, optimal: bool = True) -> PulseSequence:
        return cls(n_qubits, tuple((p,) for p in pulses), optimal)

    @property
    def pulses(self) -> tuple[Pulse, ...]:
        return tuple(p for group in self.rounds for p in group)

    def __len__(self) -> int:
        return sum(len(group) for group in self.rounds)

    @property
    def round_count(self) -> int:
        return len(self.rounds)

    def check_edges(self, t: Topology):
        for p in self.pulses:
            if not t.has_edge(p.level_a, p.level_b):
                raise SynthesisError(f"脈衝 ({p.level_a}, {p.level_b}) 不在單量子躍遷上")


def _numbered(pulses) -> list[Pulse]:
    return [replace(p, number=i) for i, p in enumerate(pulses, start=1)]


def _annotate(labeling: Labeling, a: int, b: int) -> Pulse:
    return Pulse(a, b, labeling.label_of(a), labeling.label_of(b))


# --- 路徑上的合成 ---

def synthesize_on_path(chain: MaximalSet, placement, t: Topology | None = None) -> PulseSequence:
    """
    placement[j] 是鏈上第 j 個狀態所在的能階。脈衝依鏈的反向順序施加：
    先交換最後一對，最後才交換第一對。
    """
    placement = tuple(placement)
    if len(chain) < 2:
        raise SynthesisError("單一狀態的集合不需要脈衝")
    if len(placement) != len(chain):
        raise SynthesisError(f"放置長度 {len(placement)} 與集合大小 {len(chain)} 不符")
    if t is not None:
        for a, b in zip(placement, placement[1:]):
            if not t.has_edge(a, b):
                raise SynthesisError(
                    f"能階 {a} 與 {b} 之間沒有躍遷，集合 {chain.format_set()} 的放置不是路徑")

    pulses = [
        Pulse(placement[j], placement[j + 1], chain.chain[j], chain.chain[j + 1])
        for j in range(len(chain) - 2, -1, -1)
    ]
    return PulseSequence.sequential(chain.n_qubits, _numbered(pulses))


# --- 固定標記的路由 ---

def level_permutation(p: Permutation, labeling: Labeling) -> list[int]:
    """能階 j 上的內容最後應到達的能階 σ(j)。"""
    return [labeling.level_of(p(labeling.label_of(level))) for level in range(len(labeling.level_to_label))]


def _bubble_route(sigma: list[int]) -> list[tuple[int, int]]:
    """鏈上的相鄰交換；交換次數恰為 σ 的反序數。"""
    state = list(sigma)
    swaps = []
    for end in range(len(state) - 1, 0, -1):
        changed = False
        for i in range(end):
            if state[i] > state[i + 1]:
                state[i], state[i + 1] = state[i + 1], state[i]
                swaps.append((i, i + 1))
                changed = True
        if not changed:
            break
    return swaps


def _tree_route(t: Topology, sigma: list[int]) -> list[tuple[int, int]]:
    """
    生成樹上的可行路由：每次取編號最小的葉節點，把目的地是它的代幣沿樹上路徑送過去，
    然後移除該葉節點。結果不一定最短，但永遠可行，作為搜尋的上界。
    """
    state = list(sigma)
    position = {dest: level for level, dest in enumerate(state)}
    remaining = nx.Graph(nx.bfs_tree(t.graph, 0))
    swaps = []
    while remaining.number_of_nodes() > 1:
        leaf = min(v for v in remaining.nodes if remaining.degree(v) == 1)
        path = nx.shortest_path(remaining, position[leaf], leaf)
        for u, v in zip(path, path[1:]):
            state[u], state[v] = state[v], state[u]
            position[state[u]] = u
            position[state[v]] = v
            swaps.append((min(u, v), max(u, v)))
        remaining.remove_node(leaf)
    return swaps


class _BudgetExhausted(Exception):
    pass


class _TokenSearch:
    """
    以迭代加深搜尋最短的邊交換序列 (代幣交換)。
    下界為 Σ距離/2；邊依字典序嘗試，不交換兩個都已就位的代幣，
    每一輪深度使用置換表避免重複展開。
    """

    def __init__(self, t: Topology, sigma: list[int], node_limit: int):
        self.dist = t.distances
        self.edges = t.edges
        self.state = list(sigma)
        self.node_limit = node_limit
        self.nodes = 0
        self.path: list[tuple[int, int]] = []
        self.visited: dict[tuple[int, ...], int] = {}

    def distance_sum(self) -> int:
        return sum(self.dist[level][dest] for level, dest in enumerate(self.state))

    def run(self, depth: int) -> list[tuple[int, int]] | None:
        self.visited = {}
        self.path = []
        if self._search(0, depth, self.distance_sum(), None):
            return list(self.path)
        return None

    def _search(self, g: int, bound: int, hsum: int, last) -> bool:
        if hsum == 0:
            return True
        if g + (hsum + 1) // 2 > bound:
            return False
        key = tuple(self.state)
        seen = self.visited.get(key)
        if seen is not None and seen <= g:
            return False
        self.visited[key] = g
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise _BudgetExhausted()

        state, dist = self.state, self.dist
        for edge in self.edges:
            if edge == last:
                continue
            a, b = edge
            ta, tb = state[a], state[b]
            if ta == a and tb == b:
                continue
            new_h = hsum + dist[b][ta] - dist[a][ta] + dist[a][tb] - dist[b][tb]
            if g + 1 + (new_h + 1) // 2 > bound:
                continue
            state[a], state[b] = tb, ta
            self.path.append(edge)
            if self._search(g + 1, bound, new_h, edge):
                return True
            self.path.pop()
            state[a], state[b] = ta, tb
        return False


def _cycle_count(sigma: list[int]) -> int:
    seen = [False] * len(sigma)
    cycles = 0
    for start in range(len(sigma)):
        if seen[start]:
            continue
        cycles += 1
        level = start
        while not seen[level]:
            seen[level] = True
            level = sigma[level]
    return cycles


def _route_hypercube(t: Topology, sigma: list[int], config: SynthesisConfig,
                     displaced_sets) -> tuple[list[tuple[int, int]], bool]:
    search = _TokenSearch(t, sigma, config.node_limit)
    lower = max(len(sigma) - _cycle_count(sigma), math.ceil(search.distance_sum() / 2))
    if lower == 0:
        return [], True

    fallback = _tree_route(t, sigma)
    cap = config.depth_cap if config.depth_cap is not None else len(fallback)
    log.info(f"🔍 路由搜尋: 下界 {lower}，可行上界 {len(fallback)}，深度上限 {cap}")

    exhausted = False
    for depth in range(lower, min(cap, len(fallback) - 1) + 1):
        try:
            found = search.run(depth)
        except _BudgetExhausted:
            log.warning(f"⚠️ 搜尋節點超過上限 {config.node_limit}，改用已知的可行路由")
            exhausted = True
            break
        if found is not None:
            log.info(f"✅ 找到最短路由，深度 {depth} (展開 {search.nodes} 個節點)")
            return found, True

    if len(fallback) <= cap:
        return fallback, not exhausted
    raise RoutingDepthExceeded(displaced_sets, cap, len(fallback))


def synthesize_fixed_labeling(p: Permutation, scheme: LabelingScheme, t: Topology,
                              config: SynthesisConfig | None = None) -> PulseSequence:
    """
    在固定標記下找出實現 p 的最短邊交換序列。
    所有需要移動的能階一起路由；分開處理交錯的軌道不一定最短。
    """
    config = config or SynthesisConfig()
    labeling = scheme.labeling
    sigma = level_permutation(p, labeling)

    if t.is_chain:
        swaps = _bubble_route(sigma)
        optimal = True
        if config.depth_cap is not None and len(swaps) > config.depth_cap:
            displaced = [s for s in maximal_sets(p).nontrivial]
            raise RoutingDepthExceeded(displaced, config.depth_cap, len(swaps))
    else:
        displaced = maximal_sets(p).nontrivial
        swaps, optimal = _route_hypercube(t, sigma, config, displaced)

    pulses = _numbered(_annotate(labeling, a, b) for a, b in swaps)
    log.info(f"📊 固定標記 ({scheme.provenance.value}) 需要 {len(pulses)} 個脈衝")
    return PulseSequence.sequential(p.n_qubits, pulses, optimal)


def synthesize(p: Permutation, scheme: LabelingScheme, t: Topology,
               config: SynthesisConfig | None = None) -> PulseSequence:
    """路徑嵌入的方案逐集合合成，其他方案交給固定標記路由。"""
    path_based = scheme.provenance in (Provenance.OLS, Provenance.RELABELED_PAIRSWAP)
    if path_based and scheme.covers(maximal_sets(p)) and scheme.is_path_embedded(t):
        pulses = []
        for placement in scheme.placements:
            pulses.extend(synthesize_on_path(placement.chain, placement.levels, t).pulses)
        log.info(f"📊 路徑嵌入方案 ({scheme.provenance.value}) 需要 {len(pulses)} 個脈衝")
        return PulseSequence.sequential(p.n_qubits, _numbered(pulses))
    return synthesize_fixed_labeling(p, scheme, t, config)


# --- 排程 ---

def schedule_rounds(seq: PulseSequence) -> PulseSequence:
    """
    貪婪地把每個脈衝放進最早的一輪：必須晚於所有與它共用能階的較早脈衝。
    被調換順序的脈衝彼此不共用能階，因此乘積不變。
    """
    round_of: list[int] = []
    pulses = seq.pulses
    for k, pulse in enumerate(pulses):
        earliest = 0
        for j in range(k):
            if pulses[j].shares_level(pulse):
                earliest = max(earliest, round_of[j] + 1)
        round_of.append(earliest)

    groups: list[list[Pulse]] = [[] for _ in range(max(round_of, default=-1) + 1)]
    for pulse, r in zip(pulses, round_of):
        groups[r].append(pulse)
    return PulseSequence(seq.n_qubits, tuple(tuple(g) for g in groups), seq.optimal)


# --- 脈衝程式文件 ---

_PULSE_RE = re.compile(r"^(\d+)\s+pi_y\s+(\d+)\s+(\d+)\s*(?:#\s*\|([01]+)>\s*<->\s*\|([01]+)>)?\s*$")


def format_pulse_program(seq: PulseSequence) -> str:
    lines = []
    for index, group in enumerate(seq.rounds):
        for p in group:
            line = f"{index}  pi_{AXIS}  {p.level_a}  {p.level_b}"
            if p.label_a is not None and p.label_b is not None:
                line += (f"  # |{format_state(p.label_a, seq.n_qubits)}>"
                         f" <-> |{format_state(p.label_b, seq.n_qubits)}>")
            lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


def parse_pulse_program(text: str, n_qubits: int, t: Topology | None = None) -> PulseSequence:
    groups: list[list[Pulse]] = []
    current_round = -1
    number = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = _PULSE_RE.match(line)
        if not match:
            raise PulseProgramError(f"無法解析的脈衝: {line!r}", line_no)
        round_index, a, b = (int(x) for x in match.group(1, 2, 3))
        dim = 1 << n_qubits
        if a >= dim or b >= dim or a == b:
            raise PulseProgramError(f"能階 ({a}, {b}) 不合法", line_no)
        if t is not None and not t.has_edge(a, b):
            raise PulseProgramError(f"能階 {a} 與 {b} 之間沒有單量子躍遷", line_no)
        if round_index < current_round:
            raise PulseProgramError("輪次編號必須遞增", line_no)
        if round_index != current_round:
            groups.append([])
            current_round = round_index
        labels = match.group(4, 5)
        label_a, label_b = (int(labels[0], 2), int(labels[1], 2)) if labels[0] else (None, None)
        number += 1
        pulse = Pulse(a, b, label_a, label_b, number)
        if any(other.shares_level(pulse) for other in groups[-1]):
            raise PulseProgramError(f"第 {round_index} 輪內有脈衝共用能階", line_no)
        groups[-1].append(pulse)
    return PulseSequence(n_qubits, tuple(tuple(g) for g in groups))


# --- 脈衝數比較 ---

@dataclass(frozen=True)
class SchemeCount:
    scheme: str
    pulses: int | None
    rounds: int | None
    optimal: bool = True
    error: str | None = None


@dataclass(frozen=True)
class PulseCountReport:
    topology: str
    lower_bound: int
    optimal_labelings: int
    entries: tuple[SchemeCount, ...] = field(default_factory=tuple)

    def counts(self) -> dict[str, int | None]:
        return {e.scheme: e.pulses for e in self.entries}

    def discrepancies(self, expected: dict[str, int]) -> list[str]:
        routed = self.counts()
        flags = []
        for scheme, count in expected.items():
            actual = routed.get(scheme)
            if actual != count:
                flags.append(f"{scheme} expected {count} routed {actual if actual is not None else 'n/a'}")
        return flags

    def format(self) -> str:
        lines = [
            f"topology: {self.topology}",
            f"lower_bound: {self.lower_bound}",
            f"optimal_labelings: {self.optimal_labelings}",
        ]
        for e in self.entries:
            lines.append(f"{e.scheme}: {e.pulses if e.pulses is not None else 'n/a'}")
        for e in self.entries:
            lines.append(f"rounds.{e.scheme}: {e.rounds if e.rounds is not None else 'n/a'}")
        for e in self.entries:
            if e.error:
                lines.append(f"error.{e.scheme}: {e.error}")
            elif not e.optimal:
                lines.append(f"note.{e.scheme}: search budget exhausted, count is an upper bound")
        return "\n".join(lines)


def pulse_count_report(p: Permutation, t: Topology, config: SynthesisConfig | None = None) -> PulseCountReport:
    d = maximal_sets(p)
    candidates = [("cl", lambda: conventional_scheme(t))]
    if t.is_chain:
        candidates.append(("gray", lambda: gray_scheme(t)))
        candidates.append(("ols", lambda: ols_quadrupolar(d, t)))
    else:
        candidates.append(("ols", lambda: relabel_pairswap_spin_half(d, t)))

    entries = []
    for name, build in candidates:
        try:
            seq = synthesize(p, build(), t, config)
        except (LabelingError, SynthesisError) as e:
            log.warning(f"❌ {name} 方案失敗: {e}")
            entries.append(SchemeCount(name, None, None, error=str(e)))
            continue
        entries.append(SchemeCount(name, len(seq), schedule_rounds(seq).round_count, seq.optimal))

    return PulseCountReport(t.kind.value, min_pulse_count(d), count_optimal_labelings(d), tuple(entries))

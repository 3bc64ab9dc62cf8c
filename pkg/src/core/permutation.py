# core/permutation.py
"""
可逆真值表的表示、組合與最大集合 (軌道) 分解。

狀態以整數索引表示，x₁ 為最高有效位元，與 ket |x₁x₂…x_N⟩ 的書寫順序一致。
"""
from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from core.errors import QubitCountMismatch, TruthTableError, UnknownOperationError

log = logging.getLogger('permutation')

MAX_QUBITS = 10

_HEADER_RE = re.compile(r"^qubits\s*:\s*(\d+)$", re.IGNORECASE)
_ROW_RE = re.compile(r"^([01]+)\s*(?:->|→)\s*([01]+)$")


def format_state(index: int, n_qubits: int) -> str:
    """將狀態索引轉為 N 位元的字串，例如 4 -> '0100'。"""
    return format(index, f"0{n_qubits}b")


def format_ket(index: int, n_qubits: int) -> str:
    return f"|{format_state(index, n_qubits)}>"


def _check_qubits(n_qubits: int):
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise TruthTableError(f"量子位元數必須介於 1 與 {MAX_QUBITS} 之間，收到 {n_qubits}")


@dataclass(frozen=True)
class Permutation:
    """
    一個可逆的邏輯運算：2^N 個基底狀態上的雙射。
    mapping[i] 為輸入 i 的輸出。
    """
    n_qubits: int
    mapping: tuple[int, ...]

    def __post_init__(self):
        _check_qubits(self.n_qubits)
        size = 1 << self.n_qubits
        if len(self.mapping) != size:
            raise TruthTableError(f"對照表長度應為 {size}，實際為 {len(self.mapping)}")
        if set(self.mapping) != set(range(size)):
            raise TruthTableError("對照表不是雙射 (有輸出重複或超出範圍)")

    @property
    def size(self) -> int:
        return len(self.mapping)

    def __call__(self, state: int) -> int:
        return self.mapping[state]

    def inverse(self) -> Permutation:
        inverted = [0] * self.size
        for i, out in enumerate(self.mapping):
            inverted[out] = i
        return Permutation(self.n_qubits, tuple(inverted))

    def is_identity(self) -> bool:
        return all(i == out for i, out in enumerate(self.mapping))

    @classmethod
    def identity(cls, n_qubits: int) -> Permutation:
        return cls(n_qubits, tuple(range(1 << n_qubits)))


@dataclass(frozen=True)
class MaximalSet:
    """一條軌道鏈 s₁ → s₂ → … → s_L，且 p(s_L) = s₁。"""
    chain: tuple[int, ...]
    n_qubits: int

    def __len__(self) -> int:
        return len(self.chain)

    def __iter__(self):
        return iter(self.chain)

    def __contains__(self, state: int) -> bool:
        return state in self.chain

    @property
    def head(self) -> int:
        return self.chain[0]

    def format_chain(self) -> str:
        kets = [format_ket(s, self.n_qubits) for s in self.chain]
        if len(kets) > 1:
            kets.append(kets[0])
        return " -> ".join(kets)

    def format_set(self, index: int | None = None) -> str:
        body = ",".join(format_ket(s, self.n_qubits) for s in self.chain)
        name = f"S{index}=" if index is not None else ""
        return f"{name}{{{body}}}"

    def format_row(self, index: int) -> str:
        """集合表的一列：左欄為轉換鏈，右欄為集合本身。"""
        return f"{self.format_chain()}    {self.format_set(index)}"


@dataclass(frozen=True)
class MaximalSetDecomposition:
    n_qubits: int
    sets: tuple[MaximalSet, ...]

    def __iter__(self):
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    @property
    def nontrivial(self) -> tuple[MaximalSet, ...]:
        return tuple(s for s in self.sets if len(s) > 1)

    @cached_property
    def set_of_state(self) -> dict[int, int]:
        return {state: i for i, s in enumerate(self.sets) for state in s}

    def format_table(self) -> str:
        return "\n".join(s.format_row(i) for i, s in enumerate(self.sets, start=1))


# --- 真值表文件 ---

def parse_truth_table(text: str) -> Permutation:
    """
    解析真值表文件。

    格式：第一個非註解行為 `qubits: N`，接著恰好 2^N 行 `BITS -> BITS`，
    `#` 之後為註解。輸入列的順序不限。
    """
    n_qubits = None
    outputs: dict[int, int] = {}
    seen_outputs: dict[int, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n_qubits is None:
            header = _HEADER_RE.match(line)
            if not header:
                raise TruthTableError("缺少標頭 'qubits: N'", line_no)
            n_qubits = int(header.group(1))
            try:
                _check_qubits(n_qubits)
            except TruthTableError as e:
                raise TruthTableError(str(e), line_no) from e
            continue

        row = _ROW_RE.match(line)
        if not row:
            raise TruthTableError(f"無法解析的列: {raw.strip()!r}", line_no)
        src_bits, dst_bits = row.groups()
        if len(src_bits) != n_qubits or len(dst_bits) != n_qubits:
            raise TruthTableError(f"位元字串長度應為 {n_qubits}", line_no)
        src, dst = int(src_bits, 2), int(dst_bits, 2)
        if src in outputs:
            raise TruthTableError(f"輸入 {src_bits} 重複出現", line_no)
        if dst in seen_outputs:
            raise TruthTableError(
                f"輸出 {dst_bits} 同時對應到兩個輸入，運算不可逆", line_no)
        outputs[src] = dst
        seen_outputs[dst] = src

    if n_qubits is None:
        raise TruthTableError("文件是空的")
    size = 1 << n_qubits
    missing = [format_state(i, n_qubits) for i in range(size) if i not in outputs]
    if missing:
        raise TruthTableError(f"缺少輸入列: {', '.join(missing)}")
    return Permutation(n_qubits, tuple(outputs[i] for i in range(size)))


def format_truth_table(p: Permutation) -> str:
    lines = [f"qubits: {p.n_qubits}"]
    lines += [f"{format_state(i, p.n_qubits)} -> {format_state(out, p.n_qubits)}"
              for i, out in enumerate(p.mapping)]
    return "\n".join(lines) + "\n"


# --- 代數運算 ---

def compose(first: Permutation, second: Permutation) -> Permutation:
    """先套用 first 再套用 second：result[i] = second[first[i]]。"""
    if first.n_qubits != second.n_qubits:
        raise QubitCountMismatch(
            f"無法組合 {first.n_qubits} 與 {second.n_qubits} 量子位元的運算")
    return Permutation(first.n_qubits, tuple(second.mapping[out] for out in first.mapping))


def maximal_sets(p: Permutation) -> MaximalSetDecomposition:
    """
    依真值表的閱讀順序建構最大集合：
    每次取尚未涵蓋的最小狀態為起點，沿著轉換順序走回起點。
    """
    covered = [False] * p.size
    sets = []
    for start in range(p.size):
        if covered[start]:
            continue
        chain = []
        state = start
        while not covered[state]:
            covered[state] = True
            chain.append(state)
            state = p.mapping[state]
        sets.append(MaximalSet(tuple(chain), p.n_qubits))
    return MaximalSetDecomposition(p.n_qubits, tuple(sets))


def min_pulse_count(d: MaximalSetDecomposition) -> int:
    """最少脈衝數 N_p = Σ(|S_i| − 1)。"""
    return sum(len(s) - 1 for s in d)


def count_optimal_labelings(d: MaximalSetDecomposition) -> int:
    """最佳標記的數目 P = M!·2^k，k 為元素多於一個的集合數。Python 整數不會溢位。"""
    return math.factorial(len(d)) * (2 ** len(d.nontrivial))


# --- 內建運算 ---

def _bit(state: int, qubit: int, n_qubits: int) -> int:
    """qubit 以 1 起算，1 為最高有效位元。"""
    return (state >> (n_qubits - qubit)) & 1


def full_adder4() -> Permutation:
    """
    四量子位元全加器：X₁=C₀, X₂=A, X₃=B, X₄=L。
    Y₃ = C₀⊕A⊕B，Y₄ = L⊕(AB⊕AC₀⊕BC₀)，其餘位元不變。
    """
    mapping = []
    for state in range(16):
        c0, a, b, l = (_bit(state, q, 4) for q in (1, 2, 3, 4))
        y3 = c0 ^ a ^ b
        y4 = l ^ ((a & b) ^ (a & c0) ^ (b & c0))
        mapping.append((c0 << 3) | (a << 2) | (y3 << 1) | y4)
    return Permutation(4, tuple(mapping))


def swap_qubits(n_qubits: int, i: int, j: int) -> Permutation:
    """交換每個狀態的第 i 與第 j 個位元。"""
    _check_qubits(n_qubits)
    for q in (i, j):
        if not 1 <= q <= n_qubits:
            raise UnknownOperationError(f"量子位元索引 {q} 超出範圍 1..{n_qubits}")
    mapping = []
    for state in range(1 << n_qubits):
        bi, bj = _bit(state, i, n_qubits), _bit(state, j, n_qubits)
        out = state
        if bi != bj:
            out ^= (1 << (n_qubits - i)) | (1 << (n_qubits - j))
        mapping.append(out)
    return Permutation(n_qubits, tuple(mapping))


def builtin_operation(name: str, n_qubits: int, qubits: tuple[int, int] | None = None) -> Permutation:
    key = name.lower().replace("_", "")
    if key == "fulladder4":
        if n_qubits != 4:
            raise QubitCountMismatch(f"全加器需要 4 個量子位元，收到 {n_qubits}")
        return full_adder4()
    if key == "swap":
        if qubits is None:
            raise UnknownOperationError("swap 需要兩個量子位元索引")
        return swap_qubits(n_qubits, *qubits)
    if key == "identity":
        _check_qubits(n_qubits)
        return Permutation.identity(n_qubits)
    raise UnknownOperationError(f"未知的內建運算: {name!r}")


_OP_RE = re.compile(r"^(?P<name>[a-z_0-9]+)(?::(?P<args>[0-9,\s]+))?$", re.IGNORECASE)


def _resolve_one(spec: str, n_qubits: int | None) -> tuple[Permutation | None, int | None]:
    """解析單一運算字串；若需要 N 但尚未得知，回傳 (None, None) 讓呼叫端稍後再解析。"""
    path = Path(spec)
    if path.is_file():
        p = parse_truth_table(path.read_text(encoding="utf-8"))
        return p, p.n_qubits
    if path.suffix or "/" in spec:
        raise TruthTableError(f"找不到真值表檔案: {spec}")

    match = _OP_RE.match(spec.strip())
    if not match:
        raise UnknownOperationError(f"無法辨識的運算: {spec!r}")
    name = match.group("name").lower().replace("_", "")
    args = [int(a) for a in (match.group("args") or "").replace(" ", "").split(",") if a]

    if name == "fulladder4":
        return builtin_operation(name, n_qubits or 4), 4
    if name == "identity" and args:
        return builtin_operation(name, args[0]), args[0]
    if name == "swap" and len(args) != 2:
        raise UnknownOperationError(f"swap 需要恰好兩個索引，例如 swap:2,4，收到 {spec!r}")
    if name not in ("identity", "swap"):
        raise UnknownOperationError(f"未知的內建運算: {spec!r}")
    if n_qubits is None:
        return None, None
    qubits = (args[0], args[1]) if name == "swap" else None
    return builtin_operation(name, n_qubits, qubits), n_qubits


def resolve_operations(specs: list[str], n_qubits: int | None = None) -> Permutation:
    """
    將運算字串 (內建名稱或真值表路徑) 由左到右組合成單一置換。
    N 取自第一個能決定它的運算，或由 n_qubits 指定。
    """
    if not specs:
        raise UnknownOperationError("至少需要一個運算")

    if n_qubits is None:
        for spec in specs:
            _, n = _resolve_one(spec, None)
            if n is not None:
                n_qubits = n
                break
    if n_qubits is None:
        raise UnknownOperationError("無法推斷量子位元數，請以 --qubits 指定")

    result = Permutation.identity(n_qubits)
    for spec in specs:
        p, _ = _resolve_one(spec, n_qubits)
        result = compose(result, p)
    log.info(f"🔧 已組合 {len(specs)} 個運算 ({n_qubits} 量子位元): {' + '.join(specs)}")
    return result


def random_permutation(n_qubits: int, rng: random.Random) -> Permutation:
    mapping = list(range(1 << n_qubits))
    rng.shuffle(mapping)
    return Permutation(n_qubits, tuple(mapping))

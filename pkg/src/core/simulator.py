# core/simulator.py
"""
脈衝序列的矩陣模擬、置換驗證，以及布居數與棒狀譜。

矩陣的書寫方式：乘積依施加順序由左到右 U = P₁·P₂·…·P_k，
第 j 列描述能階 j 上的振幅最後到哪裡去 (列向量作用)。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from core.errors import SynthesisError
from core.labeler import LabelingScheme
from core.permutation import Permutation, format_state
from core.synthesizer import Pulse, PulseSequence, level_permutation
from core.topology import Topology, format_m, magnetic_quantum_number, spin_state

log = logging.getLogger('simulator')

TOLERANCE = 1e-9


# --- 么正矩陣 ---

def pulse_unitary(pulse: Pulse | tuple[int, int], dim: int) -> np.ndarray:
    """單位矩陣，但在 (a, b) 的 2×2 區塊放入 (0, 1 / −1, 0)，a < b。"""
    a, b = pulse.levels if isinstance(pulse, Pulse) else sorted(pulse)
    if a == b or not (0 <= a < dim and 0 <= b < dim):
        raise SynthesisError(f"脈衝能階 ({a}, {b}) 不合法 (維度 {dim})")
    u = np.eye(dim)
    u[a, a] = u[b, b] = 0.0
    u[a, b] = 1.0
    u[b, a] = -1.0
    return u


def sequence_unitary(seq: PulseSequence, dim: int) -> np.ndarray:
    """
    依施加順序右乘每個脈衝。右乘 P(a,b) 只會改動第 a、b 兩欄：
    新的第 a 欄 = −舊的第 b 欄，新的第 b 欄 = 舊的第 a 欄。
    dim 可以小於序列所屬系統的維度 (只模擬子空間)，但必須涵蓋所有脈衝的能階。
    """
    u = np.eye(dim)
    for pulse in seq.pulses:
        a, b = pulse.levels
        if b >= dim:
            raise SynthesisError(f"脈衝能階 {b} 超出維度 {dim}")
        col_a = u[:, a].copy()
        u[:, a] = -u[:, b]
        u[:, b] = col_a
    return u


def is_unitary(u: np.ndarray, tol: float = TOLERANCE) -> bool:
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def subspace(u: np.ndarray, levels) -> np.ndarray:
    """擷取指定能階 (依給定順序) 構成的子區塊。"""
    idx = np.asarray(list(levels))
    return u[np.ix_(idx, idx)]


# --- 驗證 ---

@dataclass(frozen=True)
class Verdict:
    passed: bool
    realized: tuple[int | None, ...]
    expected: tuple[int, ...]
    phases: tuple[float, ...]
    mismatches: tuple[str, ...] = ()

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def format(self) -> str:
        realized = " ".join("?" if r is None else str(r) for r in self.realized)
        phases = " ".join(_format_phase(ph) for ph in self.phases)
        lines = [f"verdict: {self.label}", f"realized: {realized}", f"phases: {phases}"]
        lines += [f"mismatch: {m}" for m in self.mismatches]
        return "\n".join(lines)


def _format_phase(value: float) -> str:
    if np.isnan(value):
        return "?"
    return f"{value:+.0f}" if abs(abs(value) - 1) <= TOLERANCE else f"{value:+.3f}"


def verify_permutation(u: np.ndarray, p: Permutation, scheme: LabelingScheme,
                       tol: float = TOLERANCE) -> Verdict:
    """
    容許相位的檢查：第 j 列必須恰有一個模長為 1 的元素，
    且位置在標記方案下 p 把能階 j 的標記送到的能階。
    """
    dim = 1 << p.n_qubits
    if u.shape != (dim, dim):
        raise SynthesisError(f"矩陣維度 {u.shape} 與 {p.n_qubits} 量子位元不符")
    expected = level_permutation(p, scheme.labeling)
    labeling = scheme.labeling

    realized: list[int | None] = []
    phases: list[float] = []
    mismatches: list[str] = []
    for j in range(dim):
        row = np.abs(u[j])
        units = np.flatnonzero(np.abs(row - 1.0) <= tol)
        others = np.delete(row, units)
        if len(units) == 1 and np.all(others <= tol):
            k = int(units[0])
            realized.append(k)
            phases.append(float(np.real(u[j, k])))
        else:
            realized.append(None)
            phases.append(float("nan"))
        if realized[-1] != expected[j]:
            src = format_state(labeling.label_of(j), p.n_qubits)
            want = format_state(labeling.label_of(expected[j]), p.n_qubits)
            got = "?" if realized[-1] is None else format_state(labeling.label_of(realized[-1]), p.n_qubits)
            mismatches.append(f"|{src}> -> |{got}> (expected |{want}>)")

    verdict = Verdict(not mismatches, tuple(realized), tuple(expected), tuple(phases), tuple(mismatches))
    if verdict.passed:
        log.info("✅ 驗證通過：脈衝乘積實現了目標置換 (相位不列入判斷)")
    else:
        log.warning(f"❌ 驗證失敗：{len(mismatches)} 個狀態不符")
    return verdict


# --- 布居數與棒狀譜 ---

@dataclass(frozen=True, eq=False)
class PopulationVector:
    """每個能階的偏差布居數；一次自旋翻轉改變 1。"""
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, level: int) -> float:
        return float(self.values[level])


def equilibrium_populations(t: Topology, scheme: LabelingScheme | None = None) -> PopulationVector:
    """
    超立方體：α 自旋數 − N/2。
    鏈：能階上沒有個別自旋，布居數取 m = I − level，相鄰能階相差 1。
    scheme 只決定報表中的標記，不影響能階的布居數。
    """
    if t.is_chain:
        values = [float(magnetic_quantum_number(t, level)) for level in range(t.dim)]
    else:
        values = [(t.n_qubits - bin(level).count("1")) - t.n_qubits / 2 for level in range(t.dim)]
    return PopulationVector(np.array(values, dtype=float))


def final_populations(eq: PopulationVector, p: Permutation, scheme: LabelingScheme) -> PopulationVector:
    """布居數隨狀態移動：final[σ(j)] = initial[j]。"""
    sigma = level_permutation(p, scheme.labeling)
    if len(sigma) != len(eq):
        raise SynthesisError("布居數向量與置換的大小不符")
    final = np.empty_like(eq.values)
    final[np.asarray(sigma)] = eq.values
    return PopulationVector(final)


@dataclass(frozen=True)
class Stick:
    spin_index: int
    transition_label: str
    level_a: int
    level_b: int
    intensity: int


@dataclass(frozen=True)
class StickSpectrum:
    sticks: tuple[Stick, ...]

    def by_spin(self) -> dict[int, tuple[Stick, ...]]:
        groups: dict[int, list[Stick]] = {}
        for stick in self.sticks:
            groups.setdefault(stick.spin_index, []).append(stick)
        return {spin: tuple(s) for spin, s in groups.items()}

    def intensities(self) -> tuple[int, ...]:
        return tuple(s.intensity for s in self.sticks)

    def find(self, spin_index: int, transition_label: str) -> Stick:
        for stick in self.sticks:
            if stick.spin_index == spin_index and stick.transition_label == transition_label:
                return stick
        raise KeyError((spin_index, transition_label))

    def format_table(self) -> str:
        lines = ["spin_index  transition_label  intensity"]
        lines += [f"{s.spin_index}  {s.transition_label}  {s.intensity:+d}" for s in self.sticks]
        return "\n".join(lines)


def _intensity(pop: PopulationVector, a: int, b: int) -> int:
    return int(round(pop[a] - pop[b]))


def stick_spectrum(pop: PopulationVector, t: Topology, scheme: LabelingScheme | None = None) -> StickSpectrum:
    """
    每條躍遷一根譜線，強度為兩端布居數差 (能階編號較小者減較大者)。
    超立方體依翻轉的自旋分組，同組內依旁觀自旋的 α/β 標記排序。
    """
    sticks = []
    if t.is_chain:
        for a, b in t.edges:
            label = f"{format_m(magnetic_quantum_number(t, a))}<->{format_m(magnetic_quantum_number(t, b))}"
            sticks.append(Stick(1, label, a, b, _intensity(pop, a, b)))
    else:
        n = t.n_qubits
        for spin in range(1, n + 1):
            bit = 1 << (n - spin)
            group = []
            for a in range(t.dim):
                if a & bit:
                    continue
                b = a | bit
                state = spin_state(a, n)
                spectators = state[:spin - 1] + state[spin:]
                group.append(Stick(spin, spectators, a, b, _intensity(pop, a, b)))
            sticks.extend(sorted(group, key=lambda s: s.transition_label))
    return StickSpectrum(tuple(sticks))


def spin_group_totals(spectrum: StickSpectrum) -> dict[int, int]:
    return {spin: sum(s.intensity for s in group) for spin, group in spectrum.by_spin().items()}


def population_difference_totals(pop: PopulationVector, t: Topology) -> dict[int, int]:
    """
    每個自旋的譜線總強度 = Σ(該位元為 0 的布居數) − Σ(該位元為 1 的布居數)；
    鏈只有一組，總和為首尾能階的差。
    """
    if t.is_chain:
        return {1: int(round(pop[0] - pop[t.dim - 1]))}
    totals = {}
    for spin in range(1, t.n_qubits + 1):
        bit = 1 << (t.n_qubits - spin)
        low = sum(pop[level] for level in range(t.dim) if not level & bit)
        high = sum(pop[level] for level in range(t.dim) if level & bit)
        totals[spin] = int(round(low - high))
    return totals


def render_sticks(spectrum: StickSpectrum, height: int = 2) -> str:
    """以直立的 ASCII 長條畫出棒狀譜，正值向上、負值向下，每一欄一根譜線。"""
    values = spectrum.intensities()
    if not values:
        return ""
    scale = max(height, max(abs(v) for v in values))
    rows = []
    for level in range(scale, 0, -1):
        rows.append("".join("|" if v >= level else " " for v in values).rstrip())
    rows.append("-" * len(values))
    for level in range(1, scale + 1):
        rows.append("".join("|" if -v >= level else " " for v in values).rstrip())
    while rows and not rows[-1]:
        rows.pop()
    while rows and not rows[0]:
        rows.pop(0)
    return "\n".join(rows)


def format_populations(pop: PopulationVector, t: Topology, scheme: LabelingScheme) -> str:
    """每行 `level  label  population`。"""
    lines = []
    for level in range(t.dim):
        value = Fraction(pop[level]).limit_denominator(2)
        lines.append(f"{level}  {scheme.labeling.format_label(level)}  {value}")
    return "\n".join(lines)

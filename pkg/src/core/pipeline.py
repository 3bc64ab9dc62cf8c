# core/pipeline.py
"""
命令列工具與 API 共用的執行流程。

每個指令接收一個 RunConfig，回傳 RunResult：穩定的 `key: value` 文字報告、
結束代碼，以及可寫入輸出目錄的產物。例外不在這裡攔截，由呼叫端決定如何呈現。
"""
from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from core.errors import LabelingError, RunConfigError, SynthesisError
from core.labeler import (
    LabelingScheme,
    apply_label_swaps,
    conventional_scheme,
    enumerate_ols_quadrupolar,
    format_labeling_table,
    gray_scheme,
    ols_quadrupolar,
    parse_labeling_table,
    relabel_pairswap_spin_half,
)
from core.permutation import (
    Permutation,
    count_optimal_labelings,
    format_state,
    maximal_sets,
    min_pulse_count,
    random_permutation,
    resolve_operations,
)
from core.simulator import (
    equilibrium_populations,
    final_populations,
    format_populations,
    render_sticks,
    sequence_unitary,
    spin_group_totals,
    stick_spectrum,
    verify_permutation,
)
from core.synthesizer import (
    DEFAULT_NODE_LIMIT,
    SynthesisConfig,
    format_pulse_program,
    parse_pulse_program,
    pulse_count_report,
    schedule_rounds,
    synthesize,
)
from core.topology import Topology, TopologyKind, build_topology

log = logging.getLogger('pipeline')

COMMANDS = ("compile", "verify", "compare", "spectrum", "enumerate", "selfcheck")
LABELINGS = ("cl", "gray", "ols", "pairswap")
DEFAULT_SELFCHECK_COUNT = 500

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_SYNTHESIS = 3
EXIT_FAILED = 4

_SWAP_RE = re.compile(r"^([01]+):([01]+)$")
_EXPECT_RE = re.compile(r"^([a-z]+)=(\d+)$")


def parse_swap(text: str) -> tuple[int, int]:
    """`0100:0111` -> (4, 7)。"""
    match = _SWAP_RE.match(text.strip())
    if not match or len(match.group(1)) != len(match.group(2)):
        raise RunConfigError(f"標記交換應寫成 A:B (兩個等長的位元字串)，收到 {text!r}")
    return int(match.group(1), 2), int(match.group(2), 2)


def parse_expectation(text: str) -> tuple[str, int]:
    """`gray=10` -> ('gray', 10)。"""
    match = _EXPECT_RE.match(text.strip().lower())
    if not match:
        raise RunConfigError(f"預期脈衝數應寫成 scheme=count，收到 {text!r}")
    return match.group(1), int(match.group(2))


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...] = ()
    topology: TopologyKind = TopologyKind.QUADRUPOLAR_CHAIN
    labeling: str = "ols"
    swaps: tuple[tuple[int, int], ...] = ()
    qubits: int | None = None
    output: Path | None = None
    program: Path | None = None
    labeling_table: Path | None = None
    depth_cap: int | None = None
    node_limit: int = DEFAULT_NODE_LIMIT
    limit: int = 10
    enumerate_all: bool = False
    count: int | None = None
    seed: int = 0
    expect: tuple[tuple[str, int], ...] = ()
    db_path: Path | None = None
    ascii: bool = False
    invert: bool = False

    @property
    def scheme_name(self) -> str:
        """超立方體上的 ols 就是成對交換標記。"""
        if self.labeling == "ols" and self.topology is TopologyKind.SPIN_HALF_HYPERCUBE:
            return "pairswap"
        return self.labeling

    @property
    def synthesis(self) -> SynthesisConfig:
        return SynthesisConfig(depth_cap=self.depth_cap, node_limit=self.node_limit)

    @property
    def operation_name(self) -> str:
        name = " + ".join(self.inputs)
        return f"inverse({name})" if self.invert else name

    def validate(self) -> RunConfig:
        if self.command not in COMMANDS:
            raise RunConfigError(f"未知的指令: {self.command!r}")
        if self.labeling not in LABELINGS:
            raise RunConfigError(f"未知的標記方案: {self.labeling!r}，可用: {', '.join(LABELINGS)}")
        if self.labeling == "gray" and self.topology is not TopologyKind.QUADRUPOLAR_CHAIN:
            raise RunConfigError("gray 標記只適用於四極核鏈 (--topology chain)")
        if self.labeling == "pairswap" and self.topology is not TopologyKind.SPIN_HALF_HYPERCUBE:
            raise RunConfigError("pairswap 標記只適用於自旋 1/2 超立方體 (--topology hypercube)")
        if self.depth_cap is not None and self.depth_cap < 1:
            raise RunConfigError(f"深度上限必須至少為 1，收到 {self.depth_cap}")
        if self.node_limit < 1:
            raise RunConfigError(f"搜尋節點上限必須至少為 1，收到 {self.node_limit}")
        if self.limit < 0:
            raise RunConfigError(f"列舉上限不可為負數，收到 {self.limit}")
        if self.count is not None and self.count < 1:
            raise RunConfigError(f"--count 必須至少為 1，收到 {self.count}")
        if self.command == "selfcheck":
            if self.qubits is not None and self.qubits not in (2, 3):
                raise RunConfigError("selfcheck 只支援 2 或 3 個量子位元")
        elif not self.inputs:
            raise RunConfigError(f"{self.command} 需要至少一個運算 (真值表檔案或內建名稱)")
        if self.command == "enumerate" and self.topology is not TopologyKind.QUADRUPOLAR_CHAIN:
            raise RunConfigError("enumerate 只適用於四極核鏈")
        return self


@dataclass
class RunResult:
    command: str
    report: str
    exit_code: int = EXIT_OK
    summary: dict = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)

    def write_outputs(self, directory: Path):
        directory.mkdir(parents=True, exist_ok=True)
        for name, text in {**self.artifacts, "report.txt": self.report}.items():
            (directory / name).write_text(text, encoding="utf-8")
        log.info(f"✅ 已將 {len(self.artifacts) + 1} 個檔案寫入 {directory}")


# --- 共用步驟 ---

def load_permutation(cfg: RunConfig) -> Permutation:
    p = resolve_operations(list(cfg.inputs), cfg.qubits)
    if cfg.qubits is not None and p.n_qubits != cfg.qubits:
        raise RunConfigError(f"運算有 {p.n_qubits} 個量子位元，但指定了 --qubits {cfg.qubits}")
    return p.inverse() if cfg.invert else p


def build_scheme(cfg: RunConfig, p: Permutation, t: Topology) -> LabelingScheme:
    """依設定產生標記方案；有標記表時以標記表為準，最後再套用明確的標記交換。"""
    d = maximal_sets(p)
    if cfg.labeling_table is not None:
        scheme = parse_labeling_table(Path(cfg.labeling_table).read_text(encoding="utf-8"), p.n_qubits)
    else:
        builders = {
            "cl": lambda: conventional_scheme(t),
            "gray": lambda: gray_scheme(t),
            "ols": lambda: ols_quadrupolar(d, t),
            "pairswap": lambda: relabel_pairswap_spin_half(d, t),
        }
        scheme = builders[cfg.scheme_name]()
    if cfg.swaps:
        for a, b in cfg.swaps:
            if max(a, b) >= t.dim:
                raise RunConfigError(f"標記交換 {a}:{b} 超出 {p.n_qubits} 個量子位元的範圍")
        scheme = apply_label_swaps(scheme, cfg.swaps, d)
    return scheme


def _header(cfg: RunConfig, p: Permutation, t: Topology | None = None) -> list[str]:
    lines = [f"command: {cfg.command}", f"operation: {cfg.operation_name}", f"qubits: {p.n_qubits}"]
    if t is not None:
        lines.append(f"topology: {t.kind.value}")
    return lines


def _section(title: str, body: str) -> list[str]:
    return ["", f"[{title}]", body.rstrip("\n")]


def _finish(lines: list[str]) -> str:
    return "\n".join(lines) + "\n"


# --- 指令 ---

def compile_run(cfg: RunConfig) -> RunResult:
    log.info(f"🚀 編譯 {cfg.operation_name} ({cfg.topology.value}, {cfg.scheme_name})")
    p = load_permutation(cfg)
    t = build_topology(cfg.topology, p.n_qubits)
    d = maximal_sets(p)
    scheme = build_scheme(cfg, p, t)

    seq = synthesize(p, scheme, t, cfg.synthesis)
    seq.check_edges(t)
    scheduled = schedule_rounds(seq)
    verdict = verify_permutation(sequence_unitary(scheduled, t.dim), p, scheme)
    if not verdict.passed:
        # 合成結果未通過驗證代表內部錯誤
        raise SynthesisError("合成的脈衝序列沒有實現目標置換: " + "; ".join(verdict.mismatches))

    program = format_pulse_program(scheduled)
    labeling_text = format_labeling_table(scheme, t)
    lines = _header(cfg, p, t) + [
        f"labeling: {cfg.scheme_name}",
        f"provenance: {scheme.provenance.value}",
        f"lower_bound: {min_pulse_count(d)}",
        f"optimal_labelings: {count_optimal_labelings(d)}",
        f"pulses: {len(seq)}",
        f"rounds: {scheduled.round_count}",
        f"optimal: {str(seq.optimal).lower()}",
        verdict.format(),
    ]
    lines += _section("maximal_sets", d.format_table())
    lines += _section("labeling", labeling_text)
    lines += _section("pulse_program", program or "(empty)")

    summary = {
        "pulses": len(seq),
        "rounds": scheduled.round_count,
        "lower_bound": min_pulse_count(d),
        "optimal": seq.optimal,
        "verdict": verdict.label,
        "provenance": scheme.provenance.value,
    }
    log.info(f"📊 {cfg.operation_name}: {len(seq)} 個脈衝，{scheduled.round_count} 輪")
    return RunResult("compile", _finish(lines), EXIT_OK, summary,
                     {"program.pulses": program, "labeling.txt": labeling_text})


def compare_run(cfg: RunConfig) -> RunResult:
    log.info(f"🚀 比較各標記方案的脈衝數: {cfg.operation_name}")
    p = load_permutation(cfg)
    t = build_topology(cfg.topology, p.n_qubits)
    report = pulse_count_report(p, t, cfg.synthesis)

    lines = _header(cfg, p) + [report.format()]
    expected = dict(cfg.expect)
    flags = report.discrepancies(expected) if expected else []
    lines += [f"discrepancy: {flag}" for flag in flags]
    if flags:
        log.warning(f"⚠️ {len(flags)} 個方案的脈衝數與預期不符")

    summary = {"lower_bound": report.lower_bound, "optimal_labelings": report.optimal_labelings,
               "counts": report.counts(), "discrepancies": flags}
    return RunResult("compare", _finish(lines), EXIT_FAILED if flags else EXIT_OK, summary)


def verify_run(cfg: RunConfig, program_text: str | None = None, labeling_text: str | None = None) -> RunResult:
    """脈衝程式與標記表可以直接以文字提供 (API)，否則從設定中的路徑讀取。"""
    log.info(f"🚀 驗證脈衝程式: {cfg.program or '(inline)'}")
    p = load_permutation(cfg)
    t = build_topology(cfg.topology, p.n_qubits)

    if program_text is None:
        if cfg.program is None:
            raise RunConfigError("verify 需要 --program 指定脈衝程式")
        program_text = Path(cfg.program).read_text(encoding="utf-8")
    if labeling_text is not None:
        scheme = parse_labeling_table(labeling_text, p.n_qubits)
        if cfg.swaps:
            scheme = apply_label_swaps(scheme, cfg.swaps, maximal_sets(p))
    else:
        scheme = build_scheme(cfg, p, t)

    seq = parse_pulse_program(program_text, p.n_qubits, t)
    verdict = verify_permutation(sequence_unitary(seq, t.dim), p, scheme)
    lines = _header(cfg, p, t) + [f"provenance: {scheme.provenance.value}", f"pulses: {len(seq)}", verdict.format()]
    summary = {"verdict": verdict.label, "pulses": len(seq), "mismatches": list(verdict.mismatches)}
    return RunResult("verify", _finish(lines), EXIT_OK if verdict.passed else EXIT_FAILED, summary)


def spectrum_run(cfg: RunConfig) -> RunResult:
    log.info(f"🚀 計算棒狀譜: {cfg.operation_name}")
    p = load_permutation(cfg)
    t = build_topology(cfg.topology, p.n_qubits)
    scheme = build_scheme(cfg, p, t)

    eq = equilibrium_populations(t, scheme)
    final = final_populations(eq, p, scheme)
    before = stick_spectrum(eq, t, scheme)
    after = stick_spectrum(final, t, scheme)

    lines = _header(cfg, p, t) + [
        f"labeling: {cfg.scheme_name}",
        f"provenance: {scheme.provenance.value}",
        f"intensities: {' '.join(str(v) for v in sorted(set(after.intensities())))}",
    ]
    totals_before, totals_after = spin_group_totals(before), spin_group_totals(after)
    lines += [f"total.spin{spin}: {totals_before[spin]:+d} -> {totals_after[spin]:+d}" for spin in totals_before]
    lines += _section("populations.equilibrium", format_populations(eq, t, scheme))
    lines += _section("populations.final", format_populations(final, t, scheme))
    lines += _section("spectrum.equilibrium", before.format_table())
    lines += _section("spectrum.final", after.format_table())
    if cfg.ascii:
        lines += _section("sticks.equilibrium", render_sticks(before))
        lines += _section("sticks.final", render_sticks(after))

    summary = {
        "equilibrium": [s.intensity for s in before.sticks],
        "final": [s.intensity for s in after.sticks],
        "labels": [f"{s.spin_index}:{s.transition_label}" for s in after.sticks],
    }
    return RunResult("spectrum", _finish(lines), EXIT_OK, summary)


def enumerate_run(cfg: RunConfig) -> RunResult:
    log.info(f"🚀 列舉最佳標記: {cfg.operation_name}")
    p = load_permutation(cfg)
    t = build_topology(cfg.topology, p.n_qubits)
    d = maximal_sets(p)

    lines = _header(cfg, p, t) + [f"optimal_labelings: {count_optimal_labelings(d)}"]
    listed = 0
    for listed, scheme in enumerate(enumerate_ols_quadrupolar(d, t, cfg.limit), start=1):
        labels = " ".join(format_state(label, p.n_qubits) for label in scheme.labeling.level_to_label)
        lines.append(f"scheme.{listed}: {labels}")
    lines.append(f"listed: {listed}")

    summary = {"optimal_labelings": count_optimal_labelings(d), "listed": listed}
    if cfg.enumerate_all:
        total = sum(1 for _ in enumerate_ols_quadrupolar(d, t))
        lines.append(f"enumerated: {total}")
        summary["enumerated"] = total
        log.info(f"📊 共列舉 {total} 個最佳標記")
    return RunResult("enumerate", _finish(lines), EXIT_OK, summary)


def _selfcheck_one(p: Permutation, kind: TopologyKind, scheme_name: str, cfg: RunConfig) -> str | None:
    """回傳 None 表示通過，否則回傳失敗描述。"""
    t = build_topology(kind, p.n_qubits)
    d = maximal_sets(p)
    if scheme_name == "cl":
        scheme = conventional_scheme(t)
    elif t.is_chain:
        scheme = ols_quadrupolar(d, t)
    else:
        scheme = relabel_pairswap_spin_half(d, t)
    seq = synthesize(p, scheme, t, cfg.synthesis)
    verdict = verify_permutation(sequence_unitary(seq, t.dim), p, scheme)
    if not verdict.passed:
        return "; ".join(verdict.mismatches)
    if scheme_name != "cl" and len(seq) != min_pulse_count(d):
        return f"脈衝數 {len(seq)} 不等於下界 {min_pulse_count(d)}"
    return None


def selfcheck_run(cfg: RunConfig) -> RunResult:
    """隨機可逆真值表在兩種拓樸、CL 與最佳標記下的編譯後驗證。"""
    count = cfg.count or DEFAULT_SELFCHECK_COUNT
    rng = random.Random(cfg.seed)
    log.info(f"🚀 自我檢查: {count} 個隨機真值表 (seed={cfg.seed})")

    checked = 0
    unrepaired = 0
    failures: list[str] = []
    for index in range(count):
        n_qubits = cfg.qubits or rng.choice((2, 3))
        p = random_permutation(n_qubits, rng)
        for kind in TopologyKind:
            for scheme_name in ("cl", "ols"):
                try:
                    problem = _selfcheck_one(p, kind, scheme_name, cfg)
                except LabelingError as e:
                    unrepaired += 1
                    log.debug(f"標記無法修補，略過: {e}")
                    continue
                except SynthesisError as e:
                    problem = str(e)
                checked += 1
                if problem:
                    failures.append(f"table {index} {kind.value} {scheme_name}: {problem}")

    lines = [
        "command: selfcheck",
        f"seed: {cfg.seed}",
        f"tables: {count}",
        f"checked: {checked}",
        f"skipped: {unrepaired}",
        f"failed: {len(failures)}",
    ]
    lines += [f"failure: {f}" for f in failures]
    if failures:
        log.error(f"❌ 自我檢查有 {len(failures)} 項失敗")
    else:
        log.info(f"✅ 自我檢查通過 ({checked} 項)")
    summary = {"checked": checked, "skipped": unrepaired, "failed": len(failures)}
    return RunResult("selfcheck", _finish(lines), EXIT_FAILED if failures else EXIT_OK, summary)


RUNNERS = {
    "compile": compile_run,
    "verify": verify_run,
    "compare": compare_run,
    "spectrum": spectrum_run,
    "enumerate": enumerate_run,
    "selfcheck": selfcheck_run,
}


def run(cfg: RunConfig) -> RunResult:
    cfg.validate()
    result = RUNNERS[cfg.command](cfg)
    if cfg.output is not None:
        result.write_outputs(Path(cfg.output))
    return result

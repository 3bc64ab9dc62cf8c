# tests/test_synthesizer.py
import itertools
import random
from collections import deque

import numpy as np
import pytest

from core.errors import PulseProgramError, RoutingDepthExceeded, SynthesisError
from core.labeler import conventional_scheme, gray_scheme, ols_quadrupolar
from core.permutation import MaximalSet, Permutation, compose, maximal_sets, random_permutation
from core.simulator import sequence_unitary, verify_permutation
from core.synthesizer import (
    Pulse,
    PulseSequence,
    SynthesisConfig,
    format_pulse_program,
    level_permutation,
    parse_pulse_program,
    pulse_count_report,
    schedule_rounds,
    synthesize,
    synthesize_fixed_labeling,
    synthesize_on_path,
)
from core.topology import build_topology

S5 = MaximalSet((0b0100, 0b0110, 0b0101, 0b0111), 4)


def _levels(seq: PulseSequence) -> list[tuple[int, int]]:
    return [p.levels for p in seq.pulses]


def _shortest_swap_count(t, sigma) -> int:
    """以廣度優先搜尋求出把每個代幣送到目的能階所需的最少邊交換數。"""
    start, goal = tuple(sigma), tuple(range(len(sigma)))
    seen = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            return seen[state]
        for a, b in t.edges:
            nxt = list(state)
            nxt[a], nxt[b] = nxt[b], nxt[a]
            nxt = tuple(nxt)
            if nxt not in seen:
                seen[nxt] = seen[state] + 1
                queue.append(nxt)
    raise AssertionError("圖不連通")


# --- 脈衝 ---

def test_pulse_normalizes_level_order():
    pulse = Pulse(3, 1, 0b0111, 0b0101)
    assert pulse.levels == (1, 3)
    assert (pulse.label_a, pulse.label_b) == (0b0101, 0b0111)
    with pytest.raises(SynthesisError):
        Pulse(2, 2)


def test_pulses_share_levels():
    assert Pulse(0, 1).shares_level(Pulse(1, 2))
    assert not Pulse(0, 1).shares_level(Pulse(2, 3))


# --- 路徑上的合成 ---

def test_synthesize_on_path_applies_last_pair_first():
    seq = synthesize_on_path(S5, (0, 2, 1, 3))
    assert _levels(seq) == [(1, 3), (1, 2), (0, 2)]
    assert [p.number for p in seq.pulses] == [1, 2, 3]
    first = seq.pulses[0]
    assert (first.label_a, first.label_b) == (0b0101, 0b0111)


def test_synthesize_on_path_checks_edges(chain4):
    with pytest.raises(SynthesisError, match="沒有躍遷"):
        synthesize_on_path(S5, (0, 2, 1, 3), chain4)
    with pytest.raises(SynthesisError):
        synthesize_on_path(MaximalSet((3,), 2), (0,))
    with pytest.raises(SynthesisError):
        synthesize_on_path(S5, (0, 1, 2))


# --- 脈衝數比較 ---

def test_full_adder_counts_on_chain(full_adder, chain4):
    report = pulse_count_report(full_adder, chain4)
    assert report.counts() == {"cl": 12, "gray": 12, "ols": 8}
    assert report.lower_bound == 8
    assert report.optimal_labelings == 645120


def test_composed_counts_on_chain(full_adder, swap24, chain4):
    forward = pulse_count_report(compose(full_adder, swap24), chain4)
    backward = pulse_count_report(compose(swap24, full_adder), chain4)
    assert forward.counts() == {"cl": 24, "gray": 28, "ols": 12}
    assert backward.counts()["ols"] == 12
    assert backward.counts()["cl"] == 24


def test_chain_routing_equals_inversion_count(full_adder, chain4):
    for scheme in (conventional_scheme(chain4), gray_scheme(chain4)):
        sigma = level_permutation(full_adder, scheme.labeling)
        inversions = sum(1 for i, j in itertools.combinations(range(16), 2) if sigma[i] > sigma[j])
        assert len(synthesize_fixed_labeling(full_adder, scheme, chain4)) == inversions


def test_discrepancies_are_flagged(full_adder, chain4):
    report = pulse_count_report(full_adder, chain4)
    assert report.discrepancies({"ols": 8, "cl": 12, "gray": 10}) == ["gray expected 10 routed 12"]
    assert report.discrepancies({"ols": 8}) == []


def test_report_format(full_adder, chain4):
    lines = pulse_count_report(full_adder, chain4).format().splitlines()
    assert lines[:6] == [
        "topology: quadrupolar_chain",
        "lower_bound: 8",
        "optimal_labelings: 645120",
        "cl: 12",
        "gray: 12",
        "ols: 8",
    ]
    assert "rounds.ols: 3" in lines


def test_identity_needs_no_pulses(chain4, hypercube4):
    p = Permutation.identity(4)
    assert pulse_count_report(p, chain4).counts() == {"cl": 0, "gray": 0, "ols": 0}
    assert pulse_count_report(p, hypercube4).counts() == {"cl": 0, "ols": 0}


def test_full_adder_counts_on_hypercube(full_adder, hypercube4):
    report = pulse_count_report(full_adder, hypercube4)
    assert report.counts() == {"cl": 8, "ols": 8}


# --- 固定標記的路由 ---

def test_joint_routing_beats_per_set_routing():
    cube = build_topology("hypercube", 2)
    p = Permutation(2, (3, 2, 1, 0))
    seq = synthesize_fixed_labeling(p, conventional_scheme(cube), cube)
    assert len(seq) == 4
    assert seq.optimal


def test_distant_transposition_needs_three_pulses():
    cube = build_topology("hypercube", 2)
    p = Permutation(2, (3, 1, 2, 0))
    seq = synthesize_fixed_labeling(p, conventional_scheme(cube), cube)
    assert len(seq) == 3

    with pytest.raises(RoutingDepthExceeded) as excinfo:
        synthesize_fixed_labeling(p, conventional_scheme(cube), cube, SynthesisConfig(depth_cap=2))
    assert excinfo.value.best_known == 3
    assert "{|00>,|11>}" in str(excinfo.value)


def test_chain_depth_cap(full_adder, chain4):
    with pytest.raises(RoutingDepthExceeded):
        synthesize_fixed_labeling(full_adder, conventional_scheme(chain4), chain4, SynthesisConfig(depth_cap=5))


@pytest.mark.parametrize("kind", ["chain", "hypercube"])
def test_two_qubit_routing_matches_brute_force(kind):
    t = build_topology(kind, 2)
    scheme = conventional_scheme(t)
    for mapping in itertools.permutations(range(4)):
        p = Permutation(2, mapping)
        seq = synthesize_fixed_labeling(p, scheme, t)
        assert len(seq) == _shortest_swap_count(t, level_permutation(p, scheme.labeling)), f"{mapping} 不是最短序列"
        seq.check_edges(t)
        assert verify_permutation(sequence_unitary(seq, 4), p, scheme).passed


def test_exhausted_search_falls_back_to_a_feasible_route():
    cube = build_topology("hypercube", 3)
    scheme = conventional_scheme(cube)
    rng = random.Random(5)
    fallbacks = 0
    for _ in range(50):
        p = random_permutation(3, rng)
        limited = synthesize_fixed_labeling(p, scheme, cube, SynthesisConfig(node_limit=1))
        assert verify_permutation(sequence_unitary(limited, 8), p, scheme).passed
        if not limited.optimal:
            fallbacks += 1
            assert len(limited) >= len(synthesize_fixed_labeling(p, scheme, cube))
    assert fallbacks > 0, "節點上限為 1 時應至少有一次退回可行路由"


# --- 排程 ---

def test_two_round_full_adder_schedule(full_adder, hypercube4, two_round_scheme):
    # 準備
    seq = synthesize(full_adder, two_round_scheme, hypercube4)

    # 執行
    scheduled = schedule_rounds(seq)

    # 斷言
    assert _levels(seq) == [(4, 5), (6, 7), (5, 7), (8, 9), (10, 11), (9, 11), (12, 13), (14, 15)]
    assert scheduled.round_count == 2
    assert [len(r) for r in scheduled.rounds] == [6, 2]
    assert [p.number for p in scheduled.rounds[1]] == [3, 6]
    assert np.array_equal(sequence_unitary(seq, 16), sequence_unitary(scheduled, 16))


def test_schedule_rounds_are_level_disjoint():
    rng = random.Random(11)
    cube = build_topology("hypercube", 3)
    for _ in range(30):
        p = random_permutation(3, rng)
        scheduled = schedule_rounds(synthesize(p, conventional_scheme(cube), cube))
        for group in scheduled.rounds:
            for a, b in itertools.combinations(group, 2):
                assert not a.shares_level(b)


def test_empty_sequence_has_no_rounds():
    assert schedule_rounds(PulseSequence(2)).round_count == 0


# --- 脈衝程式文件 ---

def test_pulse_program_text(full_adder, chain4):
    scheme = ols_quadrupolar(maximal_sets(full_adder), chain4)
    program = format_pulse_program(schedule_rounds(synthesize(full_adder, scheme, chain4)))
    lines = program.splitlines()
    assert lines[0] == "0  pi_y  2  3  # |0101> <-> |0111>"
    assert lines[-1] == "2  pi_y  4  5  # |1000> <-> |1010>"
    assert len(lines) == 8


def test_pulse_program_reads_back(full_adder, chain4):
    scheme = ols_quadrupolar(maximal_sets(full_adder), chain4)
    scheduled = schedule_rounds(synthesize(full_adder, scheme, chain4))
    parsed = parse_pulse_program(format_pulse_program(scheduled), 4, chain4)
    assert [[p.levels for p in r] for r in parsed.rounds] == [[p.levels for p in r] for r in scheduled.rounds]
    assert parsed.pulses[0].label_a == 0b0101


def test_pulse_program_without_comments():
    seq = parse_pulse_program("# header\n0 pi_y 0 1\n1 pi_y 1 2\n", 2)
    assert _levels(seq) == [(0, 1), (1, 2)]
    assert seq.pulses[0].label_a is None


@pytest.mark.parametrize("text, line_no", [
    ("0  pi_x  0  1\n", 1),
    ("0  pi_y  0  4\n", 1),
    ("0  pi_y  1  1\n", 1),
    ("1  pi_y  0  1\n0  pi_y  2  3\n", 2),
    ("0  pi_y  0  1\n0  pi_y  1  2\n", 2),
    ("0  pi_y  0  2\n", 1),
])
def test_pulse_program_errors(text, line_no):
    chain = build_topology("chain", 2)
    with pytest.raises(PulseProgramError) as excinfo:
        parse_pulse_program(text, 2, chain)
    assert excinfo.value.line_no == line_no

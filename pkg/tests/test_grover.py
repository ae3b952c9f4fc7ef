import math

import numpy as np
import pytest

from qswi.circuits import Circuit, apply, cnot, project
from qswi.config import overrides
from qswi.errors import DimensionCapExceeded, Misconfigured
from qswi.grover import (ATTACKER, HONEST, GroverConfig, ProverStrategy, _signs,
                         amplitude_recursion, curve_point, default_iterations,
                         exponential_schedule, loglog_slope, marked_amplitudes,
                         marked_probability, protocol_layout, protocol_steps, run_schedule,
                         run_subroutine, run_subroutine_density, soundness_break_curve)
from qswi.states import DensityState, trace_distance


def test_config_validation():
    for bad in (dict(k=6), dict(k=128), dict(k=4, j=4), dict(k=4, b=2), dict(k=4, T=-1),
                dict(k=4, bad_set=(7,))):
        with pytest.raises(Misconfigured):
            GroverConfig(**bad)
    with pytest.raises(Misconfigured):
        ProverStrategy("lazy")


def test_default_iterations_and_schedule():
    assert [default_iterations(k) for k in (4, 8, 16, 32, 64)] == [1, 2, 3, 4, 6]
    assert exponential_schedule(64) == [0, 1, 2, 4, 6]
    assert exponential_schedule(4) == [0, 1]


def test_instances_and_witnesses():
    cfg = GroverConfig(4, bad_set=(3,))
    assert cfg.instances() == ["00", "01", "00", "11"]
    assert cfg.witnesses() == ["1", "0", "1", "1"]
    assert cfg.rej(3, "1") and cfg.rej(3, "0") and not cfg.rej(0, "1")


def test_honest_k4_one_iteration_finds_j():
    for j in range(4):
        r = run_subroutine(GroverConfig(4, 1, 1, j))
        assert r.accept == pytest.approx(1.0, abs=1e-9)


def test_honest_k16_closed_form():
    r = run_subroutine(GroverConfig(16, 3, 1, 5))
    assert r.accept == pytest.approx(marked_probability(16, 3), abs=1e-12)
    assert r.accept == pytest.approx(0.96132, abs=1e-4)


def test_honest_b0_no_bad_accepts():
    for k in (4, 8, 16, 32):
        r = run_subroutine(GroverConfig(k, None, 0))
        assert r.accept == pytest.approx(1.0, abs=1e-9)
        assert r.verdict["reject_index_check"] == 0.0
        assert r.verdict["reject_witness_check"] == 0.0


@pytest.mark.parametrize("k", [4, 8, 16, 32, 64])
def test_amplitudes_follow_recursion(k):
    T = default_iterations(k) + 2
    got = marked_amplitudes(k, T, j=k - 1)
    want = amplitude_recursion(k, T)
    assert got == pytest.approx(want, abs=1e-9)
    for t, a in enumerate(want):
        assert a ** 2 == pytest.approx(marked_probability(k, t), abs=1e-12)


def test_single_bad_instance_oracle_marks_it():
    cfg = GroverConfig(8, bad_set=(5,))
    s = _signs(cfg, 0, 0)
    wv = [int(w, 2) for w in cfg.witnesses()]
    assert [s[wv[i], i] for i in range(8)] == [1, 1, 1, 1, 1, -1, 1, 1]


@pytest.mark.parametrize("k", [4, 8])
@pytest.mark.parametrize("strategy", [HONEST, ATTACKER], ids=["honest", "attacker"])
@pytest.mark.parametrize("b,j", [(0, 0), (1, 1)])
def test_density_replay_matches_fast_path(k, strategy, b, j):
    cfg = GroverConfig(k, None, b, j, (k - 1,))
    fast = run_subroutine(cfg, strategy)
    slow = run_subroutine_density(cfg, strategy)
    for key in fast.verdict:
        assert slow.verdict[key] == pytest.approx(fast.verdict[key], abs=1e-12)
    assert slow.branch_count == fast.branch_count


def _state_after(cfg, steps):
    layout = protocol_layout(cfg, HONEST)
    s = DensityState.zero(layout)
    for c in steps:
        s = apply(c, s)
    return s


@pytest.mark.parametrize("b", [0, 1])
def test_index_check_is_a_noop_on_honest_states(b):
    cfg = GroverConfig(4, 1, b, 2)
    layout = protocol_layout(cfg, HONEST)
    steps = protocol_steps(cfg, HONEST, b, 2)
    sandwich = Circuit(layout, tuple(cnot(("V", q), ("C", q)) for q in range(2)))
    before = _state_after(cfg, [steps[0]])
    s = apply(sandwich, before)
    p, _, m = project(DensityState(s.matrix, layout), "C", "00")
    assert p == pytest.approx(1.0, abs=1e-12)
    after = apply(sandwich, DensityState(m, layout))
    assert trace_distance(before, after) == pytest.approx(0.0, abs=1e-12)


def test_witness_check_never_fires_for_honest_prover():
    for b, bad in ((0, ()), (1, ()), (0, (3,))):
        r = run_subroutine(GroverConfig(8, None, b, 1, bad))
        assert r.verdict["reject_witness_check"] == 0.0
        assert r.verdict["reject_index_check"] == 0.0


def test_attack_without_bad_instance_is_honest():
    cfg = GroverConfig(8, None, 0)
    assert run_subroutine(cfg, ATTACKER).verdict == pytest.approx(run_subroutine(cfg).verdict)


def test_attack_lowers_catch_probability_k4():
    cfg = GroverConfig(4, 1, 0, 0, (3,))
    honest = run_subroutine(cfg, HONEST).index_distribution[3]
    attack = run_subroutine(cfg, ATTACKER).index_distribution[3]
    assert attack < honest


@pytest.mark.parametrize("k", [4, 8, 16, 32])
def test_branch_count_bounded(k):
    cfg = GroverConfig(k, None, 0, 0, (k - 1,))
    assert run_subroutine(cfg, ATTACKER).branch_count <= cfg.T + 1


def test_attack_needs_single_bad_index():
    with pytest.raises(Misconfigured):
        run_subroutine(GroverConfig(8, None, 0, 0, (1, 2)), ATTACKER)


def test_cap():
    with pytest.raises(DimensionCapExceeded):
        run_subroutine(GroverConfig(64, None, 0, 0, (63,)), ATTACKER)
    with overrides(qubit_cap=16):
        assert run_subroutine(GroverConfig(64, None, 0, 0, (63,)), ATTACKER).qubits == 16


def test_enumerate_averages_branches():
    cfg = GroverConfig(4, 1, "enumerate")
    r = run_subroutine(cfg)
    b0 = run_subroutine(GroverConfig(4, 1, 0)).accept
    b1 = np.mean([run_subroutine(GroverConfig(4, 1, 1, j)).accept for j in range(4)])
    assert r.accept == pytest.approx(0.5 * b0 + 0.5 * b1)


def test_schedule_stop_probability():
    out = run_schedule(GroverConfig(16, None, 1, 3))
    assert out["schedule"] == [0, 1, 2, 3]
    miss = math.prod(1 - marked_probability(16, t) for t in out["schedule"])
    assert out["stop_probability"] == pytest.approx(1 - miss, abs=1e-12)


def test_curve_values_and_trend():
    rows = soundness_break_curve([4, 8, 16])
    assert [r["T"] for r in rows] == [1, 2, 3]
    assert rows[0]["catch_b0_attack"] == pytest.approx(0.625, abs=1e-12)
    catches = [r["catch_b0_attack"] for r in rows]
    assert catches == sorted(catches, reverse=True)
    for r in rows:
        assert r["catch_b0_attack"] < r["catch_b0_honest_bad"]
    assert -0.8 <= loglog_slope(rows) <= -0.2


def test_curve_point_honest_baseline():
    row = curve_point(16)
    # with a bad instance present the honest b=1 search still runs on a single mark
    assert row["find_j_honest"] == pytest.approx(marked_probability(16, 3), abs=1e-9)

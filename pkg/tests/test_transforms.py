import math

import numpy as np
import pytest

from qswi.circuits import probability_of
from qswi.errors import DimensionCapExceeded, EvenRepetitions, OddMessageCount, WrongMessageCount
from qswi.fixtures import blind, leaky, lossy_reveal, noisy_reveal, reveal
from qswi.qip import (ErrorProfile, acceptance, adversary_acceptance, random_adversary, run,
                      view, wi_error_all)
from qswi.transforms import (claim_compress, claim_majority, claim_parallel, claim_public_coin,
                             compress_rounds, derived_parallel, majority_probability,
                             measured_profile, pad_to_even, parallel_copies, parallel_repeat,
                             pipeline, sequential_majority, tensor_adversary, to_public_coin)


def branch_acceptance(p, x, w, **coins):
    """Acceptance conditioned on a coin assignment, from the raw branch vectors."""
    r = run(p, x, w)
    sel = [b for b in r.branches if all(b.coins[k] == v for k, v in coins.items())]
    total = sum(b.probability for b in sel)
    return sum(b.probability * probability_of(b.final, r.layout, p.accept) for b in sel) / total


# claimed arithmetic ------------------------------------------------------------------

def test_claim_formulas_by_hand():
    prof = ErrorProfile(0.2, 0.5, 0.1)
    c = claim_compress(prof, 4)
    assert (c.eps_c, c.eps_wi) == pytest.approx((0.1, 0.4))
    assert c.eps_s == pytest.approx(1 - 0.25 / (32 * 25))
    pc = claim_public_coin(prof)
    assert (pc.eps_c, pc.eps_s, pc.eps_wi) == pytest.approx((0.1, 0.5 + math.sqrt(0.5) / 2, 0.1))
    par = claim_parallel(prof, 3)
    assert (par.eps_c, par.eps_s, par.eps_wi) == pytest.approx((1 - 0.9 ** 3, 0.125, 0.3))
    d = derived_parallel(prof, 3)
    assert d.eps_c == pytest.approx(1 - 0.8 ** 3)


def test_majority_probability_binomial():
    p = 2 / 3
    assert majority_probability(p, 3) == pytest.approx(p ** 3 + 3 * p ** 2 * (1 - p), abs=1e-15)
    assert majority_probability(p, 1) == pytest.approx(p)
    m = claim_majority(ErrorProfile(1 / 3, 0.25, 0.1), 3)
    assert m.eps_s == pytest.approx(0.25 ** 3 + 3 * 0.25 ** 2 * 0.75)


def test_measured_profile():
    prof = measured_profile(noisy_reveal(0.3))
    assert prof.eps_c == pytest.approx(0.0, abs=1e-12)
    assert prof.eps_s == pytest.approx(0.3)
    assert prof.eps_wi == pytest.approx(1.0)


# compress_rounds -------------------------------------------------------------------

def test_compress_rejects_odd():
    with pytest.raises(OddMessageCount):
        compress_rounds(leaky(0.5, messages=3))


@pytest.fixture(scope="module")
def leaky4():
    src = leaky(0.9, messages=4, p=2 / 3)
    out, rep = compress_rounds(src)
    return src, out, rep


def test_compress_structure(leaky4):
    src, out, rep = leaky4
    assert out.message_count == 3
    assert rep.message_count_in == 4 and rep.qubits_out == out.layout.n_qubits
    assert rep.claimed_output_profile == claim_compress(rep.input_profile, 4)


def test_compress_b0_branch_accepts(leaky4):
    _, out, _ = leaky4
    for x, w in out.relation.pairs():
        assert branch_acceptance(out, x, w, b=0) == pytest.approx(1.0, abs=1e-9)


def test_compress_completeness(leaky4):
    src, out, rep = leaky4
    eps_c = rep.input_profile.eps_c
    assert eps_c == pytest.approx(1 / 3)
    for x, w in out.relation.pairs():
        assert acceptance(out, x, w) >= 1 - eps_c / 2 - 1e-9


def test_compress_wi_bound(leaky4):
    src, out, _ = leaky4
    w_in, w_out = wi_error_all(src), wi_error_all(out)
    assert w_in > 0
    assert w_out <= (src.message_count / 2) * w_in + 1e-6


def test_compress_perfectly_complete_input():
    out, _ = compress_rounds(blind(messages=4))
    for x, w in out.relation.pairs():
        assert acceptance(out, x, w) == pytest.approx(1.0, abs=1e-9)
    assert wi_error_all(out) == pytest.approx(0.0, abs=1e-9)


def _copies_distance(theta, n):
    # n copies of |0> against n copies of Ry(theta)|0>
    return math.sqrt(1 - math.cos(theta / 2) ** (2 * n))


def test_compress_wi_closed_form(leaky4):
    # round 2 holds three snapshots when r = 1 and two when r = 2
    _, out, _ = leaky4
    expected = 0.5 * (_copies_distance(0.9, 3) + _copies_distance(0.9, 2))
    assert wi_error_all(out) == pytest.approx(expected, abs=1e-12)


def test_compress_two_messages():
    # below four messages the verifier holds two copies of the single view
    src = leaky(0.6, messages=2)
    out, _ = compress_rounds(src)
    assert out.message_count == 3
    assert acceptance(out, "01", "10") == pytest.approx(1.0, abs=1e-9)
    assert wi_error_all(out) == pytest.approx(_copies_distance(0.6, 2), abs=1e-12)
    assert wi_error_all(out) <= 2 * wi_error_all(src) + 1e-9


def test_compress_cap():
    with pytest.raises(DimensionCapExceeded):
        compress_rounds(reveal(messages=4))


def test_pad_to_even():
    q = pad_to_even(leaky(0.4, messages=3))
    assert q.message_count == 4 and q.leading_verifier
    assert acceptance(q, "01", "10") == pytest.approx(1.0)
    assert pad_to_even(q) is q


# public coin --------------------------------------------------------------------------

def test_public_coin_wrong_count():
    with pytest.raises(WrongMessageCount):
        to_public_coin(leaky(0.5))


THREE = [blind(messages=3), noisy_reveal(0.2, messages=3), leaky(0.8, messages=3),
         lossy_reveal(0.7, messages=3)]


@pytest.mark.parametrize("src", THREE, ids=lambda p: p.name)
def test_public_coin(src):
    out, rep = to_public_coin(src)
    assert out.public_coin_bits == 1 and rep.structural_flags["classical_bits"] == 1
    coin = out.params["coin"]
    for x, w in out.relation.pairs():
        assert branch_acceptance(out, x, w, **{coin: 0}) == pytest.approx(1.0, abs=1e-9)
    assert wi_error_all(out) == pytest.approx(wi_error_all(src), abs=1e-9)


def test_public_coin_completeness_claim():
    src = lossy_reveal(0.7, messages=3)
    out, rep = to_public_coin(src)
    assert acceptance(out, "01", "00") >= 1 - rep.claimed_output_profile.eps_c - 1e-9


def _round_distance(p, x, w0, w1, j):
    from qswi.states import trace_distance
    return trace_distance(view(p, x, w0, j), view(p, x, w1, j))


def test_public_of_compress_averages_rounds(leaky4):
    # the coin-labelled round-2 view is an even mix of the input's two views
    _, out, rep = leaky4
    pub, _ = to_public_coin(out, rep.claimed_output_profile)
    d1, d2 = (_round_distance(out, "01", "00", "10", j) for j in (1, 2))
    assert _round_distance(pub, "01", "00", "10", 2) == pytest.approx(0.5 * (d1 + d2), abs=1e-9)
    assert wi_error_all(pub) <= wi_error_all(out) + 1e-9
    # Rp keeps the round index out of the final message
    assert "Rp" in out.params and out.roles[out.params["Rp"]] == "P"


# parallel repetition ------------------------------------------------------------------

def test_parallel_c1_identical():
    src = noisy_reveal(0.3, messages=3)
    out, _ = parallel_repeat(src, 1)
    for x in src.relation.instances():
        for w in ("00", "01", "10", "11"):
            assert acceptance(out, x, w) == pytest.approx(acceptance(src, x, w), abs=1e-12)


def test_parallel_perfect_completeness():
    out, _ = parallel_repeat(reveal(messages=3), 2)
    for x, w in out.relation.pairs():
        assert acceptance(out, x, w) == pytest.approx(1.0, abs=1e-12)


def test_parallel_completeness_is_product():
    src = lossy_reveal(0.7, messages=3)
    out, rep = parallel_repeat(src, 2)
    assert acceptance(out, "01", "00") == pytest.approx(0.49, abs=1e-12)
    assert 1 - acceptance(out, "01", "00") <= rep.checked_profile.eps_c + 1e-9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_parallel_tensored_adversary(seed):
    src = noisy_reveal(0.3, messages=3)
    adv = random_adversary(src, 1, np.random.default_rng(seed))
    a = adversary_acceptance(src, "10", adv)
    out, _ = parallel_repeat(src, 2)
    assert adversary_acceptance(out, "10", tensor_adversary(adv, src, 2)) == pytest.approx(
        a ** 2, abs=1e-9)


def test_parallel_view_is_tensor_power():
    src = leaky(0.7, messages=3)
    out, _ = parallel_repeat(src, 2)
    for j in (1, 2):
        one = view(src, "01", "10", j).quantum_part().matrix
        two = view(out, "01", "10", j).quantum_part().matrix
        assert np.allclose(two, np.kron(one, one), atol=1e-12)


def test_parallel_wi_claim():
    src = leaky(0.7, messages=3)
    out, rep = parallel_repeat(src, 2)
    assert wi_error_all(out) <= rep.claimed_output_profile.eps_wi + 1e-9


# majority ------------------------------------------------------------------------------

def test_majority_identity():
    src = lossy_reveal(0.6)
    out, rep = sequential_majority(src, 1)
    assert out is src and rep.structural_flags["identity"]


def test_majority_even_rejected():
    with pytest.raises(EvenRepetitions):
        sequential_majority(blind(), 2)


def test_majority_binomial():
    src = lossy_reveal(2 / 3)
    out, _ = sequential_majority(src, 3)
    p = acceptance(src, "01", "00")
    assert acceptance(out, "01", "00") == pytest.approx(p ** 3 + 3 * p ** 2 * (1 - p), abs=1e-9)


def test_majority_soundness_binomial():
    src = noisy_reveal(0.25)
    out, _ = sequential_majority(src, 3)
    e = 0.25
    assert acceptance(out, "10", "00") == pytest.approx(e ** 3 + 3 * e ** 2 * (1 - e), abs=1e-9)


def test_majority_blind_wi_zero():
    out, _ = sequential_majority(blind(), 3)
    assert wi_error_all(out) == 0.0


def test_majority_wi_claim():
    src = leaky(0.5)
    out, rep = sequential_majority(src, 3)
    assert wi_error_all(out) <= rep.claimed_output_profile.eps_wi + 1e-9


# pipeline ----------------------------------------------------------------------------

def test_pipeline_blind_structure():
    res = pipeline(blind(), 2, repetitions_override=1, copies_override=1)
    assert res.feasible
    out = res.protocol
    assert out.message_count == 3 and out.public_coin_bits == 1
    assert wi_error_all(out) == pytest.approx(0.0, abs=1e-12)
    assert [r.transform for r in res.reports] == ["sequential_majority", "compress_rounds",
                                                  "parallel_repeat", "to_public_coin"]


def test_pipeline_claim_chain_by_hand():
    prof = ErrorProfile(0.1, 0.2, 0.01)
    res = pipeline(blind(messages=4), 2, repetitions_override=1, copies_override=1,
                   profile=prof)
    assert res.planned["repetitions"] == 5
    assert res.planned["copies"] == 2 * 32 * (4 * 5 + 1) ** 2
    # overrides keep the arithmetic on the counts actually used
    c_maj = 1 - 0.9
    s_maj = 0.2
    c_cmp, s_cmp, w_cmp = c_maj / 2, 1 - (1 - s_maj) ** 2 / (32 * 25), 4 * 0.01
    c_par, s_par, w_par = 1 - (1 - c_cmp / 2), s_cmp, w_cmp
    c_pub, s_pub = c_par / 2, 0.5 + math.sqrt(s_par) / 2
    last = res.reports[-1].claimed_output_profile
    assert (last.eps_c, last.eps_s, last.eps_wi) == pytest.approx((c_pub, s_pub, w_par))


def test_pipeline_reports_feasible_prefix():
    res = pipeline(leaky(0.5, messages=4, p=2 / 3), 2)
    assert not res.feasible
    assert res.failed_stage == "compress_rounds"
    assert res.stages[-1].startswith("maj5")
    assert "feasible prefix" in res.error
    assert res.to_json()["planned"]["copies"] == parallel_copies(2, 4, 5)

import numpy as np
import pytest

from qswi.config import overrides
from qswi.errors import Misconfigured, ZeroProbabilityBranch
from qswi.fixtures import blind, leaky, noisy_reveal
from qswi.malicious import (MaliciousVerifier, fixed_bit_verifier, honest_coin_verifier,
                            malicious_views, scripted_verifiers)
from qswi.qip import wi_error_all
from qswi.states import trace_distance
from qswi.transforms import compress_rounds, to_public_coin


def public(p):
    return to_public_coin(p)[0]


def test_needs_public_coin():
    with pytest.raises(Misconfigured):
        malicious_views(leaky(0.3, messages=3), honest_coin_verifier(None), "01", "10")


def test_round_zero_is_aux():
    p = public(leaky(0.8, messages=3))
    for mv in scripted_verifiers(p):
        res = malicious_views(p, mv, "01", "10")
        assert res.distances[0] == 0.0
        assert np.allclose(res.simulated[0].quantum_part().matrix, mv.aux.matrix)


def test_blind_honest_coin_exact():
    p = public(blind(messages=3))
    res = malicious_views(p, honest_coin_verifier(p), "01", "10")
    assert max(res.distances.values()) == pytest.approx(0.0, abs=1e-12)
    assert res.postselection_probability == pytest.approx(0.5)


CASES = [blind(messages=3), noisy_reveal(0.2, messages=3), leaky(0.8, messages=3),
         leaky(2.0, messages=3)]


@pytest.mark.parametrize("src", CASES, ids=lambda p: f"{p.name}-{p.params}")
def test_simulation_within_honest_wi(src):
    p = public(src)
    wi = wi_error_all(p)
    for mv in scripted_verifiers(p):
        for x, w in p.relation.pairs():
            res = malicious_views(p, mv, x, w)
            for j, d in res.distances.items():
                assert d <= wi + 1e-6, (mv.name, x, w, j)
            assert 0 < res.postselection_probability <= 1


def test_fixed_bit_postselection_halves():
    p = public(leaky(0.8, messages=3))
    res = malicious_views(p, fixed_bit_verifier(p, 1), "01", "10")
    assert res.postselection_probability == pytest.approx(0.5)
    # the verifier always asks for branch 1, so only that label survives
    assert set(res.simulated[2].blocks) == {(("B", 1),)}


def test_canonical_witness_is_simulated_exactly():
    p = public(leaky(0.8, messages=3))
    for mv in scripted_verifiers(p):
        res = malicious_views(p, mv, "01", "00")
        assert max(res.distances.values()) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.slow
def test_public_of_compress():
    # here the two rounds of the input differ, so the public-coin WI error is an
    # average over the coin; a verifier fixing its bit sees one branch only and
    # the bound is the WI error of the private-coin input
    src, rep = compress_rounds(leaky(0.7, messages=4, p=2 / 3))
    p = to_public_coin(src, rep.claimed_output_profile)[0]
    with overrides(qubit_cap=16):
        wi_in = wi_error_all(src)
        worst = 0.0
        for mv in scripted_verifiers(p):
            res = malicious_views(p, mv, "01", "10")
            worst = max(worst, max(res.distances.values()))
        assert worst <= wi_in + 1e-6
        assert worst > wi_error_all(p)

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from qswi.circuits import (Circuit, Gate, apply, apply_vector, circuit, cnot, cswap, dephase,
                           diffusion, hadamard, measure_distribution, pauli_x, phase_oracle,
                           post_select, raw_unitary, uniform_prep)
from qswi.errors import DimensionMismatch, LayoutMismatch, UnknownGroup, ZeroProbabilityBranch
from qswi.states import DensityState, RegisterLayout, haar_unitary, random_state

Q2 = RegisterLayout((("q", 2),))
A, B = ("q", 0), ("q", 1)


def bell():
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return DensityState.from_vector(v, Q2)


def test_empty_circuit_is_identity():
    s = random_state(2, np.random.default_rng(0), layout=Q2)
    assert apply(Circuit.empty(), s).allclose(s)


def test_hh_is_identity():
    s = DensityState.basis("00", Q2)
    assert apply(circuit(Q2, hadamard(A), hadamard(A)), s).allclose(s)


def test_cnot_truth_table():
    out = apply(circuit(Q2, cnot(A, B)), DensityState.basis("10", Q2))
    assert out.allclose(DensityState.basis("11", Q2))


def test_cswap_swaps_blocks():
    lay = RegisterLayout((("c", 1), ("a", 2), ("b", 2)))
    c = circuit(lay, cswap(("c", 0), [("a", 0), ("a", 1)], [("b", 0), ("b", 1)]))
    assert apply(c, DensityState.basis("11000", lay)).allclose(DensityState.basis("10010", lay))
    assert apply(c, DensityState.basis("01000", lay)).allclose(DensityState.basis("01000", lay))


def test_gate_matrix_matches_kron_oracle():
    # H on qubit 1 of a 2-qubit register is I (x) H
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    u = circuit(Q2, hadamard(B)).unitary()
    assert np.allclose(u, np.kron(np.eye(2), h))


def test_controlled_x_bit_pattern():
    lay = RegisterLayout((("q", 3),))
    g = pauli_x(("q", 2), controls=((("q", 0), 1), (("q", 1), 0)))
    c = circuit(lay, g)
    assert apply(c, DensityState.basis("100", lay)).allclose(DensityState.basis("101", lay))
    assert apply(c, DensityState.basis("110", lay)).allclose(DensityState.basis("110", lay))


def test_diffusion_fixes_uniform():
    lay = RegisterLayout((("q", 3),))
    u = np.full(8, 1 / np.sqrt(8), dtype=complex)
    s = DensityState.from_vector(u, lay)
    out = apply(circuit(lay, diffusion([("q", i) for i in range(3)])), s)
    assert np.allclose(out.matrix, s.matrix, atol=1e-9)


def test_empty_phase_oracle_is_identity():
    g = phase_oracle([A, B], [])
    assert np.allclose(g.matrix(), np.eye(4))


def test_phase_oracle_marks():
    g = phase_oracle([A, B], ["10"])
    assert np.allclose(np.diag(g.matrix()), [1, 1, -1, 1])


def test_raw_unitary_validation():
    with pytest.raises(ValueError):
        raw_unitary([A], [[1, 1], [0, 1]])
    with pytest.raises(DimensionMismatch):
        raw_unitary([A], np.eye(4))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("Toffoli", (A,))
    with pytest.raises(ValueError):
        cnot(A, A)
    with pytest.raises(ValueError):
        Gate("ControlledSwap", (A, B))


def test_layout_mismatch():
    other = RegisterLayout((("r", 1),))
    with pytest.raises(LayoutMismatch):
        apply(circuit(other, hadamard(("r", 0))), DensityState.basis("00", Q2))
    with pytest.raises(Exception):
        circuit(Q2, hadamard(("q", 5)))


def test_circuit_inverse():
    u = haar_unitary(4, np.random.default_rng(3))
    c = circuit(Q2, hadamard(A), raw_unitary([A, B], u), cnot(B, A))
    assert np.allclose(c.then(c.inverse()).unitary(), np.eye(4), atol=1e-12)


def test_json_roundtrip():
    u = haar_unitary(2, np.random.default_rng(1))
    c = circuit(Q2, hadamard(A), raw_unitary([B], u), phase_oracle([A, B], ["01"]),
                cnot(A, B), diffusion([A, B]))
    d = Circuit.from_json(c.to_json())
    assert np.allclose(d.unitary(), c.unitary())


def test_measure_basis():
    out = measure_distribution(DensityState.basis("00", Q2), "q")
    assert len(out) == 1 and out[0][0] == "00" and out[0][1] == pytest.approx(1.0)


def test_measure_plus():
    lay = RegisterLayout((("q", 1),))
    s = apply(circuit(lay, hadamard(("q", 0))), DensityState.basis("0", lay))
    out = measure_distribution(s, "q")
    assert [o for o, _, _ in out] == ["0", "1"]
    assert [p for _, p, _ in out] == pytest.approx([0.5, 0.5])


def test_measure_bell_first_qubit():
    lay = RegisterLayout((("a", 1), ("b", 1)))
    s = DensityState(bell().matrix, lay)
    out = measure_distribution(s, "a")
    assert [p for _, p, _ in out] == pytest.approx([0.5, 0.5])
    assert out[0][2].allclose(DensityState.basis("00", lay))
    assert out[1][2].allclose(DensityState.basis("11", lay))


def test_post_select_bell():
    lay = RegisterLayout((("a", 1), ("b", 1)))
    p, s = post_select(DensityState(bell().matrix, lay), "a", "0")
    assert p == pytest.approx(0.5)
    assert s.allclose(DensityState.basis("00", lay))


def test_post_select_zero_probability():
    lay = RegisterLayout((("q", 1),))
    with pytest.raises(ZeroProbabilityBranch):
        post_select(DensityState.basis("1", lay), "q", "0")
    with pytest.raises(UnknownGroup):
        post_select(DensityState.basis("1", lay), "r", "0")


def test_dephase_kills_coherence():
    out = dephase(bell(), "q")
    assert np.allclose(out.matrix, np.diag([0.5, 0, 0, 0.5]))


def test_uniform_prep_first_column():
    u = uniform_prep(2, 3)
    assert np.allclose(u[:, 0], [1 / np.sqrt(3)] * 3 + [0])
    assert np.allclose(u.conj().T @ u, np.eye(4))


def test_apply_vector_matches_density():
    rng = np.random.default_rng(6)
    c = circuit(Q2, raw_unitary([A, B], haar_unitary(4, rng)), hadamard(A))
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    out = apply_vector(c, v, Q2)
    assert apply(c, DensityState.from_vector(v, Q2)).allclose(DensityState.from_vector(out, Q2))


@hsettings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_apply_preserves_state(seed, rank):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout((("a", 1), ("b", 2)))
    s = random_state(3, rng, rank=rank, layout=lay)
    c = circuit(lay, raw_unitary([("b", 1), ("a", 0)], haar_unitary(4, rng)), hadamard(("b", 0)))
    out = apply(c, s)
    m = out.matrix
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(m, m.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(m).min() > -1e-10
    # factor and dense paths agree
    dense = apply(c, DensityState(s.matrix, lay))
    assert np.allclose(dense.matrix, m, atol=1e-10)

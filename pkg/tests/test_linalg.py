import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from qswi.errors import NotHermitian
from qswi.linalg import (hermitian_eigenvalues, hermitian_eigh, jacobi_symmetric,
                         real_embedding, trace_norm_hermitian)


def _herm(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_jacobi_matches_lapack(n):
    rng = np.random.default_rng(n)
    h = _herm(rng, n)
    ours = np.sort(hermitian_eigenvalues(h, method="jacobi"))
    ref = np.sort(np.linalg.eigvalsh(h))
    assert np.allclose(ours, ref, atol=1e-10)


def test_jacobi_eigenvectors_diagonalise():
    rng = np.random.default_rng(7)
    h = _herm(rng, 6)
    vals, vecs = hermitian_eigh(h, method="jacobi")
    assert np.allclose(vecs.conj().T @ h @ vecs, np.diag(vals), atol=1e-9)


def test_real_embedding_doubles_spectrum():
    rng = np.random.default_rng(3)
    h = _herm(rng, 4)
    emb = np.sort(np.linalg.eigvalsh(real_embedding(h)))
    ref = np.sort(np.repeat(np.linalg.eigvalsh(h), 2))
    assert np.allclose(emb, ref, atol=1e-10)


def test_symmetric_jacobi_odd_size():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(5, 5))
    s = a + a.T
    vals, vecs = jacobi_symmetric(s)
    assert np.allclose(np.sort(vals), np.linalg.eigvalsh(s), atol=1e-10)
    assert np.allclose(vecs.T @ vecs, np.eye(5), atol=1e-10)


def test_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]], dtype=complex))


@hsettings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_trace_norm_matches_reference(n, seed):
    h = _herm(np.random.default_rng(seed), n)
    assert abs(trace_norm_hermitian(h) - np.sum(np.abs(np.linalg.eigvalsh(h)))) < 1e-9

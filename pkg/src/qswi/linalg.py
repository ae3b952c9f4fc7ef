"""Hermitian eigensolvers.

The reference path is a parallel-ordered cyclic Jacobi iteration on the
real-symmetric embedding ``[[A, -B], [B, A]]`` of ``H = A + iB``; every
eigenvalue of ``H`` appears twice in the embedding.  Above
``settings.jacobi_max_dim`` the LAPACK driver is used instead.
"""
from __future__ import annotations

import numpy as np

from .config import settings
from .errors import NotHermitian


def real_embedding(h: np.ndarray) -> np.ndarray:
    a, b = h.real, h.imag
    return np.block([[a, -b], [b, a]])


def _round_robin(n: int):
    """Yield n-1 rounds of n/2 disjoint index pairs covering every pair once."""
    players = list(range(n))
    for _ in range(n - 1):
        yield [(players[i], players[n - 1 - i]) for i in range(n // 2)]
        players = [players[0]] + [players[-1]] + players[1:-1]


def jacobi_symmetric(s: np.ndarray, tol: float | None = None, max_sweeps: int = 100):
    """Diagonalise a real symmetric matrix; returns (eigenvalues, eigenvectors).

    Eigenvectors are the columns of the returned orthogonal matrix.
    """
    tol = settings.jacobi_sweep_tol if tol is None else tol
    a = np.array(s, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    odd = n % 2
    if odd:
        a = np.pad(a, ((0, 1), (0, 1)))
        v = np.eye(n + 1)
    size = a.shape[0]
    scale = max(1.0, np.linalg.norm(a))
    schedule = list(_round_robin(size))
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * scale:
            break
        for pairs in schedule:
            p = np.array([i for i, _ in pairs])
            q = np.array([j for _, j in pairs])
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * c
            rot = np.eye(size)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = sn
            rot[q, p] = -sn
            a = rot.T @ a @ rot
            v = v @ rot
    if odd:
        a, v = a[:n, :n], v[:n, :n]
    return a.diagonal().copy(), v


def _check_hermitian(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > settings.eig_input_hermitian_atol:
        raise NotHermitian(f"matrix deviates from Hermitian by {dev:.3e}")
    return m


def _jacobi_hermitian(h: np.ndarray, vectors: bool):
    n = h.shape[0]
    vals, vecs = jacobi_symmetric(real_embedding(h))
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    # eigenvalues come in equal pairs; keep every second one
    eig = vals[::2].copy()
    if not vectors:
        return eig, None
    z = vecs[:n, :] + 1j * vecs[n:, :]
    out = np.zeros((n, n), dtype=complex)
    col, i = 0, 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and abs(vals[j] - vals[i]) < 1e-8 * max(1.0, abs(vals[i])):
            j += 1
        mult = (j - i) // 2
        u, _, _ = np.linalg.svd(z[:, i:j], full_matrices=False)
        out[:, col:col + mult] = u[:, :mult]
        col += mult
        i = j
    return eig, out


def hermitian_eigh(m, method: str = "auto"):
    """Eigenvalues (descending) and eigenvectors of a Hermitian matrix."""
    h = _check_hermitian(m)
    if _use_jacobi(h, method):
        return _jacobi_hermitian(h, vectors=True)
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    return vals[::-1], vecs[:, ::-1]


def hermitian_eigenvalues(m, method: str = "auto") -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix in descending order."""
    h = _check_hermitian(m)
    if _use_jacobi(h, method):
        return _jacobi_hermitian(h, vectors=False)[0]
    return np.linalg.eigvalsh((h + h.conj().T) / 2)[::-1]


def _use_jacobi(h, method):
    if method == "jacobi":
        return True
    if method == "lapack":
        return False
    if method != "auto":
        raise ValueError(f"unknown eigensolver {method!r}")
    return h.shape[0] <= settings.jacobi_max_dim


def trace_norm_hermitian(d: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    if d.shape[0] == 0:
        return 0.0
    return float(np.sum(np.abs(hermitian_eigenvalues(d))))

"""Register layouts, density states and the distances between them.

Qubit ordering: the first group of a layout occupies the most significant
qubit positions, and within a group offset 0 is the most significant bit.
A state is stored either as a dense matrix or as a factor ``F`` with
``rho = F F^dagger``; the two are interchangeable and every operation below
returns exact results for both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import settings
from .errors import (DimensionCapExceeded, DimensionMismatch, InvalidState,
                     LayoutMismatch, UnknownGroup)
from .linalg import hermitian_eigh, hermitian_eigenvalues, trace_norm_hermitian

Address = tuple  # (group name, offset)


@dataclass(frozen=True)
class RegisterLayout:
    groups: tuple = ()
    cap: int | None = None

    def __post_init__(self):
        groups = tuple((str(n), int(q)) for n, q in self.groups)
        object.__setattr__(self, "groups", groups)
        names = [n for n, _ in groups]
        if len(set(names)) != len(names):
            raise LayoutMismatch(f"duplicate group names in {names}")
        if any(q < 0 for _, q in groups):
            raise LayoutMismatch("qubit counts must be nonnegative")
        cap = settings.qubit_cap if self.cap is None else self.cap
        if self.n_qubits > cap:
            raise DimensionCapExceeded(
                f"layout needs {self.n_qubits} qubits, cap is {cap}")

    @classmethod
    def of(cls, *groups) -> "RegisterLayout":
        return cls(tuple(groups))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.groups]

    @property
    def n_qubits(self) -> int:
        return sum(q for _, q in self.groups)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def __contains__(self, name) -> bool:
        return any(n == name for n, _ in self.groups)

    def size(self, name: str) -> int:
        for n, q in self.groups:
            if n == name:
                return q
        raise UnknownGroup(name)

    def positions(self, name: str) -> list[int]:
        start = 0
        for n, q in self.groups:
            if n == name:
                return list(range(start, start + q))
            start += q
        raise UnknownGroup(name)

    def position(self, address: Address) -> int:
        name, offset = address
        pos = self.positions(name)
        if not 0 <= offset < len(pos):
            raise UnknownGroup(f"{name}[{offset}] outside group of size {len(pos)}")
        return pos[offset]

    def addresses(self, name: str) -> list[Address]:
        return [(name, i) for i in range(self.size(name))]

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.groups + other.groups)

    def restrict(self, names: Iterable[str]) -> "RegisterLayout":
        return RegisterLayout(tuple((n, self.size(n)) for n in names))

    def without(self, names: Iterable[str]) -> "RegisterLayout":
        drop = set(names)
        return RegisterLayout(tuple(g for g in self.groups if g[0] not in drop))

    def to_json(self) -> list:
        return [[n, q] for n, q in self.groups]

    @classmethod
    def from_json(cls, data) -> "RegisterLayout":
        return cls(tuple((n, q) for n, q in data))


def _single_register(dim: int) -> RegisterLayout:
    n = int(round(math.log2(dim))) if dim > 0 else 0
    if 2 ** n != dim:
        raise DimensionMismatch(f"dimension {dim} is not a power of two")
    return RegisterLayout((("q", n),))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class DensityState:
    """A positive semidefinite unit-trace operator over a register layout."""

    __slots__ = ("layout", "_matrix", "_factor")

    def __init__(self, matrix=None, layout: RegisterLayout | None = None, *,
                 factor=None, validate: bool = True):
        if (matrix is None) == (factor is None):
            raise ValueError("give exactly one of matrix or factor")
        if matrix is not None:
            m = np.asarray(matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidState(f"density matrix must be square, got {m.shape}")
            dim = m.shape[0]
            self._matrix, self._factor = _frozen(m), None
        else:
            f = np.asarray(factor, dtype=complex)
            if f.ndim == 1:
                f = f[:, None]
            dim = f.shape[0]
            self._matrix, self._factor = None, _frozen(f)
        self.layout = _single_register(dim) if layout is None else layout
        if self.layout.dim != dim:
            raise DimensionMismatch(
                f"layout dimension {self.layout.dim} != matrix dimension {dim}")
        if validate:
            self._validate_cheap()

    # construction helpers
    @classmethod
    def from_vector(cls, psi, layout=None) -> "DensityState":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(factor=psi[:, None], layout=layout)

    @classmethod
    def zero(cls, layout: RegisterLayout) -> "DensityState":
        return cls.basis("0" * layout.n_qubits, layout)

    @classmethod
    def basis(cls, bits: str, layout: RegisterLayout | None = None) -> "DensityState":
        layout = RegisterLayout((("q", len(bits)),)) if layout is None else layout
        if len(bits) != layout.n_qubits:
            raise DimensionMismatch(f"bitstring {bits!r} vs {layout.n_qubits} qubits")
        psi = np.zeros(layout.dim, dtype=complex)
        psi[int(bits, 2) if bits else 0] = 1.0
        return cls.from_vector(psi, layout)

    @classmethod
    def maximally_mixed(cls, layout: RegisterLayout) -> "DensityState":
        return cls(np.eye(layout.dim) / layout.dim, layout)

    # views
    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    @property
    def factor(self) -> np.ndarray | None:
        return self._factor

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            f = self._factor
            self._matrix = _frozen(f @ f.conj().T)
        return self._matrix

    def relabel(self, layout: RegisterLayout) -> "DensityState":
        if layout.dim != self.dim:
            raise DimensionMismatch("relabelling must keep the dimension")
        if self._factor is not None:
            return DensityState(factor=self._factor, layout=layout, validate=False)
        return DensityState(self._matrix, layout, validate=False)

    def probability(self, index: int) -> float:
        if self._factor is not None:
            return float(np.sum(np.abs(self._factor[index]) ** 2))
        return float(self.matrix[index, index].real)

    def diagonal(self) -> np.ndarray:
        if self._factor is not None:
            return np.sum(np.abs(self._factor) ** 2, axis=1)
        return self.matrix.diagonal().real.copy()

    def is_diagonal(self) -> bool:
        m = self.matrix
        return not np.any(m[~np.eye(self.dim, dtype=bool)])

    # invariants
    def _validate_cheap(self):
        if self._factor is not None:
            if not np.all(np.isfinite(self._factor)):
                raise InvalidState("non-finite entries")
            tr = float(np.sum(np.abs(self._factor) ** 2))
        else:
            m = self._matrix
            if not np.all(np.isfinite(m)):
                raise InvalidState("non-finite entries")
            dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
            if dev > settings.hermitian_atol:
                raise InvalidState(f"not Hermitian (deviation {dev:.2e})")
            tr = float(np.trace(m).real)
        if abs(tr - 1.0) > settings.trace_atol:
            raise InvalidState(f"trace {tr!r} differs from 1")

    def min_eigenvalue(self) -> float:
        if self._factor is not None:
            return 0.0
        return float(hermitian_eigenvalues(self.matrix)[-1])

    def check(self) -> "DensityState":
        """Full invariant check, including positivity."""
        self._validate_cheap()
        if self.min_eigenvalue() < -settings.psd_atol:
            raise InvalidState(f"negative eigenvalue {self.min_eigenvalue():.3e}")
        return self

    def clean(self) -> "DensityState":
        """Clamp round-off negative eigenvalues to zero and renormalise."""
        if self._factor is not None:
            return self
        vals, vecs = hermitian_eigh(self.matrix)
        if vals[-1] < -settings.psd_atol:
            raise InvalidState(f"negative eigenvalue {vals[-1]:.3e}")
        vals = np.clip(vals, 0.0, None)
        m = (vecs * vals) @ vecs.conj().T
        return DensityState(m / np.trace(m).real, self.layout)

    def allclose(self, other: "DensityState", atol: float = 1e-9) -> bool:
        return self.dim == other.dim and bool(np.max(np.abs(self.matrix - other.matrix)) <= atol)

    def __repr__(self):
        kind = "factor" if self._factor is not None else "matrix"
        return f"DensityState(dim={self.dim}, {kind}, layout={self.layout.groups})"

    # serialisation
    def to_json(self) -> dict:
        return {"layout": self.layout.to_json(), "matrix": matrix_to_json(self.matrix)}

    @classmethod
    def from_json(cls, data) -> "DensityState":
        return cls(matrix_from_json(data["matrix"]), RegisterLayout.from_json(data["layout"]))


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)


# ---------------------------------------------------------------------------
# tensor products and partial traces

def tensor(a, b):
    """Kronecker product of two states (layouts concatenated) or two matrices."""
    if isinstance(a, DensityState) and isinstance(b, DensityState):
        layout = a.layout.concat(b.layout)
        if a.factor is not None and b.factor is not None:
            return DensityState(factor=np.kron(a.factor, b.factor), layout=layout,
                                validate=False)
        return DensityState(np.kron(a.matrix, b.matrix), layout, validate=False)
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidState("non-finite entries")
    if a.shape[0] * b.shape[0] > 2 ** settings.qubit_cap:
        raise DimensionCapExceeded("tensor product exceeds the qubit cap")
    return np.kron(a, b)


def tensor_all(states: Sequence[DensityState]) -> DensityState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def _axes_for(layout: RegisterLayout, keep: Sequence[str]):
    for name in keep:
        layout.size(name)
    keep_pos = [p for name in keep for p in layout.positions(name)]
    rest = [p for p in range(layout.n_qubits) if p not in set(keep_pos)]
    return keep_pos, rest


def reduce_to(s: DensityState, keep: Sequence[str]) -> DensityState:
    """Reduced state on ``keep`` groups, in the order given."""
    layout = s.layout
    keep = list(keep)
    keep_pos, rest = _axes_for(layout, keep)
    n = layout.n_qubits
    new_layout = layout.restrict(keep)
    dk, dr = 2 ** len(keep_pos), 2 ** len(rest)
    if s.factor is not None:
        f = s.factor
        r = f.shape[1]
        t = f.reshape((2,) * n + (r,)) if n else f.reshape(r)
        t = np.transpose(t, keep_pos + rest + [n])
        return DensityState(factor=t.reshape(dk, dr * r), layout=new_layout, validate=False)
    t = s.matrix.reshape((2,) * (2 * n)) if n else s.matrix
    perm = keep_pos + rest + [n + p for p in keep_pos] + [n + p for p in rest]
    t = np.transpose(t, perm).reshape(dk, dr, dk, dr)
    return DensityState(np.einsum("ajbj->ab", t), new_layout, validate=False)


def partial_trace(s: DensityState, discard: Iterable[str]) -> DensityState:
    discard = set(discard)
    for name in discard:
        s.layout.size(name)
    return reduce_to(s, [n for n in s.layout.names if n not in discard])


def mix(pairs: Sequence[tuple[float, DensityState]]) -> DensityState:
    """Convex combination ``sum p_i rho_i``; all states share one layout."""
    pairs = [(float(p), s) for p, s in pairs if p > 0]
    if not pairs:
        raise ValueError("empty mixture")
    layout = pairs[0][1].layout
    total = sum(p for p, _ in pairs)
    if all(s.factor is not None for _, s in pairs) and \
            sum(s.factor.shape[1] for _, s in pairs) <= layout.dim:
        f = np.hstack([np.sqrt(p / total) * s.factor for p, s in pairs])
        return DensityState(factor=f, layout=layout, validate=False)
    m = sum(p * s.matrix for p, s in pairs) / total
    return DensityState(m, layout, validate=False)


# ---------------------------------------------------------------------------
# trace distance

def _half_trace_norm(a: tuple | None, b: tuple | None) -> float:
    """(1/2)||w_a rho_a - w_b rho_b||_1 for weighted states (None means zero)."""
    if a is None and b is None:
        return 0.0
    if a is None or b is None:
        return 0.5 * (a or b)[0]
    (wa, sa), (wb, sb) = a, b
    if sa.dim != sb.dim:
        raise DimensionMismatch(f"dimensions {sa.dim} and {sb.dim} differ")
    dim = sa.dim
    if sa.factor is not None and sb.factor is not None and \
            sa.factor.shape[1] + sb.factor.shape[1] <= dim // 2:
        fa = np.sqrt(wa) * sa.factor
        fb = np.sqrt(wb) * sb.factor
        q, _ = np.linalg.qr(np.hstack([fa, fb]))
        ga, gb = q.conj().T @ fa, q.conj().T @ fb
        d = ga @ ga.conj().T - gb @ gb.conj().T
        return 0.5 * trace_norm_hermitian((d + d.conj().T) / 2)
    if sa.is_diagonal() and sb.is_diagonal():
        return 0.5 * float(np.sum(np.abs(wa * sa.diagonal() - wb * sb.diagonal())))
    d = wa * sa.matrix - wb * sb.matrix
    return 0.5 * trace_norm_hermitian((d + d.conj().T) / 2)


def trace_distance(a, b) -> float:
    """(1/2) sum |eig(a - b)|, clamped to [0, 1].

    Accepts two :class:`DensityState` or two :class:`CQState` values.
    """
    if isinstance(a, CQState) or isinstance(b, CQState):
        a, b = as_cq(a), as_cq(b)
        if a.quantum_dim != b.quantum_dim:
            raise DimensionMismatch("classical-quantum states of different dimension")
        total = sum(_half_trace_norm(a.blocks.get(lab), b.blocks.get(lab))
                    for lab in set(a.blocks) | set(b.blocks))
    else:
        if a.dim != b.dim:
            raise DimensionMismatch(f"dimensions {a.dim} and {b.dim} differ")
        total = _half_trace_norm((1.0, a), (1.0, b))
    return float(min(1.0, max(0.0, total)))


# ---------------------------------------------------------------------------
# classical-quantum states

class CQState:
    """Block-diagonal state ``sum_l p_l |l><l| (x) rho_l`` with classical labels.

    Labels are hashable tuples; the classical register is kept implicit so
    that a verifier view carrying classical messages costs no qubits.
    """

    __slots__ = ("blocks", "layout")

    def __init__(self, blocks: Mapping, layout: RegisterLayout):
        self.blocks = {tuple(k): (float(w), s) for k, (w, s) in blocks.items() if w > 0}
        self.layout = layout
        total = sum(w for w, _ in self.blocks.values())
        if abs(total - 1.0) > 1e-9:
            raise InvalidState(f"classical weights sum to {total}")

    @classmethod
    def single(cls, s: DensityState, label=()) -> "CQState":
        return cls({tuple(label): (1.0, s)}, s.layout)

    @classmethod
    def from_branches(cls, branches: Sequence[tuple[float, tuple, DensityState]]) -> "CQState":
        grouped: dict = {}
        for p, label, s in branches:
            grouped.setdefault(tuple(label), []).append((p, s))
        blocks = {lab: (sum(p for p, _ in items), mix(items)) for lab, items in grouped.items()}
        layout = branches[0][2].layout
        return cls(blocks, layout)

    @property
    def quantum_dim(self) -> int:
        return self.layout.dim

    @property
    def labels(self) -> list:
        return sorted(self.blocks, key=repr)

    def weight(self, label) -> float:
        return self.blocks.get(tuple(label), (0.0, None))[0]

    def quantum_part(self) -> DensityState:
        """Forget the classical label."""
        return mix(list(self.blocks.values()))

    def map(self, fn) -> "CQState":
        blocks = {lab: (w, fn(s)) for lab, (w, s) in self.blocks.items()}
        layout = next(iter(blocks.values()))[1].layout
        return CQState(blocks, layout)

    def reduce_to(self, keep: Sequence[str]) -> "CQState":
        return self.map(lambda s: reduce_to(s, keep))

    def tensor(self, other: "CQState") -> "CQState":
        blocks = {}
        for la, (wa, sa) in self.blocks.items():
            for lb, (wb, sb) in other.blocks.items():
                blocks[la + lb] = (wa * wb, tensor(sa, sb))
        return CQState(blocks, self.layout.concat(other.layout))

    def to_density(self, labels: Sequence | None = None, register: str = "C") -> DensityState:
        """Materialise as a dense state with an explicit classical register first.

        ``labels`` fixes the basis index of each label, so that two states
        meant for comparison share one encoding.
        """
        labels = [tuple(l) for l in (self.labels if labels is None else labels)]
        missing = set(self.blocks) - set(labels)
        if missing:
            raise ValueError(f"labels {missing} not in the supplied encoding")
        nbits = max(0, math.ceil(math.log2(len(labels)))) if len(labels) > 1 else 0
        layout = RegisterLayout(((register, nbits),)).concat(self.layout)
        dq = self.layout.dim
        m = np.zeros((layout.dim, layout.dim), dtype=complex)
        for i, lab in enumerate(labels):
            if lab in self.blocks:
                w, s = self.blocks[lab]
                m[i * dq:(i + 1) * dq, i * dq:(i + 1) * dq] = w * s.matrix
        return DensityState(m, layout, validate=False)

    def __repr__(self):
        return f"CQState(labels={len(self.blocks)}, layout={self.layout.groups})"


def as_cq(x) -> CQState:
    return x if isinstance(x, CQState) else CQState.single(x)


def random_state(n_qubits: int, rng: np.random.Generator, rank: int | None = None,
                 layout: RegisterLayout | None = None) -> DensityState:
    """Random density matrix from a Ginibre draw of the given rank."""
    dim = 2 ** n_qubits
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    layout = layout or RegisterLayout((("q", n_qubits),))
    return DensityState(m / np.trace(m).real, layout)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))

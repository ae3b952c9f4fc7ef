"""Gates, circuits, exact channel application, measurement and post-selection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import settings
from .errors import (DimensionMismatch, LayoutMismatch, UnknownGroup,
                     ZeroProbabilityBranch)
from .states import (DensityState, RegisterLayout, matrix_from_json,
                     matrix_to_json)

KINDS = ("Hadamard", "PauliX", "CNOT", "ControlledSwap", "GroverDiffusion",
         "PhaseOracle", "RawUnitary")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _addr(a) -> tuple:
    return (str(a[0]), int(a[1]))


@dataclass(frozen=True)
class Gate:
    """One gate.

    ``controls`` are (address, bit) pairs; the gate acts only on the branch
    where every control holds its bit.  ``ControlledSwap`` swaps the first
    half of ``targets`` with the second half and must carry at least one
    control.  ``PhaseOracle`` payload is the set of target bitstrings that
    receive a -1 phase.
    """

    kind: str
    targets: tuple
    controls: tuple = ()
    payload: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(_addr(t) for t in self.targets)
        controls = tuple((_addr(a), int(v)) for a, v in self.controls)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "controls", controls)
        qubits = list(targets) + [a for a, _ in controls]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"gate addresses must be distinct: {qubits}")
        k = len(targets)
        if self.kind == "CNOT" and k != 2:
            raise ValueError("CNOT takes (control, target)")
        if self.kind == "ControlledSwap" and (k % 2 or not controls):
            raise ValueError("ControlledSwap needs a control and two equal-length target lists")
        if self.kind == "PhaseOracle":
            accepted = frozenset(str(b) for b in (self.payload or ()))
            if any(len(b) != k or set(b) - {"0", "1"} for b in accepted):
                raise ValueError("PhaseOracle truth table entries must be target-length bitstrings")
            object.__setattr__(self, "payload", accepted)
        if self.kind == "RawUnitary":
            u = np.array(self.payload, dtype=complex)
            if u.shape != (2 ** k, 2 ** k):
                raise DimensionMismatch(f"unitary of shape {u.shape} on {k} qubits")
            dev = np.max(np.abs(u.conj().T @ u - np.eye(2 ** k)))
            if dev > settings.unitary_atol:
                raise ValueError(f"RawUnitary payload is not unitary (deviation {dev:.2e})")
            u.setflags(write=False)
            object.__setattr__(self, "payload", u)

    @property
    def qubits(self) -> list:
        return [a for a, _ in self.controls] + list(self.targets)

    def base_matrix(self) -> np.ndarray:
        k = len(self.targets)
        if self.kind in ("Hadamard", "PauliX"):
            one = _H if self.kind == "Hadamard" else _X
            m = np.ones((1, 1), dtype=complex)
            for _ in range(k):
                m = np.kron(m, one)
            return m
        if self.kind == "CNOT":
            return _CNOT
        if self.kind == "ControlledSwap":
            half = k // 2
            d = 2 ** half
            m = np.zeros((d * d, d * d), dtype=complex)
            for i in range(d):
                for j in range(d):
                    m[j * d + i, i * d + j] = 1.0
            return m
        if self.kind == "GroverDiffusion":
            d = 2 ** k
            return np.full((d, d), 2.0 / d, dtype=complex) - np.eye(d)
        if self.kind == "PhaseOracle":
            diag = np.ones(2 ** k, dtype=complex)
            for bits in self.payload:
                diag[int(bits, 2) if bits else 0] = -1.0
            return np.diag(diag)
        return np.array(self.payload, dtype=complex)

    def matrix(self) -> np.ndarray:
        """Unitary on (controls..., targets...) in that qubit order."""
        base = self.base_matrix()
        if not self.controls:
            return base
        dt = base.shape[0]
        nc = len(self.controls)
        full = np.eye(dt * 2 ** nc, dtype=complex)
        pattern = int("".join(str(v) for _, v in self.controls), 2)
        full[pattern * dt:(pattern + 1) * dt, pattern * dt:(pattern + 1) * dt] = base
        return full

    def inverse(self) -> "Gate":
        if self.kind == "RawUnitary":
            return Gate("RawUnitary", self.targets, self.controls, np.conj(self.payload).T)
        return self

    def with_controls(self, extra: Sequence) -> "Gate":
        return Gate(self.kind, self.targets, tuple(extra) + self.controls, self.payload)

    def renamed(self, mapping: Mapping[str, str]) -> "Gate":
        ren = lambda a: (mapping.get(a[0], a[0]), a[1])
        return Gate(self.kind, tuple(ren(t) for t in self.targets),
                    tuple((ren(a), v) for a, v in self.controls), self.payload)

    def to_json(self) -> dict:
        d = {"kind": self.kind, "targets": [list(t) for t in self.targets]}
        if self.controls:
            d["controls"] = [[list(a), v] for a, v in self.controls]
        if self.kind == "PhaseOracle":
            d["payload"] = sorted(self.payload)
        elif self.kind == "RawUnitary":
            d["payload"] = matrix_to_json(self.payload)
        return d

    @classmethod
    def from_json(cls, d) -> "Gate":
        payload = d.get("payload")
        if d["kind"] == "RawUnitary":
            payload = matrix_from_json(payload)
        return cls(d["kind"], tuple(tuple(t) for t in d["targets"]),
                   tuple((tuple(a), v) for a, v in d.get("controls", ())), payload)


# gate constructors -----------------------------------------------------------

def hadamard(*targets) -> Gate:
    return Gate("Hadamard", targets)


def pauli_x(*targets, controls=()) -> Gate:
    return Gate("PauliX", targets, controls)


def cnot(control, target) -> Gate:
    return Gate("CNOT", (control, target))


def cswap(control, a: Sequence, b: Sequence, controls=()) -> Gate:
    if len(a) != len(b):
        raise ValueError("swap blocks must have equal length")
    return Gate("ControlledSwap", tuple(a) + tuple(b), ((control, 1),) + tuple(controls))


def diffusion(targets: Sequence) -> Gate:
    return Gate("GroverDiffusion", tuple(targets))


def phase_oracle(targets: Sequence, accepted: Iterable[str]) -> Gate:
    return Gate("PhaseOracle", tuple(targets), (), frozenset(accepted))


def raw_unitary(targets: Sequence, u) -> Gate:
    return Gate("RawUnitary", tuple(targets), (), u)


def write_bits(targets: Sequence, bits: str, controls=()) -> list[Gate]:
    """X gates putting ``bits`` into zero-initialised ``targets``."""
    return [pauli_x(t, controls=controls) for t, b in zip(targets, bits) if b == "1"]


def flip_if(targets: Sequence, out, accepted: Iterable[str]) -> list[Gate]:
    """Flip ``out`` exactly on basis states of ``targets`` listed in ``accepted``."""
    accepted = [a + "1" for a in accepted]
    return [hadamard(out), phase_oracle(list(targets) + [out], accepted), hadamard(out)]


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def uniform_prep(n_qubits: int, count: int) -> np.ndarray:
    """Unitary whose first column is the uniform superposition over ``count`` basis states."""
    d = 2 ** n_qubits
    u = np.zeros(d, dtype=complex)
    u[:count] = 1 / np.sqrt(count)
    e0 = np.zeros(d, dtype=complex)
    e0[0] = 1.0
    v = e0 - u
    if np.linalg.norm(v) < 1e-15:
        return np.eye(d, dtype=complex)
    v /= np.linalg.norm(v)
    return np.eye(d) - 2 * np.outer(v, v.conj())


# circuits ------------------------------------------------------------------

@dataclass(frozen=True)
class Circuit:
    layout: RegisterLayout
    gates: tuple = field(default=())

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            for a in g.qubits:
                self.layout.position(a)

    @classmethod
    def empty(cls, layout: RegisterLayout | None = None) -> "Circuit":
        return cls(layout or RegisterLayout(), ())

    def __len__(self):
        return len(self.gates)

    @property
    def groups(self) -> set[str]:
        return {a[0] for g in self.gates for a in g.qubits}

    def inverse(self) -> "Circuit":
        return Circuit(self.layout, tuple(g.inverse() for g in reversed(self.gates)))

    def controlled(self, controls: Sequence, extra_layout: RegisterLayout) -> "Circuit":
        layout = _merge_layouts(self.layout, extra_layout)
        return Circuit(layout, tuple(g.with_controls(controls) for g in self.gates))

    def renamed(self, mapping: Mapping[str, str]) -> "Circuit":
        layout = RegisterLayout(tuple((mapping.get(n, n), q) for n, q in self.layout.groups))
        return Circuit(layout, tuple(g.renamed(mapping) for g in self.gates))

    def then(self, *others: "Circuit") -> "Circuit":
        layout, gates = self.layout, list(self.gates)
        for o in others:
            layout = _merge_layouts(layout, o.layout)
            gates.extend(o.gates)
        return Circuit(layout, tuple(gates))

    def unitary(self) -> np.ndarray:
        """Composite unitary on the circuit layout (small layouts only)."""
        u = np.eye(self.layout.dim, dtype=complex)
        return apply_rows(self, u, self.layout)

    def to_json(self) -> dict:
        return {"layout": self.layout.to_json(), "gates": [g.to_json() for g in self.gates]}

    @classmethod
    def from_json(cls, d) -> "Circuit":
        return cls(RegisterLayout.from_json(d["layout"]),
                   tuple(Gate.from_json(g) for g in d["gates"]))


def circuit(layout: RegisterLayout, *gate_lists) -> Circuit:
    gates = []
    for item in gate_lists:
        if isinstance(item, Gate):
            gates.append(item)
        else:
            gates.extend(item)
    return Circuit(layout, tuple(gates))


def _merge_layouts(a: RegisterLayout, b: RegisterLayout) -> RegisterLayout:
    groups = list(a.groups)
    for name, q in b.groups:
        if name in a:
            if a.size(name) != q:
                raise LayoutMismatch(f"group {name} has sizes {a.size(name)} and {q}")
        else:
            groups.append((name, q))
    return RegisterLayout(tuple(groups))


def check_sublayout(sub: RegisterLayout, full: RegisterLayout) -> None:
    for name, q in sub.groups:
        if name not in full:
            raise LayoutMismatch(f"circuit group {name!r} absent from state layout")
        if full.size(name) != q:
            raise LayoutMismatch(f"group {name!r}: circuit has {q} qubits, state has {full.size(name)}")


def _apply_local(u: np.ndarray, arr: np.ndarray, positions: list[int], n: int) -> np.ndarray:
    """Apply ``u`` to the qubits ``positions`` of the row index of ``arr`` (dim x r)."""
    r = arr.shape[1]
    k = len(positions)
    t = arr.reshape((2,) * n + (r,))
    t = np.moveaxis(t, positions, list(range(k)))
    shape = t.shape
    t = (u @ t.reshape(2 ** k, -1)).reshape(shape)
    t = np.moveaxis(t, list(range(k)), positions)
    return t.reshape(2 ** n, r)


def apply_rows(c: Circuit, arr: np.ndarray, layout: RegisterLayout) -> np.ndarray:
    """Left-multiply the columns of ``arr`` by the circuit unitary."""
    check_sublayout(c.layout, layout)
    n = layout.n_qubits
    out = np.asarray(arr, dtype=complex)
    for g in c.gates:
        out = _apply_local(g.matrix(), out, [layout.position(a) for a in g.qubits], n)
    return out


def apply_vector(c: Circuit, psi: np.ndarray, layout: RegisterLayout) -> np.ndarray:
    return apply_rows(c, psi.reshape(-1, 1), layout).reshape(-1)


def apply(c: Circuit, s: DensityState) -> DensityState:
    """``U s U^dagger`` with identity on qubits the circuit does not touch."""
    if s.factor is not None:
        return DensityState(factor=apply_rows(c, s.factor, s.layout), layout=s.layout,
                            validate=False)
    m = apply_rows(c, s.matrix, s.layout)
    m = apply_rows(c, m.conj().T, s.layout).conj().T
    return DensityState((m + m.conj().T) / 2, s.layout, validate=False)


# measurement -----------------------------------------------------------------

def _mask(layout: RegisterLayout, group: str, value: str) -> np.ndarray:
    pos = layout.positions(group)
    if len(value) != len(pos):
        raise ValueError(f"value {value!r} does not match group {group!r} of size {len(pos)}")
    idx = np.arange(layout.dim)
    n = layout.n_qubits
    keep = np.ones(layout.dim, dtype=bool)
    for p, b in zip(pos, value):
        keep &= ((idx >> (n - 1 - p)) & 1) == int(b)
    return keep


def project(s: DensityState, group: str, value: str):
    """Unnormalised projection; returns (probability, projected operator pieces)."""
    keep = _mask(s.layout, group, value)
    if s.factor is not None:
        f = np.where(keep[:, None], s.factor, 0)
        return float(np.sum(np.abs(f) ** 2)), f, None
    m = s.matrix * np.outer(keep, keep)
    return float(np.trace(m).real), None, m


def post_select(s: DensityState, group: str, value: str) -> tuple[float, DensityState]:
    if group not in s.layout:
        raise UnknownGroup(group)
    p, f, m = project(s, group, value)
    if p < settings.zero_probability:
        raise ZeroProbabilityBranch(f"outcome {value!r} on {group!r} has probability {p:.3e}")
    if f is not None:
        return p, DensityState(factor=f / np.sqrt(p), layout=s.layout)
    return p, DensityState(m / p, s.layout)


def measure_distribution(s: DensityState, group: str) -> list[tuple[str, float, DensityState]]:
    if group not in s.layout:
        raise UnknownGroup(group)
    k = s.layout.size(group)
    out = []
    for i in range(2 ** k):
        bits = format(i, f"0{k}b") if k else ""
        p, f, m = project(s, group, bits)
        if p < settings.zero_probability:
            continue
        post = DensityState(factor=f / np.sqrt(p), layout=s.layout) if f is not None \
            else DensityState(m / p, s.layout)
        out.append((bits, p, post))
    return out


def dephase(s: DensityState, group: str) -> DensityState:
    """Standard-basis measurement of ``group`` with the outcome forgotten."""
    k = s.layout.size(group)
    total = np.zeros((s.dim, s.dim), dtype=complex)
    for i in range(2 ** k):
        _, f, m = project(s, group, format(i, f"0{k}b") if k else "")
        total += f @ f.conj().T if f is not None else m
    return DensityState(total, s.layout, validate=False)


def probability_of(psi: np.ndarray, layout: RegisterLayout, address, bit: int = 1) -> float:
    """Probability that one qubit of a (possibly subnormalised) vector reads ``bit``."""
    n = layout.n_qubits
    p = layout.position(address)
    idx = np.arange(layout.dim)
    sel = ((idx >> (n - 1 - p)) & 1) == bit
    return float(np.sum(np.abs(psi[sel]) ** 2))


def project_vector(psi: np.ndarray, layout: RegisterLayout, group: str, value: str) -> np.ndarray:
    return np.where(_mask(layout, group, value), psi, 0)

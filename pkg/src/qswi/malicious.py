"""Views of a malicious verifier against a one-bit public-coin protocol, and their simulation.

The malicious verifier holds auxiliary state ``rho`` in its own groups
``A``, applies one circuit to ``(B, msg1, A)`` and sends the bit ``B``.  The
bit is measured in the standard basis before the prover reads it, so the
verifier's copy is classical and appears as the view label.

The simulator never sees the witness: it takes the honest view produced
with the canonical witness, runs the malicious circuit on it, XORs the
honest coin with the malicious bit and post-selects on agreement.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, apply_rows, cnot, hadamard, pauli_x
from .config import settings
from .errors import LayoutMismatch, Misconfigured, ZeroProbabilityBranch
from .qip import ProtocolSpec, canonical_witness, run, view
from .states import (CQState, DensityState, RegisterLayout, mix, reduce_to,
                     tensor, trace_distance)


@dataclass(eq=False)
class MaliciousVerifier:
    name: str
    aux: DensityState          # rho on the verifier's private groups
    circuit: Circuit           # acts on B, the first-message groups and aux groups
    bit: str = "B"

    def to_json(self) -> dict:
        return {"name": self.name, "aux": self.aux.to_json(), "circuit": self.circuit.to_json(),
                "bit": self.bit}


def _factor(s: DensityState) -> np.ndarray:
    if s.factor is not None:
        return np.asarray(s.factor)
    vals, vecs = np.linalg.eigh(s.matrix)
    keep = vals > 1e-14
    return vecs[:, keep] * np.sqrt(vals[keep])


def _msg_groups(p: ProtocolSpec):
    if p.public_coin_bits != 1 or p.message_count != 3:
        raise Misconfigured("needs a three-message protocol with a one-bit public coin")
    return list(p.params["msg1"]), list(p.params["msg3"]), p.params["coin"]


def _check_names(p, mv):
    clash = set(mv.aux.layout.names) & (set(p.layout.names) | {mv.bit})
    if clash:
        raise LayoutMismatch(f"malicious verifier groups clash with protocol groups: {clash}")


def _global_layout(mv):
    return RegisterLayout(((mv.bit, 1),)).concat(mv.aux.layout)


def _run_verifier(mv, base: DensityState):
    """Attach |0>_B and rho_A to ``base``, apply the malicious circuit, split on B.

    Returns {b: (probability, normalised post-measurement state)}.
    """
    layout = base.layout.concat(_global_layout(mv))
    zero_b = np.zeros((2, 1), dtype=complex)
    zero_b[0, 0] = 1.0
    f = np.kron(np.kron(_factor(base), zero_b), _factor(mv.aux))
    f = apply_rows(mv.circuit, f, layout)
    n = layout.n_qubits
    pos = layout.position((mv.bit, 0))
    idx = np.arange(layout.dim)
    out = {}
    for b in (0, 1):
        sel = ((idx >> (n - 1 - pos)) & 1) == b
        fb = np.where(sel[:, None], f, 0)
        prob = float(np.sum(np.abs(fb) ** 2))
        if prob < settings.zero_probability:
            continue
        s = DensityState(factor=fb / np.sqrt(prob), layout=layout, validate=False)
        out[b] = (prob, s)
    return out


@dataclass
class MaliciousResult:
    actual: dict
    simulated: dict
    distances: dict
    postselection_probability: float

    def to_json(self) -> dict:
        return {"distances": {str(j): d for j, d in self.distances.items()},
                "postselection_probability": self.postselection_probability}


def malicious_views(p: ProtocolSpec, mv: MaliciousVerifier, x: str, w: str) -> MaliciousResult:
    """Actual and simulated malicious-verifier views at rounds 0, 1 and 2."""
    msg1, msg3, coin = _msg_groups(p)
    _check_names(p, mv)
    aux_names = mv.aux.layout.names
    actual, simulated = {}, {}
    actual[0] = simulated[0] = CQState.single(mv.aux)

    # round 1: first message next to rho
    honest1 = view(p, x, w, 1).quantum_part()
    sim1 = view(p, x, canonical_witness(p, x), 1).quantum_part()
    actual[1] = CQState.single(_attach(reduce_to(honest1, msg1), mv.aux))
    simulated[1] = CQState.single(_attach(reduce_to(sim1, msg1), mv.aux))

    # round 2, actual: malicious circuit, measured bit, honest second prover message
    r = run(p, x, w)
    first = r.branches[0]
    global_state = DensityState.from_vector(first.snapshots[1], r.layout)
    blocks = {}
    for b, (prob, s) in _run_verifier(mv, global_state).items():
        coins = next(br.coins for br in r.branches if br.coins[coin] == b)
        c2 = p.prover(x, w, 2, coins)
        f = apply_rows(c2, s.factor, s.layout)
        s2 = DensityState(factor=f, layout=s.layout, validate=False)
        blocks[((mv.bit, b),)] = (prob, reduce_to(s2, msg1 + msg3 + aux_names))
    actual[2] = CQState(blocks, next(iter(blocks.values()))[1].layout)

    # round 2, simulated: honest coin b_hv from S(x, 2), XOR, post-select on agreement
    sim2 = view(p, x, canonical_witness(p, x), 2)
    joint = []
    for label, (weight, state) in sim2.blocks.items():
        b_hv = dict(label)[coin]
        for b_mv, (prob, s) in _run_verifier(mv, reduce_to(state, msg1 + msg3)).items():
            joint.append((b_hv ^ b_mv, b_mv, weight * prob, s))
    kept = [(b, wgt, s) for xor, b, wgt, s in joint if xor == 0]
    total = sum(wgt for _, wgt, _ in kept)
    if total < settings.zero_probability:
        raise ZeroProbabilityBranch("post-selection on agreeing coins has probability zero")
    sblocks = {}
    for b, wgt, s in kept:
        items = sblocks.setdefault(((mv.bit, b),), [])
        items.append((wgt / total, reduce_to(s, msg1 + msg3 + aux_names)))
    sblocks = {lab: (sum(wg for wg, _ in it), mix(it)) for lab, it in sblocks.items()}
    simulated[2] = CQState(sblocks, next(iter(sblocks.values()))[1].layout)

    dist = {j: trace_distance(actual[j], simulated[j]) for j in (0, 1, 2)}
    return MaliciousResult(actual, simulated, dist, float(total))


def _attach(s: DensityState, aux: DensityState) -> DensityState:
    return tensor(s, aux)


# scripted malicious verifiers ------------------------------------------------------

def _aux(vec, name="A") -> DensityState:
    vec = np.asarray(vec, dtype=complex)
    n = int(np.log2(len(vec)))
    return DensityState.from_vector(vec / np.linalg.norm(vec), RegisterLayout(((name, n),)))


def honest_coin_verifier(p: ProtocolSpec) -> MaliciousVerifier:
    """Flips a fair coin into B, exactly like the honest verifier."""
    aux = _aux([1, 0])
    layout = RegisterLayout((("B", 1),)).concat(aux.layout)
    return MaliciousVerifier("honest-coin", aux, Circuit(layout, (hadamard(("B", 0)),)))


def fixed_bit_verifier(p: ProtocolSpec, bit: int = 1) -> MaliciousVerifier:
    """Always asks for the same branch, keeping |+> as auxiliary state."""
    aux = _aux([1, 1])
    layout = RegisterLayout((("B", 1),)).concat(aux.layout)
    gates = (pauli_x(("B", 0)),) if bit else ()
    return MaliciousVerifier(f"always-{bit}", aux, Circuit(layout, gates))


def entangled_verifier(p: ProtocolSpec) -> MaliciousVerifier:
    """Derives its bit from an entangled auxiliary pair and the first message.

    Aux is a Bell pair on A; the bit is A[0] XOR (first qubit of the first
    message), followed by a Hadamard on A[1] controlled on that qubit.
    """
    msg1 = p.params["msg1"]
    aux = _aux([1, 0, 0, 1])
    layout = RegisterLayout((("B", 1),)).concat(aux.layout).concat(
        p.layout.restrict(msg1))
    gates = [cnot(("A", 0), ("B", 0))]
    first = (msg1[0], 0) if msg1 and p.layout.size(msg1[0]) else None
    if first is not None:
        gates.append(cnot(first, ("B", 0)))
        gates.append(Gate("Hadamard", (("A", 1),), ((first, 1),)))
    gates.append(hadamard(("A", 1)))
    return MaliciousVerifier("entangled", aux, Circuit(layout, tuple(gates)))


def scripted_verifiers(p: ProtocolSpec) -> list[MaliciousVerifier]:
    return [honest_coin_verifier(p), fixed_bit_verifier(p, 1), entangled_verifier(p)]

"""Toy relations, toy protocols and toy batch proofs, addressable by name.

All fixture protocols send classical data as computational-basis states.
The prover acts in round 1 and the verifier decides in its last circuit;
extra messages (``messages > 1``) are idle rounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .batch import BatchProofSpec, BatchRelation, sketch_width
from .circuits import (Circuit, Gate, flip_if, pauli_x, ry, write_bits)
from .errors import Misconfigured, UnknownFixture
from .qip import ProtocolSpec, TruthTableRelation
from .states import RegisterLayout

# f(00)=01, f(01)=00, f(10)=01, f(11)=11: instance 01 has two witnesses that
# differ in their first bit, 00 and 11 have one each, 10 has none.
DEFAULT_TABLE = {"00": "01", "01": "00", "10": "01", "11": "11"}


def default_relation() -> TruthTableRelation:
    return TruthTableRelation(tuple(DEFAULT_TABLE.items()))


def _controls(group: str, bits: str) -> tuple:
    return tuple(((group, i), int(b)) for i, b in enumerate(bits))


def _one_shot(name: str, relation, messages: int, layout: RegisterLayout, roles: dict,
              send: Callable[[str, str], list], decide: Callable[[str], list],
              params: dict) -> ProtocolSpec:
    """Prover sends in round 1, verifier decides at the end, other rounds idle."""
    if messages < 1:
        raise Misconfigured("messages must be positive")
    rounds = (messages + 1) // 2
    empty = Circuit.empty(layout)

    def prover(x, w, j, coins):
        return Circuit(layout, tuple(send(x, w))) if j == 1 else empty

    def verifier(x, j, coins):
        return Circuit(layout, tuple(decide(x))) if j == rounds else empty

    return ProtocolSpec(name=name, message_count=messages, layout=layout, roles=roles,
                        prover=prover, verifier=verifier, accept=("acc", 0),
                        relation=relation, params=dict(params, messages=messages))


def blind(relation=None, messages: int = 1, msg_qubits: int = 1) -> ProtocolSpec:
    """Prover sends zeros; verifier accepts iff the instance has a witness."""
    relation = relation or default_relation()
    layout = RegisterLayout((("acc", 1), ("msg", msg_qubits)))
    return _one_shot("blind", relation, messages, layout, {"acc": "V", "msg": "M"},
                     lambda x, w: [],
                     lambda x: [pauli_x(("acc", 0))] if relation.is_yes(x) else [],
                     {"msg_qubits": msg_qubits})


def _witness_layout(relation):
    return RegisterLayout((("acc", 1), ("msg", relation.witness_length)))


def _send_witness(x, w):
    return write_bits([("msg", i) for i in range(len(w or ""))], w or "")


def reveal(relation=None, messages: int = 1) -> ProtocolSpec:
    """Prover sends the witness; verifier checks it against the relation."""
    relation = relation or default_relation()
    layout = _witness_layout(relation)
    addrs = layout.addresses("msg")
    return _one_shot("reveal", relation, messages, layout, {"acc": "V", "msg": "M"},
                     _send_witness,
                     lambda x: flip_if(addrs, ("acc", 0), relation.witnesses(x))
                     if relation.is_yes(x) else [],
                     {})


def _rotation_angle(prob: float) -> float:
    if not 0.0 <= prob <= 1.0:
        raise Misconfigured(f"probability {prob} outside [0, 1]")
    return 2.0 * math.asin(math.sqrt(prob))


def _biased_check(relation, x, p_valid: float, p_invalid: float) -> list:
    """Set acc with probability p_valid on valid witnesses, p_invalid otherwise."""
    gates = []
    for w in _all_witness_strings(relation):
        p = p_valid if relation.holds(x, w) else p_invalid
        if p == 0.0:
            continue
        ctrl = _controls("msg", w)
        if p == 1.0:
            gates.append(pauli_x(("acc", 0), controls=ctrl))
        else:
            gates.append(Gate("RawUnitary", (("acc", 0),), ctrl, ry(_rotation_angle(p))))
    return gates


def _all_witness_strings(relation):
    m = relation.witness_length
    return [format(i, f"0{m}b") for i in range(2 ** m)]


def noisy_reveal(eps: float, relation=None, messages: int = 1) -> ProtocolSpec:
    """Reveal, but wrong witnesses are accepted with probability ``eps``."""
    relation = relation or default_relation()
    _rotation_angle(eps)
    layout = _witness_layout(relation)
    return _one_shot("noisy-reveal", relation, messages, layout, {"acc": "V", "msg": "M"},
                     _send_witness, lambda x: _biased_check(relation, x, 1.0, eps),
                     {"eps": eps})


def lossy_reveal(p: float, relation=None, messages: int = 1) -> ProtocolSpec:
    """Reveal, but valid witnesses are accepted only with probability ``p``."""
    relation = relation or default_relation()
    _rotation_angle(p)
    layout = _witness_layout(relation)
    return _one_shot("lossy-reveal", relation, messages, layout, {"acc": "V", "msg": "M"},
                     _send_witness, lambda x: _biased_check(relation, x, p, 0.0),
                     {"p": p})


def leaky(theta: float, relation=None, messages: int = 1, p: float = 1.0) -> ProtocolSpec:
    """Prover sends Ry(theta * parity(w))|0>; verifier accepts with probability ``p``
    iff a witness exists.

    Two witnesses of different parity give views at trace distance
    ``|sin(theta / 2)|``.
    """
    relation = relation or default_relation()
    layout = RegisterLayout((("acc", 1), ("msg", 1)))
    angle = _rotation_angle(p)

    def decide(x):
        if not relation.is_yes(x):
            return []
        if p == 1.0:
            return [pauli_x(("acc", 0))]
        return [Gate("RawUnitary", (("acc", 0),), (), ry(angle))]

    def send(x, w):
        if w and w.count("1") % 2:
            return [Gate("RawUnitary", (("msg", 0),), (), ry(theta))]
        return []

    return _one_shot("leaky", relation, messages, layout, {"acc": "V", "msg": "M"}, send,
                     decide, {"theta": theta, "p": p})


# batch fixtures ----------------------------------------------------------------

def _batch_protocol(name, brel, msg_qubits, send, decide, params):
    layout = RegisterLayout((("acc", 1), ("msg", msg_qubits)))
    return _one_shot(name, brel, 1, layout, {"acc": "V", "msg": "M"}, send, decide, params)


def sketch_batch(rho: float, t: int, relation=None) -> BatchProofSpec:
    """Prover sends the first ceil(rho t) bits of the concatenated witnesses; verifier accepts."""
    brel = BatchRelation(relation or default_relation(), t)
    s = sketch_width(rho, t)
    if not 0 < s <= brel.witness_length:
        raise Misconfigured(f"sketch width {s} outside 1..{brel.witness_length}")
    p = _batch_protocol("sketch-batch", brel, s,
                        lambda x, w: write_bits([("msg", i) for i in range(s)], (w or "")[:s]),
                        lambda x: [pauli_x(("acc", 0))], {"rho": rho, "t": t})
    return BatchProofSpec(p, brel, rho)


def checking_batch(t: int, relation=None) -> BatchProofSpec:
    """Prover sends every witness; verifier checks every coordinate."""
    brel = BatchRelation(relation or default_relation(), t)
    width = brel.witness_length
    addrs = [("msg", i) for i in range(width)]
    p = _batch_protocol("checking-batch", brel, width,
                        lambda x, w: write_bits(addrs, w or ""),
                        lambda x: flip_if(addrs, ("acc", 0), brel.witnesses(x))
                        if brel.is_yes(x) else [],
                        {"t": t})
    return BatchProofSpec(p, brel, 1.0)


def blind_batch(t: int, rho: float = 1.0, relation=None) -> BatchProofSpec:
    """Prover sends one zero qubit; verifier accepts iff every coordinate has a witness."""
    brel = BatchRelation(relation or default_relation(), t)
    p = _batch_protocol("blind-batch", brel, 1, lambda x, w: [],
                        lambda x: [pauli_x(("acc", 0))] if all(
                            brel.base.is_yes(a) for a in brel.split_instance(x)) else [],
                        {"t": t})
    return BatchProofSpec(p, brel, rho)


# catalog -----------------------------------------------------------------------

@dataclass(frozen=True)
class FixtureEntry:
    name: str
    builder: Callable
    params: dict          # name -> (type, default)
    kind: str             # "protocol" or "batch"
    summary: str


CATALOG = {e.name: e for e in [
    FixtureEntry("blind", blind, {"messages": (int, 1), "msg_qubits": (int, 1)}, "protocol",
                 "prover sends zeros, verifier accepts iff a witness exists"),
    FixtureEntry("reveal", reveal, {"messages": (int, 1)}, "protocol",
                 "prover sends the witness classically, verifier checks it"),
    FixtureEntry("noisy-reveal", noisy_reveal, {"eps": (float, 0.25), "messages": (int, 1)},
                 "protocol", "reveal accepting wrong witnesses with probability eps"),
    FixtureEntry("lossy-reveal", lossy_reveal, {"p": (float, 2 / 3), "messages": (int, 1)},
                 "protocol", "reveal accepting valid witnesses with probability p"),
    FixtureEntry("leaky", leaky, {"theta": (float, 0.5), "messages": (int, 1),
                                  "p": (float, 1.0)}, "protocol",
                 "prover leaks the witness parity through a rotation by theta; "
                 "verifier accepts yes-instances with probability p"),
    FixtureEntry("sketch-batch", sketch_batch, {"rho": (float, 0.25), "t": (int, 4)}, "batch",
                 "batch prover sends the first ceil(rho t) witness bits, verifier accepts"),
    FixtureEntry("checking-batch", checking_batch, {"t": (int, 2)}, "batch",
                 "batch prover sends all witnesses, verifier checks all"),
    FixtureEntry("blind-batch", blind_batch, {"t": (int, 2), "rho": (float, 1.0)}, "batch",
                 "batch prover sends nothing, verifier accepts iff all instances are yes"),
]}


def build(name: str, **params):
    """Construct a catalog fixture; missing parameters take catalog defaults."""
    if name not in CATALOG:
        raise UnknownFixture(f"unknown fixture {name!r}; known: {sorted(CATALOG)}")
    entry = CATALOG[name]
    kwargs = {k: v[1] for k, v in entry.params.items()}
    for key, value in params.items():
        if key not in entry.params:
            raise Misconfigured(f"fixture {name!r} has no parameter {key!r}")
        typ = entry.params[key][0]
        kwargs[key] = typ(value) if not isinstance(value, typ) else value
    return entry.builder(**kwargs)


def catalog_listing() -> list[dict]:
    return [{"name": e.name, "kind": e.kind, "summary": e.summary,
             "params": {k: v[1] for k, v in e.params.items()}} for e in CATALOG.values()]

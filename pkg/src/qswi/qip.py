"""Quantum interactive proofs: specification, exact execution and verifier views.

A protocol with ``m`` messages runs in ``k = ceil(m/2)`` rounds.  For odd
``m`` the prover speaks first and the circuits are ``P_1, V_1, ..., P_k, V_k``;
for even ``m`` a leading verifier circuit ``V_0`` comes first.  The verifier
view at round ``j`` is the state right after ``P_j``, restricted to the groups
the verifier holds at that moment.

Classical randomness (verifier coins, prover coins) is enumerated as weighted
branches.  Each branch starts from the all-zero basis state and only applies
unitaries, so it is simulated as a state vector; mixtures are formed only
when views are extracted.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .circuits import Circuit, apply_vector, probability_of, raw_unitary
from .errors import (IndexOutOfRange, InvalidWitness, LayoutMismatch,
                     NoWitnessExists)
from .states import (CQState, DensityState, RegisterLayout, haar_unitary, mix,
                     reduce_to, trace_distance)


# relations ---------------------------------------------------------------------

class Relation:
    """An NP relation over fixed-length bitstrings."""

    instance_length: int
    witness_length: int

    def holds(self, x: str, w: str) -> bool:
        raise NotImplementedError

    def instances(self) -> list[str]:
        return _bitstrings(self.instance_length)

    def witnesses(self, x: str) -> list[str]:
        """Valid witnesses of ``x`` in lexicographic order."""
        return [w for w in _bitstrings(self.witness_length) if self.holds(x, w)]

    def is_yes(self, x: str) -> bool:
        return bool(self.witnesses(x))

    def pairs(self) -> list[tuple[str, str]]:
        return [(x, w) for x in self.instances() for w in self.witnesses(x)]


def _bitstrings(n: int) -> list[str]:
    return ["".join(b) for b in itertools.product("01", repeat=n)]


@dataclass(frozen=True)
class TruthTableRelation(Relation):
    """``{(x, w) : table[w] = x}`` for a total table over witness strings."""

    table: tuple  # ((w, x), ...)

    def __post_init__(self):
        table = tuple(sorted((str(w), str(x)) for w, x in dict(self.table).items()))
        object.__setattr__(self, "table", table)
        wl = {len(w) for w, _ in table}
        il = {len(x) for _, x in table}
        if len(wl) != 1 or len(il) != 1:
            raise ValueError("truth table entries must have uniform lengths")
        m = wl.pop()
        if {w for w, _ in table} != set(_bitstrings(m)):
            raise ValueError("truth table must be total over witness strings")
        object.__setattr__(self, "_map", dict(table))
        object.__setattr__(self, "_n", il.pop())
        object.__setattr__(self, "_m", m)

    @property
    def instance_length(self) -> int:
        return self._n

    @property
    def witness_length(self) -> int:
        return self._m

    def holds(self, x: str, w: str) -> bool:
        return self._map.get(w) == x

    def to_json(self) -> dict:
        return {"table": {w: x for w, x in self.table}}


# error profiles -----------------------------------------------------------------

@dataclass(frozen=True)
class ErrorProfile:
    eps_c: float
    eps_s: float
    eps_wi: float

    def __post_init__(self):
        for name in ("eps_c", "eps_s", "eps_wi"):
            v = getattr(self, name)
            # claimed formulas such as m * eps_wi can leave [0, 1]; clamp them
            if not 0.0 <= v <= 1.0:
                object.__setattr__(self, name, min(1.0, max(0.0, v)))

    def to_json(self) -> dict:
        return {"eps_c": self.eps_c, "eps_s": self.eps_s, "eps_wi": self.eps_wi}


# protocols -------------------------------------------------------------------------

Coins = Mapping[str, object]
ProverGen = Callable[[str, str, int, Coins], Circuit]
VerifierGen = Callable[[str, int, Coins], Circuit]


def _no_randomness(x):
    return [(1.0, {})]


@dataclass(eq=False)
class ProtocolSpec:
    """Full description of a quantum interactive proof.

    ``roles`` maps every layout group to ``"V"`` (verifier private),
    ``"M"`` (message channel) or ``"P"`` (prover private).  ``randomness``
    enumerates the classical coins as ``[(probability, {name: value})]``;
    ``visibility[name]`` is the first round whose view contains the coin
    (absent means it never enters a view) and ``coin_owner[name]`` says which
    party draws it.
    """

    name: str
    message_count: int
    layout: RegisterLayout
    roles: Mapping[str, str]
    prover: ProverGen
    verifier: VerifierGen
    accept: tuple
    relation: Relation | None = None
    randomness: Callable[[str], list] = _no_randomness
    visibility: Mapping[str, int] = field(default_factory=dict)
    coin_owner: Mapping[str, str] = field(default_factory=dict)
    view_groups_fn: Callable[[int], list] | None = None
    public_coin_bits: int = 0
    params: dict = field(default_factory=dict)
    _runs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.message_count < 1:
            raise ValueError("a protocol needs at least one message")
        missing = set(self.layout.names) - set(self.roles)
        if missing:
            raise LayoutMismatch(f"groups without a role: {sorted(missing)}")
        if any(r not in ("V", "M", "P") for r in self.roles.values()):
            raise ValueError("roles must be V, M or P")
        if self.roles.get(self.accept[0]) != "V":
            raise LayoutMismatch("the accept qubit must lie in a verifier group")
        self.layout.position(self.accept)

    # structure
    @property
    def rounds(self) -> int:
        return (self.message_count + 1) // 2

    @property
    def leading_verifier(self) -> bool:
        return self.message_count % 2 == 0

    def groups_with(self, role: str) -> list[str]:
        return [n for n in self.layout.names if self.roles[n] == role]

    def qubits(self, role: str) -> int:
        return sum(self.layout.size(n) for n in self.groups_with(role))

    @property
    def q_V(self) -> int:
        return self.qubits("V")

    @property
    def q_M(self) -> int:
        return self.qubits("M")

    @property
    def q_P(self) -> int:
        return self.qubits("P")

    def verifier_rounds(self) -> list[int]:
        return list(range(0 if self.leading_verifier else 1, self.rounds + 1))

    def view_groups(self, j: int) -> list[str]:
        if self.view_groups_fn is not None:
            return list(self.view_groups_fn(j))
        return [n for n in self.layout.names if self.roles[n] != "P"]

    def label(self, coins: Coins, j: int) -> tuple:
        return tuple((name, coins[name]) for name in sorted(coins)
                     if name in self.visibility and self.visibility[name] <= j)

    def branches(self, x: str) -> list[tuple[float, dict]]:
        out = [(float(p), dict(c)) for p, c in self.randomness(x) if p > 0]
        total = sum(p for p, _ in out)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"coin distribution of {self.name} sums to {total}")
        return out

    def describe(self) -> dict:
        return {"name": self.name, "message_count": self.message_count,
                "rounds": self.rounds, "layout": self.layout.to_json(),
                "roles": dict(self.roles), "accept": list(self.accept),
                "q_V": self.q_V, "q_M": self.q_M, "q_P": self.q_P,
                "public_coin_bits": self.public_coin_bits,
                "params": _jsonable(self.params)}


def _jsonable(d):
    if isinstance(d, dict):
        return {str(k): _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, (int, float, str, bool)) or d is None:
        return d
    return repr(d)


# adversaries -------------------------------------------------------------------

@dataclass(eq=False)
class Adversary:
    """A scripted prover: one circuit per round on message groups plus a private register.

    ``circuits[j - 1]`` replaces ``P_j``.  Circuits may only touch message
    groups of the protocol and the adversary's own ``private`` groups.
    """

    private: RegisterLayout
    circuits: Sequence[Circuit]
    name: str = "adversary"

    def circuit(self, j: int) -> Circuit:
        return self.circuits[j - 1]

    def to_json(self) -> dict:
        return {"name": self.name, "private": self.private.to_json(),
                "circuits": [c.to_json() for c in self.circuits]}

    @classmethod
    def from_json(cls, d) -> "Adversary":
        return cls(RegisterLayout.from_json(d["private"]),
                   [Circuit.from_json(c) for c in d["circuits"]], d.get("name", "adversary"))


def identity_adversary(p: ProtocolSpec) -> Adversary:
    return Adversary(RegisterLayout(), [Circuit.empty() for _ in range(p.rounds)], "identity")


# execution ---------------------------------------------------------------------

@dataclass
class Branch:
    probability: float
    coins: dict
    snapshots: dict          # j -> state vector right after P_j
    final: np.ndarray


@dataclass
class Run:
    layout: RegisterLayout
    branches: list
    accept_probability: float

    def final_state(self) -> DensityState:
        return mix([(b.probability, DensityState.from_vector(b.final, self.layout))
                    for b in self.branches])


def _check_prover_circuit(p: ProtocolSpec, c: Circuit, allowed_extra=()):
    for g in c.groups:
        if g in allowed_extra:
            continue
        if p.roles.get(g) not in ("M", "P"):
            raise LayoutMismatch(f"prover circuit touches non-prover group {g!r}")


def _check_verifier_circuit(p: ProtocolSpec, c: Circuit):
    for g in c.groups:
        if p.roles.get(g) not in ("V", "M"):
            raise LayoutMismatch(f"verifier circuit touches non-verifier group {g!r}")


def run(p: ProtocolSpec, x: str, w: str | None = None, adversary: Adversary | None = None) -> Run:
    """Execute every coin branch exactly; results are cached per (x, w, adversary)."""
    key = (x, w, id(adversary) if adversary is not None else None)
    if key in p._runs:
        return p._runs[key]
    layout = p.layout
    private = ()
    if adversary is not None:
        layout = p.layout.concat(adversary.private)
        private = tuple(adversary.private.names)
    branches = []
    acc = 0.0
    for prob, coins in p.branches(x):
        psi = np.zeros(layout.dim, dtype=complex)
        psi[0] = 1.0
        snaps = {}
        if p.leading_verifier:
            psi = _verifier_step(p, x, 0, coins, psi, layout)
        for j in range(1, p.rounds + 1):
            if adversary is None:
                c = p.prover(x, w, j, coins)
                _check_prover_circuit(p, c)
            else:
                c = adversary.circuit(j)
                for g in c.groups:
                    if g not in private and p.roles.get(g) != "M":
                        raise LayoutMismatch(f"adversary touches group {g!r}")
            psi = apply_vector(c, psi, layout)
            snaps[j] = psi
            psi = _verifier_step(p, x, j, coins, psi, layout)
        a = probability_of(psi, layout, p.accept, 1)
        acc += prob * a
        branches.append(Branch(prob, coins, snaps, psi))
    result = Run(layout, branches, float(min(1.0, max(0.0, acc))))
    if adversary is None:
        p._runs[key] = result
    return result


def _verifier_step(p, x, j, coins, psi, layout):
    c = p.verifier(x, j, coins)
    _check_verifier_circuit(p, c)
    return apply_vector(c, psi, layout)


def execute(p: ProtocolSpec, x: str, w: str | None = None,
            adversary: Adversary | None = None) -> tuple[float, DensityState]:
    r = run(p, x, w, adversary)
    return r.accept_probability, r.final_state()


def acceptance(p: ProtocolSpec, x: str, w: str | None = None,
               adversary: Adversary | None = None) -> float:
    return run(p, x, w, adversary).accept_probability


def view(p: ProtocolSpec, x: str, w: str, j: int) -> CQState:
    """Verifier view at round ``j`` as a classical-quantum state.

    Classical labels carry the coins visible at round ``j``; ``.to_density()``
    gives the equivalent density matrix with an explicit label register.
    """
    if not 0 <= j <= p.rounds:
        raise IndexOutOfRange(f"round {j} outside 0..{p.rounds}")
    groups = p.view_groups(j)
    if j == 0:
        zero = DensityState.zero(p.layout.restrict(groups))
        return CQState.from_branches([(prob, p.label(c, 0), zero) for prob, c in p.branches(x)])
    r = run(p, x, w)
    items = []
    for b in r.branches:
        s = DensityState.from_vector(b.snapshots[j], r.layout)
        items.append((b.probability, p.label(b.coins, j), reduce_to(s, groups)))
    return CQState.from_branches(items)


def _require_witness(p: ProtocolSpec, x: str, w: str):
    if p.relation is not None and not p.relation.holds(x, w):
        raise InvalidWitness(f"({x}, {w}) is not in the relation")


def wi_error(p: ProtocolSpec, x: str, w0: str, w1: str) -> float:
    """max over rounds of the trace distance between the two views."""
    _require_witness(p, x, w0)
    _require_witness(p, x, w1)
    if w0 == w1:
        return 0.0
    return max(trace_distance(view(p, x, w0, j), view(p, x, w1, j))
               for j in range(1, p.rounds + 1))


def wi_error_all(p: ProtocolSpec, xs: Sequence[str] | None = None) -> float:
    """WI error maximised over every instance and witness pair of the relation."""
    rel = p.relation
    worst = 0.0
    for x in (xs if xs is not None else rel.instances()):
        ws = rel.witnesses(x)
        for a, b in itertools.combinations(ws, 2):
            worst = max(worst, wi_error(p, x, a, b))
    return worst


def canonical_witness(p: ProtocolSpec, x: str) -> str:
    ws = p.relation.witnesses(x) if p.relation is not None else []
    if not ws:
        raise NoWitnessExists(f"instance {x} has no witness")
    return ws[0]


def unbounded_wi_simulator(p: ProtocolSpec, x: str, j: int) -> CQState:
    """The view produced with the lexicographically first valid witness."""
    return view(p, x, canonical_witness(p, x), j)


def simulator_distance(p: ProtocolSpec, x: str) -> float:
    """max over valid witnesses and rounds of trdist(view, simulator)."""
    worst = 0.0
    for w in p.relation.witnesses(x):
        for j in range(1, p.rounds + 1):
            worst = max(worst, trace_distance(view(p, x, w, j), unbounded_wi_simulator(p, x, j)))
    return worst


# soundness probing ---------------------------------------------------------------

def adversary_acceptance(p: ProtocolSpec, x: str, adversary: Adversary) -> float:
    return run(p, x, None, adversary).accept_probability


def random_adversary(p: ProtocolSpec, private_qubits: int, rng: np.random.Generator) -> Adversary:
    """Haar-random unitary on (message groups, private register) in every round."""
    private = RegisterLayout((("adv", private_qubits),)) if private_qubits else RegisterLayout()
    msg = p.groups_with("M")
    layout = p.layout.restrict(msg).concat(private)
    addrs = [a for g in layout.names for a in layout.addresses(g)]
    circuits = []
    for _ in range(p.rounds):
        if not addrs:
            circuits.append(Circuit.empty())
            continue
        u = haar_unitary(2 ** len(addrs), rng)
        circuits.append(Circuit(layout, (raw_unitary(addrs, u),)))
    return Adversary(private, circuits, "haar")


def adversary_search(p: ProtocolSpec, x: str, restarts: int = 200, seed: int = 0,
                     private_qubits: int = 1) -> dict:
    """Best acceptance over seeded random-unitary provers; a heuristic lower bound."""
    rng = np.random.default_rng(seed)
    best, best_i, values = -1.0, -1, []
    for i in range(restarts):
        a = adversary_acceptance(p, x, random_adversary(p, private_qubits, rng))
        values.append(a)
        if a > best:
            best, best_i = a, i
    return {"best": best, "best_restart": best_i, "restarts": restarts, "seed": seed,
            "mean": float(np.mean(values)) if values else 0.0}

"""Protocol-to-protocol compilers and their claimed error arithmetic.

Each compiler returns ``(ProtocolSpec, TransformReport)``.  Claimed profiles
use the closed-form bounds attached to each construction; they are recorded,
never asserted, because the soundness constants are not certified here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .circuits import (Circuit, Gate, cnot, cswap, flip_if, hadamard, pauli_x,
                       raw_unitary, uniform_prep)
from .config import settings
from .errors import (DimensionCapExceeded, EvenRepetitions, Misconfigured,
                     OddMessageCount, WrongMessageCount)
from .qip import Adversary, ErrorProfile, ProtocolSpec, acceptance, wi_error_all
from .states import RegisterLayout

# reports -------------------------------------------------------------------------


@dataclass
class TransformReport:
    transform: str
    input_profile: ErrorProfile
    claimed_output_profile: ErrorProfile
    message_count_in: int
    message_count_out: int
    qubits_out: int
    structural_flags: dict = field(default_factory=dict)
    # a bound that follows from the construction when the claim itself does not
    derived_output_profile: ErrorProfile | None = None

    @property
    def checked_profile(self) -> ErrorProfile:
        return self.derived_output_profile or self.claimed_output_profile

    def to_json(self) -> dict:
        return {"transform": self.transform,
                "input_profile": self.input_profile.to_json(),
                "claimed_output_profile": self.claimed_output_profile.to_json(),
                "message_count_in": self.message_count_in,
                "message_count_out": self.message_count_out,
                "qubits_out": self.qubits_out,
                "structural_flags": dict(self.structural_flags),
                "derived_output_profile": (self.derived_output_profile.to_json()
                                           if self.derived_output_profile else None)}


def measured_profile(p: ProtocolSpec) -> ErrorProfile:
    """Completeness and WI error measured exactly; soundness from classical cheating.

    The soundness entry is the best acceptance over honest-prover circuits fed
    arbitrary witness strings on no-instances, which is a lower bound on the
    true soundness error.
    """
    rel = p.relation
    pairs = rel.pairs()
    eps_c = 1.0 - min(acceptance(p, x, w) for x, w in pairs) if pairs else 0.0
    strings = ["".join(b) for b in itertools.product("01", repeat=rel.witness_length)]
    no = [x for x in rel.instances() if not rel.is_yes(x)]
    eps_s = max((acceptance(p, x, w) for x in no for w in strings), default=0.0)
    return ErrorProfile(eps_c, eps_s, wi_error_all(p))


def claim_compress(prof: ErrorProfile, m: int) -> ErrorProfile:
    return ErrorProfile(prof.eps_c / 2, 1 - (1 - prof.eps_s) ** 2 / (32 * (m + 1) ** 2),
                        m * prof.eps_wi)


def claim_public_coin(prof: ErrorProfile) -> ErrorProfile:
    return ErrorProfile(prof.eps_c / 2, 0.5 + math.sqrt(prof.eps_s) / 2, prof.eps_wi)


def claim_parallel(prof: ErrorProfile, c: int) -> ErrorProfile:
    return ErrorProfile(1 - (1 - prof.eps_c / 2) ** c, prof.eps_s ** c, c * prof.eps_wi)


def derived_parallel(prof: ErrorProfile, c: int) -> ErrorProfile:
    """Independent copies: completeness (1 - eps_c)^c, the rest as claimed."""
    return ErrorProfile(1 - (1 - prof.eps_c) ** c, prof.eps_s ** c, c * prof.eps_wi)


def majority_probability(p: float, reps: int) -> float:
    """P[more than half of ``reps`` independent trials succeed]."""
    return sum(math.comb(reps, i) * p ** i * (1 - p) ** (reps - i)
               for i in range(reps // 2 + 1, reps + 1))


def claim_majority(prof: ErrorProfile, reps: int) -> ErrorProfile:
    return ErrorProfile(1 - majority_probability(1 - prof.eps_c, reps),
                        majority_probability(prof.eps_s, reps), reps * prof.eps_wi)


# helpers -----------------------------------------------------------------------


def _fresh(layout_names, base: str) -> str:
    name, i = base, 0
    while name in layout_names:
        i += 1
        name = f"{base}{i}"
    return name


def _rename(c: Circuit, mapping: dict, layout: RegisterLayout, controls=()) -> list[Gate]:
    gates = [g.renamed(mapping) for g in c.gates]
    if controls:
        gates = [g.with_controls(controls) for g in gates]
    return gates


def _bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def _controls(group: str, bits: str) -> tuple:
    return tuple(((group, i), int(b)) for i, b in enumerate(bits))


def _make_layout(groups) -> RegisterLayout:
    groups = tuple(groups)
    total = sum(q for _, q in groups)
    if total > settings.qubit_cap:
        raise DimensionCapExceeded(f"transformed protocol needs {total} qubits, cap is "
                                   f"{settings.qubit_cap}")
    return RegisterLayout(groups)


def _require_coinless(p: ProtocolSpec, what: str):
    for x in p.relation.instances():
        if any(c for _, c in p.branches(x)):
            raise Misconfigured(f"{what} needs a protocol without classical coins")


def _product_randomness(parts):
    """Product of per-copy coin distributions; ``parts`` are (suffix, randomness)."""
    def randomness(x):
        out = []
        for combo in itertools.product(*[r(x) for _, r in parts]):
            prob, coins = 1.0, {}
            for (suffix, _), (p, c) in zip(parts, combo):
                prob *= p
                coins.update({f"{k}{suffix}": v for k, v in c.items()})
            out.append((prob, coins))
        return out
    return randomness


def _copy_coins(coins: dict, suffix: str) -> dict:
    tag = suffix.lstrip("#")
    out = {}
    for k, v in coins.items():
        base, _, last = k.rpartition("#")
        if base and last == tag:
            out[base] = v
    return out


# padding -----------------------------------------------------------------------


def pad_to_even(p: ProtocolSpec) -> ProtocolSpec:
    """Give an odd-message protocol an idle leading verifier message."""
    if not p.message_count % 2:
        return p
    empty = Circuit.empty(p.layout)

    def verifier(x, j, coins):
        return empty if j == 0 else p.verifier(x, j, coins)

    return ProtocolSpec(name=f"pad({p.name})", message_count=p.message_count + 1,
                        layout=p.layout, roles=p.roles, prover=p.prover, verifier=verifier,
                        accept=p.accept, relation=p.relation, randomness=p.randomness,
                        visibility=p.visibility, coin_owner=p.coin_owner,
                        view_groups_fn=p.view_groups_fn, params=dict(p.params))


# round compression ----------------------------------------------------------------


def compress_rounds(p: ProtocolSpec, profile: ErrorProfile | None = None):
    """Compile an even-message protocol into a three-message one.

    The prover sends snapshots of every intermediate (verifier, message) state;
    the verifier either checks one random transition with a swap test on a
    shared EPR pair (coin b = 0) or runs the final check (b = 1).  The random
    round index lives in a uniform superposition in register ``R`` whose copy
    ``Rm`` is handed to the prover, which makes it classical from the
    verifier's side.  The prover moves that copy into its private ``Rp``
    before answering, so the returned message carries no trace of it.
    """
    if p.message_count % 2:
        raise OddMessageCount("pad the protocol to an even message count first")
    _require_coinless(p, "round compression")
    m, k = p.message_count, p.rounds
    vm = [g for g in p.layout.names if p.roles[g] != "P"]
    pg = p.groups_with("P")
    n_r = math.ceil(math.log2(k)) if k > 1 else 0
    names = set()
    groups, roles = [], {}
    for j in range(1, k + 2):
        for g in vm:
            name = f"{g}@{j}"
            groups.append((name, p.layout.size(g)))
            roles[name] = ("V" if p.roles[g] == "V" else "M") if j == 1 else "M"
    for j in range(1, k + 2):
        for g in pg:
            groups.append((f"{g}@{j}", p.layout.size(g)))
            roles[f"{g}@{j}"] = "P"
    names = {n for n, _ in groups}
    R, Rm, Rp, X, Y, ACC = (_fresh(names, b) for b in ("R", "Rm", "Rp", "X", "Y", "ACC"))
    extra = [(R, n_r, "V"), (Rm, n_r, "M"), (Rp, n_r, "P"), (X, 1, "V"), (Y, 1, "M"),
             (ACC, 1, "V")]
    for name, q, role in extra:
        groups.append((name, q))
        roles[name] = role
    layout = _make_layout(groups)

    def block(j):
        return {g: f"{g}@{j}" for g in p.layout.names}

    def vm_addrs(j):
        return [(f"{g}@{j}", i) for g in vm for i in range(p.layout.size(g))]

    def p_addrs(j):
        return [(f"{g}@{j}", i) for g in pg for i in range(p.layout.size(g))]

    def original_verifier(x, j):
        # the input protocol's verifier circuits are indexed 0..k
        return p.verifier(x, j, {})

    def prover(x, w, jj, coins):
        gates = []
        if jj == 1:
            for j in range(2, k + 2):
                for i in range(0, j - 1):
                    gates += _rename(original_verifier(x, i), block(j), layout)
                    gates += _rename(p.prover(x, w, i + 1, {}), block(j), layout)
        else:
            for r in range(1, k + 1):
                ctrl = _controls(Rm, _bits(r - 1, n_r))
                gates += _rename(p.prover(x, w, r, {}), block(r), layout, ctrl)
                if pg:
                    gates.append(cswap((Y, 0), p_addrs(r), p_addrs(r + 1), controls=ctrl))
            # keep the round index private: Rp <- Rm, Rm <- 0
            for i in range(n_r):
                gates += [cnot((Rm, i), (Rp, i)), cnot((Rp, i), (Rm, i))]
        return Circuit(layout, tuple(gates))

    prep = uniform_prep(n_r, k) if n_r else None

    def verifier(x, jj, coins):
        gates = []
        if jj == 1:
            if n_r:
                gates.append(raw_unitary([(R, i) for i in range(n_r)], prep))
                gates += [cnot((R, i), (Rm, i)) for i in range(n_r)]
            gates += [hadamard((X, 0)), cnot((X, 0), (Y, 0))]
            for r in range(1, k + 1):
                ctrl = _controls(R, _bits(r - 1, n_r))
                gates += _rename(original_verifier(x, r - 1), block(r), layout, ctrl)
        elif coins["b"] == 0:
            for r in range(1, k + 1):
                ctrl = _controls(R, _bits(r - 1, n_r))
                gates.append(cswap((X, 0), vm_addrs(r), vm_addrs(r + 1), controls=ctrl))
            gates += [cnot((X, 0), (Y, 0)), hadamard((X, 0)), pauli_x((ACC, 0)),
                      cnot((X, 0), (ACC, 0))]
        else:
            gates += _rename(original_verifier(x, k), block(k + 1), layout)
            acc_in = (f"{p.accept[0]}@{k + 1}", p.accept[1])
            gates.append(cnot(acc_in, (ACC, 0)))
        return Circuit(layout, tuple(gates))

    out = ProtocolSpec(name=f"compress({p.name})", message_count=3, layout=layout, roles=roles,
                       prover=prover, verifier=verifier, accept=(ACC, 0), relation=p.relation,
                       randomness=lambda x: [(0.5, {"b": 0}), (0.5, {"b": 1})],
                       coin_owner={"b": "V"},
                       params={"input": p.name, "input_messages": m, "R": R, "Rm": Rm, "Rp": Rp,
                               "X": X, "Y": Y, "ACC": ACC, "blocks": k + 1})
    prof = profile or measured_profile(p)
    report = TransformReport("compress_rounds", prof, claim_compress(prof, m), m, 3,
                             layout.n_qubits, {"public_coin": False, "classical_bits": 0})
    return out, report


# public coin ---------------------------------------------------------------------


def to_public_coin(p: ProtocolSpec, profile: ErrorProfile | None = None):
    """Three-message private-coin protocol to one whose verifier sends one uniform bit.

    The prover runs ``P_1`` and ``V_1`` itself and sends the verifier register.
    On coin 0 the verifier rewinds ``V_1`` and checks for all-zero; on coin 1
    the prover applies ``P_2`` and the verifier finishes the original check.
    """
    if p.message_count != 3:
        raise WrongMessageCount(f"expected 3 messages, got {p.message_count}")
    for x in p.relation.instances():
        firsts = {repr(p.verifier(x, 1, c).to_json()) for _, c in p.branches(x)}
        if len(firsts) > 1:
            raise Misconfigured("the first verifier circuit must not depend on coins")
        if any(p.visibility.get(n, 99) <= 2 for _, c in p.branches(x) for n in c):
            raise Misconfigured("coins visible in views are not supported")
    old_v = p.groups_with("V")
    old_m = p.groups_with("M")
    names = set(p.layout.names)
    ACC = _fresh(names, "ACC")
    coin = _fresh(set(p.visibility) | set(p.coin_owner), "pc")
    layout = _make_layout(p.layout.groups + ((ACC, 1),))
    roles = {g: ("P" if r == "P" else "M") for g, r in p.roles.items()}
    roles[ACC] = "V"
    v_addrs = [a for g in old_v for a in p.layout.addresses(g)]

    def inner(coins):
        return {k: v for k, v in coins.items() if k != coin}

    def prover(x, w, j, coins):
        if j == 1:
            c = p.prover(x, w, 1, inner(coins)).then(p.verifier(x, 1, inner(coins)))
            return Circuit(layout, c.gates)
        if coins[coin] == 1:
            return Circuit(layout, p.prover(x, w, 2, inner(coins)).gates)
        return Circuit.empty(layout)

    def verifier(x, j, coins):
        if j == 1:
            return Circuit.empty(layout)
        if coins[coin] == 0:
            gates = list(p.verifier(x, 1, inner(coins)).inverse().gates)
            gates += flip_if(v_addrs, (ACC, 0), ["0" * len(v_addrs)])
        else:
            gates = list(p.verifier(x, 2, inner(coins)).gates)
            gates.append(cnot(p.accept, (ACC, 0)))
        return Circuit(layout, tuple(gates))

    def randomness(x):
        return [(0.5 * q, dict(c, **{coin: b})) for b in (0, 1) for q, c in p.branches(x)]

    def view_groups(j):
        return old_v + [ACC] if j <= 1 else old_v + old_m + [ACC]

    out = ProtocolSpec(name=f"public({p.name})", message_count=3, layout=layout, roles=roles,
                       prover=prover, verifier=verifier, accept=(ACC, 0), relation=p.relation,
                       randomness=randomness, visibility={coin: 2},
                       coin_owner=dict(p.coin_owner, **{coin: "V"}),
                       view_groups_fn=view_groups, public_coin_bits=1,
                       params={"input": p.name, "coin": coin, "msg1": old_v, "msg3": old_m,
                               "ACC": ACC})
    prof = profile or measured_profile(p)
    report = TransformReport("to_public_coin", prof, claim_public_coin(prof), 3, 3,
                             layout.n_qubits, {"public_coin": True, "classical_bits": 1})
    return out, report


# repetition -------------------------------------------------------------------


def _copy_layout(p: ProtocolSpec, copies: int, extra=()):
    groups, roles = [], {}
    for i in range(copies):
        for g, q in p.layout.groups:
            groups.append((f"{g}#{i}", q))
            roles[f"{g}#{i}"] = p.roles[g]
    names = {n for n, _ in groups}
    fresh = []
    for base, q, role in extra:
        name = _fresh(names, base)
        names.add(name)
        groups.append((name, q))
        roles[name] = role
        fresh.append(name)
    return _make_layout(groups), roles, fresh


def _copy_map(p: ProtocolSpec, i: int) -> dict:
    return {g: f"{g}#{i}" for g in p.layout.names}


def parallel_repeat(p: ProtocolSpec, c: int, profile: ErrorProfile | None = None):
    """``c`` independent copies run side by side; accept iff every copy accepts.

    The view of the result at any round is the ``c``-fold tensor power of the
    input view; the fresh accept qubit is untouched until the final circuit
    and is left out of the views.
    """
    if c < 1:
        raise Misconfigured("c must be positive")
    layout, roles, (ACC,) = _copy_layout(p, c, [("ACC", 1, "V")])
    sfx = [f"#{i}" for i in range(c)]

    def prover(x, w, j, coins):
        gates = []
        for i in range(c):
            gates += _rename(p.prover(x, w, j, _copy_coins(coins, sfx[i])), _copy_map(p, i), layout)
        return Circuit(layout, tuple(gates))

    def verifier(x, j, coins):
        gates = []
        for i in range(c):
            gates += _rename(p.verifier(x, j, _copy_coins(coins, sfx[i])), _copy_map(p, i), layout)
        if j == p.rounds:
            ctrl = tuple(((f"{p.accept[0]}#{i}", p.accept[1]), 1) for i in range(c))
            gates.append(pauli_x((ACC, 0), controls=ctrl))
        return Circuit(layout, tuple(gates))

    def view_groups(j):
        return [f"{g}#{i}" for i in range(c) for g in p.view_groups(j)]

    vis = {f"{k}{s}": v for k, v in p.visibility.items() for s in sfx}
    owner = {f"{k}{s}": v for k, v in p.coin_owner.items() for s in sfx}
    out = ProtocolSpec(name=f"par{c}({p.name})", message_count=p.message_count, layout=layout,
                       roles=roles, prover=prover, verifier=verifier, accept=(ACC, 0),
                       relation=p.relation,
                       randomness=_product_randomness([(s, p.randomness) for s in sfx]),
                       visibility=vis, coin_owner=owner, view_groups_fn=view_groups,
                       public_coin_bits=p.public_coin_bits * c,
                       params={"input": p.name, "copies": c, "ACC": ACC})
    prof = profile or measured_profile(p)
    report = TransformReport("parallel_repeat", prof, claim_parallel(prof, c), p.message_count,
                             p.message_count, layout.n_qubits,
                             {"public_coin": bool(p.public_coin_bits), "copies": c},
                             derived_parallel(prof, c))
    return out, report


def tensor_adversary(adv: Adversary, p: ProtocolSpec, c: int) -> Adversary:
    """Run one scripted prover independently against each parallel copy."""
    groups = []
    for i in range(c):
        groups += [(f"{g}#{i}", q) for g, q in adv.private.groups]
    private = RegisterLayout(tuple(groups))
    circuits = []
    for circ in adv.circuits:
        gates = []
        for i in range(c):
            mapping = _copy_map(p, i)
            mapping.update({g: f"{g}#{i}" for g in adv.private.names})
            gates += [g.renamed(mapping) for g in circ.gates]
        used = sorted({a[0] for g in gates for a in g.qubits})
        lay = RegisterLayout(tuple((n, _group_size(n, p, adv)) for n in used))
        circuits.append(Circuit(lay, tuple(gates)))
    return Adversary(private, circuits, f"{adv.name}^{c}")


def _group_size(name: str, p: ProtocolSpec, adv: Adversary) -> int:
    base = name.rsplit("#", 1)[0]
    if base in adv.private:
        return adv.private.size(base)
    return p.layout.size(base)


def sequential_majority(p: ProtocolSpec, repetitions: int, profile: ErrorProfile | None = None):
    """Run ``repetitions`` (odd) fresh copies one after another; accept on majority."""
    if repetitions < 1 or repetitions % 2 == 0:
        raise EvenRepetitions(f"repetitions must be odd and positive, got {repetitions}")
    prof = profile or measured_profile(p)
    if repetitions == 1:
        report = TransformReport("sequential_majority", prof, claim_majority(prof, 1),
                                 p.message_count, p.message_count, p.layout.n_qubits,
                                 {"repetitions": 1, "identity": True})
        return p, report
    q = pad_to_even(p)
    k, reps = q.rounds, repetitions
    layout, roles, (ACC,) = _copy_layout(q, reps, [("ACC", 1, "V")])
    sfx = [f"#{i}" for i in range(reps)]
    accs = [(f"{q.accept[0]}#{i}", q.accept[1]) for i in range(reps)]
    majority = ["".join(b) for b in itertools.product("01", repeat=reps)
                if b.count("1") > reps // 2]

    def local(coins, i):
        return _copy_coins(coins, sfx[i])

    def prover(x, w, jj, coins):
        i, j = (jj - 1) // k, (jj - 1) % k + 1
        return Circuit(layout, tuple(_rename(q.prover(x, w, j, local(coins, i)),
                                             _copy_map(q, i), layout)))

    def verifier(x, jj, coins):
        gates = []
        if jj == 0:
            gates += _rename(q.verifier(x, 0, local(coins, 0)), _copy_map(q, 0), layout)
        else:
            i, j = (jj - 1) // k, (jj - 1) % k + 1
            gates += _rename(q.verifier(x, j, local(coins, i)), _copy_map(q, i), layout)
            if j == k and i + 1 < reps:
                gates += _rename(q.verifier(x, 0, local(coins, i + 1)), _copy_map(q, i + 1),
                                 layout)
            if jj == k * reps:
                gates += flip_if(accs, (ACC, 0), majority)
        return Circuit(layout, tuple(gates))

    vis = {f"{n}{s}": v + i * k for n, v in q.visibility.items() for i, s in enumerate(sfx)}
    owner = {f"{n}{s}": v for n, v in q.coin_owner.items() for s in sfx}
    out = ProtocolSpec(name=f"maj{reps}({p.name})", message_count=q.message_count * reps,
                       layout=layout, roles=roles, prover=prover, verifier=verifier,
                       accept=(ACC, 0), relation=p.relation,
                       randomness=_product_randomness([(s, q.randomness) for s in sfx]),
                       visibility=vis, coin_owner=owner,
                       params={"input": p.name, "repetitions": reps, "ACC": ACC})
    report = TransformReport("sequential_majority", prof, claim_majority(prof, reps),
                             p.message_count, out.message_count, layout.n_qubits,
                             {"repetitions": reps, "padded": q is not p})
    return out, report


# pipeline -------------------------------------------------------------------------


def majority_repetitions(target_p: int) -> int:
    """Smallest odd integer at least ``target_p ** 2``."""
    r = target_p ** 2
    return r if r % 2 else r + 1


def parallel_copies(target_p: int, m: int, reps: int) -> int:
    return target_p * 32 * (m * reps + 1) ** 2


@dataclass
class PipelineResult:
    protocol: ProtocolSpec | None
    reports: list
    stages: list
    feasible: bool
    failed_stage: str | None = None
    error: str | None = None
    planned: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"feasible": self.feasible, "stages": self.stages,
                "failed_stage": self.failed_stage, "error": self.error,
                "planned": self.planned, "reports": [r.to_json() for r in self.reports]}


def pipeline(p: ProtocolSpec, target_p: int, repetitions_override: int | None = None,
             copies_override: int | None = None, profile: ErrorProfile | None = None
             ) -> PipelineResult:
    """Majority, then round compression, then parallel repetition, then public coin.

    The repetition counts demanded by the construction exceed any desk-scale
    register budget, so either count can be overridden; planned and used
    values are both recorded.  A stage that exceeds the qubit cap stops the
    chain and the feasible prefix is returned.
    """
    reps = majority_repetitions(target_p)
    copies = parallel_copies(target_p, p.message_count, reps)
    used_reps = repetitions_override if repetitions_override is not None else reps
    used_copies = copies_override if copies_override is not None else copies
    planned = {"repetitions": reps, "copies": copies, "repetitions_used": used_reps,
               "copies_used": used_copies}
    reports, stages = [], [p.name]
    current, prof = p, profile or measured_profile(p)
    steps = [("sequential_majority", lambda q, pr: sequential_majority(q, used_reps, pr)),
             ("compress_rounds", lambda q, pr: compress_rounds(pad_to_even(q), pr)),
             ("parallel_repeat", lambda q, pr: parallel_repeat(q, used_copies, pr)),
             ("to_public_coin", lambda q, pr: to_public_coin(q, pr))]
    for name, step in steps:
        try:
            current, rep = step(current, prof)
        except DimensionCapExceeded as exc:
            return PipelineResult(None, reports, stages, False, name,
                                  f"{exc}; feasible prefix: {' -> '.join(stages)}", planned)
        reports.append(rep)
        stages.append(current.name)
        prof = rep.claimed_output_profile
    return PipelineResult(current, reports, stages, True, planned=planned)

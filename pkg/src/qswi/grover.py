"""Distributed Grover search over a batch of instances, and a prover that defeats it.

Registers: the communicated index ``C`` and witness ``W`` (shared), the
verifier index ``V`` (private) and, for the attacking prover, a private
round counter ``R``.  One iteration is

1. the prover writes ``w_i`` into ``W`` controlled on ``C = i``;
2. the verifier checks ``C = V`` (CNOT V->C, reject unless C = 0, CNOT again)
   and applies a phase: ``REJ(x_i, w)`` when b = 0, ``[i = j]`` when b = 1;
3. the prover uncomputes ``W``;
4. the verifier rejects unless ``W = 0``, checks ``C = V`` again and applies
   the diffusion operator to ``V`` between the two CNOTs.

After ``T`` iterations the verifier measures ``V``.  With b = 0 it asks for
the witness of the outcome classically and rejects when the check fails;
with b = 1 it accepts iff the outcome is ``j``.

The attacker behaves honestly except at step 3 of iteration t, where it
moves the branch ``C = bad, R = 0`` to ``R = t``.  Amplitude that reaches the
bad index is thereby frozen out of future interference.

Every step maps basis states to basis states up to phases, except the
diffusion, so the state is kept as a tensor ``psi[c, w, v, r]`` and rejected
mass is tracked explicitly.  :func:`run_subroutine_density` replays the same
protocol gate by gate through the circuit engine on density matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import (Circuit, Gate, apply_rows, cnot, diffusion, hadamard, pauli_x,
                       phase_oracle)
from .config import settings
from .errors import DimensionCapExceeded, Misconfigured
from .qip import TruthTableRelation
from .states import RegisterLayout

# f(0) = 01, f(1) = 00: instance 00 has witness 1, 01 has witness 0, 11 has none
GROVER_TABLE = {"0": "01", "1": "00"}
BAD_INSTANCE = "11"
GARBAGE_WITNESS = "1"


def grover_relation() -> TruthTableRelation:
    return TruthTableRelation(tuple(GROVER_TABLE.items()))


def default_iterations(k: int) -> int:
    return int(math.floor(math.pi / 4 * math.sqrt(k)))


def exponential_schedule(k: int) -> list[int]:
    """0, 1, 2, 4, ... up to the single-marked iteration count, which closes the list."""
    top = default_iterations(k)
    out, t = [0], 1
    while t < top:
        out.append(t)
        t *= 2
    if top not in out:
        out.append(top)
    return out


@dataclass
class GroverConfig:
    k: int
    T: int | None = None
    b: int | str = 1                 # 0, 1 or "enumerate"
    j: int = 0
    bad_set: tuple = ()
    schedule: list | None = None
    relation: TruthTableRelation = field(default_factory=grover_relation)

    def __post_init__(self):
        if self.k < 1 or self.k & (self.k - 1) or self.k > 64:
            raise Misconfigured(f"k must be a power of two up to 64, got {self.k}")
        if self.T is None:
            self.T = default_iterations(self.k)
        if self.T < 0:
            raise Misconfigured("T must be nonnegative")
        if self.b not in (0, 1, "enumerate"):
            raise Misconfigured(f"b must be 0, 1 or 'enumerate', got {self.b!r}")
        if not 0 <= self.j < self.k:
            raise Misconfigured(f"j={self.j} outside 0..{self.k - 1}")
        self.bad_set = tuple(sorted(set(self.bad_set)))
        if any(not 0 <= i < self.k for i in self.bad_set):
            raise Misconfigured("bad indices must lie in 0..k-1")

    @property
    def index_qubits(self) -> int:
        return max(1, int(math.log2(self.k)))

    def instances(self) -> list[str]:
        """Good instances alternate between the two yes-instances."""
        yes = sorted(set(GROVER_TABLE.values()))
        return [BAD_INSTANCE if i in self.bad_set else yes[i % len(yes)] for i in range(self.k)]

    def witnesses(self) -> list[str]:
        rel = self.relation
        out = []
        for x in self.instances():
            ws = rel.witnesses(x)
            out.append(ws[0] if ws else GARBAGE_WITNESS)
        return out

    def rej(self, i: int, w: str) -> bool:
        return not self.relation.holds(self.instances()[i], w)

    def to_json(self) -> dict:
        return {"k": self.k, "T": self.T, "b": self.b, "j": self.j,
                "bad_set": list(self.bad_set), "schedule": self.schedule}


@dataclass(frozen=True)
class ProverStrategy:
    kind: str = "honest"             # "honest" or "attacker"

    def __post_init__(self):
        if self.kind not in ("honest", "attacker"):
            raise Misconfigured(f"unknown prover strategy {self.kind!r}")

    def counter_qubits(self, T: int) -> int:
        """Room for the values 0..T."""
        return 0 if self.kind == "honest" else max(1, math.ceil(math.log2(T + 1)))


HONEST = ProverStrategy("honest")
ATTACKER = ProverStrategy("attacker")


def _attack_target(cfg: GroverConfig, strategy: ProverStrategy):
    if strategy.kind != "attacker":
        return None
    if len(cfg.bad_set) > 1:
        raise Misconfigured("the attack is defined for at most one bad instance")
    return cfg.bad_set[0] if cfg.bad_set else None


def _check_cap(cfg: GroverConfig, strategy: ProverStrategy):
    n = 2 * cfg.index_qubits + cfg.relation.witness_length + strategy.counter_qubits(cfg.T)
    if n > settings.qubit_cap:
        raise DimensionCapExceeded(f"k={cfg.k}, T={cfg.T} needs {n} qubits, "
                                   f"cap is {settings.qubit_cap}")
    return n


@dataclass
class SubroutineResult:
    """Outcome probabilities of one run for a fixed (b, j)."""

    verdict: dict                    # outcome -> probability
    index_distribution: dict         # i* -> probability (mass surviving the checks)
    branch_count: int                # distinct counter values carrying amplitude
    qubits: int

    @property
    def accept(self) -> float:
        return self.verdict["accept"]

    def to_json(self) -> dict:
        return {"verdict": self.verdict,
                "index_distribution": {str(i): p for i, p in self.index_distribution.items()},
                "branch_count": self.branch_count, "qubits": self.qubits}


# fast path --------------------------------------------------------------------------

def _xor_index(n: int, shift: np.ndarray) -> np.ndarray:
    return np.arange(n)[None, :] ^ shift[:, None]


class _Tensor:
    """psi[c, w, v, r] plus the rejected probability mass."""

    def __init__(self, cfg: GroverConfig, strategy: ProverStrategy):
        self.k = cfg.k
        self.nw = 2 ** cfg.relation.witness_length
        self.nr = 2 ** strategy.counter_qubits(cfg.T)
        self.psi = np.zeros((self.k, self.nw, self.k, self.nr), dtype=complex)
        idx = np.arange(self.k)
        self.psi[idx, 0, idx, 0] = 1 / math.sqrt(self.k)
        self.rejected = {"index_check": 0.0, "witness_check": 0.0}

    def xor_w_by_c(self, wvals: list[int]):
        for c, wv in enumerate(wvals):
            if wv:
                self.psi[c] = self.psi[c][np.arange(self.nw) ^ wv]

    def cnot_v_to_c(self):
        out = np.empty_like(self.psi)
        for v in range(self.k):
            out[np.arange(self.k) ^ v, :, v, :] = self.psi[:, :, v, :]
        self.psi = out

    def require_zero(self, axis: int, kind: str):
        keep = np.zeros_like(self.psi)
        sl = [slice(None)] * 4
        sl[axis] = 0
        keep[tuple(sl)] = self.psi[tuple(sl)]
        lost = float(np.sum(np.abs(self.psi) ** 2) - np.sum(np.abs(keep) ** 2))
        self.rejected[kind] += max(0.0, lost)
        self.psi = keep

    def phase(self, sign_wv: np.ndarray):
        """sign_wv[w, v] multiplies every amplitude with W = w, V = v."""
        self.psi = self.psi * sign_wv[None, :, :, None]

    def diffuse_v(self):
        mean = self.psi.mean(axis=2, keepdims=True)
        self.psi = 2 * mean - self.psi

    def swap_counter(self, c: int, a: int, b: int):
        tmp = self.psi[c, :, :, a].copy()
        self.psi[c, :, :, a] = self.psi[c, :, :, b]
        self.psi[c, :, :, b] = tmp


def _signs(cfg: GroverConfig, b: int, j: int) -> np.ndarray:
    nw = 2 ** cfg.relation.witness_length
    m = cfg.relation.witness_length
    s = np.ones((nw, cfg.k))
    for v in range(cfg.k):
        for w in range(nw):
            marked = cfg.rej(v, format(w, f"0{m}b")) if b == 0 else v == j
            if marked:
                s[w, v] = -1.0
    return s


def _run_branch(cfg: GroverConfig, strategy: ProverStrategy, b: int, j: int,
                T: int) -> SubroutineResult:
    qubits = _check_cap(cfg, strategy)
    bad = _attack_target(cfg, strategy)
    st = _Tensor(cfg, strategy)
    wvals = [int(w, 2) for w in cfg.witnesses()]
    signs = _signs(cfg, b, j)
    for t in range(1, T + 1):
        st.xor_w_by_c(wvals)                       # 1
        st.cnot_v_to_c()                           # 2
        st.require_zero(0, "index_check")
        st.cnot_v_to_c()
        st.phase(signs)
        st.xor_w_by_c(wvals)                       # 3
        if bad is not None:
            st.swap_counter(bad, 0, t)
        st.require_zero(1, "witness_check")        # 4
        st.cnot_v_to_c()
        st.require_zero(0, "index_check")
        st.diffuse_v()
        st.cnot_v_to_c()
    probs = np.sum(np.abs(st.psi) ** 2, axis=(0, 1, 3))
    index_dist = {i: float(p) for i, p in enumerate(probs)}
    branches = int(np.sum(np.sum(np.abs(st.psi) ** 2, axis=(0, 1, 2)) > settings.zero_probability))
    return SubroutineResult(_verdict(cfg, b, j, index_dist, st.rejected), index_dist,
                            branches, qubits)


def _verdict(cfg, b, j, index_dist, rejected) -> dict:
    wit = cfg.witnesses()
    final_reject = sum(p for i, p in index_dist.items()
                       if (cfg.rej(i, wit[i]) if b == 0 else i != j))
    survived = sum(index_dist.values())
    out = {"reject_index_check": rejected["index_check"],
           "reject_witness_check": rejected["witness_check"],
           "reject_final": final_reject,
           "accept": survived - final_reject}
    return {k: float(max(0.0, v)) for k, v in out.items()}


def _average(results: list[tuple[float, SubroutineResult]]) -> SubroutineResult:
    verdict: dict = {}
    index: dict = {}
    for w, r in results:
        for key, p in r.verdict.items():
            verdict[key] = verdict.get(key, 0.0) + w * p
        for i, p in r.index_distribution.items():
            index[i] = index.get(i, 0.0) + w * p
    return SubroutineResult(verdict, index, max(r.branch_count for _, r in results),
                            results[0][1].qubits)


def run_subroutine(cfg: GroverConfig, strategy: ProverStrategy = HONEST) -> SubroutineResult:
    """Exact outcome probabilities; ``b="enumerate"`` averages over b and j."""
    if cfg.b == "enumerate":
        parts = [(0.5, _run_branch(cfg, strategy, 0, 0, cfg.T))]
        parts += [(0.5 / cfg.k, _run_branch(cfg, strategy, 1, j, cfg.T)) for j in range(cfg.k)]
        return _average(parts)
    return _run_branch(cfg, strategy, cfg.b, cfg.j, cfg.T)


def run_schedule(cfg: GroverConfig, strategy: ProverStrategy = HONEST) -> dict:
    """Independent runs for each iteration count of the schedule, in order.

    ``stop_probability`` is the chance that some run ends in a verdict that
    the search is meant to produce: a rejection when b = 0, finding ``j``
    when b = 1.
    """
    sched = cfg.schedule if cfg.schedule is not None else exponential_schedule(cfg.k)
    if cfg.b == "enumerate":
        raise Misconfigured("run the schedule for a fixed b")
    runs = []
    none_yet = 1.0
    for T in sched:
        r = _run_branch(cfg, strategy, cfg.b, cfg.j, T)
        hit = 1.0 - r.accept if cfg.b == 0 else r.accept
        none_yet *= 1.0 - hit
        runs.append({"T": T, **r.to_json()})
    return {"schedule": list(sched), "runs": runs, "stop_probability": 1.0 - none_yet}


def marked_probability(k: int, t: int) -> float:
    """Closed form for one marked item out of k after t iterations."""
    theta = math.asin(1 / math.sqrt(k))
    return math.sin((2 * t + 1) * theta) ** 2


def amplitude_recursion(k: int, T: int) -> list[float]:
    """Marked amplitude after 0..T iterations from the two-dimensional recursion."""
    a_m, a_u = 1 / math.sqrt(k), 1 / math.sqrt(k)     # per-item amplitudes
    out = [a_m]
    for _ in range(T):
        a_m = -a_m
        mean = (a_m + (k - 1) * a_u) / k
        a_m, a_u = 2 * mean - a_m, 2 * mean - a_u
        out.append(a_m)
    return out


def marked_amplitudes(k: int, T: int, j: int = 0) -> list[float]:
    """Honest-prover amplitude on |j>|0>|j> after 0..T iterations (b = 1)."""
    cfg = GroverConfig(k, T, 1, j)
    st = _Tensor(cfg, HONEST)
    wvals = [int(w, 2) for w in cfg.witnesses()]
    signs = _signs(cfg, 1, j)
    out = [float(st.psi[j, 0, j, 0].real)]
    for _ in range(T):
        st.xor_w_by_c(wvals)
        st.phase(signs)
        st.xor_w_by_c(wvals)
        st.cnot_v_to_c()
        st.diffuse_v()
        st.cnot_v_to_c()
        out.append(float(st.psi[j, 0, j, 0].real))
    return out


# gate-level replay -------------------------------------------------------------------

def protocol_layout(cfg: GroverConfig, strategy: ProverStrategy) -> RegisterLayout:
    n = cfg.index_qubits
    groups = [("C", n), ("W", cfg.relation.witness_length), ("V", n)]
    rq = strategy.counter_qubits(cfg.T)
    if rq:
        groups.append(("R", rq))
    return RegisterLayout(tuple(groups))


def protocol_steps(cfg: GroverConfig, strategy: ProverStrategy, b: int, j: int) -> list:
    """The run as a list of circuits and ("check", group) zero tests."""
    layout = protocol_layout(cfg, strategy)
    n, m = cfg.index_qubits, cfg.relation.witness_length
    C = [("C", q) for q in range(n)]
    W = [("W", q) for q in range(m)]
    V = [("V", q) for q in range(n)]
    bad = _attack_target(cfg, strategy)

    def bits(i, width):
        return format(i, f"0{width}b")

    write = []
    for i, w in enumerate(cfg.witnesses()):
        ctrl = tuple(zip(C, map(int, bits(i, n))))
        write += [pauli_x(W[q], controls=ctrl) for q, ch in enumerate(w) if ch == "1"]
    sandwich = [cnot(V[q], C[q]) for q in range(n)]
    if b == 0:
        marked = [bits(v, n) + bits(w, m) for v in range(cfg.k) for w in range(2 ** m)
                  if cfg.rej(v, bits(w, m))]
    else:
        marked = [bits(j, n)]
    oracle = [phase_oracle(V + W if b == 0 else V, marked)] if marked else []

    steps = [Circuit(layout, tuple(_prep(cfg, V)))]
    for t in range(1, cfg.T + 1):
        steps += [Circuit(layout, tuple(write + sandwich)), ("check", "C"),
                  Circuit(layout, tuple(sandwich + oracle + write))]
        if bad is not None:
            rq = strategy.counter_qubits(cfg.T)
            perm = np.eye(2 ** rq)
            perm[[0, t]] = perm[[t, 0]]
            ctrl = tuple(zip(C, map(int, bits(bad, n))))
            steps.append(Circuit(layout, (Gate("RawUnitary", tuple(("R", q) for q in range(rq)),
                                                ctrl, perm),)))
        steps += [("check", "W"), Circuit(layout, tuple(sandwich)), ("check", "C"),
                  Circuit(layout, (diffusion(V),) + tuple(sandwich))]
    return steps


def _prep(cfg, V):
    """Uniform superposition on V copied into C."""
    n = len(V)
    return [hadamard(q) for q in V] + [cnot(V[q], ("C", q)) for q in range(n)]


def run_subroutine_density(cfg: GroverConfig, strategy: ProverStrategy = HONEST,
                           b: int | None = None, j: int | None = None) -> SubroutineResult:
    """Gate-by-gate replay on an unnormalised density matrix; small k only."""
    b = cfg.b if b is None else b
    j = cfg.j if j is None else j
    if b == "enumerate":
        raise Misconfigured("replay one branch at a time")
    qubits = _check_cap(cfg, strategy)
    layout = protocol_layout(cfg, strategy)
    rho = np.zeros((layout.dim, layout.dim), dtype=complex)
    rho[0, 0] = 1.0
    rejected = {"index_check": 0.0, "witness_check": 0.0}
    idx = np.arange(layout.dim)
    for step in protocol_steps(cfg, strategy, b, j):
        if isinstance(step, tuple):
            group = step[1]
            keep = np.ones(layout.dim, dtype=bool)
            for pos in layout.positions(group):
                keep &= ((idx >> (layout.n_qubits - 1 - pos)) & 1) == 0
            before = float(np.trace(rho).real)
            rho = rho * np.outer(keep, keep)
            rejected["index_check" if group == "C" else "witness_check"] += \
                before - float(np.trace(rho).real)
        else:
            rho = apply_rows(step, rho, layout)
            rho = apply_rows(step, rho.conj().T, layout).conj().T
    diag = np.real(np.diag(rho))
    n = cfg.index_qubits
    vpos = layout.positions("V")
    index_dist = {i: 0.0 for i in range(cfg.k)}
    for s, p in enumerate(diag):
        v = 0
        for pos in vpos:
            v = 2 * v + ((s >> (layout.n_qubits - 1 - pos)) & 1)
        index_dist[v] += float(p)
    branches = 1
    if "R" in layout.names:
        rpos = layout.positions("R")
        vals = set()
        for s, p in enumerate(diag):
            if p > settings.zero_probability:
                vals.add(tuple((s >> (layout.n_qubits - 1 - q)) & 1 for q in rpos))
        branches = len(vals)
    return SubroutineResult(_verdict(cfg, b, j, index_dist, rejected), index_dist,
                            branches, qubits)


# the attack curve -------------------------------------------------------------------

CURVE_COLUMNS = ("k", "T", "catch_b0_attack", "catch_b0_honest_bad",
                 "find_j_attack", "find_j_honest")


def _find_j(k: int, T: int, bad: int, strategy: ProverStrategy) -> float:
    return float(np.mean([_run_branch(GroverConfig(k, T, 1, j, (bad,)), strategy, 1, j, T).accept
                          for j in range(k)]))


def curve_point(k: int, T: int | None = None) -> dict:
    """One row of the attack curve with the bad instance at the last index."""
    T = default_iterations(k) if T is None else T
    bad = k - 1
    cfg0 = GroverConfig(k, T, 0, 0, (bad,))
    return {"k": k, "T": T,
            "catch_b0_attack": 1.0 - _run_branch(cfg0, ATTACKER, 0, 0, T).accept,
            "catch_b0_honest_bad": 1.0 - _run_branch(cfg0, HONEST, 0, 0, T).accept,
            "find_j_attack": _find_j(k, T, bad, ATTACKER),
            "find_j_honest": _find_j(k, T, bad, HONEST)}


def soundness_break_curve(k_values) -> list[dict]:
    return [curve_point(int(k)) for k in k_values]


def loglog_slope(rows: list[dict], column: str = "catch_b0_attack") -> float:
    x = np.log([r["k"] for r in rows])
    y = np.log([r[column] for r in rows])
    return float(np.polyfit(x, y, 1)[0])

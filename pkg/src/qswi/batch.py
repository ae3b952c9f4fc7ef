"""Batch relations, batch proofs, the witness-hiding game and the batch-to-WI compiler.

The game is played over one batch proof.  A row ``(x, w0, w1)`` is an
instance with two valid witnesses; a column is a t-tuple of rows that fills
the other coordinates of the batch.  The payoff of ``(r, c)`` at round ``j``
is how well the batch verifier's view distinguishes which of ``w0``/``w1``
was planted at a uniformly random coordinate, when every coordinate picks
its witness by a uniform bit.

The compiled protocol plants the real instance at a random coordinate,
fills the rest from a fixed advice multiset of columns and then runs the
batch protocol unchanged.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .circuits import Circuit
from .config import settings
from .errors import (AdviceRelationMismatch, EnumerationInfeasible, IndexOutOfRange,
                     LayoutMismatch, Misconfigured, SamplingExhausted)
from .qip import ProtocolSpec, Relation, view
from .qds import BitChannel
from .states import CQState, DensityState, RegisterLayout, trace_distance


@dataclass(frozen=True)
class BatchRelation(Relation):
    """Conjunction of ``t`` copies of a base relation over concatenated strings."""

    base: Relation
    t: int

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("batch size must be positive")

    @property
    def instance_length(self) -> int:
        return self.base.instance_length * self.t

    @property
    def witness_length(self) -> int:
        return self.base.witness_length * self.t

    def split_instance(self, x: str) -> list[str]:
        n = self.base.instance_length
        return [x[i * n:(i + 1) * n] for i in range(self.t)]

    def split_witness(self, w: str) -> list[str]:
        m = self.base.witness_length
        return [w[i * m:(i + 1) * m] for i in range(self.t)]

    def holds(self, x: str, w: str) -> bool:
        if len(x) != self.instance_length or len(w) != self.witness_length:
            return False
        return all(self.base.holds(a, b) for a, b in
                   zip(self.split_instance(x), self.split_witness(w)))

    def witnesses(self, x: str) -> list[str]:
        per = [self.base.witnesses(a) for a in self.split_instance(x)]
        return sorted("".join(c) for c in itertools.product(*per))

    def instances(self) -> list[str]:
        return ["".join(c) for c in itertools.product(self.base.instances(), repeat=self.t)]


@dataclass(eq=False)
class BatchProofSpec:
    """A protocol for a batch relation together with its compression parameter."""

    protocol: ProtocolSpec
    relation: BatchRelation
    rho: float
    _mixtures: dict = field(default_factory=dict, repr=False)

    @property
    def t(self) -> int:
        return self.relation.t

    @property
    def base(self) -> Relation:
        return self.relation.base

    @property
    def communication(self) -> int:
        """Message qubits times rounds."""
        return self.protocol.q_M * self.protocol.rounds

    @property
    def compressing(self) -> bool:
        # finite-size reading of the asymptotic compression condition
        return self.communication <= self.rho * self.t + 1e-12

    def describe(self) -> dict:
        return {"protocol": self.protocol.name, "t": self.t, "rho": self.rho,
                "q_M_times_k": self.communication, "rho_t": self.rho * self.t,
                "compressing": self.compressing}


def sketch_width(rho: float, t: int) -> int:
    return math.ceil(rho * t - 1e-12)


# the game --------------------------------------------------------------------------

Row = tuple  # (x, w0, w1)

# above this many t-tuples the column set falls back to constant tuples
MAX_COLUMNS = 5000
MAX_PAYOFF_T = 10


def rows(relation: Relation) -> list[Row]:
    """Every (x, w0, w1) with both pairs in the relation, w0 and w1 ordered."""
    out = []
    for x in relation.instances():
        ws = relation.witnesses(x)
        out.extend((x, a, b) for a in ws for b in ws)
    return out


def _check_row(relation: Relation, r) -> Row:
    if len(r) != 3 or not (relation.holds(r[0], r[1]) and relation.holds(r[0], r[2])):
        raise AdviceRelationMismatch(f"{r!r} is not an instance with two valid witnesses")
    return tuple(r)


def _rounds(bp: BatchProofSpec, j):
    if j is None:
        return list(range(1, bp.protocol.rounds + 1))
    if not 1 <= j <= bp.protocol.rounds:
        raise IndexOutOfRange(f"round {j} outside 1..{bp.protocol.rounds}")
    return [j]


def _cq_mix(parts) -> CQState:
    """Uniform mixture of classical-quantum states."""
    n = len(parts)
    items = [(w / n, lab, s) for v in parts for lab, (w, s) in v.blocks.items()]
    return CQState.from_branches(items)


def _conditioned_view(bp, i_star, xs, pairs, j):
    """View at round j mixed uniformly over the witness bits in ``pairs``.

    ``pairs[i]`` is a tuple of candidate witnesses for coordinate i; a single
    candidate pins that coordinate.
    """
    key = (i_star, xs, pairs, j)
    hit = bp._mixtures.get(key)
    if hit is None:
        views = [view(bp.protocol, xs, "".join(ws), j) for ws in itertools.product(*pairs)]
        hit = bp._mixtures[key] = _cq_mix(views)
    return hit


def _planted(bp, r, c, i_star):
    xs = list(a[0] for a in c)
    xs[i_star] = r[0]
    pairs = [(a[1], a[2]) if a[1] != a[2] else (a[1],) for a in c]
    return "".join(xs), pairs


def payoff(r: Row, c, bp: BatchProofSpec, j: int | None = None) -> float:
    """E over the planted coordinate of trdist(view | b = 0, view | b = 1).

    ``j=None`` takes the worst round.
    """
    if bp.t > MAX_PAYOFF_T:
        raise EnumerationInfeasible(f"t={bp.t} exceeds {MAX_PAYOFF_T}")
    if len(c) != bp.t:
        raise Misconfigured(f"column has {len(c)} coordinates, batch size is {bp.t}")
    if r[1] == r[2]:
        return 0.0
    best = 0.0
    for jj in _rounds(bp, j):
        total = sum(_single_coordinate(r, c, bp, jj, i) for i in range(bp.t))
        best = max(best, total / bp.t)
    return best


@dataclass
class ZeroSumGame:
    """Row player maximises ``payoff[r, c]``, column player minimises it."""

    rows: list
    cols: list
    payoff: np.ndarray
    product_columns: bool = False
    round: int | None = None

    def __post_init__(self):
        self.payoff = np.asarray(self.payoff, dtype=float)
        if self.payoff.shape != (len(self.rows), len(self.cols)):
            raise Misconfigured(f"payoff shape {self.payoff.shape} vs "
                                f"{len(self.rows)}x{len(self.cols)}")

    def to_json(self) -> dict:
        return {"rows": [list(r) for r in self.rows],
                "cols": [[list(a) for a in c] if isinstance(c, tuple) and c and
                         isinstance(c[0], tuple) else c for c in self.cols],
                "payoff": self.payoff.tolist(), "product_columns": self.product_columns,
                "round": self.round}


def game(bp: BatchProofSpec, j: int | None = None) -> ZeroSumGame:
    rs = rows(bp.base)
    if len(rs) ** bp.t <= MAX_COLUMNS:
        cols = list(itertools.product(rs, repeat=bp.t))
        product = False
    else:
        cols = [tuple([r] * bp.t) for r in rs]
        product = True
    mat = np.array([[payoff(r, c, bp, j) for c in cols] for r in rs])
    return ZeroSumGame(rs, cols, mat, product, j)


@dataclass
class GameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    duality_gap: float
    method: str
    iterations: int = 0

    def to_json(self) -> dict:
        return {"value": self.value, "row_strategy": self.row_strategy.tolist(),
                "col_strategy": self.col_strategy.tolist(),
                "duality_gap": self.duality_gap, "method": self.method,
                "iterations": self.iterations}


def _gap(a, sigma, tau):
    return float(np.max(a @ tau) - np.min(sigma @ a))


def _mwu(a, iterations, target):
    """Multiplicative weights for the column player against row best responses."""
    n_r, n_c = a.shape
    logw = np.zeros(n_c)
    eta = math.sqrt(8 * math.log(max(n_c, 2)) / max(iterations, 1))
    tau_sum = np.zeros(n_c)
    sigma_sum = np.zeros(n_r)
    best = (np.inf, None, None)
    for it in range(1, iterations + 1):
        tau = np.exp(logw - logw.max())
        tau /= tau.sum()
        r = int(np.argmax(a @ tau))
        sigma_sum[r] += 1
        tau_sum += tau
        logw -= eta * a[r]
        if it % 64 == 0 or it == iterations:
            s, t = sigma_sum / it, tau_sum / it
            g = _gap(a, s, t)
            if g < best[0]:
                best = (g, s, t)
            if g < target:
                return s, t, it
    return best[1], best[2], iterations


def _lp(a):
    n_r, n_c = a.shape
    # column player: min v s.t. A tau <= v, tau in simplex
    res_c = linprog(np.r_[np.zeros(n_c), 1.0],
                    A_ub=np.c_[a, -np.ones(n_r)], b_ub=np.zeros(n_r),
                    A_eq=np.r_[np.ones(n_c), 0.0][None, :], b_eq=[1.0],
                    bounds=[(0, None)] * n_c + [(None, None)], method="highs")
    # row player: max u s.t. sigma^T A >= u
    res_r = linprog(np.r_[np.zeros(n_r), -1.0],
                    A_ub=np.c_[-a.T, np.ones(n_c)], b_ub=np.zeros(n_c),
                    A_eq=np.r_[np.ones(n_r), 0.0][None, :], b_eq=[1.0],
                    bounds=[(0, None)] * n_r + [(None, None)], method="highs")
    if not (res_c.success and res_r.success):
        return None
    tau = np.clip(res_c.x[:n_c], 0, None)
    sigma = np.clip(res_r.x[:n_r], 0, None)
    return sigma / sigma.sum(), tau / tau.sum()


def solve_game(g: ZeroSumGame, method: str = "auto") -> GameSolution:
    """Minimax value and optimal mixed strategies.

    ``"mwu"`` runs multiplicative weights only; ``"lp"`` solves the two
    linear programs; ``"auto"`` runs the LPs and falls back to multiplicative
    weights if the LP solver fails.  The reported gap is
    ``max_r (A tau)_r - min_c (sigma A)_c``.
    """
    a = g.payoff
    if a.size == 0:
        raise Misconfigured("empty game")
    iters = 0
    sol = None
    if method in ("auto", "lp"):
        sol = _lp(a)
        used = "lp"
    if sol is None:
        if method == "lp":
            raise Misconfigured("LP solver failed")
        s, t, iters = _mwu(a, settings.mwu_iterations, settings.duality_gap_target)
        sol, used = (s, t), "mwu"
    sigma, tau = sol
    upper, lower = float(np.max(a @ tau)), float(np.min(sigma @ a))
    return GameSolution((upper + lower) / 2, sigma, tau, upper - lower, used, iters)


# sparse advice --------------------------------------------------------------------

@dataclass
class AdviceMultiset:
    entries: list
    epsilon: float
    seed: int
    value: float
    row_values: list          # E_{c <- S} payoff(r, c) per row
    attempts: int

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def max_row_value(self) -> float:
        return max(self.row_values)

    def to_json(self) -> dict:
        return {"entries": [[list(a) for a in c] for c in self.entries],
                "epsilon": self.epsilon, "seed": self.seed, "value": self.value,
                "size": self.size, "row_values": self.row_values,
                "margins": [self.value + self.epsilon - v for v in self.row_values],
                "attempts": self.attempts}

    @classmethod
    def from_json(cls, d) -> "AdviceMultiset":
        entries = [tuple(tuple(a) for a in c) for c in d["entries"]]
        return cls(entries, d["epsilon"], d["seed"], d["value"], d["row_values"],
                   d["attempts"])


def advice_size(n_rows: int, epsilon: float, c0: float | None = None) -> int:
    c0 = settings.sparse_c0 if c0 is None else c0
    if epsilon <= 0:
        raise Misconfigured("epsilon must be positive")
    return max(1, math.ceil(c0 * math.log(n_rows) / epsilon ** 2 - 1e-9))


def sparse_support(g: ZeroSumGame, epsilon: float, seed: int = 0,
                   solution: GameSolution | None = None) -> AdviceMultiset:
    """i.i.d. draws from the optimal column strategy, redrawn until every row passes."""
    sol = solution or solve_game(g)
    size = advice_size(len(g.rows), epsilon)
    tau = sol.col_strategy
    failing = []
    for attempt in range(settings.sparse_attempts):
        rng = np.random.default_rng([seed, attempt])
        idx = rng.choice(len(g.cols), size=size, p=tau)
        vals = g.payoff[:, idx].mean(axis=1)
        failing = [i for i, v in enumerate(vals) if v > sol.value + epsilon]
        if not failing:
            return AdviceMultiset([g.cols[i] for i in idx], epsilon, seed, sol.value,
                                  [float(v) for v in vals], attempt + 1)
    raise SamplingExhausted(f"no sample passed after {settings.sparse_attempts} attempts; "
                            f"failing rows {[g.rows[i] for i in failing]}")


def advice_row_values(bp: BatchProofSpec, advice, j: int | None = None) -> list[float]:
    """E_{c <- advice} payoff(r, c) for every row of the base relation."""
    return [float(np.mean([payoff(r, c, bp, j) for c in advice])) for r in rows(bp.base)]


# compiler ---------------------------------------------------------------------------

def _validate_advice(bp: BatchProofSpec, entries):
    out = []
    for c in entries:
        if len(c) != bp.t:
            raise AdviceRelationMismatch(f"advice entry has {len(c)} coordinates, need {bp.t}")
        out.append(tuple(_check_row(bp.base, a) for a in c))
    if not out:
        raise AdviceRelationMismatch("empty advice")
    return out


def compile_batch(bp: BatchProofSpec, advice) -> ProtocolSpec:
    """WI protocol for the base relation from a batch proof and column advice.

    Prover coins ``istar`` (the planted coordinate) and ``xs`` (the instance
    vector, sent in the clear) are visible from round 1; ``ws`` holds the
    dummy witnesses and never enters a view.  The planted slot of ``ws`` is
    a run of ``*`` that the prover fills with its real witness.
    """
    entries = advice.entries if isinstance(advice, AdviceMultiset) else advice
    entries = _validate_advice(bp, entries)
    inner = bp.protocol
    t, m = bp.t, bp.base.witness_length
    taken = {"istar", "xs", "ws"} & set(inner.visibility) | \
        {"istar", "xs", "ws"} & set(inner.coin_owner)
    if taken:
        raise LayoutMismatch(f"batch protocol already uses coin names {sorted(taken)}")
    hole = "*" * m

    def randomness(x):
        acc: dict = {}
        for c in entries:
            for i in range(t):
                others = [k for k in range(t) if k != i]
                for bits in itertools.product((1, 2), repeat=t - 1):
                    xs = [a[0] for a in c]
                    xs[i] = x
                    ws = [a[b] for a, b in zip((c[k] for k in others), bits)]
                    ws.insert(i, hole)
                    xs, ws = "".join(xs), "".join(ws)
                    p = 1.0 / (len(entries) * t * 2 ** (t - 1))
                    for q, coins in inner.branches(xs):
                        merged = dict(coins, istar=i, xs=xs, ws=ws)
                        key = tuple(sorted(merged.items()))
                        acc[key] = acc.get(key, 0.0) + p * q
        return [(p, dict(k)) for k, p in sorted(acc.items())]

    def inner_coins(coins):
        return {k: v for k, v in coins.items() if k not in ("istar", "xs", "ws")}

    def prover(x, w, j, coins):
        ws = coins["ws"]
        if w is not None:
            ws = ws.replace(hole, w, 1)
        return inner.prover(coins["xs"], ws, j, inner_coins(coins))

    def verifier(x, j, coins):
        xs, i = coins["xs"], coins["istar"]
        if bp.relation.split_instance(xs)[i] != x:
            return Circuit.empty(inner.layout)
        return inner.verifier(xs, j, inner_coins(coins))

    visibility = dict(inner.visibility, istar=1, xs=1)
    owner = dict(inner.coin_owner, istar="P", xs="P", ws="P")
    return ProtocolSpec(name=f"compiled({inner.name})", message_count=inner.message_count,
                        layout=inner.layout, roles=dict(inner.roles), prover=prover,
                        verifier=verifier, accept=inner.accept, relation=bp.base,
                        randomness=randomness, visibility=visibility, coin_owner=owner,
                        view_groups_fn=inner.view_groups_fn,
                        params={"batch": inner.name, "t": t, "advice_size": len(entries)})


# product strategies -------------------------------------------------------------------

MAX_PRODUCT_T = 6


def product_strategy_value(bp: BatchProofSpec, sigma, j: int | None = None) -> float:
    """E_{r ~ sigma, c ~ sigma^t} payoff(r, c).

    ``sigma`` maps rows to probabilities (dict) or is a vector over
    :func:`rows`.
    """
    if bp.t > MAX_PRODUCT_T:
        raise EnumerationInfeasible(f"t={bp.t} exceeds {MAX_PRODUCT_T}")
    rs = rows(bp.base)
    if isinstance(sigma, dict):
        weights = {_check_row(bp.base, r): float(p) for r, p in sigma.items() if p > 0}
    else:
        weights = {r: float(p) for r, p in zip(rs, sigma) if p > 0}
    if abs(sum(weights.values()) - 1.0) > 1e-9:
        raise Misconfigured("row distribution must sum to 1")
    support = list(weights)
    rounds = _rounds(bp, j)
    total = 0.0
    if len(rounds) == 1:
        # payoff ignores the column entry at the planted coordinate, so sum
        # over the other t - 1 entries only
        for r in support:
            if r[1] == r[2]:
                continue
            for i in range(bp.t):
                for rest in itertools.product(support, repeat=bp.t - 1):
                    pc = math.prod(weights[a] for a in rest)
                    c = rest[:i] + (r,) + rest[i:]
                    total += weights[r] * pc * _single_coordinate(r, c, bp, rounds[0], i)
        return total / bp.t
    for r in support:
        for c in itertools.product(support, repeat=bp.t):
            total += weights[r] * math.prod(weights[a] for a in c) * payoff(r, c, bp, j)
    return total


def _single_coordinate(r, c, bp, j, i):
    xs, pairs = _planted(bp, r, c, i)
    v = []
    for w in (r[1], r[2]):
        pairs[i] = (w,)
        v.append(_conditioned_view(bp, i, xs, tuple(pairs), j))
    return trace_distance(v[0], v[1])


def induced_channel(bp: BatchProofSpec, r: Row, j: int = 1) -> BitChannel:
    """b -> view at round j with every coordinate running (x, w^{b_i}) of ``r``."""
    r = _check_row(bp.base, r)
    xs = r[0] * bp.t
    raw = {}
    for bits in itertools.product("01", repeat=bp.t):
        ws = "".join(r[1] if b == "0" else r[2] for b in bits)
        raw["".join(bits)] = view(bp.protocol, xs, ws, j)
    labels = sorted({lab for v in raw.values() for lab in v.blocks}, key=repr)
    dens = {b: v.to_density(labels) for b, v in raw.items()}
    n = next(iter(dens.values())).layout.n_qubits
    layout = RegisterLayout((("out", n),))
    fixed = {b: DensityState(d.matrix, layout, validate=False) for b, d in dens.items()}
    return BitChannel(bp.t, n, fixed.__getitem__, "induced",
                      {"t": bp.t, "row": list(r), "round": j})

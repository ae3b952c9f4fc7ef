"""Distributional stability of classical-to-quantum channels.

A :class:`BitChannel` maps t-bit strings to states on t' qubits.  For each
input coordinate j we compare the output under uniform inputs with the
output when bit j is pinned:

    gamma_j = E_beta trdist(f(U | b_j = beta), f(U))
    delta   = mean_j gamma_j
    gap     = mean_j trdist(f(U | b_j = 0), f(U | b_j = 1))

Everything is exact by enumeration of all 2^t inputs up to
``settings.qds_exact_max_t``; beyond that a seeded Monte Carlo estimate is
available on request and is labelled approximate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .config import settings
from .errors import EnumerationInfeasible, MalformedDistribution, Misconfigured
from .states import DensityState, RegisterLayout, trace_distance


def bitstrings(t: int) -> list[str]:
    return ["".join(b) for b in itertools.product("01", repeat=t)]


@dataclass(eq=False)
class BitChannel:
    t: int
    t_prime: int
    eval: Callable[[str], DensityState]
    family: str = "table"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t < 1 or self.t_prime < 0:
            raise Misconfigured(f"bad channel shape t={self.t}, t'={self.t_prime}")
        self.layout = RegisterLayout((("out", self.t_prime),))
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return 2 ** self.t_prime

    def __call__(self, bits: str) -> DensityState:
        if len(bits) != self.t or set(bits) - {"0", "1"}:
            raise Misconfigured(f"expected a {self.t}-bit string, got {bits!r}")
        return self.eval(bits)

    def output(self, bits: str) -> np.ndarray:
        """Density matrix of f(bits), cached."""
        m = self._cache.get(bits)
        if m is None:
            s = self(bits)
            if s.dim != self.dim:
                raise Misconfigured(f"f({bits}) has dimension {s.dim}, expected {self.dim}")
            m = self._cache[bits] = s.matrix
        return m

    def to_json(self) -> dict:
        if self.family != "table":
            return {"family": self.family, "t": self.t, "t_prime": self.t_prime,
                    "params": self.params}
        return {"family": "table", "t": self.t, "t_prime": self.t_prime,
                "table": {b: self(b).to_json() for b in bitstrings(self.t)}}


# families ------------------------------------------------------------------------

def _basis(bits: str, layout: RegisterLayout) -> DensityState:
    return DensityState.basis(bits, layout) if bits else DensityState.zero(layout)


def first_bits(t: int, t_prime: int) -> BitChannel:
    """f(b) = |b_1 .. b_t'><b_1 .. b_t'|."""
    if not 0 <= t_prime <= t:
        raise Misconfigured("need 0 <= t' <= t")
    ch = BitChannel(t, t_prime, lambda b: _basis(b[:t_prime], ch.layout), "first-bits",
                    {"t": t, "tprime": t_prime})
    return ch


def identity(t: int) -> BitChannel:
    ch = BitChannel(t, t, lambda b: _basis(b, ch.layout), "identity", {"t": t})
    return ch


def constant(t: int, t_prime: int = 1, state: DensityState | None = None) -> BitChannel:
    layout = RegisterLayout((("out", t_prime),))
    fixed = state if state is not None else DensityState.zero(layout)
    if fixed.dim != layout.dim:
        raise Misconfigured("constant state has the wrong dimension")
    fixed = DensityState(fixed.matrix, layout, validate=False)
    params = {"t": t, "tprime": t_prime}
    return BitChannel(t, t_prime, lambda b: fixed, "constant", params)


def random_pure(t: int, t_prime: int, seed: int) -> BitChannel:
    """Each f(b) is a Gaussian-then-normalised pure state seeded by (seed, b)."""
    layout = RegisterLayout((("out", t_prime),))

    def ev(bits):
        rng = np.random.default_rng([seed, int(bits, 2), t])
        v = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
        return DensityState.from_vector(v / np.linalg.norm(v), layout)

    return BitChannel(t, t_prime, ev, "random", {"t": t, "tprime": t_prime, "seed": seed})


def from_table(table: Mapping[str, DensityState]) -> BitChannel:
    keys = list(table)
    if not keys:
        raise Misconfigured("empty channel table")
    t = len(keys[0])
    missing = set(bitstrings(t)) - set(keys)
    if missing or len(keys) != 2 ** t:
        raise Misconfigured(f"channel table must list all {2 ** t} inputs")
    n = next(iter(table.values())).layout.n_qubits
    layout = RegisterLayout((("out", n),))
    fixed = {b: DensityState(s.matrix, layout) for b, s in table.items()}
    return BitChannel(t, n, fixed.__getitem__)


FAMILIES = {
    "first-bits": lambda t, tprime=1, seed=0: first_bits(t, tprime),
    "identity": lambda t, tprime=None, seed=0: identity(t),
    "constant": lambda t, tprime=1, seed=0: constant(t, tprime),
    "random": lambda t, tprime=1, seed=0: random_pure(t, tprime, seed),
}


def family(name: str, t: int, tprime: int = 1, seed: int = 0) -> BitChannel:
    if name not in FAMILIES:
        raise Misconfigured(f"unknown channel family {name!r}; known: {sorted(FAMILIES)}")
    return FAMILIES[name](t, tprime, seed)


def channel_from_json(data: dict) -> BitChannel:
    if data.get("family", "table") == "table":
        return from_table({b: DensityState.from_json(s) for b, s in data["table"].items()})
    p = data["params"]
    return family(data["family"], int(p["t"]), int(p.get("tprime", 1)), int(p.get("seed", 0)))


# mixtures ------------------------------------------------------------------------

def mixture(f: BitChannel, d: Mapping[str, float]) -> DensityState:
    """sum_b d(b) f(b)."""
    total = 0.0
    acc = np.zeros((f.dim, f.dim), dtype=complex)
    for b, p in d.items():
        if p < 0 or not np.isfinite(p):
            raise MalformedDistribution(f"weight {p} on {b!r}")
        if len(b) != f.t:
            raise MalformedDistribution(f"{b!r} is not a {f.t}-bit string")
        total += p
        if p:
            acc += p * f.output(b)
    if abs(total - 1.0) > settings.distribution_atol:
        raise MalformedDistribution(f"weights sum to {total!r}")
    return DensityState(acc, f.layout, validate=False)


def uniform(t: int, pinned: dict[int, str] | None = None) -> dict[str, float]:
    """Uniform distribution over t-bit strings with some 1-based coordinates fixed."""
    pinned = pinned or {}
    support = [b for b in bitstrings(t) if all(b[j - 1] == v for j, v in pinned.items())]
    return {b: 1.0 / len(support) for b in support}


@dataclass
class _Moments:
    """Full and per-coordinate conditioned mixtures of a channel."""

    full: np.ndarray
    pinned: dict                 # (j, beta) -> matrix
    exact: bool
    samples: int | None


def _moments(f: BitChannel, monte_carlo: bool, samples: int, seed: int) -> _Moments:
    if f.t <= settings.qds_exact_max_t:
        inputs = bitstrings(f.t)
        exact = True
    elif monte_carlo:
        rng = np.random.default_rng(seed)
        draws = rng.integers(0, 2, size=(samples, f.t))
        inputs = ["".join(map(str, row)) for row in draws]
        exact = False
    else:
        raise EnumerationInfeasible(
            f"t={f.t} exceeds the exact limit {settings.qds_exact_max_t}; "
            "enable Monte Carlo to estimate")
    mats = np.stack([f.output(b) for b in inputs])
    bits = np.array([[c == "1" for c in b] for b in inputs])
    pinned = {}
    for j in range(1, f.t + 1):
        col = bits[:, j - 1]
        for beta, sel in ((0, ~col), (1, col)):
            if not sel.any():
                raise EnumerationInfeasible(f"no samples with bit {j} = {beta}")
            pinned[(j, beta)] = mats[sel].mean(axis=0)
    return _Moments(mats.mean(axis=0), pinned, exact, None if exact else samples)


def _dist(a: np.ndarray, b: np.ndarray, layout) -> float:
    return trace_distance(DensityState(a, layout, validate=False),
                          DensityState(b, layout, validate=False))


def _check_index(f, j):
    if not 1 <= j <= f.t:
        raise Misconfigured(f"coordinate {j} outside 1..{f.t}")


def gamma(f: BitChannel, j: int, *, monte_carlo: bool = False, samples: int = 4096,
          seed: int = 0) -> float:
    _check_index(f, j)
    m = _moments(f, monte_carlo, samples, seed)
    return _gamma(m, j, f.layout)


def _gamma(m: _Moments, j: int, layout) -> float:
    return 0.5 * sum(_dist(m.pinned[(j, beta)], m.full, layout) for beta in (0, 1))


def _gap(m: _Moments, j: int, layout) -> float:
    return _dist(m.pinned[(j, 0)], m.pinned[(j, 1)], layout)


def qds_delta(f: BitChannel, **kw) -> float:
    m = _moments(f, kw.get("monte_carlo", False), kw.get("samples", 4096), kw.get("seed", 0))
    return float(np.mean([_gamma(m, j, f.layout) for j in range(1, f.t + 1)]))


def compression_gap(f: BitChannel, **kw) -> float:
    m = _moments(f, kw.get("monte_carlo", False), kw.get("samples", 4096), kw.get("seed", 0))
    return float(np.mean([_gap(m, j, f.layout) for j in range(1, f.t + 1)]))


@dataclass
class QdsReport:
    gammas: list[float]
    gaps: list[float]
    delta: float
    gap: float
    exact: bool
    samples: int | None

    @property
    def chain_margin(self) -> float:
        """2 delta - gap; nonnegative whenever the chain inequality holds."""
        return 2 * self.delta - self.gap

    def to_json(self) -> dict:
        return {"gamma": self.gammas, "per_coordinate_gap": self.gaps, "delta": self.delta,
                "gap": self.gap, "chain_margin": self.chain_margin,
                "exact": self.exact, "samples": self.samples}


def analyse(f: BitChannel, *, monte_carlo: bool = False, samples: int = 4096,
            seed: int = 0) -> QdsReport:
    m = _moments(f, monte_carlo, samples, seed)
    gammas = [_gamma(m, j, f.layout) for j in range(1, f.t + 1)]
    gaps = [_gap(m, j, f.layout) for j in range(1, f.t + 1)]
    return QdsReport(gammas, gaps, float(np.mean(gammas)), float(np.mean(gaps)),
                     m.exact, m.samples)

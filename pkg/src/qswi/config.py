"""Central numerical tolerances and the qubit cap.

Every module reads its thresholds from :data:`settings`; the CLI mutates it
through ``--tol name=value`` and ``--cap``.
"""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass


@dataclass
class Settings:
    qubit_cap: int = 14
    # quantum-core
    hermitian_atol: float = 1e-10
    trace_atol: float = 1e-10
    psd_atol: float = 1e-9
    eig_input_hermitian_atol: float = 1e-8
    jacobi_sweep_tol: float = 1e-12
    jacobi_max_dim: int = 8
    # circuit-model
    unitary_atol: float = 1e-9
    zero_probability: float = 1e-12
    # qds / batch
    distribution_atol: float = 1e-12
    qds_exact_max_t: int = 12
    # games
    mwu_iterations: int = 100_000
    duality_gap_target: float = 1e-7
    sparse_c0: float = 8.0
    sparse_attempts: int = 20


settings = Settings()


def tolerance_table() -> dict:
    return dataclasses.asdict(settings)


def set_value(name: str, value: str) -> None:
    if not hasattr(settings, name):
        raise KeyError(f"unknown tolerance {name!r}")
    current = getattr(settings, name)
    setattr(settings, name, type(current)(float(value)) if isinstance(current, int) else float(value))


@contextlib.contextmanager
def overrides(**values):
    """Temporarily replace settings, restoring them on exit."""
    old = {k: getattr(settings, k) for k in values}
    try:
        for k, v in values.items():
            setattr(settings, k, v)
        yield settings
    finally:
        for k, v in old.items():
            setattr(settings, k, v)

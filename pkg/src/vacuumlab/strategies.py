"""N-step discrimination strategies and the quantities evaluated on them.

A strategy prepares ``rho_0 = Lambda_0(s_0)`` and then alternates one use of
the unknown channel (on the system factor) with a known channel on
system (x) ancilla: ``rho_n = Lambda_n((T (x) id)(rho_{n-1}))``.  The ancilla is
always the right-hand tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linops
from .channels import (
    ChannelWithVacuum,
    QuantumChannel,
    TransmissionFunctional,
    build_t_down,
    interaction_functional,
)

TELESCOPE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscriminationStrategy:
    """Initial state plus the known channels ``Lambda_0 ... Lambda_N``."""

    sys_dim: int
    anc_dim: int
    steps: int
    initial_state: np.ndarray
    lambdas: tuple

    def __post_init__(self):
        lambdas = tuple(self.lambdas)
        object.__setattr__(self, "lambdas", lambdas)
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if len(lambdas) != self.steps + 1:
            raise ValueError(f"strategy needs {self.steps + 1} channels, got {len(lambdas)}")
        n = self.sys_dim * self.anc_dim
        for i, lam in enumerate(lambdas):
            if lam.operation and not lam.is_trace_preserving:
                raise ValueError(f"Lambda_{i}: channels of a strategy must be trace preserving")
            if i > 0 and lam.dim_in != n:
                raise ValueError(f"Lambda_{i}: input dimension {lam.dim_in} != sys*anc = {n}")
            if i < self.steps and lam.dim_out != n:
                raise ValueError(f"Lambda_{i}: output dimension {lam.dim_out} != sys*anc = {n}")
        s0 = linops.as_matrix(self.initial_state, "initial_state")
        if s0.shape != (lambdas[0].dim_in, lambdas[0].dim_in):
            raise ValueError("initial_state: shape does not match the input of Lambda_0")
        linops.psd_eigh(s0)
        if abs(np.trace(s0).real - 1) > 1e-9:
            raise ValueError("initial_state: trace must equal 1")
        object.__setattr__(self, "initial_state", s0)

    @property
    def out_dim(self) -> int:
        return self.lambdas[-1].dim_out


@dataclass(frozen=True)
class TwoValuedPOVM:
    """Measurement with outcomes "A" (``pi_a``) and "B" (``pi_b``)."""

    pi_a: np.ndarray
    pi_b: np.ndarray

    def __post_init__(self):
        pa = linops.as_matrix(self.pi_a)
        pb = linops.as_matrix(self.pi_b)
        if pa.shape != pb.shape:
            raise ValueError("POVM elements have different shapes")
        for name, p in (("pi_a", pa), ("pi_b", pb)):
            if not linops.is_hermitian(p, 1e-9):
                raise ValueError(f"{name}: POVM element is not Hermitian")
            linops.psd_eigh(p)
        if not np.allclose(pa + pb, np.eye(pa.shape[0]), atol=1e-9, rtol=0):
            raise ValueError("POVM completeness: pi_a + pi_b must equal the identity")
        object.__setattr__(self, "pi_a", pa)
        object.__setattr__(self, "pi_b", pb)

    @classmethod
    def from_projector(cls, pi_a: np.ndarray) -> "TwoValuedPOVM":
        pi_a = np.asarray(pi_a, dtype=complex)
        return cls(pi_a, np.eye(pi_a.shape[0]) - pi_a)


@dataclass(frozen=True)
class SimulationReport:
    intermediate_states: list
    p_error: Optional[float] = None
    p_interaction: Optional[float] = None
    total_transmission: Optional[float] = None


def run_intermediate_states(d: DiscriminationStrategy, t: QuantumChannel) -> list[np.ndarray]:
    """States ``rho_0 ... rho_N`` produced when ``t`` is the unknown channel."""
    if t.dim_in != d.sys_dim or t.dim_out != d.sys_dim:
        raise ValueError(f"channel acts on dimension {t.dim_in}, strategy system has {d.sys_dim}")
    ext = t.tensor_identity(d.anc_dim)
    rho = d.lambdas[0].apply(d.initial_state)
    states = [rho]
    for lam in d.lambdas[1:]:
        rho = lam.apply(ext.apply(rho))
        states.append(rho)
    return states


def final_state(d: DiscriminationStrategy, t: QuantumChannel) -> np.ndarray:
    return run_intermediate_states(d, t)[-1]


def _system_marginal(d: DiscriminationStrategy, rho: np.ndarray) -> np.ndarray:
    if d.anc_dim == 1:
        return rho
    return linops.ptrace_second(rho, d.sys_dim, d.anc_dim)


def error_probability_pair(d: DiscriminationStrategy, povm: TwoValuedPOVM,
                           t_a: QuantumChannel, t_b: QuantumChannel) -> float:
    """``(tr(pi_B rho_N^A) + tr(pi_A rho_N^B)) / 2``."""
    return error_probability_sets(d, povm, [t_a], [t_b])


def error_probability_sets(d: DiscriminationStrategy, povm: TwoValuedPOVM,
                           set_a: Sequence[QuantumChannel], set_b: Sequence[QuantumChannel]) -> float:
    """Worst-case error over finite sets of channels for each hypothesis."""
    if not set_a or not set_b:
        raise ValueError("channel sets must be nonempty")
    if povm.pi_a.shape[0] != d.out_dim:
        raise ValueError("POVM dimension does not match the strategy output")
    miss_a = max(float(np.real(np.trace(povm.pi_b @ final_state(d, t)))) for t in set_a)
    miss_b = max(float(np.real(np.trace(povm.pi_a @ final_state(d, t)))) for t in set_b)
    return 0.5 * (miss_a + miss_b)


def interaction_probability(d: DiscriminationStrategy, cw: ChannelWithVacuum,
                            tol: float = TELESCOPE_TOL) -> float:
    """Probability that the environment ever notices a non-vacuum input.

    Evaluated as the sum of the interaction functional over the states fed
    into the undetected branch ``T_down``; the result is checked against the
    terminal expression ``1 - tr(rho_N)`` of the same run.

    Raises:
        RuntimeError: if the two expressions disagree beyond ``tol``.
    """
    t_down = build_t_down(cw)
    theta = interaction_functional(cw)
    states = run_intermediate_states(d, t_down)
    total = sum(theta(_system_marginal(d, rho)) for rho in states[:-1])
    terminal = 1.0 - float(np.real(np.trace(states[-1])))
    if abs(total - terminal) > tol:
        raise RuntimeError(f"telescoping check failed: sum {total:.15g} vs 1 - tr {terminal:.15g}")
    return float(total)


def interaction_probability_terms(d: DiscriminationStrategy, cw: ChannelWithVacuum) -> tuple[float, float]:
    """``(sum formula, terminal formula)`` without the consistency check."""
    t_down = build_t_down(cw)
    theta = interaction_functional(cw)
    states = run_intermediate_states(d, t_down)
    total = sum(theta(_system_marginal(d, rho)) for rho in states[:-1])
    return float(total), 1.0 - float(np.real(np.trace(states[-1])))


def total_transmission(d: DiscriminationStrategy, t: QuantumChannel, tf: TransmissionFunctional) -> float:
    """Sum of ``tf`` over the system inputs of every channel use, with the full channel."""
    states = run_intermediate_states(d, t)
    return float(sum(tf(_system_marginal(d, rho)) for rho in states[:-1]))


def simulate(d: DiscriminationStrategy, t: QuantumChannel, povm: TwoValuedPOVM | None = None,
             t_other: QuantumChannel | None = None, cw: ChannelWithVacuum | None = None,
             tf: TransmissionFunctional | None = None) -> SimulationReport:
    """Bundle the intermediate states with whichever figures of merit apply."""
    states = run_intermediate_states(d, t)
    p_error = None
    if povm is not None and t_other is not None:
        p_error = error_probability_pair(d, povm, t, t_other)
    p_int = interaction_probability(d, cw) if cw is not None else None
    trans = total_transmission(d, t, tf) if tf is not None else None
    return SimulationReport(states, p_error, p_int, trans)

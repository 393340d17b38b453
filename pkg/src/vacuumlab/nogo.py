"""Constants and audits for the impossibility side of interaction-free discrimination.

Every audit returns a :class:`NoGoAudit` whose ``holds`` flag is
``lhs <= rhs + AUDIT_SLACK``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linops
from .channels import (
    ChannelWithVacuum,
    QuantumChannel,
    build_t_down,
    decide_discriminability,
    interaction_lower_constant,
    maximal_vacuum_subspace,
    restrictions_equal,
)
from .linops import Subspace, dagger
from .strategies import (
    DiscriminationStrategy,
    TwoValuedPOVM,
    _system_marginal,
    error_probability_pair,
    final_state,
    interaction_probability,
    run_intermediate_states,
)

AUDIT_SLACK = 1e-9
ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class NoGoAudit:
    lhs: float
    rhs: float
    constant_used: float
    holds: bool

    @classmethod
    def of(cls, lhs: float, rhs: float, constant: float) -> "NoGoAudit":
        return cls(float(lhs), float(rhs), float(constant), bool(lhs <= rhs + AUDIT_SLACK))


@dataclass(frozen=True, eq=False)
class OrthogonalDecomposition:
    """A subspace ``V`` and mutually orthogonal parts whose direct sum is ``V``'s complement."""

    v_sub: Subspace
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        object.__setattr__(self, "parts", parts)
        n = self.v_sub.ambient_dim
        for i, a in enumerate(parts):
            if a.ambient_dim != n:
                raise ValueError("decomposition: parts live in a different space")
            if not a.is_orthogonal_to(self.v_sub, 1e-10):
                raise ValueError(f"decomposition: part {i} is not orthogonal to V")
            for b in parts[i + 1:]:
                if not a.is_orthogonal_to(b, 1e-10):
                    raise ValueError("decomposition: parts are not mutually orthogonal")
        total = sum((p.projector for p in parts), np.zeros((n, n), dtype=complex))
        if np.abs(total + self.v_sub.projector - np.eye(n)).max() > 1e-10:
            raise ValueError("decomposition: parts do not span the complement of V")

    @classmethod
    def single(cls, v_sub: Subspace) -> "OrthogonalDecomposition":
        comp = v_sub.complement()
        return cls(v_sub, (comp,) if comp.dim else ())

    @property
    def projectors(self) -> list[np.ndarray]:
        return [p.projector for p in self.parts if p.dim]


def helstrom_error(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """Minimum error of a two-valued POVM with equal priors: ``(1 - ||rho_a - rho_b||_1 / 2) / 2``."""
    return 0.5 * (1.0 - 0.5 * linops.trace_norm(np.asarray(rho_a) - np.asarray(rho_b)))


# --- joint dilations --------------------------------------------------------------------


def _operation_dilation(op: QuantumChannel, env_dim: int) -> np.ndarray:
    """Isometry ``[L_1; ...; L_m; sqrt(1 - sum L^dagger L); 0]`` with environment first."""
    d_in, d_out = op.dim_in, op.dim_out
    if d_in != d_out:
        raise ValueError("operations must act on a single space")
    defect = np.eye(d_in) - sum(dagger(k) @ k for k in op.kraus)
    w, u = linops.psd_eigh(defect)
    # round-off eigenvalues would otherwise be amplified by the square root
    w[w < 1e-13] = 0.0
    blocks = list(op.kraus) + [(u * np.sqrt(w)) @ dagger(u)]
    blocks += [np.zeros((d_out, d_in), dtype=complex)] * (env_dim - len(blocks))
    return np.vstack(blocks)


def _env_first_matrix(iso_on_sub: np.ndarray, env_dim: int) -> np.ndarray:
    # (E*d) x k  ->  E x (d*k)
    d = iso_on_sub.shape[0] // env_dim
    return iso_on_sub.reshape(env_dim, d * iso_on_sub.shape[1])


def _aligning_unitary(m_a: np.ndarray, m_b: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Unitary ``W`` with ``W m_a = m_b`` given ``m_a^dagger m_a = m_b^dagger m_b``."""
    u, s, vh = np.linalg.svd(m_a, full_matrices=True)
    r = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
    if r == 0:
        return np.eye(m_a.shape[0], dtype=complex)
    u_a = u[:, :r]
    u_b = m_b @ dagger(vh[:r]) / s[:r]
    left = np.hstack([u_b, linops.orthonormal_completion(u_b)])
    right = np.hstack([u_a, u[:, r:]])
    return left @ dagger(right)


@dataclass(frozen=True, eq=False)
class JointDilation:
    """Dilations ``V_A, V_B`` and environment projectors with ``V_A P = V_B P``."""

    env_dim: int
    v_a: np.ndarray
    v_b: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray


def joint_dilation(t_a_down: QuantumChannel, t_b_down: QuantumChannel, v_sub: Subspace,
                   tol: float = 1e-8) -> JointDilation:
    """Common Stinespring dilation of two operations that agree on ``v_sub``.

    Raises:
        ValueError: if the operations differ on ``v_sub`` or are not trace
            preserving there.
    """
    d = t_a_down.dim_in
    if t_b_down.dim_in != d or v_sub.ambient_dim != d:
        raise ValueError("dimension mismatch between operations and subspace")
    if v_sub.dim:
        b = v_sub.basis
        for name, op in (("A", t_a_down), ("B", t_b_down)):
            gram = sum(dagger(k @ b) @ (k @ b) for k in op.kraus)
            if np.abs(gram - np.eye(v_sub.dim)).max() > tol:
                raise ValueError(f"trace preservation: operation {name} is not trace preserving on V")
        if not restrictions_equal(t_a_down, t_b_down, v_sub, tol):
            raise ValueError("restrictions unequal: operations differ on V")
    m_a, m_b = len(t_a_down.kraus), len(t_b_down.kraus)
    env = max(m_a, m_b) + 1
    va = _operation_dilation(t_a_down, env)
    vb = _operation_dilation(t_b_down, env)
    pa = np.diag([1.0] * m_a + [0.0] * (env - m_a)).astype(complex)
    pb = np.diag([1.0] * m_b + [0.0] * (env - m_b)).astype(complex)
    if v_sub.dim:
        w = _aligning_unitary(_env_first_matrix(va @ v_sub.basis, env),
                              _env_first_matrix(vb @ v_sub.basis, env))
        va = np.kron(w, np.eye(d)) @ va
        pa = w @ pa @ dagger(w)
        if np.abs((va - vb) @ v_sub.basis).max() > 1e-7:
            raise ValueError("restrictions unequal: no unitary aligns the dilations on V")
    return JointDilation(env, va, vb, pa, pb)


def c_vw_constant(t_a_down: QuantumChannel, t_b_down: QuantumChannel,
                  decomp: OrthogonalDecomposition) -> float:
    """``max_k ||P_k (V_A^dagger (P_A P_B (x) 1) V_B - 1) P_k||`` for the canonical joint dilation.

    This is an admissible value in the infimum defining the constant, hence
    an upper bound on it.  Returns 0 when the complement of ``V`` is trivial.
    """
    jd = joint_dilation(t_a_down, t_b_down, decomp.v_sub)
    d = t_a_down.dim_in
    bracket = dagger(jd.v_a) @ np.kron(jd.p_a @ jd.p_b, np.eye(d)) @ jd.v_b - np.eye(d)
    worst = 0.0
    for part in decomp.parts:
        if part.dim:
            q = part.basis
            worst = max(worst, linops.op_norm(dagger(q) @ bracket @ q))
    return float(worst)


# --- single-use inequalities -----------------------------------------------------------


def fidelity_gap_check(t_a_down: QuantumChannel, t_b_down: QuantumChannel, v_sub: Subspace,
                       rho: np.ndarray, sigma: np.ndarray) -> NoGoAudit:
    """``sqrt F(rho, sigma) - 2 sqrt F(P rho P, P sigma P) <= sqrt F(T_A(rho), T_B(sigma))``, ``P`` onto ``V``'s complement."""
    joint_dilation(t_a_down, t_b_down, v_sub)
    linops.psd_eigh(rho)
    linops.psd_eigh(sigma)
    p = v_sub.complement().projector
    lhs = linops.fidelity_root(rho, sigma) - 2 * linops.fidelity_root(p @ rho @ p, p @ sigma @ p)
    rhs = linops.fidelity_root(t_a_down.apply(rho), t_b_down.apply(sigma))
    return NoGoAudit.of(lhs, rhs, 2.0)


def _overlap_sum(decomp: OrthogonalDecomposition, rho: np.ndarray, sigma: np.ndarray) -> float:
    total = 0.0
    for p in decomp.projectors:
        a = max(np.real(np.trace(p @ rho)), 0.0)
        b = max(np.real(np.trace(p @ sigma)), 0.0)
        total += math.sqrt(a * b)
    return total


def information_tradeoff_check(t_a_down: QuantumChannel, t_b_down: QuantumChannel,
                               decomp: OrthogonalDecomposition, rho: np.ndarray,
                               sigma: np.ndarray) -> NoGoAudit:
    """``sqrt F(rho, sigma) - sqrt F(T_A(rho), T_B(sigma)) <= C sum_k sqrt(tr(P_k rho) tr(P_k sigma))``."""
    c = c_vw_constant(t_a_down, t_b_down, decomp)
    linops.psd_eigh(rho)
    linops.psd_eigh(sigma)
    lhs = linops.fidelity_root(rho, sigma) - linops.fidelity_root(t_a_down.apply(rho), t_b_down.apply(sigma))
    return NoGoAudit.of(lhs, c * _overlap_sum(decomp, rho, sigma), c)


def error_fidelity_check(d: DiscriminationStrategy, povm: TwoValuedPOVM,
                         t_a: QuantumChannel, t_b: QuantumChannel) -> NoGoAudit:
    """Fuchs-van de Graaf step: ``(1 - 2 P_e)^2 / 2 <= 1 - sqrt F(rho_N^A, rho_N^B)``."""
    pe = error_probability_pair(d, povm, t_a, t_b)
    rhs = 1.0 - linops.fidelity_root(final_state(d, t_a), final_state(d, t_b))
    return NoGoAudit.of((1 - 2 * pe) ** 2 / 2, rhs, 1.0)


# --- strategy-level bounds -------------------------------------------------------------


def technical_nogo_check(d: DiscriminationStrategy, t_a: QuantumChannel, t_b: QuantumChannel,
                         t_a_down: QuantumChannel, t_b_down: QuantumChannel,
                         decomp: OrthogonalDecomposition) -> NoGoAudit:
    """``1 - sqrt F(rho_N^A, rho_N^B) <= C sum_n sum_k sqrt(tr(P_k tr_Z rho_n^{A,down}) tr(P_k tr_Z rho_n^{B,down}))``."""
    c = c_vw_constant(t_a_down, t_b_down, decomp)
    lhs = 1.0 - linops.fidelity_root(final_state(d, t_a), final_state(d, t_b))
    states_a = run_intermediate_states(d, t_a_down)[:-1]
    states_b = run_intermediate_states(d, t_b_down)[:-1]
    total = sum(_overlap_sum(decomp, _system_marginal(d, ra), _system_marginal(d, rb))
                for ra, rb in zip(states_a, states_b))
    return NoGoAudit.of(lhs, c * total, c)


def nogo_constant(cw_a: ChannelWithVacuum, cw_b: ChannelWithVacuum) -> tuple[float, float]:
    """``(C_VW, 2 C_VW / sqrt(C_A C_B))`` for an infeasible pair with ``W = {V^perp}``."""
    sub = maximal_vacuum_subspace(cw_a)
    decomp = OrthogonalDecomposition.single(sub)
    c = c_vw_constant(build_t_down(cw_a), build_t_down(cw_b), decomp)
    if c == 0.0 or not decomp.parts:
        return c, 0.0
    ca, cb = interaction_lower_constant(cw_a), interaction_lower_constant(cw_b)
    return c, 2 * c / math.sqrt(ca * cb)


def nogo_inequality_audit(cw_a: ChannelWithVacuum, cw_b: ChannelWithVacuum,
                          d: DiscriminationStrategy, povm: TwoValuedPOVM) -> NoGoAudit:
    """Audit ``(1 - 2 P_e)^2 <= C sqrt(P_I^A P_I^B)`` on one strategy.

    Raises:
        ValueError: if the pair admits interaction-free discrimination.
    """
    if decide_discriminability(cw_a, cw_b).feasible:
        raise ValueError("feasible pair: the no-go inequality does not apply")
    _, big_c = nogo_constant(cw_a, cw_b)
    pe = error_probability_pair(d, povm, cw_a.channel, cw_b.channel)
    pia = interaction_probability(d, cw_a)
    pib = interaction_probability(d, cw_b)
    rhs = big_c * math.sqrt(max(pia, 0.0) * max(pib, 0.0))
    return NoGoAudit.of((1 - 2 * pe) ** 2, rhs, big_c)


def rate_limit_decomposition(cw_a: ChannelWithVacuum, cw_b: ChannelWithVacuum) -> OrthogonalDecomposition:
    """``V = V_A cap V_B`` with parts ``V^perp cap V_A``, ``V^perp cap V_B`` and the remainder.

    Raises:
        ValueError: if the channels differ on ``V`` or the first two parts
            are not orthogonal.
    """
    va = maximal_vacuum_subspace(cw_a)
    vb = maximal_vacuum_subspace(cw_b)
    v = va.intersect(vb)
    if not restrictions_equal(cw_a.channel, cw_b.channel, v):
        raise ValueError("hypothesis violation: channels differ on the common vacuum subspace")
    perp = v.complement()
    w1 = perp.intersect(va)
    w2 = perp.intersect(vb)
    if np.abs(w1.projector @ w2.projector).max() >= ORTHO_TOL:
        raise ValueError("hypothesis violation: the exclusive vacuum directions are not orthogonal")
    covered = Subspace.span(np.hstack([w1.basis, w2.basis]), perp.ambient_dim)
    w3 = perp.intersect(covered.complement())
    return OrthogonalDecomposition(v, tuple(p for p in (w1, w2, w3) if p.dim))


def rate_limit_audit(cw_a: ChannelWithVacuum, cw_b: ChannelWithVacuum,
                     d: DiscriminationStrategy, povm: TwoValuedPOVM) -> NoGoAudit:
    """Audit ``C (1 - 2 P_e)^4 / N <= max(P_I^A, P_I^B)``.

    ``C = min(C_A, C_B) / (24 C_VW^2)``.  When ``C_VW = 0`` the constant is
    infinite and the left side is taken as 0 exactly when ``P_e = 1/2``.
    """
    decomp = rate_limit_decomposition(cw_a, cw_b)
    c_vw = c_vw_constant(build_t_down(cw_a), build_t_down(cw_b), decomp)
    pe = error_probability_pair(d, povm, cw_a.channel, cw_b.channel)
    gap4 = (1 - 2 * pe) ** 4
    n = max(d.steps, 1)
    rhs = max(interaction_probability(d, cw_a), interaction_probability(d, cw_b))
    if c_vw <= 1e-12:
        return NoGoAudit.of(0.0 if gap4 <= 1e-12 else math.inf, rhs, math.inf)
    c = min(interaction_lower_constant(cw_a), interaction_lower_constant(cw_b)) / (24 * c_vw ** 2)
    return NoGoAudit.of(c * gap4 / n, rhs, c)


def audit_pair(cw_a: ChannelWithVacuum, cw_b: ChannelWithVacuum, strategies: Sequence,
               povms: Sequence) -> list[tuple[NoGoAudit, NoGoAudit]]:
    """Both audits for each ``(strategy, povm)``."""
    return [(nogo_inequality_audit(cw_a, cw_b, s, p), rate_limit_audit(cw_a, cw_b, s, p))
            for s, p in zip(strategies, povms)]

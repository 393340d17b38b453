"""Quantum channels in Kraus form, channels with vacuum and the decision procedure.

Conventions
-----------
Operators are vectorized row by row (``vec(X) = X.reshape(-1)``), so the
conjugation ``X -> A X B`` has superoperator ``kron(A, B.T)`` and a channel
with Kraus operators ``K_i`` has superoperator ``sum_i kron(K_i, conj(K_i))``.
The Choi matrix is ``J(T) = sum_ij T(|i><j|) (x) |i><j|``, i.e. the output
factor comes first.  With this ordering ``J = sum_i k_i k_i^dagger`` where
``k_i = K_i.reshape(-1)``.

Stinespring isometries put the environment first: ``V = sum_i |i>_E (x) K_i``,
which is ``np.vstack(kraus)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linops
from .linops import Subspace, dagger

TP_TOL = 1e-9


def _kraus_tuple(kraus) -> tuple[np.ndarray, ...]:
    if isinstance(kraus, np.ndarray) and kraus.ndim == 2:
        kraus = [kraus]
    ops = tuple(np.array(k, dtype=complex) for k in kraus)
    if not ops:
        raise ValueError("kraus: at least one Kraus operator is required")
    shape = ops[0].shape
    for k in ops:
        if k.ndim != 2 or k.shape != shape:
            raise ValueError("kraus: all Kraus operators must be matrices of equal shape")
        if not np.all(np.isfinite(k)):
            raise ValueError("kraus: entries must be finite")
    return ops


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Completely positive map given by Kraus operators.

    Args:
        kraus: Kraus operators, each of shape ``(dim_out, dim_in)``.
        operation: if true only ``sum K^dagger K <= I`` is required
            (trace non-increasing); otherwise trace preservation is enforced.

    The Choi matrix and the superoperator are computed once at construction.
    """

    kraus: tuple
    operation: bool = False
    choi: np.ndarray = field(init=False, repr=False)
    superop: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ops = _kraus_tuple(self.kraus)
        object.__setattr__(self, "kraus", ops)
        d_out, d_in = ops[0].shape
        gram = sum(dagger(k) @ k for k in ops)
        if self.operation:
            w = np.linalg.eigvalsh(linops.hermitian_part(gram))
            if w.max() > 1 + TP_TOL:
                raise ValueError("trace non-increasing: sum K^dagger K exceeds the identity")
        elif not np.allclose(gram, np.eye(d_in), atol=TP_TOL, rtol=0):
            err = np.abs(gram - np.eye(d_in)).max()
            raise ValueError(f"trace preservation: sum K^dagger K differs from I by {err:.2e}")
        vecs = np.array([k.reshape(-1) for k in ops])
        object.__setattr__(self, "choi", vecs.T @ vecs.conj())
        object.__setattr__(self, "superop", sum(np.kron(k, k.conj()) for k in ops))

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def dim(self) -> int:
        if self.dim_in != self.dim_out:
            raise ValueError("channel is rectangular, use dim_in / dim_out")
        return self.dim_in

    @property
    def is_trace_preserving(self) -> bool:
        gram = sum(dagger(k) @ k for k in self.kraus)
        return bool(np.allclose(gram, np.eye(self.dim_in), atol=TP_TOL, rtol=0))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.apply(rho)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"input shape {rho.shape} does not match channel input dim {self.dim_in}")
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def adjoint_apply(self, x: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action ``sum K^dagger X K``."""
        x = np.asarray(x, dtype=complex)
        return sum(dagger(k) @ x @ k for k in self.kraus)

    def compose(self, first: "QuantumChannel") -> "QuantumChannel":
        """Return ``self o first`` (``first`` is applied first)."""
        if first.dim_out != self.dim_in:
            raise ValueError("composition dimension mismatch")
        ops = [a @ b for a in self.kraus for b in first.kraus]
        return QuantumChannel(_prune(ops), operation=self.operation or first.operation)

    def tensor_identity(self, anc_dim: int) -> "QuantumChannel":
        """``T (x) id`` with the identity acting on a right-hand ancilla."""
        if anc_dim == 1:
            return self
        eye = np.eye(anc_dim)
        return QuantumChannel([np.kron(k, eye) for k in self.kraus], operation=self.operation)

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        ops = [np.kron(a, b) for a in self.kraus for b in other.kraus]
        return QuantumChannel(_prune(ops), operation=self.operation or other.operation)

    def minimal(self) -> "QuantumChannel":
        """Equivalent channel with the minimal number of Kraus operators."""
        return channel_from_choi(self.choi, self.dim_in, operation=self.operation)


def _prune(ops, tol: float = 1e-14):
    kept = [k for k in ops if np.abs(k).max() > tol]
    return kept or [ops[0]]


def kraus_to_choi(t: QuantumChannel) -> np.ndarray:
    return t.choi


def superoperator_matrix(t: QuantumChannel) -> np.ndarray:
    """Matrix of ``t`` acting on row-vectorized operators."""
    return t.superop


def choi_to_kraus(j: np.ndarray, dim_in: int, tol: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators from the scaled eigenvectors of a Choi matrix."""
    j = linops.as_matrix(j)
    if j.shape[0] % dim_in:
        raise ValueError("Choi matrix size is not a multiple of the input dimension")
    dim_out = j.shape[0] // dim_in
    w, u = np.linalg.eigh(linops.hermitian_part(j))
    if w.min() < -1e-9 * max(1.0, abs(w).max()):
        raise ValueError(f"complete positivity: Choi matrix has eigenvalue {w.min():.3e}")
    keep = w > tol * max(1.0, w.max())
    ops = [np.sqrt(lam) * u[:, i].reshape(dim_out, dim_in) for i, lam in zip(np.flatnonzero(keep), w[keep])]
    if not ops:
        ops = [np.zeros((dim_out, dim_in), dtype=complex)]
    return ops


def channel_from_choi(j: np.ndarray, dim_in: int, operation: bool = False) -> QuantumChannel:
    return QuantumChannel(choi_to_kraus(j, dim_in), operation=operation)


def superop_to_choi(s: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    # S[(a,b),(i,j)] = T(|i><j|)_{ab};  J[(a,i),(b,j)] = T(|i><j|)_{ab}
    t = np.asarray(s).reshape(dim_out, dim_out, dim_in, dim_in)
    return t.transpose(0, 2, 1, 3).reshape(dim_out * dim_in, dim_out * dim_in)


def choi_to_superop(j: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    t = np.asarray(j).reshape(dim_out, dim_in, dim_out, dim_in)
    return t.transpose(0, 2, 1, 3).reshape(dim_out * dim_out, dim_in * dim_in)


def channel_from_superop(s: np.ndarray, dim_in: int, dim_out: int | None = None,
                         operation: bool = False) -> QuantumChannel:
    dim_out = dim_in if dim_out is None else dim_out
    return channel_from_choi(superop_to_choi(s, dim_in, dim_out), dim_in, operation=operation)


# --- standard channels -------------------------------------------------------


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel([np.eye(d, dtype=complex)])


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    u = linops.as_matrix(u)
    if not np.allclose(dagger(u) @ u, np.eye(u.shape[1]), atol=1e-10, rtol=0):
        raise ValueError("unitary channel: matrix is not an isometry")
    return QuantumChannel([u])


def _basis_with_vacuum(vacuum, d: int) -> np.ndarray:
    v = linops.normalize(vacuum)
    if v.size != d:
        raise ValueError("vacuum dimension does not match channel dimension")
    return np.hstack([v[:, None], linops.orthonormal_completion(v[:, None])])


def bomb_channel(vacuum=None, d: int = 2) -> QuantumChannel:
    """Replace every input by the vacuum: ``rho -> tr(rho) |v><v|``."""
    v = np.eye(d)[0] if vacuum is None else linops.normalize(vacuum)
    basis = _basis_with_vacuum(v, v.size)
    return QuantumChannel([np.outer(v, basis[:, i].conj()) for i in range(v.size)])


def depolarizing_to_vacuum(p: float, vacuum) -> QuantumChannel:
    """``rho -> (1 - p) rho + p tr(rho) |v><v|``."""
    if not 0 <= p <= 1:
        raise ValueError("mixing weight must lie in [0, 1]")
    v = linops.normalize(vacuum)
    d = v.size
    ops = [np.sqrt(1 - p) * np.eye(d, dtype=complex)]
    ops += [np.sqrt(p) * np.outer(v, np.eye(d)[i]) for i in range(d)]
    return QuantumChannel(_prune(ops))


def amplitude_damping_to_vacuum(gamma: float, vacuum=None, d: int = 2) -> QuantumChannel:
    """Decay of every direction orthogonal to ``v`` into ``v`` with probability ``gamma``."""
    v = np.eye(d)[0] if vacuum is None else linops.normalize(vacuum)
    basis = _basis_with_vacuum(v, v.size)
    pv = np.outer(v, v.conj())
    k0 = pv + np.sqrt(1 - gamma) * (np.eye(v.size) - pv)
    ops = [k0] + [np.sqrt(gamma) * np.outer(v, basis[:, i].conj()) for i in range(1, v.size)]
    return QuantumChannel(_prune(ops))


def pinching_channel(basis: np.ndarray | None = None, d: int = 2) -> QuantumChannel:
    """Complete dephasing in the given orthonormal basis (columns)."""
    b = np.eye(d, dtype=complex) if basis is None else linops.as_matrix(basis)
    return QuantumChannel([np.outer(b[:, i], b[:, i].conj()) for i in range(b.shape[1])])


def fully_depolarizing(d: int) -> QuantumChannel:
    ops = [np.outer(np.eye(d)[a], np.eye(d)[b]) / np.sqrt(d) for a in range(d) for b in range(d)]
    return QuantumChannel(ops)


# --- channels with vacuum -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelWithVacuum:
    """A channel together with a unit vector whose pure state stays pure."""

    channel: QuantumChannel
    vacuum: np.ndarray

    def __post_init__(self):
        v = linops.as_ket(self.vacuum, "vacuum")
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("vacuum: vector must have unit norm")
        if v.size != self.channel.dim_in or self.channel.dim_in != self.channel.dim_out:
            raise ValueError("vacuum: dimension does not match the channel")
        out = self.channel.apply(np.outer(v, v.conj()))
        purity = float(np.real(np.trace(out @ out)))
        if abs(purity - 1) > 1e-9:
            raise ValueError(f"vacuum purity: T(|v><v|) has purity {purity:.12f}, expected 1")
        object.__setattr__(self, "vacuum", v)

    @property
    def dim(self) -> int:
        return self.channel.dim


@dataclass(frozen=True)
class StinespringDilation:
    env_dim: int
    isometry: np.ndarray


@dataclass(frozen=True)
class TransmissionFunctional:
    """Positive functional ``rho -> tr(theta rho)``."""

    theta: np.ndarray

    def __post_init__(self):
        th = linops.as_matrix(self.theta, "theta")
        if not linops.is_hermitian(th, 1e-9):
            raise ValueError("transmission functional: operator is not Hermitian")
        if np.linalg.eigvalsh(linops.hermitian_part(th)).min() < -1e-9:
            raise ValueError("transmission functional: operator is not positive semidefinite")
        object.__setattr__(self, "theta", th)

    def __call__(self, rho: np.ndarray) -> float:
        return float(np.real(np.trace(self.theta @ rho)))

    @property
    def norm(self) -> float:
        return linops.op_norm(self.theta)


def stinespring_of(t: QuantumChannel) -> StinespringDilation:
    return StinespringDilation(len(t.kraus), np.vstack(t.kraus))


def environment_state(dil: StinespringDilation, rho: np.ndarray) -> np.ndarray:
    """``tr_H(V rho V^dagger)`` on the environment."""
    d_out = dil.isometry.shape[0] // dil.env_dim
    full = dil.isometry @ rho @ dagger(dil.isometry)
    return linops.ptrace_second(full, dil.env_dim, d_out)


def vacuum_environment_projector(cw: ChannelWithVacuum, dil: StinespringDilation | None = None) -> np.ndarray:
    """Projector onto the support of the environment state produced by the vacuum."""
    dil = stinespring_of(cw.channel) if dil is None else dil
    v = cw.vacuum
    env = environment_state(dil, np.outer(v, v.conj()))
    p = linops.support_projection(env)
    rank = int(round(np.real(np.trace(p))))
    if rank != 1:
        raise ValueError(f"vacuum purity: environment support has rank {rank}, expected 1")
    return p


def maximal_vacuum_subspace(cw: ChannelWithVacuum) -> Subspace:
    """Kernel of ``((1 - P_v) (x) 1) V``: the largest vacuum subspace."""
    dil = stinespring_of(cw.channel)
    p = vacuum_environment_projector(cw, dil)
    d = cw.dim
    q = np.kron(np.eye(dil.env_dim) - p, np.eye(d))
    return Subspace(linops.null_space(q @ dil.isometry))


def isometric_restriction(t: QuantumChannel, v_sub: Subspace, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Isometry implementing ``t`` on operators supported in ``v_sub``.

    Returns:
        A ``dim_out x k`` isometry ``W`` with ``t(B X B^dagger) = W X W^dagger``
        for every ``k x k`` matrix ``X``, where ``B`` is ``v_sub.basis``;
        ``None`` when ``t`` is not isometric on the subspace.
    """
    if v_sub.dim == 0:
        raise ValueError("subspace must be nonzero")
    ops = [k @ v_sub.basis for k in t.kraus]
    vecs = np.array([k.reshape(-1) for k in ops])
    j = vecs.T @ vecs.conj()
    w, u = np.linalg.eigh(linops.hermitian_part(j))
    if np.sum(w > tol * max(1.0, w.max())) != 1:
        return None
    iso = np.sqrt(w[-1]) * u[:, -1].reshape(t.dim_out, v_sub.dim)
    if not np.allclose(dagger(iso) @ iso, np.eye(v_sub.dim), atol=1e-8, rtol=0):
        return None
    # fix the global phase so that the largest entry is real positive
    idx = np.unravel_index(np.argmax(np.abs(iso)), iso.shape)
    return iso * (abs(iso[idx]) / iso[idx])


def restrictions_equal(t_a: QuantumChannel, t_b: QuantumChannel, v_sub: Subspace, tol: float = 1e-8) -> bool:
    """True iff ``t_a`` and ``t_b`` agree on all matrix units of ``v_sub``."""
    return restriction_distance(t_a, t_b, v_sub) <= tol


def restriction_distance(t_a: QuantumChannel, t_b: QuantumChannel, v_sub: Subspace) -> float:
    if t_a.dim_in != t_b.dim_in or t_a.dim_out != t_b.dim_out:
        raise ValueError("channels have different dimensions")
    b = v_sub.basis
    worst = 0.0
    for i in range(v_sub.dim):
        for j in range(v_sub.dim):
            unit = np.outer(b[:, i], b[:, j].conj())
            worst = max(worst, linops.trace_norm(t_a.apply(unit) - t_b.apply(unit)))
    return worst


def build_t_down(cw: ChannelWithVacuum) -> QuantumChannel:
    """The undetected branch ``tr_E((P_v (x) 1) V . V^dagger)`` as an operation."""
    dil = stinespring_of(cw.channel)
    p = vacuum_environment_projector(cw, dil)
    rng = linops.column_space(p)
    ops = []
    for c in range(rng.shape[1]):
        f = rng[:, c]
        ops.append(sum(np.conj(f[i]) * k for i, k in enumerate(cw.channel.kraus)))
    return QuantumChannel(ops, operation=True)


def interaction_functional(cw: ChannelWithVacuum) -> TransmissionFunctional:
    """``Theta = V^dagger ((1 - P_v) (x) 1) V``."""
    dil = stinespring_of(cw.channel)
    p = vacuum_environment_projector(cw, dil)
    q = np.kron(np.eye(dil.env_dim) - p, np.eye(cw.dim))
    theta = dagger(dil.isometry) @ q @ dil.isometry
    return TransmissionFunctional(linops.hermitian_part(theta))


def interaction_lower_constant(cw: ChannelWithVacuum) -> float:
    """Smallest eigenvalue of the interaction operator on the complement of the vacuum subspace.

    Returns ``math.inf`` when the maximal vacuum subspace is the whole space.
    """
    comp = maximal_vacuum_subspace(cw).complement()
    if comp.dim == 0:
        return math.inf
    theta = interaction_functional(cw).theta
    block = dagger(comp.basis) @ theta @ comp.basis
    return float(np.linalg.eigvalsh(linops.hermitian_part(block)).min())


@dataclass(frozen=True)
class Decision:
    feasible: bool
    witness: Optional[Subspace]
    which_isometric: Optional[str]


def decide_discriminability(cw_a: ChannelWithVacuum, cw_b: ChannelWithVacuum, tol: float = 1e-8) -> Decision:
    """Decide whether two channels with a common vacuum admit interaction-free discrimination.

    One of the channels must act isometrically on a vacuum subspace on which
    the two channels differ; it suffices to test the two maximal vacuum
    subspaces.
    """
    if cw_a.dim != cw_b.dim:
        raise ValueError("dimension mismatch: channels act on different spaces")
    if abs(abs(np.vdot(cw_a.vacuum, cw_b.vacuum)) - 1) > 1e-9:
        raise ValueError("vacuum mismatch: channels use different vacuum vectors")
    for label, cw in (("A", cw_a), ("B", cw_b)):
        sub = maximal_vacuum_subspace(cw)
        if not restrictions_equal(cw_a.channel, cw_b.channel, sub, tol):
            return Decision(True, sub, label)
    return Decision(False, None, None)


def half_pi_y(vacuum) -> np.ndarray:
    """``(pi/2) sigma_y`` in the plane spanned by ``v`` and its first completion vector."""
    v = linops.normalize(vacuum)
    basis = _basis_with_vacuum(v, v.size)
    p = basis[:, 1]
    return (np.pi / 2) * (-1j * np.outer(v, p.conj()) + 1j * np.outer(p, v.conj()))


def completion_vector(vacuum) -> np.ndarray:
    """First orthonormal completion vector of ``v`` (the ``p`` direction)."""
    v = linops.normalize(vacuum)
    return _basis_with_vacuum(v, v.size)[:, 1]

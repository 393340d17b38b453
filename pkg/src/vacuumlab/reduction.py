"""Twirling over ``G = {1 (+) U}`` and the reduction to a qubit channel.

The reduction maps an arbitrary channel ``T'`` to a qubit channel ``R(T')``
that is the identity when ``T'`` agrees with a reference channel on a
subspace ``V`` and otherwise has ``|q0><q0|`` as its only fixed state.  All
work on ``V`` is done in coordinates of an orthonormal basis of ``V`` whose
first vector is the vacuum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linops
from .channels import (
    QuantumChannel,
    TransmissionFunctional,
    channel_from_superop,
    choi_to_superop,
    identity_channel,
    isometric_restriction,
    pinching_channel,
    superop_to_choi,
)
from .linops import Subspace, dagger

GRAM_COND_LIMIT = 1e10


@dataclass(frozen=True)
class TwirlGroupSpec:
    """The group of unitaries fixing ``vacuum`` on a ``dim``-dimensional space."""

    dim: int
    vacuum: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("twirl group needs dimension at least 2")
        v = linops.as_ket(self.vacuum, "vacuum")
        if v.size != self.dim or abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("vacuum: must be a unit vector of the given dimension")
        object.__setattr__(self, "vacuum", v)

    @property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        pv = np.outer(self.vacuum, self.vacuum.conj())
        return pv, np.eye(self.dim) - pv

    def element(self, u: np.ndarray) -> np.ndarray:
        """Group element acting as ``u`` on the complement of the vacuum (in a fixed basis)."""
        comp = linops.orthonormal_completion(self.vacuum[:, None])
        pv, _ = self.projectors
        return pv + comp @ u @ dagger(comp)

    def haar_element(self, rng) -> np.ndarray:
        from .samplers import haar_unitary

        return self.element(haar_unitary(self.dim - 1, rng))


def _functional_superop(out: np.ndarray, lin: np.ndarray) -> np.ndarray:
    # superoperator of rho -> tr(lin rho) out
    return np.outer(out.reshape(-1), lin.T.reshape(-1))


def twirl_basis(spec: TwirlGroupSpec) -> list[np.ndarray]:
    """Superoperators spanning the commutant of ``{g (x) conj(g)}`` (six when ``d = 2``)."""
    d = spec.dim
    pv, pp = spec.projectors
    ops = [
        _functional_superop(pv, pv),
        _functional_superop(pv, pp),
        _functional_superop(pp / (d - 1), pv),
        _functional_superop(pp / (d - 1), pp),
        np.kron(pp, pv.T),
        np.kron(pv, pp.T),
    ]
    if d > 2:
        ops.append(np.kron(pp, pp.T) - _functional_superop(pp / (d - 1), pp))
    return ops


def twirl_superop(s: np.ndarray, spec: TwirlGroupSpec) -> np.ndarray:
    """Orthogonal projection of a superoperator onto the commutant.

    Coefficients solve the Gram system of Hilbert-Schmidt inner products of
    the Choi matrices of the spanning operators.
    """
    d = spec.dim
    basis = [superop_to_choi(b, d, d) for b in twirl_basis(spec)]
    j = superop_to_choi(s, d, d)
    gram = np.array([[linops.hs_inner(a, b) for b in basis] for a in basis])
    if np.linalg.cond(gram) > GRAM_COND_LIMIT:
        raise ValueError("twirl: Gram system is singular")
    rhs = np.array([linops.hs_inner(a, j) for a in basis])
    coeffs = np.linalg.solve(gram, rhs)
    out = sum(c * b for c, b in zip(coeffs, basis))
    return choi_to_superop(out, d, d)


def twirl_channel(t: QuantumChannel, spec: TwirlGroupSpec) -> QuantumChannel:
    """Exact group average of ``U_g o t o U_g^-1`` over the Haar measure of ``G``."""
    if t.dim_in != spec.dim or t.dim_out != spec.dim:
        raise ValueError("twirl: channel dimension does not match the group")
    return channel_from_superop(twirl_superop(t.superop, spec), spec.dim, operation=t.operation)


def twirl_functional(tf: TransmissionFunctional, spec: TwirlGroupSpec) -> TransmissionFunctional:
    """``Theta' = t(P_perp/(d-1)) P_perp + t(|v><v|) |v><v|``."""
    pv, pp = spec.projectors
    theta = tf.theta
    a = np.real(np.trace(theta @ pp)) / (spec.dim - 1)
    b = np.real(np.trace(theta @ pv))
    return TransmissionFunctional(a * pp + b * pv)


# --- superchannels --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReductionCore:
    """Pieces of the reduction superchannel around the twirled slot.

    ``R(T) = readout o (S(decode o T o embed) (x) id_A) o encode`` where ``S`` is
    the twirl over ``group`` (absent when ``dim V = 1``).  All maps on ``V`` use
    coordinates in which the vacuum is the first basis vector.
    """

    encode: QuantumChannel  # qubit -> V (x) A
    embed: QuantumChannel  # V -> H
    decode: QuantumChannel  # H -> V, or H -> H when dim V = 1
    readout: QuantumChannel  # decode output (x) A -> qubit
    group: Optional[TwirlGroupSpec]
    basis: np.ndarray  # columns: basis of V in H, vacuum first
    unitary: np.ndarray  # unitary extension of the restriction isometry


@dataclass(frozen=True, eq=False)
class Superchannel:
    """``T -> post o (T (x) id_anc) o pre``, optionally with a twirled core.

    When ``core`` is set, ``pre`` and ``post`` are the untwirled composition
    (the identity group element) and application folds the exact twirl in.
    """

    in_dim: int
    sys_dim: int
    anc_dim: int
    pre: QuantumChannel
    post: QuantumChannel
    core: Optional[ReductionCore] = None

    def __post_init__(self):
        n = self.sys_dim * self.anc_dim
        if self.pre.dim_in != self.in_dim or self.pre.dim_out != n:
            raise ValueError("pre-processing channel has the wrong dimensions")
        if self.post.dim_in != n or self.post.dim_out != self.in_dim:
            raise ValueError("post-processing channel has the wrong dimensions")


def apply_superchannel(r: Superchannel, t: QuantumChannel, tol: float = 1e-9) -> QuantumChannel:
    """Transform ``t`` by the superchannel ``r``.

    Non trace-preserving inputs are rejected on the reduction path.
    """
    if t.dim_in != r.sys_dim or t.dim_out != r.sys_dim:
        raise ValueError("channel dimension does not match the superchannel slot")
    if r.core is None:
        out = r.post.compose(t.tensor_identity(r.anc_dim)).compose(r.pre)
    else:
        if not t.is_trace_preserving:
            raise ValueError("trace preservation: the reduction accepts channels only")
        c = r.core
        inner = c.decode.compose(t).compose(c.embed)
        if c.group is not None:
            inner = twirl_channel(inner, c.group)
        out = c.readout.compose(inner.tensor_identity(r.anc_dim)).compose(c.encode)
    out = out.minimal()
    if not out.is_trace_preserving:
        raise ValueError("trace preservation: transformed channel is not trace preserving")
    w = np.linalg.eigvalsh(linops.hermitian_part(out.choi))
    if w.min() < -tol:
        raise ValueError("complete positivity: transformed channel has a non-PSD Choi matrix")
    return out


def _compression_with_fallback(rows: np.ndarray, v_index: int = 0) -> QuantumChannel:
    """``X -> R X R^dagger + tr((1 - R^dagger R) X) |e_v><e_v|`` for a co-isometry ``R``."""
    k, n = rows.shape
    comp = linops.orthonormal_completion(dagger(rows))
    ops = [rows]
    e = np.zeros((k, 1), dtype=complex)
    e[v_index, 0] = 1.0
    ops += [e @ dagger(comp[:, [j]]) for j in range(comp.shape[1])]
    return QuantumChannel(ops)


def build_reduction(t_ref: QuantumChannel, v_sub: Subspace, vacuum, rng=None) -> Superchannel:
    """Reduction superchannel for the reference channel ``t_ref`` on ``v_sub``.

    Args:
        t_ref: channel acting isometrically on ``v_sub``.
        v_sub: the subspace ``V``; must contain ``vacuum``.
        vacuum: unit vector in ``V``.
        rng: when given, the unitary extension of the restriction isometry is
            completed with a random unitary on the complement instead of the
            deterministic completion.

    Raises:
        ValueError: if ``t_ref`` is not isometric on ``v_sub`` or the vacuum
            is not in ``v_sub``.
    """
    v = linops.normalize(vacuum)
    if not v_sub.contains(v):
        raise ValueError("vacuum is not contained in the subspace")
    basis = linops.gram_schmidt_with_first(v, v_sub.basis)
    sub = Subspace(basis)
    iso = isometric_restriction(t_ref, sub)
    if iso is None:
        raise ValueError("isometric restriction: reference channel is not isometric on the subspace")
    d, k = basis.shape
    anc = 2
    comp_in = linops.orthonormal_completion(basis)
    comp_out = linops.orthonormal_completion(iso)
    if rng is not None and d > k:
        from .samplers import haar_unitary

        comp_out = comp_out @ haar_unitary(d - k, rng)
    unitary = np.hstack([iso, comp_out]) @ dagger(np.hstack([basis, comp_in]))

    a0, a1 = np.eye(anc)
    e0 = np.eye(k)[0]
    phi = (e0 + np.eye(k)[1]) / np.sqrt(2) if k > 1 else e0
    w = np.stack([np.kron(e0, a0), np.kron(phi, a1)], axis=1)
    encode = QuantumChannel([w])
    embed = QuantumChannel([basis])
    undo = QuantumChannel([dagger(unitary)])
    if k > 1:
        readout = _compression_with_fallback(dagger(w), 0)
        decode = _compression_with_fallback(dagger(basis), 0).compose(undo)
        group = TwirlGroupSpec(k, e0)
    else:
        # no compression onto V: the readout sees how far T'(|v><v|) leaves v
        readout = _compression_with_fallback(dagger(np.kron(basis, np.eye(anc)) @ w), 0)
        decode = undo
        group = None

    pre = embed.tensor_identity(anc).compose(encode)
    post = readout.compose(decode.tensor_identity(anc))
    core = ReductionCore(encode, embed, decode, readout, group, basis, unitary)
    return Superchannel(2, d, anc, pre, post, core)


def transformed_transmission(r: Superchannel, tf: TransmissionFunctional) -> TransmissionFunctional:
    """Functional seen by the transformed channel: ``t o tr_A o pre`` (twirled on the reduction path)."""
    if tf.theta.shape != (r.sys_dim, r.sys_dim):
        raise ValueError("functional dimension does not match the superchannel slot")
    if r.core is None:
        theta = r.pre.adjoint_apply(np.kron(tf.theta, np.eye(r.anc_dim)))
        return TransmissionFunctional(linops.hermitian_part(theta))
    c = r.core
    local = TransmissionFunctional(linops.hermitian_part(c.embed.adjoint_apply(tf.theta)))
    if c.group is None:
        # the slot only ever receives the vacuum
        local_theta = local.theta
    else:
        local_theta = twirl_functional(local, c.group).theta
    theta = c.encode.adjoint_apply(np.kron(local_theta, np.eye(r.anc_dim)))
    return TransmissionFunctional(linops.hermitian_part(theta))


def fixed_state_dimension(t: QuantumChannel, tol: float = 1e-7) -> int:
    """Number of eigenvalues of the superoperator within ``tol`` of 1."""
    return int(np.sum(np.abs(np.linalg.eigvals(t.superop) - 1) <= tol))


def unique_fixed_state(t: QuantumChannel, tol: float = 1e-7) -> Optional[np.ndarray]:
    """The fixed state when the eigenvalue 1 is simple, else ``None``."""
    w, vecs = np.linalg.eig(t.superop)
    near = np.flatnonzero(np.abs(w - 1) <= tol)
    if near.size != 1:
        return None
    rho = vecs[:, near[0]].reshape(t.dim_out, t.dim_out)
    rho = rho / np.trace(rho)
    return linops.hermitian_part(rho)


def classical_shortcut_transform(t: QuantumChannel, unitaries, probs) -> QuantumChannel:
    """``T -> sum_i p_i U_i^dagger T(U_i . U_i^dagger) U_i``, the only id-preserving form without ancilla."""
    ops = []
    for u, p in zip(unitaries, probs):
        for k in t.kraus:
            ops.append(np.sqrt(p) * dagger(u) @ k @ u)
    return QuantumChannel(ops)


def verify_no_classical_shortcut(dim: int = 2, samples: int = 200, rng=None) -> bool:
    """Check that no ancilla-free transformation isolates ``|q0><q0|`` for the pinching channel.

    An instrument followed by classically controlled channels that maps the
    identity to itself consists of unitary branches ``U_i``.  For random and
    basis-permuting branch sets this verifies that the identity is
    preserved and that the transformed pinching channel either does not fix
    ``P0`` or also fixes ``P1``.

    Returns:
        True when the obstruction holds on every sampled branch set.
    """
    from .samplers import haar_unitary

    if dim != 2:
        raise ValueError("the certificate is formulated for qubits")
    gen = np.random.default_rng(rng)
    pinch = pinching_channel(d=2)
    ident = identity_channel(2)
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    special = [np.eye(2), x, np.diag([1, 1j]), x @ np.diag([1, np.exp(0.7j)])]
    for trial in range(samples):
        m = int(gen.integers(1, 4))
        if trial % 2:
            us = [special[int(i)] for i in gen.integers(0, len(special), m)]
        else:
            us = [haar_unitary(2, gen) for _ in range(m)]
        probs = gen.dirichlet(np.ones(m))
        if np.abs(classical_shortcut_transform(ident, us, probs).superop - ident.superop).max() > 1e-9:
            return False
        image = classical_shortcut_transform(pinch, us, probs)
        fixes_p0 = np.abs(image.apply(p0) - p0).max() < 1e-9
        fixes_p1 = np.abs(image.apply(p1) - p1).max() < 1e-9
        if fixes_p0 and not fixes_p1:
            return False
        if fixes_p0 and fixed_state_dimension(image) < 2:
            return False
    return True

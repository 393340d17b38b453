"""Random states, channels and strategies used by the audits and tests."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from . import linops
from .channels import ChannelWithVacuum, QuantumChannel
from .linops import dagger


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def ginibre(rows: int, cols: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(d, random_state=rng)


def haar_isometry(n: int, k: int, rng=None) -> np.ndarray:
    return haar_unitary(n, rng)[:, :k]


def random_pure_state(d: int, rng=None) -> np.ndarray:
    return linops.normalize(ginibre(d, 1, rng)[:, 0])


def random_density(d: int, rank: int | None = None, rng=None) -> np.ndarray:
    g = ginibre(d, d if rank is None else rank, rng)
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_psd(d: int, rank: int | None = None, rng=None) -> np.ndarray:
    """Positive semidefinite matrix with trace in ``(0, 1]`` (a subnormalized state)."""
    rng = _rng(rng)
    return rng.uniform(0.1, 1.0) * random_density(d, rank, rng)


def random_channel(d_in: int, d_out: int | None = None, kraus_rank: int | None = None, rng=None) -> QuantumChannel:
    """CPTP map from a Ginibre-distributed Choi matrix, normalized to be trace preserving."""
    rng = _rng(rng)
    d_out = d_in if d_out is None else d_out
    r = d_in * d_out if kraus_rank is None else kraus_rank
    ops = [ginibre(d_out, d_in, rng) for _ in range(r)]
    s = sum(dagger(k) @ k for k in ops)
    w, u = np.linalg.eigh(s)
    s_inv_half = (u / np.sqrt(w)) @ dagger(u)
    return QuantumChannel([k @ s_inv_half for k in ops])


def _frame_with_vacuum(v: np.ndarray, rng) -> np.ndarray:
    """Random orthonormal basis whose first vector is ``v``."""
    d = v.size
    rest = linops.orthonormal_completion(v[:, None])
    return np.hstack([v[:, None], rest @ haar_unitary(d - 1, rng)]) if d > 1 else v[:, None]


def _stinespring_block_channel(fixed_cols: np.ndarray, basis: np.ndarray, env_dim: int, rng) -> QuantumChannel:
    """Channel whose isometry maps ``basis[:, j]`` to ``e_0 (x) fixed_cols[:, j]`` for the first columns.

    The remaining basis vectors go to random orthonormal vectors orthogonal to
    the fixed images.
    """
    d = basis.shape[0]
    k = fixed_cols.shape[1]
    e0 = np.zeros(env_dim)
    e0[0] = 1.0
    images = np.kron(e0[:, None], fixed_cols)
    comp = linops.orthonormal_completion(images)
    free = comp @ haar_isometry(comp.shape[1], d - k, rng)
    iso_in_frame = np.hstack([images, free])
    iso = iso_in_frame @ dagger(basis)
    return QuantumChannel([iso[i * d:(i + 1) * d] for i in range(env_dim)])


def random_channel_with_pure_fixed_point(d: int, vacuum=None, env_dim: int = 2, rng=None,
                                         require_mixing: bool = True, attempts: int = 50,
                                         max_gap_r: float | None = None) -> ChannelWithVacuum:
    """Random channel with ``T(|v><v|) = |v><v|`` whose maximal vacuum subspace is ``span{v}``.

    The Stinespring isometry maps ``v`` to ``e_0 (x) v`` and the orthogonal
    complement of ``v`` to a Haar-random isometry into the rest.  With
    ``require_mixing`` the sample is redrawn until the fixed state is the
    unique one and the spectral gap is nonzero.  ``max_gap_r`` additionally
    caps the modulus of the subleading eigenvalue, which keeps finite-N
    rate fits out of the pre-asymptotic regime.
    """
    from .kwiat import spectral_diagnostics

    rng = _rng(rng)
    v = np.eye(d, dtype=complex)[0] if vacuum is None else linops.normalize(vacuum)
    for _ in range(attempts):
        basis = _frame_with_vacuum(v, rng)
        ch = _stinespring_block_channel(v[:, None], basis, env_dim, rng)
        if not require_mixing and max_gap_r is None:
            return ChannelWithVacuum(ch, v)
        diag = spectral_diagnostics(ch)
        if (diag.mixing or not require_mixing) and (max_gap_r is None or diag.gap_r <= max_gap_r):
            return ChannelWithVacuum(ch, v)
    raise RuntimeError("could not sample a mixing channel with a pure fixed point")


def random_vacuum_pair(d: int, k: int, env_dim: int = 2, vacuum=None, rng=None,
                       fix_vacuum: bool = True) -> tuple[ChannelWithVacuum, ChannelWithVacuum, linops.Subspace]:
    """Two channels that act by the same isometry on a ``k``-dimensional subspace containing ``v``.

    Returns:
        ``(cw_a, cw_b, subspace)``.  Both channels differ generically on the
        orthogonal complement, and for generic samples the common subspace is
        the maximal vacuum subspace of both.
    """
    rng = _rng(rng)
    v = np.eye(d, dtype=complex)[0] if vacuum is None else linops.normalize(vacuum)
    basis = _frame_with_vacuum(v, rng)
    sub = basis[:, :k]
    if fix_vacuum:
        # isometry on the subspace that fixes v
        images = basis @ np.block([[np.ones((1, 1)), np.zeros((1, d - 1))],
                                   [np.zeros((d - 1, 1)), haar_unitary(d - 1, rng)]]) if d > 1 else basis
        images = images[:, :k]
    else:
        images = haar_unitary(d, rng) @ sub
    cw = []
    for _ in range(2):
        ch = _stinespring_block_channel(images, basis, env_dim, rng)
        cw.append(ChannelWithVacuum(ch, v))
    return cw[0], cw[1], linops.Subspace(sub)


def random_operation_pair(d: int, k: int, env_dim: int = 2, rng=None):
    """Undetected-branch operations of a random vacuum pair, and the common subspace."""
    from .channels import build_t_down

    a, b, sub = random_vacuum_pair(d, k, env_dim=env_dim, rng=rng, fix_vacuum=False)
    return build_t_down(a), build_t_down(b), sub


def random_povm(d: int, rng=None):
    """Two-valued POVM with a Haar eigenbasis and uniform eigenvalues."""
    from .strategies import TwoValuedPOVM

    rng = _rng(rng)
    u = haar_unitary(d, rng)
    pa = (u * rng.random(d)) @ dagger(u)
    return TwoValuedPOVM(pa, np.eye(d) - pa)


def random_strategy(sys_dim: int, anc_dim: int, steps: int, rng=None, in_dim: int | None = None,
                    out_dim: int | None = None):
    """Random strategy alternating Haar unitaries and Ginibre channels.

    The initial state is a random pure state on the input space and every
    ``Lambda_n`` is, with equal odds, a Haar unitary or a random channel of
    Kraus rank two.
    """
    from .strategies import DiscriminationStrategy

    rng = _rng(rng)
    n = sys_dim * anc_dim
    in_dim = n if in_dim is None else in_dim
    out_dim = n if out_dim is None else out_dim
    psi = random_pure_state(in_dim, rng)
    lambdas = []
    for i in range(steps + 1):
        d_in = in_dim if i == 0 else n
        d_out = out_dim if i == steps else n
        if d_in == d_out and rng.random() < 0.5:
            lambdas.append(QuantumChannel([haar_unitary(d_in, rng)]))
        else:
            lambdas.append(random_channel(d_in, d_out, kraus_rank=2, rng=rng))
    return DiscriminationStrategy(sys_dim, anc_dim, steps, np.outer(psi, psi.conj()), lambdas)

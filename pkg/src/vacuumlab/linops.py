"""Dense linear-algebra helpers for finite-dimensional quantum information.

All operators are ``numpy`` complex arrays.  Subsystems are ordered
left to right in Kronecker products, so ``kron(A, B)`` acts as ``A`` on the
first factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-9
PSD_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr


def as_ket(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=complex).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    return arr


def normalize(v) -> np.ndarray:
    v = as_ket(v)
    n = np.linalg.norm(v)
    if n < RANK_TOL:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def ket_projector(v) -> np.ndarray:
    """Return ``|v><v|`` for a normalized copy of ``v``."""
    v = normalize(v)
    return np.outer(v, v.conj())


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conjugate(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def is_hermitian(a: np.ndarray, tol: float = 1e-9) -> bool:
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and np.allclose(a, dagger(a), atol=tol, rtol=0)


def psd_eigh(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a positive semidefinite matrix.

    The input is symmetrized and eigenvalues are clipped at zero.  Inputs
    with an eigenvalue below ``-PSD_TOL`` are rejected.
    """
    rho = hermitian_part(as_matrix(rho))
    w, u = np.linalg.eigh(rho)
    if w.size and w.min() < -PSD_TOL * max(1.0, abs(w).max()):
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    return np.clip(w, 0.0, None), u


def sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, u = psd_eigh(rho)
    return (u * np.sqrt(w)) @ dagger(u)


def partial_trace(rho: np.ndarray, dims: tuple[int, ...] | list[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Args:
        rho: operator on the tensor product with factor dimensions ``dims``.
        dims: factor dimensions, left to right.
        keep: index or indices of the factors to keep.

    Returns:
        The reduced operator on the kept factors, in their original order.
    """
    dims = [int(x) for x in dims]
    rho = as_matrix(rho)
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(f"operator shape {rho.shape} does not match dims {dims}")
    if np.isscalar(keep) or isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    t = rho.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract traced axes one at a time, highest index first
    for count, i in enumerate(sorted(traced, reverse=True)):
        m = n - count
        t = np.trace(t, axis1=i, axis2=i + m)
    kd = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kd, kd)


def ptrace_first(rho: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Trace out the first factor of a ``d1 x d2`` bipartite operator."""
    return np.einsum("ijik->jk", as_matrix(rho).reshape(d1, d2, d1, d2))


def ptrace_second(rho: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Trace out the second factor of a ``d1 x d2`` bipartite operator."""
    return np.einsum("ijkj->ik", as_matrix(rho).reshape(d1, d2, d1, d2))


def trace_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(as_matrix(a), compute_uv=False).sum())


def op_norm(a: np.ndarray) -> float:
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product ``tr(a^dagger b)``."""
    return complex(np.vdot(a, b))


def fidelity_root(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Root fidelity ``||sqrt(rho) sqrt(sigma)||_1`` of two PSD operators."""
    return trace_norm(sqrtm_psd(rho) @ sqrtm_psd(sigma))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    return fidelity_root(rho, sigma) ** 2


def support_projection(rho: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projector onto the support of a PSD operator.

    Eigenvalues at most ``tol`` times the largest one (or ``tol`` absolute,
    whichever is larger) count as zero.
    """
    w, u = psd_eigh(rho)
    if w.size == 0:
        return np.zeros((0, 0), dtype=complex)
    cut = tol * max(1.0, float(w.max()))
    cols = u[:, w > cut]
    return cols @ dagger(cols)


def null_space(a: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``a``.

    Singular values at most ``tol * max(1, s_max)`` are treated as zero.
    """
    a = as_matrix(a)
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    smax = float(s.max()) if s.size else 0.0
    rank = int(np.sum(s > tol * max(1.0, smax)))
    return dagger(vh[rank:])


def column_space(a: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the range of ``a``."""
    a = as_matrix(a)
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    smax = float(s.max()) if s.size else 0.0
    rank = int(np.sum(s > tol * max(1.0, smax)))
    return u[:, :rank]


def _gram_schmidt_extend(basis: list, candidates, target: int, tol: float) -> list:
    for c in candidates:
        if len(basis) == target:
            break
        e = np.array(c, dtype=complex)
        for _ in range(2):
            for b in basis:
                e = e - b * np.vdot(b, e)
        nrm = np.linalg.norm(e)
        if nrm > tol:
            basis.append(e / nrm)
    return basis


def orthonormal_completion(cols: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the span of ``cols``.

    Built by Gram-Schmidt over the standard basis vectors in order, so the
    result is deterministic (for ``cols = e_0`` it returns ``e_1, e_2, ...``).
    """
    cols = as_matrix(cols)
    n = cols.shape[0]
    basis = list(column_space(cols).T) if cols.shape[1] else []
    start = len(basis)
    basis = _gram_schmidt_extend(basis, np.eye(n), n, 1e-3)
    if len(basis) < n:
        basis = _gram_schmidt_extend(basis, null_space(np.array(basis).conj()).T, n, 1e-8)
    out = np.array(basis[start:], dtype=complex).T
    return out.reshape(n, n - start)


def complete_isometry_to_unitary(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Extend an isometry ``v`` (``n x k``) to an ``n x n`` unitary.

    The first ``k`` columns of the result equal ``v``.
    """
    v = as_matrix(v)
    k = v.shape[1]
    if not np.allclose(dagger(v) @ v, np.eye(k), atol=tol, rtol=0):
        raise ValueError("columns are not orthonormal, cannot complete to a unitary")
    return np.hstack([v, orthonormal_completion(v)])


def gram_schmidt_with_first(first, span: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span`` whose first vector is ``first``.

    The remaining vectors come from Gram-Schmidt over the columns of
    ``span`` in order.  ``first`` must lie in the column span of ``span``.
    """
    first = normalize(first)
    span = as_matrix(span)
    k = column_space(span).shape[1]
    resid = first - column_space(span) @ (dagger(column_space(span)) @ first)
    if np.linalg.norm(resid) > 1e-8:
        raise ValueError("first vector is not contained in the span")
    basis = _gram_schmidt_extend([first], span.T, k, 1e-6)
    if len(basis) < k:
        basis = _gram_schmidt_extend(basis, column_space(span).T, k, 1e-8)
    return np.array(basis, dtype=complex).T


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via its eigendecomposition."""
    h = as_matrix(h)
    if not is_hermitian(h):
        raise ValueError("generator must be Hermitian")
    w, u = np.linalg.eigh(hermitian_part(h))
    return (u * np.exp(-1j * w * t)) @ dagger(u)


@dataclass(frozen=True)
class Subspace:
    """Subspace of ``C^n`` stored as an orthonormal column basis."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2:
            raise ValueError("subspace basis must be a matrix of column vectors")
        if b.shape[1] and not np.allclose(dagger(b) @ b, np.eye(b.shape[1]), atol=1e-8, rtol=0):
            raise ValueError("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None) -> "Subspace":
        """Subspace spanned by the columns of ``vectors`` (any spanning set)."""
        a = np.asarray(vectors, dtype=complex)
        if a.ndim == 1:
            a = a[:, None]
        if a.shape[1] == 0 and ambient_dim is not None:
            a = np.zeros((ambient_dim, 0), dtype=complex)
        return cls(column_space(a))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=complex))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ dagger(self.basis)

    def complement(self) -> "Subspace":
        return Subspace(orthonormal_completion(self.basis))

    def contains(self, v, tol: float = 1e-8) -> bool:
        v = as_ket(v)
        return bool(np.linalg.norm(v - self.projector @ v) <= tol * max(1.0, np.linalg.norm(v)))

    def intersect(self, other: "Subspace") -> "Subspace":
        if other.ambient_dim != self.ambient_dim:
            raise ValueError("subspaces live in different spaces")
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim)
        resid = (np.eye(self.ambient_dim) - self.projector) @ other.basis
        coeffs = null_space(resid, 1e-8)
        return Subspace.span(other.basis @ coeffs, self.ambient_dim)

    def is_orthogonal_to(self, other: "Subspace", tol: float = 1e-9) -> bool:
        return op_norm(self.projector @ other.projector) < tol

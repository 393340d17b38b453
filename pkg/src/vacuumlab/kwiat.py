"""Kwiat-type protocols, spectral diagnostics and the rate-bound constants.

The single-wire protocol prepares the vacuum, applies ``U_{1/N}`` before each
of the ``N`` channel uses (``U_t(rho) = e^{-iHt} rho e^{iHt}``) and measures
``{P_perp, |v><v|}``.  It is repeated ``K`` times and the unknown channel is
declared to differ from the identity only if every run ends in the vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linops
from .channels import (
    ChannelWithVacuum,
    QuantumChannel,
    TransmissionFunctional,
    completion_vector,
    identity_channel,
    interaction_functional,
)
from .linops import dagger
from .strategies import (
    DiscriminationStrategy,
    TwoValuedPOVM,
    interaction_probability,
    run_intermediate_states,
    total_transmission,
)

ONE_CLUSTER_TOL = 1e-7


# --- the two-wire bomb tester ----------------------------------------------------


def beamsplitter(theta: float) -> np.ndarray:
    """Beamsplitter on upper (x) lower path, each spanned by ``{v, p}``.

    Basis order is ``v(x)v, v(x)p, p(x)v, p(x)p``.  The one-photon sector
    ``{v(x)p, p(x)v}`` is rotated by ``theta`` so that ``N`` splitters with
    ``theta = pi/(2N)`` move a photon from the lower to the upper path; the
    vacuum and the two-photon state are left alone.
    """
    c, s = math.cos(theta), math.sin(theta)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0
    u[3, 3] = 1.0
    u[:, 1] = [0, c, s, 0]  # v(x)p -> cos v(x)p + sin p(x)v
    u[:, 2] = [0, -s, c, 0]  # p(x)v -> -sin v(x)p + cos p(x)v
    return u


def bomb_tester_strategy(steps: int, theta: float | None = None) -> DiscriminationStrategy:
    """Rolled-out iterated interferometer: the box sits in the upper path.

    The system is the upper path and the ancilla the lower path.  The photon
    starts in the lower path, ``Lambda_0 ... Lambda_{N-1}`` are beamsplitters
    and ``Lambda_N`` is the identity.
    """
    if steps < 1:
        raise ValueError("the bomb tester needs at least one pass")
    theta = math.pi / (2 * steps) if theta is None else theta
    u = QuantumChannel([beamsplitter(theta)])
    s0 = np.zeros((4, 4), dtype=complex)
    s0[1, 1] = 1.0
    return DiscriminationStrategy(2, 2, steps, s0, [u] * steps + [identity_channel(4)])


def elitzur_vaidman_strategy() -> DiscriminationStrategy:
    """Single pass between two 45 degree beamsplitters."""
    u = QuantumChannel([beamsplitter(math.pi / 4)])
    s0 = np.zeros((4, 4), dtype=complex)
    s0[1, 1] = 1.0
    return DiscriminationStrategy(2, 2, 1, s0, [u, u])


# --- the single-wire protocol ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KwiatConfig:
    """Parameters of the repeated protocol.

    ``allow_trivial`` admits generators with ``|<v|e^{-iH}|v>| = 1`` (for
    example ``H = 0``); such configurations can be built but repetition then
    does not reduce the error.
    """

    hamiltonian: np.ndarray
    steps_n: int
    repeats_k: int
    vacuum: np.ndarray
    allow_trivial: bool = False

    def __post_init__(self):
        h = linops.as_matrix(self.hamiltonian, "hamiltonian")
        if h.shape[0] != h.shape[1] or np.abs(h - dagger(h)).max() >= 1e-10:
            raise ValueError("hamiltonian: generator must be Hermitian")
        if self.steps_n < 1 or self.repeats_k < 1:
            raise ValueError("steps_n and repeats_k must be positive")
        v = linops.as_ket(self.vacuum, "vacuum")
        if v.size != h.shape[0] or abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("vacuum: must be a unit vector of the generator's dimension")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "vacuum", v)
        if not self.allow_trivial and self.contrast >= 1 - 1e-12:
            raise ValueError("contrast: |<v|exp(-iH)|v>| must be < 1")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def contrast(self) -> float:
        """``C_H = |<v|exp(-iH)|v>|``."""
        u = linops.expm_hermitian(self.hamiltonian, 1.0)
        return float(abs(np.vdot(self.vacuum, u @ self.vacuum)))


def propagator_channel(h: np.ndarray, t: float) -> QuantumChannel:
    return QuantumChannel([linops.expm_hermitian(h, t)])


def build_kwiat_strategy(cfg: KwiatConfig) -> DiscriminationStrategy:
    """One run of the protocol as an ``N``-step strategy without ancilla."""
    n = cfg.steps_n
    u = propagator_channel(cfg.hamiltonian, 1.0 / n)
    v = cfg.vacuum
    lambdas = [u] * n + [identity_channel(cfg.dim)]
    return DiscriminationStrategy(cfg.dim, 1, n, np.outer(v, v.conj()), lambdas)


def kwiat_measurement(vacuum) -> TwoValuedPOVM:
    """``pi_a = P_perp`` (identity detected), ``pi_b = |v><v|``."""
    pv = linops.ket_projector(vacuum)
    return TwoValuedPOVM(np.eye(pv.shape[0]) - pv, pv)


@dataclass(frozen=True)
class KwiatReport:
    """Figures of merit of the repeated protocol.

    ``p_error`` is the exact error for the hypotheses {identity} versus
    {t}; it splits into ``p_error_reference`` (identity misread as ``t``)
    and ``p_error_probe`` (``t`` misread as identity).  ``estimate`` is the
    upper bound ``(C_H^{2K} + K tr(P_perp rho_N^t)) / 2``.
    """

    p_error: float
    p_error_reference: float
    p_error_probe: float
    estimate: float
    leak: float
    p_interaction: Optional[float]
    transmission: Optional[float]


def simulate_kwiat(cfg: KwiatConfig, t, tf: TransmissionFunctional | None = None) -> KwiatReport:
    """Exact evaluation of the ``K``-fold protocol for the unknown channel ``t``.

    Args:
        cfg: protocol parameters.
        t: a ``QuantumChannel`` or a ``ChannelWithVacuum``.  With a vacuum the
            interaction probability is reported.
        tf: transmission functional; defaults to the interaction functional
            when ``t`` carries a vacuum.

    Returns:
        A ``KwiatReport``.  Over ``K`` independent runs the transmission adds
        up and the interaction probability is ``1 - (1 - P_I)^K``.
    """
    cw = t if isinstance(t, ChannelWithVacuum) else None
    ch = cw.channel if cw is not None else t
    if ch.dim != cfg.dim:
        raise ValueError("channel dimension does not match the generator")
    strat = build_kwiat_strategy(cfg)
    v = cfg.vacuum
    pv = np.outer(v, v.conj())
    u = linops.expm_hermitian(cfg.hamiltonian, 1.0)
    a_ref = float(abs(np.vdot(v, u @ v)) ** 2)
    rho_t = run_intermediate_states(strat, ch)[-1]
    a_t = float(np.real(np.trace(pv @ rho_t)))
    leak = float(np.real(np.trace(rho_t))) - a_t
    k = cfg.repeats_k
    p_ref = 0.5 * a_ref ** k
    p_probe = 0.5 * leak * sum(a_t ** j for j in range(k))
    estimate = 0.5 * (cfg.contrast ** (2 * k) + k * leak)
    p_int = None
    if cw is not None:
        single = interaction_probability(strat, cw)
        p_int = 1.0 - (1.0 - single) ** k
        if tf is None:
            tf = interaction_functional(cw)
    trans = k * total_transmission(strat, ch, tf) if tf is not None else None
    return KwiatReport(p_ref + p_probe, p_ref, p_probe, estimate, leak, p_int, trans)


def deferred_kwiat_strategy(cfg: KwiatConfig) -> tuple[DiscriminationStrategy, TwoValuedPOVM]:
    """The ``K``-fold protocol as a single ``N K``-step strategy.

    After each run the system register is swapped into a fresh vacuum slot of
    the ancilla, so the ``K`` outcomes are measured jointly at the end.  The
    returned POVM has ``pi_b`` = vacuum on every register.
    """
    d, n, k = cfg.dim, cfg.steps_n, cfg.repeats_k
    slots = k - 1
    anc = d ** slots
    v = cfg.vacuum
    vac_all = v
    for _ in range(slots):
        vac_all = np.kron(vac_all, v)
    u = np.kron(linops.expm_hermitian(cfg.hamiltonian, 1.0 / n), np.eye(anc))

    def swap_with_slot(r: int) -> np.ndarray:
        # permutation of tensor factors (sys, slot_1, ..., slot_{K-1}) exchanging sys and slot r
        dims = [d] * (slots + 1)
        perm = list(range(slots + 1))
        perm[0], perm[r] = perm[r], perm[0]
        eye = np.eye(d ** (slots + 1)).reshape(dims + [d ** (slots + 1)])
        return eye.transpose(perm + [slots + 1]).reshape(d ** (slots + 1), -1)

    lambdas = [QuantumChannel([u])]
    for r in range(1, k + 1):
        for j in range(1, n + 1):
            if j < n:
                lambdas.append(QuantumChannel([u]))
            elif r < k:
                lambdas.append(QuantumChannel([u @ swap_with_slot(r)]))
            else:
                lambdas.append(identity_channel(d * anc))
    s0 = np.outer(vac_all, vac_all.conj())
    strat = DiscriminationStrategy(d, anc, n * k, s0, lambdas)
    return strat, TwoValuedPOVM.from_projector(np.eye(d * anc) - s0)


# --- explicit decay quantities -----------------------------------------------------


def _superop_of_unitary(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


def probability_term(t: QuantumChannel, h: np.ndarray, vacuum, n: int) -> float:
    """``tr(P_perp (T o U_{1/N})^N |v><v|)``."""
    v = linops.normalize(vacuum)
    d = v.size
    step = t.superop @ _superop_of_unitary(linops.expm_hermitian(h, 1.0 / n))
    x = np.outer(v, v.conj()).reshape(-1)
    for _ in range(n):
        x = step @ x
    rho = x.reshape(d, d)
    return float(np.real(np.trace(rho) - np.vdot(v, rho @ v)))


def influence_sum(t: QuantumChannel, h: np.ndarray, vacuum, n: int) -> float:
    """``tr(P_perp sum_{n<N} (U_{1/N} o T)^n |v><v|)``."""
    v = linops.normalize(vacuum)
    d = v.size
    step = _superop_of_unitary(linops.expm_hermitian(h, 1.0 / n)) @ t.superop
    x = np.outer(v, v.conj()).reshape(-1)
    acc = np.zeros_like(x)
    for _ in range(n):
        acc = acc + x
        x = step @ x
    rho = acc.reshape(d, d)
    return float(np.real(np.trace(rho) - np.vdot(v, rho @ v)))


def influence_sum_operator(t: QuantumChannel, h: np.ndarray, vacuum, n: int) -> np.ndarray:
    """The operator ``sum_{n<N} (U_{1/N} o T)^n |v><v|``."""
    v = linops.normalize(vacuum)
    d = v.size
    step = _superop_of_unitary(linops.expm_hermitian(h, 1.0 / n)) @ t.superop
    x = np.outer(v, v.conj()).reshape(-1)
    acc = np.zeros_like(x)
    for _ in range(n):
        acc = acc + x
        x = step @ x
    return acc.reshape(d, d)


def pinching_lambda(n: int) -> float:
    """``(1 - cos^N(2 theta)) / (2 sin^2 theta)`` with ``theta = pi/(2N)``."""
    theta = math.pi / (2 * n)
    return (1 - math.cos(2 * theta) ** n) / (2 * math.sin(theta) ** 2)


# --- spectra ------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDiagnostics:
    eigenvalues: np.ndarray
    gap_r: float
    one_is_simple: bool
    mixing: bool


def _split_one(eigs: np.ndarray, tol: float = ONE_CLUSTER_TOL) -> tuple[np.ndarray, np.ndarray]:
    near = np.abs(eigs - 1) <= tol
    return eigs[near], eigs[~near]


def spectral_diagnostics(t: QuantumChannel | np.ndarray) -> SpectralDiagnostics:
    """Spectrum of the superoperator with gap and simplicity of the eigenvalue 1.

    ``gap_r`` is the largest modulus of the spectrum once a single copy of
    the eigenvalue 1 is removed, so a degenerate eigenvalue 1 gives
    ``gap_r = 1``.
    """
    s = t.superop if isinstance(t, QuantumChannel) else np.asarray(t)
    eigs = np.linalg.eigvals(s)
    ones, _ = _split_one(eigs)
    if ones.size == 0:
        raise ValueError("spectrum: eigenvalue 1 not found, map is not a channel")
    drop = int(np.argmin(np.abs(eigs - 1)))
    rest = np.delete(eigs, drop)
    gap_r = float(np.abs(rest).max()) if rest.size else 0.0
    simple = ones.size == 1
    return SpectralDiagnostics(eigs, gap_r, simple, bool(simple and gap_r < 1 - 1e-9))


def _check_peripheral(eigs: np.ndarray, delta: float) -> bool:
    drop = int(np.argmin(np.abs(eigs - 1)))
    if abs(eigs[drop] - 1) > ONE_CLUSTER_TOL:
        return False
    rest = np.delete(eigs, drop)
    return bool(rest.size == 0 or np.abs(rest).max() <= 1 - delta + 1e-12)


def spectrum_condition_holds(t: QuantumChannel, h: np.ndarray, tau: float, delta: float,
                             t_grid: int = 64) -> bool:
    """Whether ``sigma(U_s T)`` lies in ``D_{1-delta}(0) u {1}`` for ``s`` on a grid in ``[0, tau]``."""
    for s in np.linspace(0.0, tau, t_grid):
        m = _superop_of_unitary(linops.expm_hermitian(h, s)) @ t.superop
        if not _check_peripheral(np.linalg.eigvals(m), delta):
            return False
    return True


def _trace_norm_bound(m: np.ndarray, d: int) -> float:
    # ||Phi||_{1->1} <= sqrt(d) ||Phi||_{2->2} for maps on d x d matrices
    return math.sqrt(d) * float(np.linalg.norm(m, 2))


def theorem44_constant(t: QuantumChannel, h: np.ndarray, tau: float, delta: float,
                       contour_samples: int = 256, t_grid: int = 64) -> float:
    """Constant ``C`` of the ``C/N^2`` and ``C/N`` rate bounds.

    ``C = max(tau^-2, 18/delta ||H||^2 max ||(z - T)^-1|| ||(z - U_s T)^-1||)``
    with ``z`` on ``{|z| = 1 - delta/2} u {|z - 1| = delta/2}`` and ``s`` in
    ``[0, tau]``.  The maximum is taken over ``contour_samples`` points per
    circle and ``t_grid`` values of ``s``, and each resolvent norm uses the
    majorant ``sqrt(d) ||.||_{2->2}`` of the trace-norm operator norm.  The
    spectrum condition is verified on the same ``s`` grid only.

    Raises:
        ValueError: if the spectrum condition fails on the grid or a
            resolvent is singular at a sample point.
    """
    if not 0 < delta < 1 or tau <= 0:
        raise ValueError("need 0 < delta < 1 and tau > 0")
    h = linops.as_matrix(h)
    d = t.dim
    h_norm = linops.op_norm(h)
    if h_norm == 0:
        return tau ** -2
    if not spectrum_condition_holds(t, h, tau, delta, t_grid):
        raise ValueError("spectrum condition violated on the t-grid")
    phis = 2 * np.pi * np.arange(contour_samples) / contour_samples
    zs = np.concatenate([(1 - delta / 2) * np.exp(1j * phis), 1 + (delta / 2) * np.exp(1j * phis)])
    eye = np.eye(d * d)
    base = t.superop
    res_t = []
    for z in zs:
        m = z * eye - base
        if np.linalg.cond(m) > 1e12:
            raise ValueError(f"resolvent of T is singular at z = {z}")
        res_t.append(_trace_norm_bound(np.linalg.inv(m), d))
    worst = 0.0
    for s in np.linspace(0.0, tau, t_grid):
        ms = _superop_of_unitary(linops.expm_hermitian(h, s)) @ base
        for z, rt in zip(zs, res_t):
            m = z * eye - ms
            if np.linalg.cond(m) > 1e12:
                raise ValueError(f"resolvent of U_s T is singular at z = {z}, s = {s}")
            worst = max(worst, rt * _trace_norm_bound(np.linalg.inv(m), d))
    return float(max(tau ** -2, 18.0 / delta * h_norm ** 2 * worst))


def auto_bound_parameters(t: QuantumChannel, h: np.ndarray, t_grid: int = 64) -> Optional[tuple[float, float]]:
    """Pick ``(tau, delta)`` for which the spectrum condition holds, or ``None``.

    ``delta`` is set from the spectral gap of ``t`` and ``tau`` is halved from 1
    until the condition holds on the grid.
    """
    diag = spectral_diagnostics(t)
    if not diag.mixing:
        return None
    delta = 0.5 * (1 - diag.gap_r)
    tau = 1.0
    for _ in range(20):
        if spectrum_condition_holds(t, h, tau, delta, t_grid):
            return tau, delta
        tau /= 2
    return None


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float


def decay_rate_fit(values: Sequence[tuple[float, float]]) -> FitResult:
    """Least-squares line through ``(log n, log y)``."""
    pts = [(float(n), float(y)) for n, y in values]
    if len(pts) < 3:
        raise ValueError("need at least three points for a rate fit")
    if any(y <= 0 for _, y in pts) or any(n <= 0 for n, _ in pts):
        raise ValueError("rate fit needs positive n and y")
    x = np.log([n for n, _ in pts])
    y = np.log([y for _, y in pts])
    slope, intercept = np.polyfit(x, y, 1)
    return FitResult(float(slope), float(intercept))


def _qubit_parameters(t: QuantumChannel, vacuum) -> tuple[float, complex]:
    if t.dim != 2:
        raise ValueError("qubit asymptotics need a two-dimensional channel")
    v = linops.normalize(vacuum)
    pv = np.outer(v, v.conj())
    if np.abs(t.apply(pv) - pv).max() > 1e-9:
        raise ValueError("fixed state: |v><v| is not fixed by the channel")
    if not spectral_diagnostics(t).one_is_simple:
        raise ValueError("fixed state: |v><v| is not the unique fixed state")
    p = completion_vector(v)
    pp = np.outer(p, p.conj())
    tau = float(np.real(np.trace(pp @ t.apply(pp))))
    tau0 = complex(np.vdot(v, t.apply(np.outer(v, p.conj())) @ p))
    if abs(1 - tau) < 1e-12 or abs(1 - tau0) < 1e-12:
        raise ValueError("degenerate denominator: channel is not mixing")
    return tau, tau0


def qubit_asymptotic(t: QuantumChannel, vacuum) -> float:
    """Limit of ``N`` times the influence sum for ``H = (pi/2) sigma_y``.

    Closed form ``(pi^2/4)(1 - |tau_0|^2) / ((1 - tau)|1 - tau_0|^2)`` with
    ``tau = tr(P_perp T(P_perp))`` and ``tau_0 = <v|T(|v><p|)|p>``.
    """
    tau, tau0 = _qubit_parameters(t, vacuum)
    return float((math.pi ** 2 / 4) * (1 - abs(tau0) ** 2) / ((1 - tau) * abs(1 - tau0) ** 2))


def qubit_probability_asymptotic(t: QuantumChannel, vacuum) -> float:
    """Limit of ``N^2 tr(P_perp (T o U_{1/N})^N |v><v|)``: ``tau`` times :func:`qubit_asymptotic`."""
    tau, _ = _qubit_parameters(t, vacuum)
    return tau * qubit_asymptotic(t, vacuum)


def riesz_power_check(t: QuantumChannel, n: int, contour_samples: int = 256) -> float:
    """Compare the contour integrals of ``z^n (z - T)^-1`` and ``(z - T)^-1`` around 1.

    The circle has radius ``min(0.5, gap / 2)`` where ``gap`` is the distance
    from 1 to the rest of the spectrum.  The trapezoid rule is used.

    Returns:
        Largest absolute entry of the difference of the two integrals.
    """
    s = t.superop
    eigs = np.linalg.eigvals(s)
    ones, rest = _split_one(eigs)
    if ones.size == 0:
        raise ValueError("spectrum: eigenvalue 1 not found")
    gap = float(np.abs(rest - 1).min()) if rest.size else 1.0
    if gap < 1e-4:
        raise ValueError("contour intersects spectrum: eigenvalue 1 is not isolated")
    r = min(0.5, gap / 2)
    eye = np.eye(s.shape[0])
    p_n = np.zeros_like(s, dtype=complex)
    p_0 = np.zeros_like(s, dtype=complex)
    for phi in 2 * np.pi * np.arange(contour_samples) / contour_samples:
        w = r * np.exp(1j * phi)
        z = 1 + w
        res = np.linalg.inv(z * eye - s)
        p_n += (z ** n) * res * w
        p_0 += res * w
    p_n /= contour_samples
    p_0 /= contour_samples
    return float(np.abs(p_n - p_0).max())

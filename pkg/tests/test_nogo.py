import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import infeasible_pairs
from vacuumlab import nogo
from vacuumlab.channels import (
    ChannelWithVacuum,
    QuantumChannel,
    bomb_channel,
    build_t_down,
    decide_discriminability,
    half_pi_y,
    identity_channel,
    maximal_vacuum_subspace,
)
from vacuumlab.kwiat import KwiatConfig, build_kwiat_strategy, kwiat_measurement
from vacuumlab.linops import Subspace, fidelity_root
from vacuumlab.nogo import OrthogonalDecomposition
from vacuumlab.samplers import (
    random_channel,
    random_density,
    random_operation_pair,
    random_povm,
    random_psd,
    random_strategy,
    random_vacuum_pair,
)
from vacuumlab.strategies import DiscriminationStrategy, TwoValuedPOVM

E0 = np.array([1.0, 0.0], dtype=complex)
LINE = Subspace.span(E0[:, None])


def test_audit_record():
    assert nogo.NoGoAudit.of(1.0, 1.0 - 1e-10, 2.0).holds
    assert not nogo.NoGoAudit.of(1.0, 0.9, 2.0).holds


def test_decomposition_validation():
    e = np.eye(3)
    v = Subspace.span(e[:, [0]])
    ok = OrthogonalDecomposition(v, [Subspace.span(e[:, [1]]), Subspace.span(e[:, [2]])])
    assert len(ok.projectors) == 2
    with pytest.raises(ValueError, match="span"):
        OrthogonalDecomposition(v, [Subspace.span(e[:, [1]])])
    with pytest.raises(ValueError, match="orthogonal to V"):
        OrthogonalDecomposition(v, [Subspace.span(e[:, [0, 1]]), Subspace.span(e[:, [2]])])
    with pytest.raises(ValueError, match="mutually"):
        tilt = Subspace.span(np.array([[0, 1, 1]]).T)
        OrthogonalDecomposition(v, [Subspace.span(e[:, [1, 2]]), tilt])
    assert OrthogonalDecomposition.single(Subspace.full(3)).parts == ()


def test_helstrom_examples():
    rho = random_density(3, rng=1)
    assert nogo.helstrom_error(rho, rho) == pytest.approx(0.5)
    assert nogo.helstrom_error(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(0.0)
    assert nogo.helstrom_error(np.diag([1.0, 0]), np.eye(2) / 2) == pytest.approx(0.25)


@pytest.mark.parametrize("seed", range(5))
def test_helstrom_is_minimal(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(3, rng=rng), random_density(3, rng=rng)
    best = nogo.helstrom_error(a, b)
    for _ in range(50):
        povm = random_povm(3, rng=rng)
        err = 0.5 * (np.trace(povm.pi_b @ a).real + np.trace(povm.pi_a @ b).real)
        assert err >= best - 1e-12


def test_c_vw_examples():
    ident = identity_channel(2)
    full = OrthogonalDecomposition.single(Subspace.full(2))
    assert nogo.c_vw_constant(ident, ident, full) == 0
    down_id = build_t_down(ChannelWithVacuum(ident, E0))
    down_bomb = build_t_down(ChannelWithVacuum(bomb_channel(E0), E0))
    decomp = OrthogonalDecomposition(LINE, [LINE.complement()])
    c = nogo.c_vw_constant(down_id, down_bomb, decomp)
    assert c == pytest.approx(1.0)
    assert c <= 2 + 1e-9


def test_c_vw_rejects_unequal_restrictions():
    ident = identity_channel(2)
    flip = QuantumChannel([np.array([[0, 1.0], [1.0, 0]])])
    with pytest.raises(ValueError, match="restrictions unequal"):
        nogo.c_vw_constant(ident, flip, OrthogonalDecomposition.single(LINE))
    leaky = QuantumChannel([np.diag([0.5, 1.0])], operation=True)
    with pytest.raises(ValueError, match="trace preservation"):
        nogo.c_vw_constant(ident, leaky, OrthogonalDecomposition.single(LINE))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([(2, 1), (3, 1), (3, 2), (4, 2)]))
def test_c_vw_at_most_two(seed, dk):
    d, k = dk
    a, b, sub = random_operation_pair(d, k, rng=np.random.default_rng(seed))
    assert nogo.c_vw_constant(a, b, OrthogonalDecomposition.single(sub)) <= 2 + 1e-9


def test_joint_dilation_agrees_on_subspace():
    a, b, sub = random_operation_pair(3, 2, rng=2)
    jd = nogo.joint_dilation(a, b, sub)
    assert np.abs((jd.v_a - jd.v_b) @ sub.basis).max() < 1e-9
    for iso in (jd.v_a, jd.v_b):
        assert np.allclose(iso.conj().T @ iso, np.eye(3), atol=1e-9)
    # the projected dilation reproduces the operation
    rho = random_density(3, rng=3)
    full = np.kron(jd.p_a, np.eye(3)) @ jd.v_a @ rho @ jd.v_a.conj().T @ np.kron(jd.p_a, np.eye(3))
    out = sum(full[i * 3:(i + 1) * 3, i * 3:(i + 1) * 3] for i in range(jd.env_dim))
    assert np.allclose(out, a.apply(rho), atol=1e-10)


def test_fidelity_gap_examples():
    a, b, sub = random_operation_pair(3, 2, rng=4)
    rng = np.random.default_rng(5)
    inside = sub.basis @ random_density(2, rng=rng) @ sub.basis.conj().T
    audit = nogo.fidelity_gap_check(a, b, sub, inside, inside)
    assert audit.holds and audit.lhs == pytest.approx(1.0) and audit.rhs == pytest.approx(1.0)
    rho, sigma = random_density(3, rng=rng), random_density(3, rng=rng)
    assert nogo.fidelity_gap_check(a, b, sub, rho, sigma).holds
    perp = sub.complement().projector
    assert nogo.fidelity_gap_check(a, b, sub, perp / np.trace(perp), inside).lhs == pytest.approx(0.0, abs=1e-7)


@pytest.mark.parametrize("dk", [(2, 1), (3, 2), (4, 2)])
def test_fidelity_gap_random(dk):
    d, k = dk
    rng = np.random.default_rng(6 + d)
    a, b, sub = random_operation_pair(d, k, rng=rng)
    for _ in range(50):
        audit = nogo.fidelity_gap_check(a, b, sub, random_psd(d, rng=rng), random_psd(d, rng=rng))
        assert audit.holds


def test_information_tradeoff_examples():
    down_id = build_t_down(ChannelWithVacuum(identity_channel(2), E0))
    down_bomb = build_t_down(ChannelWithVacuum(bomb_channel(E0), E0))
    decomp = OrthogonalDecomposition.single(LINE)
    pv = np.outer(E0, E0)
    audit = nogo.information_tradeoff_check(down_id, down_bomb, decomp, pv, pv)
    assert audit.lhs == pytest.approx(0.0, abs=1e-12) and audit.rhs == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(7)
    for _ in range(50):
        rho, sigma = random_density(2, rng=rng), random_density(2, rng=rng)
        assert nogo.information_tradeoff_check(down_id, down_bomb, decomp, rho, sigma).holds


def test_information_tradeoff_refined_decomposition():
    rng = np.random.default_rng(8)
    d = 3
    a, b, _ = random_vacuum_pair(d, 1, rng=rng)
    sub = maximal_vacuum_subspace(a)
    perp = sub.complement().basis
    coarse = OrthogonalDecomposition.single(sub)
    fine = OrthogonalDecomposition(sub, [Subspace.span(perp[:, [0]]), Subspace.span(perp[:, [1]])])
    ta, tb = build_t_down(a), build_t_down(b)
    for _ in range(30):
        rho, sigma = random_density(d, rng=rng), random_density(d, rng=rng)
        assert nogo.information_tradeoff_check(ta, tb, coarse, rho, sigma).holds
        assert nogo.information_tradeoff_check(ta, tb, fine, rho, sigma).holds


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fuchs_van_de_graaf(seed):
    rng = np.random.default_rng(seed)
    d = random_strategy(2, 2, 2, rng=rng)
    povm = random_povm(4, rng=rng)
    assert nogo.error_fidelity_check(d, povm, random_channel(2, rng=rng), random_channel(2, rng=rng)).holds


@pytest.mark.parametrize("seed", range(5))
def test_fidelity_monotone_under_channels(seed):
    rng = np.random.default_rng(seed)
    for d in (2, 3):
        lam = random_channel(d, rng=rng)
        rho, sigma = random_density(d, rng=rng), random_density(d, rng=rng)
        assert fidelity_root(lam.apply(rho), lam.apply(sigma)) >= fidelity_root(rho, sigma) - 1e-9


def test_technical_nogo_on_random_strategies():
    rng = np.random.default_rng(9)
    for cw_a, cw_b in infeasible_pairs(rng):
        decomp = OrthogonalDecomposition.single(maximal_vacuum_subspace(cw_a))
        ta, tb = build_t_down(cw_a), build_t_down(cw_b)
        for _ in range(10):
            d = random_strategy(cw_a.dim, 2, int(rng.integers(1, 4)), rng=rng)
            audit = nogo.technical_nogo_check(d, cw_a.channel, cw_b.channel, ta, tb, decomp)
            assert audit.holds


def test_nogo_constant_examples():
    rng = np.random.default_rng(10)
    for cw_a, cw_b in infeasible_pairs(rng):
        c, big = nogo.nogo_constant(cw_a, cw_b)
        assert 0 <= c <= 2 + 1e-9 and math.isfinite(big)
    same = ChannelWithVacuum(identity_channel(2), E0)
    assert nogo.nogo_constant(same, same) == (0.0, 0.0)


def test_nogo_audit_examples():
    rng = np.random.default_rng(11)
    cw_a, cw_b = infeasible_pairs(rng)[1]
    idle = DiscriminationStrategy(2, 1, 2, np.outer(E0, E0), [identity_channel(2)] * 3)
    povm = random_povm(2, rng=rng)
    audit = nogo.nogo_inequality_audit(cw_a, cw_b, idle, povm)
    assert audit.lhs == pytest.approx(0.0, abs=1e-15) and audit.rhs == 0 and audit.holds
    r = nogo.rate_limit_audit(cw_a, cw_b, idle, povm)
    assert r.holds and r.rhs == pytest.approx(0.0, abs=1e-12)
    half = TwoValuedPOVM(np.eye(4) / 2, np.eye(4) / 2)
    same = nogo.nogo_inequality_audit(cw_a, cw_a, random_strategy(2, 2, 2, rng=rng), half)
    assert same.lhs == pytest.approx(0.0) and same.holds


def test_nogo_audit_rejects_feasible_pair(bomb, empty):
    d = random_strategy(2, 1, 1, rng=12)
    with pytest.raises(ValueError, match="feasible pair"):
        nogo.nogo_inequality_audit(empty, bomb, d, random_povm(2, rng=13))


def test_audits_on_kwiat_strategy():
    rng = np.random.default_rng(14)
    for cw_a, cw_b in infeasible_pairs(rng):
        v = cw_a.vacuum
        strat = build_kwiat_strategy(KwiatConfig(half_pi_y(v), 8, 1, v))
        povm = kwiat_measurement(v)
        assert nogo.nogo_inequality_audit(cw_a, cw_b, strat, povm).holds
        assert nogo.rate_limit_audit(cw_a, cw_b, strat, povm).holds


def test_audits_on_random_strategies():
    rng = np.random.default_rng(15)
    pairs = infeasible_pairs(rng)
    for cw_a, cw_b in pairs:
        assert not decide_discriminability(cw_a, cw_b).feasible
        strategies = [random_strategy(cw_a.dim, int(rng.integers(1, 3)), int(rng.integers(1, 5)), rng=rng)
                      for _ in range(10)]
        povms = [random_povm(s.out_dim, rng=rng) for s in strategies]
        for a, b in nogo.audit_pair(cw_a, cw_b, strategies, povms):
            assert a.holds and b.holds
            assert a.constant_used >= 0 and b.constant_used > 0


def test_rate_limit_decomposition():
    rng = np.random.default_rng(16)
    cw_a, cw_b = infeasible_pairs(rng)[2]
    decomp = nogo.rate_limit_decomposition(cw_a, cw_b)
    assert decomp.v_sub.dim == 2 and len(decomp.parts) == 1
    # a pair whose exclusive vacuum directions overlap violates the hypothesis
    e = np.eye(3)
    a = ChannelWithVacuum(QuantumChannel([np.eye(3)[:, :2] @ e[:2] + 0j, np.outer(e[0], e[2])]), e[0])
    b = ChannelWithVacuum(QuantumChannel([np.eye(3)[:, [0, 2]] @ e[[0, 2]] + 0j, np.outer(e[0], e[1])]), e[0])
    dec = nogo.rate_limit_decomposition(a, b)
    assert [p.dim for p in dec.parts] == [1, 1]
    assert dec.v_sub.dim == 1


def test_rate_limit_rejects_unequal_restrictions():
    e = np.eye(2)
    a = ChannelWithVacuum(identity_channel(2), e[0])
    b = ChannelWithVacuum(QuantumChannel([np.diag([1, 1j])]), e[0])
    with pytest.raises(ValueError, match="hypothesis violation"):
        nogo.rate_limit_decomposition(a, b)

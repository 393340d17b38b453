import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vacuumlab import reduction as red
from vacuumlab.channels import (
    ChannelWithVacuum,
    QuantumChannel,
    TransmissionFunctional,
    bomb_channel,
    identity_channel,
    interaction_functional,
    pinching_channel,
    restrictions_equal,
)
from vacuumlab.linops import Subspace
from vacuumlab.reduction import TwirlGroupSpec
from vacuumlab.samplers import random_channel, random_psd, random_pure_state, random_vacuum_pair

Q0 = np.diag([1.0, 0.0]).astype(complex)
Q1 = np.diag([0.0, 1.0]).astype(complex)


def group(d, rng=None):
    v = np.eye(d)[0] if rng is None else random_pure_state(d, rng)
    return TwirlGroupSpec(d, v)


def conj_superop(g):
    return np.kron(g, g.conj())


def monte_carlo_twirl(s, spec, rng, samples):
    acc = np.zeros_like(s)
    for _ in range(samples):
        big = conj_superop(spec.haar_element(rng))
        acc += big @ s @ big.conj().T
    return acc / samples


def test_group_spec_validation():
    with pytest.raises(ValueError):
        TwirlGroupSpec(1, np.array([1.0]))
    with pytest.raises(ValueError, match="vacuum"):
        TwirlGroupSpec(2, np.array([1.0, 1.0]))
    spec = group(3, np.random.default_rng(0))
    g = spec.haar_element(np.random.default_rng(1))
    assert np.allclose(g.conj().T @ g, np.eye(3))
    assert np.allclose(g @ spec.vacuum, spec.vacuum)


@pytest.mark.parametrize("d,count", [(2, 6), (3, 7), (4, 7)])
def test_twirl_basis_size(d, count):
    spec = group(d)
    basis = red.twirl_basis(spec)
    assert len(basis) == count
    flat = np.array([b.reshape(-1) for b in basis])
    assert np.linalg.matrix_rank(flat) == count


@pytest.mark.parametrize("d", [2, 3, 4])
def test_twirl_of_identity(d):
    spec = group(d, np.random.default_rng(d))
    out = red.twirl_channel(identity_channel(d), spec)
    assert np.abs(out.superop - np.eye(d * d)).max() < 1e-10


@pytest.mark.parametrize("d", [2, 3, 4])
def test_twirl_commutes_and_is_idempotent(d):
    rng = np.random.default_rng(10 + d)
    spec = group(d, rng)
    t = random_channel(d, rng=rng)
    s = red.twirl_channel(t, spec)
    for _ in range(50):
        big = conj_superop(spec.haar_element(rng))
        assert np.abs(big @ s.superop - s.superop @ big).max() < 1e-9
    again = red.twirl_superop(s.superop, spec)
    assert np.abs(again - s.superop).max() < 1e-9
    assert s.is_trace_preserving
    assert np.linalg.eigvalsh(s.choi).min() > -1e-9


@pytest.mark.parametrize("d", [2, 3])
def test_twirl_matches_monte_carlo(d):
    rng = np.random.default_rng(20 + d)
    spec = group(d, rng)
    t = random_channel(d, rng=rng)
    exact = red.twirl_channel(t, spec).superop
    approx = monte_carlo_twirl(t.superop, spec, rng, 3000)
    assert np.abs(exact - approx).max() < 3e-2


def test_twirl_of_group_element_is_exact():
    rng = np.random.default_rng(30)
    spec = group(3, rng)
    h = spec.haar_element(rng)
    s = red.twirl_superop(conj_superop(h), spec)
    # the twirl of a group element lies in the commutant and fixes the vacuum
    v = spec.vacuum
    out = (s @ np.outer(v, v.conj()).reshape(-1)).reshape(3, 3)
    assert np.allclose(out, np.outer(v, v.conj()), atol=1e-10)
    assert np.allclose(red.twirl_superop(np.eye(9), spec), np.eye(9), atol=1e-10)


def test_twirl_rejects_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        red.twirl_channel(identity_channel(3), group(2))


def test_twirl_functional_examples():
    for d in (2, 3, 4):
        spec = group(d, np.random.default_rng(d))
        pv, pp = spec.projectors
        assert np.allclose(red.twirl_functional(TransmissionFunctional(pp), spec).theta, pp)
        assert np.allclose(red.twirl_functional(TransmissionFunctional(pv), spec).theta, pv)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_twirl_functional_against_superop_projection(d):
    rng = np.random.default_rng(40 + d)
    spec = group(d, rng)
    theta = random_psd(d, rng=rng)
    closed = red.twirl_functional(TransmissionFunctional(theta), spec).theta
    # twirling rho -> tr(theta rho)|v><v| gives rho -> tr(theta' rho)|v><v|
    pv, _ = spec.projectors
    f = red._functional_superop(pv, theta)
    twirled = red.twirl_superop(f, spec)
    assert np.abs(twirled - red._functional_superop(pv, closed)).max() < 1e-10
    acc = np.zeros((d, d), dtype=complex)
    for _ in range(2000):
        g = spec.haar_element(rng)
        acc += g @ theta @ g.conj().T
    assert np.abs(acc / 2000 - closed).max() < 5e-2


def test_fixed_point_rigidity():
    rng = np.random.default_rng(50)
    d = 3
    spec = group(d)
    v, psi = np.eye(d)[0], np.eye(d)[1]
    phi = (v + psi) / np.sqrt(2)
    target = np.outer(phi, phi)
    noise = random_channel(d, rng=rng)
    residuals = []
    for eps in (0.0, 1e-4, 1e-2, 1e-1):
        mix = (1 - eps) * np.eye(d * d) + eps * noise.superop
        s = red.twirl_superop(mix, spec)
        out = (s @ target.reshape(-1)).reshape(d, d)
        residuals.append(np.abs(out - target).max())
    assert residuals[0] < 1e-12
    assert all(a < b for a, b in zip(residuals, residuals[1:]))


def test_superchannel_validation():
    with pytest.raises(ValueError, match="pre-processing"):
        red.Superchannel(2, 2, 2, identity_channel(2), identity_channel(4))
    with pytest.raises(ValueError, match="post-processing"):
        red.Superchannel(2, 2, 1, identity_channel(2), identity_channel(3))


def test_plain_superchannel_passthrough():
    r = red.Superchannel(4, 2, 2, identity_channel(4), identity_channel(4))
    out = red.apply_superchannel(r, identity_channel(2))
    assert np.allclose(out.superop, np.eye(16))
    t = random_channel(2, rng=1)
    assert np.allclose(red.apply_superchannel(r, t).choi, t.tensor_identity(2).choi, atol=1e-10)


def test_reduction_identity_reference():
    r = red.build_reduction(identity_channel(2), Subspace.full(2), np.eye(2)[0])
    assert r.in_dim == 2 and r.sys_dim == 2 and r.anc_dim == 2
    assert np.abs(red.apply_superchannel(r, identity_channel(2)).superop - np.eye(4)).max() < 1e-9


def test_reduction_dim_one():
    e0 = np.eye(2)[0]
    r = red.build_reduction(bomb_channel(e0), Subspace.span(e0[:, None]), e0)
    assert np.abs(red.apply_superchannel(r, bomb_channel(e0)).superop - np.eye(4)).max() < 1e-9
    # only the action on |v><v| matters
    other = QuantumChannel([np.eye(2)[:, [0]] @ np.eye(2)[[0]], np.array([[0, 0], [0, 1.0]])])
    assert np.abs(red.apply_superchannel(r, other).superop - np.eye(4)).max() < 1e-9
    flip = red.apply_superchannel(r, QuantumChannel([np.array([[0, 1.0], [1.0, 0]])]))
    assert np.abs(red.unique_fixed_state(flip) - Q0).max() < 1e-9


def test_reduction_bomb_on_identity_reference():
    d = 3
    r = red.build_reduction(identity_channel(d), Subspace.full(d), np.eye(d)[0])
    out = red.apply_superchannel(r, bomb_channel(np.eye(d)[0], d))
    assert red.fixed_state_dimension(out) == 1
    assert np.abs(red.unique_fixed_state(out) - Q0).max() < 1e-9


def test_reduction_errors():
    e0 = np.eye(2)[0]
    with pytest.raises(ValueError, match="isometric restriction"):
        red.build_reduction(bomb_channel(e0), Subspace.full(2), e0)
    with pytest.raises(ValueError, match="vacuum"):
        red.build_reduction(identity_channel(2), Subspace.span(np.eye(2)[:, [1]]), e0)
    r = red.build_reduction(identity_channel(2), Subspace.full(2), e0)
    with pytest.raises(ValueError, match="trace preservation"):
        red.apply_superchannel(r, QuantumChannel([np.diag([1.0, 0.5])], operation=True))
    with pytest.raises(ValueError, match="dimension"):
        red.apply_superchannel(r, identity_channel(3))


def _pair(rng, d, k, equal):
    cw_ref, cw_other, sub = random_vacuum_pair(d, k, rng=rng)
    if equal:
        return cw_ref.channel, cw_other.channel, sub, cw_ref.vacuum
    t_prime = random_channel(d, rng=rng)
    assert not restrictions_equal(cw_ref.channel, t_prime, sub)
    return cw_ref.channel, t_prime, sub, cw_ref.vacuum


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([(2, 1), (2, 2), (3, 1), (3, 2), (3, 3)]), st.booleans())
def test_reduction_claims(seed, dk, equal):
    d, k = dk
    rng = np.random.default_rng(seed)
    t_ref, t_prime, sub, v = _pair(rng, d, k, equal)
    r = red.build_reduction(t_ref, sub, v)
    out = red.apply_superchannel(r, t_prime)
    assert out.dim == 2 and out.is_trace_preserving
    if equal:
        assert np.abs(out.superop - np.eye(4)).max() < 1e-9
    else:
        fixed = red.unique_fixed_state(out)
        assert fixed is not None and np.abs(fixed - Q0).max() < 1e-9
    # extension independence
    a = red.build_reduction(t_ref, sub, v, rng=np.random.default_rng(seed + 1))
    b = red.build_reduction(t_ref, sub, v, rng=np.random.default_rng(seed + 2))
    diff = red.apply_superchannel(a, t_prime).superop - red.apply_superchannel(b, t_prime).superop
    assert np.abs(diff).max() < 1e-9


@pytest.mark.parametrize("d,k", [(2, 2), (3, 2), (3, 3), (2, 1), (3, 1)])
def test_transformed_transmission_closed_form(d, k):
    rng = np.random.default_rng(60 + 10 * d + k)
    t_ref, _, sub, v = _pair(rng, d, k, True)
    r = red.build_reduction(t_ref, sub, v)
    pv = np.outer(v, v.conj())
    perp = np.eye(d) - pv
    theta = perp @ random_psd(d, rng=rng) @ perp
    got = red.transformed_transmission(r, TransmissionFunctional(theta)).theta
    if k == 1:
        assert np.abs(got).max() < 1e-12
    else:
        basis = r.core.basis
        p_loc = basis @ basis.conj().T - pv
        weight = np.real(np.trace(theta @ p_loc)) / (k - 1)
        assert np.abs(got - 0.5 * weight * Q1).max() < 1e-10


def test_transformed_transmission_examples():
    e0 = np.eye(2)[0]
    r = red.build_reduction(identity_channel(2), Subspace.full(2), e0)
    tf = interaction_functional(ChannelWithVacuum(bomb_channel(e0), e0))
    assert np.allclose(red.transformed_transmission(r, tf).theta, 0.5 * Q1)
    zero = TransmissionFunctional(np.zeros((2, 2)))
    assert np.allclose(red.transformed_transmission(r, zero).theta, 0)
    plain = red.Superchannel(4, 2, 2, identity_channel(4), identity_channel(4))
    got = red.transformed_transmission(plain, tf).theta
    assert np.allclose(got, np.kron(tf.theta, np.eye(2)))


def test_no_classical_shortcut():
    assert red.verify_no_classical_shortcut(2, samples=200, rng=0)
    with pytest.raises(ValueError):
        red.verify_no_classical_shortcut(3)
    # with the ancilla the pinching channel is separated from the identity
    r = red.build_reduction(identity_channel(2), Subspace.full(2), np.eye(2)[0])
    out = red.apply_superchannel(r, pinching_channel(d=2))
    assert red.fixed_state_dimension(out) == 1
    assert np.abs(red.apply_superchannel(r, identity_channel(2)).superop - np.eye(4)).max() < 1e-9

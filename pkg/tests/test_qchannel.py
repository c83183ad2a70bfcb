import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrd.qchannel import (
    PAULI,
    Isometry,
    QuantumChannel,
    apply,
    apply_to_pure,
    bell_weights,
    bit_flip,
    choi_to_kraus,
    clifford_twirl,
    complementary,
    dephasing_measurement,
    depolarizing,
    identity_channel,
    mix,
    random_channel,
    replacer,
    split_environment,
    stinespring,
    twirl_unitaries,
)
from qrd.qstate import (
    DensityMatrix,
    bell_state,
    entanglement_fidelity,
    maximally_mixed,
    partial_trace,
    purify,
    random_density,
)


def brute_choi(ch):
    d = ch.d_in
    out = np.zeros((d * ch.d_out, d * ch.d_out), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1
            out += np.kron(e, sum(k @ e @ k.conj().T for k in ch.kraus))
    return out


def test_identity_choi_is_unnormalised_bell():
    j = identity_channel(2).choi
    phi = np.array([1, 0, 0, 1])
    assert np.allclose(j, np.outer(phi, phi))


@pytest.mark.parametrize("seed", range(5))
def test_choi_matches_definition(seed):
    ch = random_channel(2, 3, seed=seed)
    j = ch.choi
    assert np.allclose(j, brute_choi(ch))
    # trace over the output gives the input identity
    assert np.allclose(np.einsum("iaja->ij", j.reshape(2, 3, 2, 3)), np.eye(2))
    assert np.linalg.eigvalsh(j)[0] > -1e-12


def test_rejects_non_trace_preserving():
    with pytest.raises(ValueError):
        QuantumChannel((np.eye(2) * 0.9,))
    with pytest.raises(ValueError):
        QuantumChannel(())
    with pytest.raises(ValueError):
        QuantumChannel((np.eye(2), np.eye(3)))


def test_depolarizing_output():
    rho = random_density([2], seed=1).matrix
    assert np.allclose(depolarizing(0.75)(rho), np.eye(2) / 2)
    p = 0.3
    expected = (1 - p) * rho + p / 3 * sum(s @ rho @ s for s in PAULI[1:])
    assert np.allclose(depolarizing(p)(rho), expected)
    with pytest.raises(ValueError):
        depolarizing(1.2)


def test_named_channels():
    rho = random_density([2], seed=2).matrix
    assert np.allclose(dephasing_measurement(2)(rho), np.diag(np.diag(rho)))
    sigma = random_density([3], seed=3)
    assert np.allclose(replacer(sigma, 2)(rho), sigma.matrix)
    assert np.allclose(bit_flip(0.2)(rho), 0.8 * rho + 0.2 * PAULI[1] @ rho @ PAULI[1])


def test_mix_is_convex_combination():
    rho = random_density([2], seed=4).matrix
    a, b = random_channel(2, 2, seed=5), random_channel(2, 2, seed=6)
    m = mix([a, b], [0.3, 0.7])
    assert np.allclose(m(rho), 0.3 * a(rho) + 0.7 * b(rho))
    with pytest.raises(ValueError):
        mix([a, b], [0.5, 0.6])


@pytest.mark.parametrize("seed", range(5))
def test_apply_matches_explicit_kron(seed):
    rho = random_density([2, 3], seed=seed)
    ch = random_channel(3, 2, seed=seed + 10)
    expected = sum(np.kron(np.eye(2), k) @ rho.matrix @ np.kron(np.eye(2), k).conj().T for k in ch.kraus)
    out = apply(ch, rho, 1)
    assert out.dims == (2, 2)
    assert np.allclose(out.matrix, expected)
    ch0 = random_channel(2, 4, seed=seed + 20)
    expected0 = sum(np.kron(k, np.eye(3)) @ rho.matrix @ np.kron(k, np.eye(3)).conj().T for k in ch0.kraus)
    out0 = apply(ch0, rho, 0)
    assert out0.dims == (4, 3)
    assert np.allclose(out0.matrix, expected0)


def test_apply_middle_subsystem():
    rho = random_density([2, 2, 2], seed=9)
    ch = random_channel(2, 3, seed=8)
    out = apply(ch, rho, 1)
    assert out.dims == (2, 3, 2)
    big = [np.kron(np.kron(np.eye(2), k), np.eye(2)) for k in ch.kraus]
    assert np.allclose(out.matrix, sum(b @ rho.matrix @ b.conj().T for b in big))


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(identity_channel(3), maximally_mixed(2))


def test_choi_to_kraus_round_trip():
    ch = random_channel(2, 3, n_kraus=4, seed=12)
    back = choi_to_kraus(ch.choi, 2, 3)
    assert np.allclose(back.choi, ch.choi, atol=1e-10)
    assert back.n_kraus <= 6


def test_compressed_kraus_count():
    assert depolarizing(0.0).compressed().n_kraus == 1
    assert depolarizing(0.3).compressed().n_kraus == 4


def test_stinespring_isometry_and_marginals():
    ch = random_channel(2, 2, seed=3)
    v = stinespring(ch)
    assert np.allclose(v.matrix.conj().T @ v.matrix, np.eye(2))
    assert np.allclose(v.channel((0,)).choi, ch.choi)
    rho = random_density([2], seed=4).matrix
    out = v.matrix @ rho @ v.matrix.conj().T
    assert np.allclose(partial_trace(DensityMatrix(out, v.out_dims), [1]).matrix, complementary(ch)(rho))


def test_complementary_of_identity_is_trivial():
    comp = complementary(identity_channel(2))
    assert comp.d_out == 1


def test_isometry_validation():
    with pytest.raises(ValueError):
        Isometry(np.ones((2, 2)))
    with pytest.raises(ValueError):
        Isometry(np.eye(4)[:, :2], (3,))


def test_split_environment():
    ch = random_channel(2, 2, seed=1)
    v = stinespring(ch)
    w = Isometry(np.eye(4), (2, 2))
    vv = split_environment(v, w)
    assert vv.out_dims == (2, 2, 2)
    assert np.allclose(vv.channel((0,)).choi, ch.choi)


def test_apply_to_pure_matches_density_route():
    psi = purify(random_density([2], seed=5))
    ch = random_channel(2, 2, seed=6)
    out = apply_to_pure(stinespring(ch), psi)
    assert out.dims == (2, 2, 4)
    assert np.allclose(partial_trace(out, [0, 1]).matrix, apply(ch, psi, 1).matrix)


def _up_to_phase(a, b):
    return abs(abs(np.trace(a.conj().T @ b)) - 2) < 1e-9


def test_twirl_set_is_a_group_up_to_phase():
    us = twirl_unitaries()
    assert len(us) == 12
    for a in us:
        assert np.allclose(a.conj().T @ a, np.eye(2))
    for i, a in enumerate(us):
        assert sum(_up_to_phase(a, b) for b in us) == 1
        for b in us:
            assert any(_up_to_phase(a @ b, c) for c in us)


def test_twirl_of_depolarizing_is_fixed():
    ch = depolarizing(0.4)
    assert np.allclose(clifford_twirl(ch).choi, ch.choi)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_twirl_gives_isotropic_choi(seed):
    ch = random_channel(2, 2, seed=seed)
    tw = clifford_twirl(ch)
    w, resid = bell_weights(tw.choi)
    assert resid < 1e-9
    assert np.ptp(w[1:]) < 1e-9
    pi = maximally_mixed(2)
    assert abs(entanglement_fidelity(pi, ch) - w[0]) < 1e-9


def test_bell_weights_of_pauli_channel():
    q = np.array([0.5, 0.2, 0.2, 0.1])
    ch = QuantumChannel(tuple(np.sqrt(qi) * s for qi, s in zip(q, PAULI)))
    w, resid = bell_weights(ch.choi)
    # Phi+ picks up I, Psi+ X, Psi- Y, Phi- Z
    assert np.allclose(w, q)
    assert resid < 1e-12


def test_bell_states_are_orthonormal():
    vs = [bell_state(k).vector for k in ("phi+", "phi-", "psi+", "psi-")]
    g = np.array([[np.vdot(a, b) for b in vs] for a in vs])
    assert np.allclose(g, np.eye(4))


def test_random_channel_seeded():
    assert np.array_equal(random_channel(2, 2, seed=1).choi, random_channel(2, 2, seed=1).choi)
    with pytest.raises(ValueError):
        random_channel(4, 1, n_kraus=2)

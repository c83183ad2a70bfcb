import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import entropy as scipy_entropy

from qrd.qchannel import Isometry, depolarizing, identity_channel, random_channel, replacer
from qrd.qstate import DensityMatrix, PureState, basis_ket, bell_state, maximally_mixed, random_density, random_pure, tensor
from qrd.ratefuncs import ea_isotropic_closed_form
from qrd.regions import (
    RateRegion,
    code_state,
    ip_search,
    max_identity_check,
    qrst_qsi_feedback,
    qrst_qsi_nonfeedback_Ip,
    qsr_region,
    tradeoff_region,
)

from oracles import eig_entropy, mirror_amplitudes


def marginal(vec, dims, keep):
    t = vec.reshape(dims)
    rest = [i for i in range(len(dims)) if i not in keep]
    m = t.transpose(list(keep) + rest).reshape(int(np.prod([dims[i] for i in keep])), -1)
    return m @ m.conj().T


def h(vec, dims, keep):
    return eig_entropy(marginal(vec, dims, sorted(keep))) if keep else 0.0


def test_qsr_examples():
    # C maximally entangled with R: one qubit must be sent
    psi = tensor(tensor(basis_ket(0), basis_ket(0)), bell_state("phi+"))  # A, B, C, R
    reg = qsr_region(psi, [[0], [1], [2], [3]])
    assert reg.corner == pytest.approx((1.0, 0.0))
    # C maximally entangled with B: nothing to send, one ebit generated
    psi = tensor(tensor(basis_ket(0), bell_state("phi+")), basis_ket(0))  # A, (B, C), R
    reg = qsr_region(psi, [[0], [1], [2], [3]])
    assert reg.corner == pytest.approx((0.0, -1.0), abs=1e-12)
    assert reg.extras["ebit_gain"] == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_qsr_bounds_match_independent_entropies(seed):
    psi = random_pure([2, 2, 2, 2], seed=seed)
    v, dims = psi.vector, (2, 2, 2, 2)
    a, b, c, r = 0, 1, 2, 3
    q = 0.5 * (h(v, dims, [r, b]) + h(v, dims, [c, b]) - h(v, dims, [b]) - h(v, dims, [r, c, b]))
    total = h(v, dims, [c, b]) - h(v, dims, [b])
    reg = qsr_region(psi, [[a], [b], [c], [r]])
    assert reg.corner[0] == pytest.approx(q, abs=1e-9)
    assert reg.corner[0] + reg.corner[1] == pytest.approx(total, abs=1e-9)
    mi = lambda x, y: h(v, dims, [x]) + h(v, dims, [y]) - h(v, dims, [x, y])  # noqa: E731
    # the corner's entanglement equals 1/2 (I(A;C) - I(B;C))
    assert reg.corner[1] == pytest.approx(0.5 * (mi(a, c) - mi(b, c)), abs=1e-9)
    assert reg.extras["ebit_gain"] == pytest.approx(-reg.corner[1], abs=1e-12)
    assert reg.contains(*reg.corner)
    assert not reg.contains(reg.corner[0] - 1e-3, reg.corner[1] + 10)


def test_qsr_grouped_partition():
    psi = random_pure([2, 2, 2, 2, 2], seed=3)
    reg = qsr_region(psi, [[0], [1, 2], [3], [4]])
    assert reg.slack(*reg.corner) == pytest.approx(0, abs=1e-9)


def test_qsr_validation():
    with pytest.raises(TypeError):
        qsr_region(random_density([2, 2, 2, 2], seed=1), [[0], [1], [2], [3]])
    psi = random_pure([2, 2, 2, 2], seed=1)
    with pytest.raises(ValueError):
        qsr_region(psi, [[0], [1], [2]])
    with pytest.raises(ValueError):
        qsr_region(psi, [[0], [1], [2], [2]])


def test_rate_region_validation():
    with pytest.raises(ValueError):
        RateRegion(((1, -1, 0),), (0, 0))
    with pytest.raises(ValueError):
        RateRegion(((1, 0, 1),), (0, 0))
    reg = RateRegion(((2, 0, 1), (1, 1, 1)), (0.5, 0.5))
    assert reg.to_json() == {"halfspaces": [[2.0, 0.0, 1.0], [1.0, 1.0, 1.0]], "corner": [0.5, 0.5]}


def test_code_state_marginal_matches_kraus_action():
    rho_ab = random_density([2, 2], seed=4)
    ch = random_channel(2, 2, seed=5)
    psi = code_state(rho_ab, ch)
    assert psi.dims[0] == 4 and psi.dims[1] == 2 and psi.dims[-1] == 2
    amp = mirror_amplitudes(rho_ab.matrix, 2, 2)
    expected = sum(
        np.outer(x, x.conj()) for x in (np.einsum("oa,rab->rob", k, amp).reshape(-1) for k in ch.kraus)
    )
    got = marginal(psi.vector, psi.dims, [0, 1, 4])
    assert np.allclose(got, expected, atol=1e-12)
    # the reference alone carries the transposed source
    assert np.allclose(marginal(psi.vector, psi.dims, [0]), rho_ab.matrix.T, atol=1e-12)


def test_tradeoff_identity_and_replacer():
    pi = maximally_mixed(2)
    assert tradeoff_region(pi, identity_channel(2)).corner == pytest.approx((1.0, 0.0))
    sigma = random_density([2], seed=1)
    reg = tradeoff_region(pi, replacer(sigma, 2))
    assert reg.corner[0] == pytest.approx(0.0, abs=1e-9)
    assert sum(reg.corner) == pytest.approx(eig_entropy(sigma.matrix), abs=1e-9)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_tradeoff_depolarizing_hits_ea_closed_form(p):
    reg = tradeoff_region(maximally_mixed(2), depolarizing(p))
    assert reg.corner[0] == pytest.approx(ea_isotropic_closed_form(p), abs=1e-9)
    assert sum(reg.corner) == pytest.approx(1.0)


def test_tradeoff_with_environment_to_bob():
    ch = depolarizing(0.3)
    d_e = ch.compressed().n_kraus
    split = Isometry(np.eye(4), (1, 4))
    reg = tradeoff_region(maximally_mixed(2), ch.compressed(), split)
    assert d_e == 4
    assert reg.corner == pytest.approx((1.0, 0.0))
    with pytest.raises(ValueError):
        tradeoff_region(maximally_mixed(2), ch, k=2)


def test_feedback_examples():
    phi = DensityMatrix(bell_state("phi+").density().matrix, (2, 2))
    assert qrst_qsi_feedback(phi, identity_channel(2), 0.0) == pytest.approx(0, abs=1e-12)
    rho = DensityMatrix(np.eye(2) / 2)
    # no side information: max{1/2 I(R;B), H(B) - E}
    assert qrst_qsi_feedback(rho, identity_channel(2), 0.0) == pytest.approx(1.0)
    assert qrst_qsi_feedback(rho, identity_channel(2), 5.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        qrst_qsi_feedback(rho, identity_channel(2), -1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 100_000), e=st.floats(0, 2))
def test_feedback_matches_independent_entropies(seed, e):
    rho_ab = random_density([2, 2], seed=seed)
    ch = random_channel(2, 2, seed=seed + 1)
    amp = mirror_amplitudes(rho_ab.matrix, 2, 2)
    t = np.einsum("oea,rab->robe", np.stack(ch.kraus, axis=1), amp)  # (R, B', B, E)
    v, dims = t.reshape(-1), t.shape
    cmi = h(v, dims, [0, 2]) + h(v, dims, [1, 2]) - h(v, dims, [2]) - h(v, dims, [0, 1, 2])
    cond = h(v, dims, [1, 2]) - h(v, dims, [2])
    assert qrst_qsi_feedback(rho_ab, ch, e) == pytest.approx(max(cmi / 2, cond - e), abs=1e-9)
    assert abs(qrst_qsi_feedback(rho_ab, ch, 0.0) - qrst_qsi_nonfeedback_Ip(rho_ab, ch)) <= 1e-12


def test_ip_search_bounds():
    rho_ab = random_density([2, 2], seed=2)
    ch = random_channel(2, 2, n_kraus=2, seed=3)
    res = ip_search(rho_ab, ch)
    assert res.value <= min(res.endpoint_values) + 1e-12
    # chain rule: I(R;B'E_B|B) >= I(R;B'|B) for every split
    assert res.value >= qrst_qsi_feedback(rho_ab, ch, 10.0) - 1e-9
    assert res.split.out_dims == (2, 2)
    assert qrst_qsi_nonfeedback_Ip(rho_ab, ch, res.split) == pytest.approx(res.value, abs=1e-9)


def test_max_identity_examples():
    assert max_identity_check(identity_channel(2), 2, 2) == pytest.approx((2.0, 2.0), abs=1e-6)
    lhs, rhs = max_identity_check(depolarizing(0.75), 2, 2)
    assert lhs == pytest.approx(0, abs=1e-9) and rhs == pytest.approx(0, abs=1e-9)


def test_max_identity_depolarizing_value():
    p = 0.3
    expected = 2 - scipy_entropy([1 - p] + [p / 3] * 3, base=2)
    lhs, rhs = max_identity_check(depolarizing(p), 2, 2)
    assert lhs == pytest.approx(expected, abs=1e-6)
    assert rhs == pytest.approx(expected, abs=1e-6)


def test_max_identity_dimension_cap():
    with pytest.raises(ValueError):
        max_identity_check(identity_channel(4), 2, 2)


def test_pure_state_type():
    assert isinstance(code_state(maximally_mixed(2), identity_channel(2)), PureState)

from __future__ import annotations

import numpy as np
import pytest

from telecert import linalg, states


def test_max_entangled_frozen_matrix():
    phi = states.max_entangled(2)
    expected = np.zeros((4, 4))
    for i in (0, 3):
        for j in (0, 3):
            expected[i, j] = 0.5
    assert np.allclose(phi.mat, expected, atol=1e-12)
    assert phi.dims == (2, 2)
    red = linalg.partial_trace(phi.mat, (2, 2), [1])
    assert np.allclose(red, np.eye(2) / 2, atol=1e-12)


def test_max_entangled_qutrit_purity():
    phi = states.max_entangled(3)
    assert np.isclose(np.trace(phi.mat @ phi.mat).real, 1.0, atol=1e-12)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        states.DensityMatrix(np.diag([1.2, -0.2]), (2,))
    with pytest.raises(ValueError):
        states.DensityMatrix(np.diag([0.7, 0.7]), (2,))
    with pytest.raises(ValueError):
        states.DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]), (2,))
    with pytest.raises(ValueError):
        states.DensityMatrix(np.eye(4) / 4, (2, 3))


def test_shift_clock_commutation():
    for d in (2, 3):
        x, z = states.shift_clock(d)
        omega = np.exp(2j * np.pi / d)
        assert np.allclose(z @ x, omega * x @ z, atol=1e-12)
        assert np.allclose(np.linalg.matrix_power(x, d), np.eye(d), atol=1e-12)
        assert np.allclose(np.linalg.matrix_power(z, d), np.eye(d), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_bell_measurement_is_orthonormal_and_complete(d):
    m = states.bell_measurement(d)
    assert m.n_outcomes == d * d
    total = sum(m.elements)
    assert np.allclose(total, np.eye(d * d), atol=1e-10)
    for a, ea in enumerate(m.elements):
        assert np.isclose(np.trace(ea).real, 1.0, atol=1e-10)  # rank-1 projector
        assert np.allclose(ea @ ea, ea, atol=1e-10)
        for b in range(a):
            assert np.isclose(np.abs(np.trace(ea @ m.elements[b])), 0.0, atol=1e-10)


def test_bell_measurement_element_zero_is_max_entangled():
    m = states.bell_measurement(2)
    assert np.allclose(m.elements[0], states.max_entangled(2).mat, atol=1e-12)
    assert np.allclose(m.corrections[0], np.eye(2), atol=1e-12)
    # a = j*d + k indexes X^j Z^k
    x, z = states.shift_clock(2)
    assert np.allclose(m.corrections[1], z, atol=1e-12)
    assert np.allclose(m.corrections[2], x, atol=1e-12)
    assert np.allclose(m.corrections[3], x @ z, atol=1e-12)


def test_partial_bell_measurement():
    m = states.partial_bell_measurement(3)
    assert m.n_outcomes == 2
    assert np.allclose(m.elements[0], states.max_entangled(3).mat, atol=1e-12)
    assert np.allclose(m.elements[0] + m.elements[1], np.eye(9), atol=1e-12)


def test_povm_validation():
    eye = np.eye(2, dtype=complex)
    with pytest.raises(ValueError):
        states.Povm((eye, eye), (2,))  # sums to 2I
    with pytest.raises(ValueError):
        states.Povm((np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])), (2,))
    with pytest.raises(ValueError):
        states.Povm((eye / 2, eye / 2), (2,), corrections=(np.diag([1.0, 2.0]), eye))


def test_pauli_ensemble_bloch_vectors():
    e = states.pauli_eigenstate_ensemble("xyz")
    assert len(e) == 6 and e.d == 2
    for i, ax in enumerate("xyz"):
        plus, minus = e.states[2 * i], e.states[2 * i + 1]
        p = states._PAULI[ax]
        assert np.isclose(np.trace(plus @ p).real, 1.0, atol=1e-12)
        assert np.isclose(np.trace(minus @ p).real, -1.0, atol=1e-12)
        assert np.allclose(plus + minus, np.eye(2), atol=1e-12)


def test_tomographic_completeness_of_presets():
    assert states.is_tomographically_complete(states.pauli_eigenstate_ensemble("xyz"))
    assert not states.is_tomographically_complete(states.pauli_eigenstate_ensemble("xz"))
    basis = states.InputEnsemble((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), 2)
    assert not states.is_tomographically_complete(basis)


@pytest.mark.parametrize("d", [2, 3])
def test_random_ensemble_is_complete_pure_and_deterministic(d):
    e1 = states.random_tomo_complete_ensemble(d, seed=7)
    e2 = states.random_tomo_complete_ensemble(d, seed=7)
    assert len(e1) == d * d
    assert states.is_tomographically_complete(e1)
    for w1, w2 in zip(e1, e2):
        assert np.array_equal(w1, w2)
        assert np.isclose(np.trace(w1 @ w1).real, 1.0, atol=1e-10)
    e3 = states.random_tomo_complete_ensemble(d, seed=8)
    assert not np.allclose(e1.states[0], e3.states[0])


def test_flag_state_frozen_entries_and_range():
    rho = states.flag_state(0.4)
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 3] = expected[0, 3] = expected[3, 0] = 0.2
    expected[1, 1] = 0.6
    assert np.allclose(rho.mat, expected, atol=1e-12)
    with pytest.raises(ValueError):
        states.flag_state(1.2)
    with pytest.raises(ValueError):
        states.flag_state(-0.1)


def test_flag_state_negativity_closed_form():
    for p in np.linspace(0.0, 1.0, 11):
        rho = states.flag_state(float(p))
        pt = linalg.partial_transpose(rho.mat, (2, 2), [0])
        expected = (np.sqrt((1 - p) ** 2 + p**2) - (1 - p)) / 2.0
        assert np.isclose(linalg.negative_part_trace(pt), expected, atol=1e-12)


def test_isotropic_state_ppt_boundary():
    # Partial transpose min eigenvalue (1-3p)/4 crosses zero at p = 1/3.
    for p, sign in [(0.3, 1), (1 / 3, 0), (0.4, -1)]:
        rho = states.isotropic_state(p)
        lo = np.linalg.eigvalsh(linalg.partial_transpose(rho.mat, (2, 2), [0]))[0]
        assert np.isclose(lo, (1 - 3 * p) / 4, atol=1e-12)
        if sign:
            assert np.sign(lo) == sign


def test_horodecki_state_frozen_entries():
    a = 0.5
    rho = states.horodecki_state(a)
    assert rho.dims == (3, 3)
    assert np.isclose(rho.mat[6, 6].real, 0.15, atol=1e-12)
    assert np.isclose(rho.mat[0, 4].real, a / (8 * a + 1), atol=1e-12)
    assert np.isclose(rho.mat[6, 8].real, np.sqrt(1 - a * a) / (2 * (8 * a + 1)), atol=1e-12)
    assert np.isclose(np.trace(rho.mat).real, 1.0, atol=1e-12)


@pytest.mark.parametrize("a", [0.2, 0.5, 0.8])
def test_horodecki_state_is_ppt(a):
    rho = states.horodecki_state(a)
    pt = linalg.partial_transpose(rho.mat, (3, 3), [0])
    assert np.linalg.eigvalsh(pt)[0] >= -1e-10


def test_upb_pyramid_vectors_are_orthonormal_and_unextendible_basis_props():
    rho = states.upb_pyramid_state()
    w = np.sort(np.linalg.eigvalsh(rho.mat))
    assert np.allclose(w[:5], 0.0, atol=1e-10)          # five UPB directions removed
    assert np.allclose(w[5:], 0.25, atol=1e-10)          # uniform on the complement
    pt = linalg.partial_transpose(rho.mat, (3, 3), [0])
    assert np.linalg.eigvalsh(pt)[0] >= -1e-10           # PPT despite entanglement


def test_upb_pyramid_adjacent_frame_angle():
    # Adjacent pentagon vectors meet at cos angle (sqrt(5)-1)/2 after normalization.
    h = np.sqrt(1.0 + np.sqrt(5.0)) / 2.0
    nrm = 2.0 / np.sqrt(5.0 + np.sqrt(5.0))
    v = [nrm * np.array([np.cos(2 * np.pi * j / 5), np.sin(2 * np.pi * j / 5), h]) for j in range(5)]
    for j in range(5):
        assert np.isclose(v[j] @ v[j], 1.0, atol=1e-12)
        assert np.isclose(v[j] @ v[(j + 2) % 5], 0.0, atol=1e-12)
        assert np.isclose(v[j] @ v[(j + 1) % 5], (np.sqrt(5.0) - 1.0) / 2.0, atol=1e-12)

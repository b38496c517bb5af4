import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rabipair.linalg import converged_ground, solve
from rabipair.model import ModelParams
from rabipair.observables import (StateExpansion, binary_entropy, entanglement, entanglement_of,
                                  observable_surface, photon_number, photon_number_of,
                                  qubit1_marginal)

from oracles import annihilation

finite = dict(allow_nan=False, allow_infinity=False)


def _normalised(v):
    return v / np.linalg.norm(v)


def test_expansion_layout():
    v = np.zeros(12, dtype=complex)
    v[4 * 2 + 1] = 1.0  # k = 2, channel 2 = up-down
    e = StateExpansion.from_vector(v)
    assert e.coefficients[2, 0, 1] == 1.0
    assert photon_number(e) == 2.0
    np.testing.assert_array_equal(qubit1_marginal(e), [1.0, 0.0])


def test_expansion_validation():
    with pytest.raises(ValueError, match="normalised"):
        StateExpansion.from_vector(np.ones(8))
    with pytest.raises(ValueError, match="shape"):
        StateExpansion(np.ones((2, 4)))


@given(arrays(float, 24, elements=st.floats(-1, 1, **finite)).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_photon_number_against_operator(v):
    v = _normalised(v)
    n_op = np.kron(annihilation(5).T @ annihilation(5), np.eye(4))
    assert photon_number(StateExpansion.from_vector(v)) == pytest.approx(v @ n_op @ v, abs=1e-12)


def test_binary_entropy():
    assert binary_entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert binary_entropy([1.0, 0.0]) == 0.0
    assert binary_entropy([0.9, 0.1]) == pytest.approx(-(0.9 * math.log2(0.9) + 0.1 * math.log2(0.1)))


@given(arrays(float, 12, elements=st.floats(-1, 1, **finite)).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.sampled_from([0, 1]))
@settings(max_examples=50)
def test_definite_first_qubit_has_no_entanglement(field_and_q2, s1):
    c = np.zeros((6, 2, 2))
    c[:, s1, :] = _normalised(field_and_q2).reshape(6, 2)
    assert entanglement(StateExpansion(c)) == 0.0


@given(arrays(float, 24, elements=st.floats(-1, 1, **finite)).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_entanglement_bounds(v):
    e = entanglement(StateExpansion.from_vector(_normalised(v)))
    assert -1e-15 <= e <= 1 + 1e-12


# -- ground-state observables ---------------------------------------------------------

def test_decoupled_ground():
    eig = solve(ModelParams(f=0.0, delta=1.0, n_max=10))
    assert photon_number_of(eig) == (0.0, False)
    assert entanglement_of(eig) == (0.0, False)


def test_zero_splitting_photon_number():
    eig, _ = converged_ground(ModelParams(f=0.7, delta=0.0, phi=0.0), 1e-10)
    val, deg = photon_number_of(eig)
    assert deg
    assert val == pytest.approx(1.96, abs=1e-6)
    ent, _ = entanglement_of(eig)
    assert ent == pytest.approx(1.0, abs=1e-9)


def test_aggregate_is_basis_independent():
    eig, _ = converged_ground(ModelParams(f=0.7, delta=0.0, phi=math.pi / 4), 1e-10)
    assert eig.degenerate_block(0).size == 4
    val, _ = photon_number_of(eig)
    assert val == pytest.approx(2 * 0.49, abs=1e-6)
    # rotating inside the block leaves the aggregate unchanged
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    vecs = eig.vectors.copy()
    vecs[:, :4] = vecs[:, :4] @ q
    rotated = type(eig)(eig.values, vecs, eig.n_max)
    assert photon_number_of(rotated)[0] == pytest.approx(val, abs=1e-12)
    assert entanglement_of(rotated)[0] == pytest.approx(entanglement_of(eig)[0], abs=1e-12)


def test_surfaces():
    phi = np.linspace(0, math.pi, 9)
    s = observable_surface([0.2, 0.6], phi, 1.0, "photon")
    assert s.label == "photon" and s.values.shape == (2, 9)
    np.testing.assert_allclose(s.values[:, 4:], s.values[:, :-4], atol=1e-8)
    assert not s.degenerate.any()
    e = observable_surface([0.0, 0.6], phi, 1.0, "entanglement")
    np.testing.assert_allclose(e.values[0], 0.0, atol=1e-10)
    assert np.all((e.values >= 0) & (e.values <= 1))


def test_zero_splitting_surface_branchwise():
    f = 0.5
    phi = np.linspace(0, math.pi, 13)
    s = observable_surface([f], phi, 0.0, "photon")
    expected = 4 * f * f * np.maximum(np.cos(phi) ** 2, np.sin(phi) ** 2)
    np.testing.assert_allclose(s.values[0], expected, atol=1e-7)
    assert s.degenerate.all()


def test_unknown_observable():
    with pytest.raises(ValueError, match="unknown observable"):
        observable_surface([0.1], [0.0], 1.0, "purity")

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnetconn.errors import ValidationError
from qnetconn.qmath import hermitian_eigen, partial_trace, purify, tensor, vn_entropy

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def random_hermitian(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return x + x.conj().T


def random_qubit_state(rng):
    x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_eigen_identity():
    w, v = hermitian_eigen(np.eye(2))
    assert w.tolist() == [1.0, 1.0]
    assert np.allclose(v, np.eye(2))


def test_eigen_pauli_x():
    w, _ = hermitian_eigen(PAULI_X)
    assert w == pytest.approx([-1.0, 1.0], abs=1e-15)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian_eigen(np.array([[0, 1], [0, 0]], dtype=float))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_eigen_reconstruction(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n)
    w, v = hermitian_eigen(h)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) <= 1e-9
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) <= 1e-9


def test_eigen_batch_matches_lapack():
    rng = np.random.default_rng(3)
    stack = np.array([random_hermitian(rng, 4) for _ in range(50)])
    w, v = hermitian_eigen(stack)
    assert w.shape == (50, 4) and v.shape == (50, 4, 4)
    assert np.allclose(w, np.linalg.eigvalsh(stack), atol=1e-12)


def test_entropy_values():
    assert vn_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)
    assert vn_entropy(np.outer(BELL, BELL.conj())) == pytest.approx(0.0, abs=1e-12)
    # -0.25 log2 0.25 - 0.75 log2 0.75, evaluated by hand
    assert vn_entropy(np.diag([0.25, 0.75])) == pytest.approx(0.8112781244591328, abs=1e-12)


@pytest.mark.parametrize(
    "bad",
    [
        np.diag([0.5, 0.6]),
        np.diag([1.2, -0.2]),
        np.array([[0.5, 0.1], [0.2, 0.5]]),
    ],
)
def test_entropy_rejects_invalid(bad):
    with pytest.raises(ValidationError):
        vn_entropy(bad)


def test_entropy_tolerates_roundoff_negative():
    assert vn_entropy(np.diag([1 + 1e-13, -1e-13])) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([2, 4]))
def test_entropy_bounds_and_unitary_invariance(seed, dim):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    rho /= np.trace(rho).real
    s = vn_entropy(rho)
    assert 0.0 <= s <= math.log2(dim) + 1e-12
    u = random_unitary(rng, dim)
    assert vn_entropy(u @ rho @ u.conj().T) == pytest.approx(s, abs=1e-9)


def test_tensor():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(tensor(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_tensor_trace_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 2)
    assert np.trace(tensor(a, b)) == pytest.approx(np.trace(a) * np.trace(b), abs=1e-12)


def test_partial_trace_product_and_bell():
    rng = np.random.default_rng(1)
    ra, rb = random_qubit_state(rng), random_qubit_state(rng)
    assert np.allclose(partial_trace(tensor(ra, rb), "first"), ra, atol=1e-14)
    assert np.allclose(partial_trace(tensor(ra, rb), "second"), rb, atol=1e-14)
    bell = np.outer(BELL, BELL.conj())
    for keep in ("first", "second"):
        assert np.allclose(partial_trace(bell, keep), np.eye(2) / 2)


def test_partial_trace_wrong_dimension():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(2) / 2, "first")
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4) / 4, "middle")


def test_purify_examples():
    phi = purify(np.diag([1.0, 0.0]))
    assert np.linalg.matrix_rank(phi, tol=1e-9) == 1
    mixed = purify(np.eye(2) / 2)
    assert np.allclose(partial_trace(mixed, "first"), np.eye(2) / 2)
    assert np.allclose(partial_trace(mixed, "second"), np.eye(2) / 2)
    phi = purify(np.diag([0.3, 0.7]))
    psi = np.linalg.eigh(phi)[1][:, -1]
    schmidt = np.linalg.svd(psi.reshape(2, 2), compute_uv=False)
    assert sorted(schmidt) == pytest.approx([math.sqrt(0.3), math.sqrt(0.7)], abs=1e-9)
    assert np.allclose(partial_trace(phi, "first"), np.diag([0.3, 0.7]), atol=1e-9)


def test_purify_round_trip_many_states():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        rho = random_qubit_state(rng)
        phi = purify(rho)
        assert vn_entropy(phi) <= 1e-9
        assert np.max(np.abs(partial_trace(phi, "first") - rho)) <= 1e-9

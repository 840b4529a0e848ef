import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnetconn.channel import (
    BB84_STATES,
    ChannelModel,
    Ensemble,
    apply_channel,
    apply_channel_extended,
    capacity_entangled,
    capacity_product,
    holevo_chi,
    mutual_information,
    project_simplex,
    sample_capacities,
    sample_capacity,
)
from qnetconn.errors import ValidationError
from qnetconn.qmath import purify, vn_entropy

PAULIS = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
BELL = np.outer([1, 0, 0, 1], [1, 0, 0, 1]).astype(complex) / 2


def h2(x):
    return 0.0 if x in (0.0, 1.0) else -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def test_channel_model_validation():
    with pytest.raises(ValidationError):
        ChannelModel("unitary", np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValidationError):
        ChannelModel.depolarizing(1.5)
    with pytest.raises(ValidationError):
        ChannelModel("amplitude")


def test_apply_channel_examples():
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    assert np.allclose(apply_channel(ChannelModel.identity(), rho), rho)
    assert np.allclose(apply_channel(ChannelModel.depolarizing(1.0), rho), np.eye(2) / 2)
    out = apply_channel(ChannelModel.rotation(0.3), np.diag([1.0, 0.0]))
    assert np.trace(out) == pytest.approx(1.0)
    assert np.linalg.eigvalsh(out) == pytest.approx([0.0, 1.0], abs=1e-12)
    with pytest.raises(ValidationError):
        apply_channel(ChannelModel.identity(), np.eye(4) / 4)


def test_extended_channel():
    assert np.allclose(apply_channel_extended(ChannelModel.identity(), BELL), BELL)
    u = ChannelModel.rotation(1.1)
    out = apply_channel_extended(u, BELL)
    big = np.kron(u.unitary, np.eye(2))
    assert np.allclose(out, big @ BELL @ big.conj().T)
    assert vn_entropy(out) == pytest.approx(0.0, abs=1e-9)
    noisy = apply_channel_extended(ChannelModel.depolarizing(0.3), BELL)
    assert np.trace(noisy) == pytest.approx(1.0)
    assert vn_entropy(noisy) > 0
    with pytest.raises(ValidationError):
        apply_channel_extended(ChannelModel.identity(), np.eye(2) / 2)


@pytest.mark.parametrize("q", [0.0, 0.2, 0.5, 1.0])
def test_depolarizing_extension_matches_kraus(q):
    # Kraus form: sqrt(1-3q/4) I and sqrt(q/4) sigma_k
    rng = np.random.default_rng(int(q * 10))
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho4 = x @ x.conj().T
    rho4 /= np.trace(rho4)
    kraus = [math.sqrt(1 - 3 * q / 4) * np.eye(2)] + [math.sqrt(q / 4) * p for p in PAULIS]
    expected = sum(np.kron(k, np.eye(2)) @ rho4 @ np.kron(k, np.eye(2)).conj().T for k in kraus)
    assert np.allclose(ChannelModel.depolarizing(q).extended(rho4), expected, atol=1e-12)


def test_holevo_examples():
    ident = ChannelModel.identity()
    assert holevo_chi(Ensemble([BB84_STATES[0]], [1.0]), ident) == pytest.approx(0.0, abs=1e-12)
    # uniform BB84 mixture is I/2 with pure components
    assert holevo_chi(Ensemble(BB84_STATES, np.full(4, 0.25)), ident) == pytest.approx(1.0, abs=1e-12)
    assert holevo_chi(Ensemble(BB84_STATES[:2], [0.5, 0.5]), ChannelModel.depolarizing(1.0)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        Ensemble(BB84_STATES[:2], [0.6, 0.6])
    with pytest.raises(ValidationError):
        Ensemble(BB84_STATES[:2], [1.2, -0.2])
    with pytest.raises(ValidationError):
        Ensemble((), [])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0, 1), q=st.floats(0, 1))
def test_holevo_concave_in_p(seed, lam, q):
    rng = np.random.default_rng(seed)
    n = ChannelModel.depolarizing(q)
    p1, p2 = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    mix = lam * p1 + (1 - lam) * p2
    mix /= mix.sum()

    def chi(p):
        return holevo_chi(Ensemble(BB84_STATES, p), n)

    assert chi(mix) >= lam * chi(p1) + (1 - lam) * chi(p2) - 1e-9


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_project_simplex(v):
    p = project_simplex(v)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0)


def test_capacity_product_examples():
    c, p = capacity_product(ChannelModel.identity())
    assert c == pytest.approx(1.0, abs=1e-6)
    assert p.sum() == pytest.approx(1.0)
    assert capacity_product(ChannelModel.depolarizing(1.0))[0] == pytest.approx(0.0, abs=1e-9)


def test_capacity_product_two_states_against_grid_oracle():
    # chi(p) = h(p) for {|0>,|1>} through the identity; scan p on a fine grid
    grid = np.linspace(0, 1, 10001)
    vals = [h2(x) for x in grid]
    k = int(np.argmax(vals))
    c, p = capacity_product(ChannelModel.identity(), BB84_STATES[:2])
    assert c == pytest.approx(vals[k], abs=1e-6)
    assert p == pytest.approx([grid[k], 1 - grid[k]], abs=1e-6)


@pytest.mark.parametrize("q", [0.1, 0.3, 0.7])
def test_capacity_product_depolarizing_closed_form(q):
    # BB84 states through a depolarizing channel: 1 - h(q/2) at the uniform mixture
    assert capacity_product(ChannelModel.depolarizing(q))[0] == pytest.approx(1 - h2(q / 2), abs=1e-6)


def test_capacity_entangled_identity_and_rotations():
    c, rho = capacity_entangled(ChannelModel.identity())
    assert c == pytest.approx(2.0, abs=1e-6)
    assert np.allclose(rho, np.eye(2) / 2, atol=1e-6)
    for theta in (0.3, math.pi / 7, 2.5):
        assert capacity_entangled(ChannelModel.rotation(theta))[0] == pytest.approx(c, abs=1e-9)


def _oracle_mutual_information(q, r, theta, phi):
    """Bloch state -> I(A:B) with numpy eigh and explicit depolarizing Kraus operators."""
    x, y, z = r * math.sin(theta) * math.cos(phi), r * math.sin(theta) * math.sin(phi), r * math.cos(theta)
    rho = 0.5 * (np.eye(2) + x * PAULIS[0] + y * PAULIS[1] + z * PAULIS[2])
    kraus = [math.sqrt(1 - 3 * q / 4) * np.eye(2)] + [math.sqrt(q / 4) * p for p in PAULIS]

    def s(m):
        w = np.clip(np.linalg.eigvalsh(m), 0, None)
        w = w[w > 1e-15]
        return float(-(w * np.log2(w)).sum())

    w, v = np.linalg.eigh(rho)
    psi = sum(math.sqrt(max(w[k], 0)) * np.kron(v[:, k], np.eye(2)[k]) for k in range(2))
    phi_rho = np.outer(psi, psi.conj())
    out = sum(k @ rho @ k.conj().T for k in kraus)
    ext = sum(np.kron(k, np.eye(2)) @ phi_rho @ np.kron(k, np.eye(2)).conj().T for k in kraus)
    return s(rho) + s(out) - s(ext)


def test_capacity_entangled_depolarizing_against_grid_oracle():
    q = 0.5
    # radial resolution 0.01; the channel is rotation-covariant so a coarse angular grid suffices
    best = max(
        _oracle_mutual_information(q, r, theta, phi)
        for r in np.arange(0, 1.0001, 0.01)
        for theta in np.arange(0, math.pi + 1e-9, 0.1 * math.pi)
        for phi in (0.0, 0.5 * math.pi)
    )
    c, _ = capacity_entangled(ChannelModel.depolarizing(q))
    assert 0 < c < 2
    assert c == pytest.approx(best, abs=1e-3)


@pytest.mark.parametrize("q", [0.0, 0.25, 0.6, 1.0])
def test_entangled_dominates_product(q):
    n = ChannelModel.depolarizing(q)
    assert capacity_entangled(n)[0] >= capacity_product(n)[0] - 1e-9


def test_capacity_bounds_random_unitaries():
    rng = np.random.default_rng(5)
    for theta in rng.uniform(0, 2 * math.pi, 3):
        n = ChannelModel.rotation(theta)
        assert capacity_product(n)[0] == pytest.approx(1.0, abs=1e-9)


def test_sample_capacity_optimized_unitary():
    rng = np.random.default_rng(0)
    for _ in range(5):
        s = sample_capacity("product", "random_rotation", "optimized", rng)
        assert s.value == pytest.approx(1.0, abs=1e-9)
        assert s.probs is None and s.theta is not None


def test_sample_capacity_random_p_bounds():
    rng = np.random.default_rng(1)
    prod = sample_capacities("product", "random_rotation", "random", rng, 100_000)
    assert prod.min() >= 0 and prod.max() <= 1


def test_sample_capacity_entangled_is_twice_mixture_entropy():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = sample_capacity("entangled", "random_rotation", "random", rng)
        avg = sum(p * st_ for p, st_ in zip(s.probs, BB84_STATES))
        n = ChannelModel.rotation(s.theta)
        three_terms = vn_entropy(avg) + vn_entropy(n(avg)) - vn_entropy(n.extended(purify(avg)))
        assert s.value == pytest.approx(three_terms, abs=1e-9)
        assert s.value == pytest.approx(2 * vn_entropy(avg), abs=1e-9)


def test_sample_capacity_reproducible_and_batch_consistent():
    for mode in ("product", "entangled"):
        a = [sample_capacity(mode, "random_rotation", "random", np.random.default_rng(9)).value for _ in range(2)]
        assert a[0] == a[1]
        rng = np.random.default_rng(11)
        seq = [sample_capacity(mode, "random_rotation", "random", rng).value for _ in range(30)]
        batch = sample_capacities(mode, "random_rotation", "random", np.random.default_rng(11), 30)
        assert batch == pytest.approx(seq, abs=1e-12)


def test_sample_capacity_fixed_non_unitary_channel():
    rng = np.random.default_rng(4)
    n = ChannelModel.depolarizing(0.4)
    seq = [sample_capacity("entangled", n, "random", rng).value for _ in range(5)]
    batch = sample_capacities("entangled", n, "random", np.random.default_rng(4), 5)
    assert batch == pytest.approx(seq, abs=1e-12)
    assert all(0 <= v <= 2 for v in seq)


def test_sample_capacity_bad_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError):
        sample_capacity("quantum", "random_rotation", "random", rng)
    with pytest.raises(ValidationError):
        sample_capacity("product", "wobbly", "random", rng)
    with pytest.raises(ValidationError):
        sample_capacity("product", "random_rotation", "sometimes", rng)


def test_mutual_information_stack_shape():
    vals = mutual_information(ChannelModel.identity(), np.stack([np.eye(2) / 2, np.diag([1.0, 0.0])]))
    assert vals == pytest.approx([2.0, 0.0], abs=1e-12)

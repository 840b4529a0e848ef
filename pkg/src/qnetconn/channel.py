"""Qubit channels, Holevo quantity and the two classical capacities.

The product-state capacity maximises the Holevo quantity over input
probabilities for a fixed set of candidate states (the BB84 states by
default). The entanglement-assisted capacity maximises the quantum mutual
information ``S(rho) + S(N(rho)) - S((N x I)(Phi_rho))`` over the Bloch ball.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from qnetconn.errors import NumericalError, ValidationError
from qnetconn.qmath import (
    entropy_unchecked,
    hermitian_eigen,
    purify_unchecked,
    tensor,
    validate_density,
)

I2 = np.eye(2, dtype=complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KETP = np.array([1, 1], dtype=complex) / math.sqrt(2)
KETM = np.array([1, -1], dtype=complex) / math.sqrt(2)


def ket_to_dm(ket):
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


BB84_STATES = tuple(ket_to_dm(k) for k in (KET0, KET1, KETP, KETM))

PRODUCT = "product"
ENTANGLED = "entangled"
MODES = (PRODUCT, ENTANGLED)


def rotation(theta):
    """Real (lossless) rotation matrix by angle ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Either a unitary ``U rho U^dag`` or a depolarizing ``(1-q) rho + q I/2`` map."""

    kind: str
    unitary: np.ndarray = field(default=None, repr=False)
    q: float = 0.0

    def __post_init__(self):
        if self.kind == "unitary":
            u = np.asarray(self.unitary, dtype=complex)
            if u.shape != (2, 2):
                raise ValidationError(f"unitary must be 2x2, got {u.shape}")
            if np.max(np.abs(u.conj().T @ u - I2)) > 1e-10:
                raise ValidationError("matrix is not unitary within 1e-10")
            object.__setattr__(self, "unitary", u)
        elif self.kind == "depolarizing":
            if not 0.0 <= self.q <= 1.0:
                raise ValidationError(f"depolarizing q must lie in [0, 1], got {self.q}")
        else:
            raise ValidationError(f"unknown channel kind {self.kind!r}")

    @classmethod
    def identity(cls):
        return cls("unitary", I2)

    @classmethod
    def rotation(cls, theta):
        return cls("unitary", rotation(theta))

    @classmethod
    def depolarizing(cls, q):
        return cls("depolarizing", q=float(q))

    @property
    def is_unitary(self):
        return self.kind == "unitary"

    def __call__(self, rho):
        """Apply the channel to a qubit state or a stack of qubit states."""
        rho = np.asarray(rho)
        if self.kind == "unitary":
            u = self.unitary
            return u @ rho @ u.conj().T
        return (1.0 - self.q) * rho + self.q * np.trace(rho, axis1=-2, axis2=-1)[..., None, None] * I2 / 2

    def extended(self, rho4):
        """Apply ``N x I`` to two-qubit state(s), channel on the first factor."""
        rho4 = np.asarray(rho4)
        if self.kind == "unitary":
            u = tensor(self.unitary, I2)
            return u @ rho4 @ u.conj().T
        r = rho4.reshape(rho4.shape[:-2] + (2, 2, 2, 2))
        ref = np.einsum("...ijil->...jl", r)
        mixed = np.einsum("ik,...jl->...ijkl", I2 / 2, ref).reshape(rho4.shape)
        return (1.0 - self.q) * rho4 + self.q * mixed

    def describe(self):
        if self.kind == "depolarizing":
            return f"depolarizing(q={self.q!r})"
        return "unitary"


def apply_channel(n, rho):
    r = validate_density(rho, dim=2)
    return n(r)


def apply_channel_extended(n, rho4):
    r = validate_density(rho4, dim=4)
    return n.extended(r)


@dataclass(frozen=True, eq=False)
class Ensemble:
    states: tuple
    probs: np.ndarray

    def __post_init__(self):
        states = tuple(validate_density(s, dim=2) for s in self.states)
        probs = np.asarray(self.probs, dtype=float)
        if len(states) == 0 or probs.shape != (len(states),):
            raise ValidationError("ensemble needs matching, non-empty states and probs")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValidationError("ensemble probabilities must be >= 0 and sum to 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)


def _chi_batch(n, states, probs):
    """Holevo quantity for a batch of probability vectors ``probs[..., k]``."""
    stack = np.stack(states)
    outs = n(stack)
    component = entropy_unchecked(outs)
    avg = np.einsum("...k,kij->...ij", probs, stack)
    return entropy_unchecked(n(avg)) - probs @ component


def holevo_chi(ensemble, n):
    """chi = S(N(sum p_i rho_i)) - sum p_i S(N(rho_i)), clamped at zero."""
    chi = float(_chi_batch(n, ensemble.states, ensemble.probs))
    if chi < -1e-9:
        raise NumericalError(f"negative Holevo quantity {chi}", best=chi)
    return max(chi, 0.0)


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def simplex_grid(k, resolution):
    """All points of the k-simplex whose coordinates are multiples of ``resolution``."""
    m = int(round(1.0 / resolution))

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return np.array(list(compositions(m, k)), dtype=float) / m


def capacity_product(n, state_set=BB84_STATES, tol=1e-10, max_iter=500, grad_step=1e-6):
    """Maximise the Holevo quantity over input probabilities.

    Projected gradient ascent with central-difference gradients and
    backtracking; when a step cannot be found the best point of a 0.02
    simplex grid is used as a restart. Returns ``(capacity, p_star)``.
    """
    states = tuple(validate_density(s, dim=2) for s in state_set)
    if not states:
        raise ValidationError("state_set must be non-empty")
    k = len(states)

    def f(p):
        return float(_chi_batch(n, states, p))

    p = np.full(k, 1.0 / k)
    best = f(p)
    if k == 1:
        return max(best, 0.0), p
    used_grid = False
    step = 1.0
    for _ in range(max_iter):
        grad = np.empty(k)
        for i in range(k):
            e = np.zeros(k)
            e[i] = grad_step
            grad[i] = (f(p + e) - f(p - e)) / (2 * grad_step)
        grad -= grad.mean()
        improved = False
        while step > 1e-12:
            cand = project_simplex(p + step * grad)
            val = f(cand)
            if val > best:
                improved = True
                break
            step *= 0.5
        if improved:
            gain = val - best
            p, best = cand, val
            step = min(step * 2.0, 1.0)
            if gain < tol:
                break
            continue
        if used_grid:
            break
        # stalled: compare against a coarse grid before giving up
        used_grid = True
        grid = simplex_grid(k, 0.02)
        vals = _chi_batch(n, states, grid)
        j = int(np.argmax(vals))
        if vals[j] > best + tol:
            p, best = grid[j], float(vals[j])
            step = 1.0
        else:
            break
    else:
        raise NumericalError("capacity_product hit its iteration cap", best=(max(best, 0.0), p))
    return min(max(best, 0.0), 1.0), p


def bloch_state(r, theta, phi):
    """Qubit density matrix (or stack) for Bloch coordinates."""
    r, theta, phi = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float), np.asarray(phi, float))
    x = r * np.sin(theta) * np.cos(phi)
    y = r * np.sin(theta) * np.sin(phi)
    z = r * np.cos(theta)
    rho = np.empty(r.shape + (2, 2), dtype=complex)
    rho[..., 0, 0] = (1 + z) / 2
    rho[..., 1, 1] = (1 - z) / 2
    rho[..., 0, 1] = (x - 1j * y) / 2
    rho[..., 1, 0] = (x + 1j * y) / 2
    return rho


def mutual_information(n, rho):
    """S(rho) + S(N(rho)) - S((N x I)(Phi_rho)) for a state or stack of states."""
    rho = np.asarray(rho, dtype=complex)
    phi = purify_unchecked(rho)
    return entropy_unchecked(rho) + entropy_unchecked(n(rho)) - entropy_unchecked(n.extended(phi))


def capacity_entangled(n, tol=1e-10, resolution=0.05, max_iter=2000):
    """Entanglement-assisted capacity over the qubit Bloch ball.

    A grid with ``1/resolution`` steps per coordinate seeds coordinate
    descent with step halving. Returns ``(capacity, rho_star)``.
    """
    m = int(round(1.0 / resolution))
    r = np.linspace(0.0, 1.0, m + 1)
    theta = np.linspace(0.0, math.pi, m + 1)
    phi = np.linspace(0.0, 2 * math.pi, m, endpoint=False)
    rr, tt, pp = np.meshgrid(r, theta, phi, indexing="ij")
    vals = mutual_information(n, bloch_state(rr, tt, pp))
    j = int(np.argmax(vals))
    x = np.array([rr.flat[j], tt.flat[j], pp.flat[j]])
    best = float(vals.flat[j])

    def f(x):
        return float(mutual_information(n, bloch_state(*x)))

    lo = np.array([0.0, 0.0, -np.inf])
    hi = np.array([1.0, math.pi, np.inf])
    steps = np.array([resolution, resolution * math.pi, resolution * 2 * math.pi])
    for _ in range(max_iter):
        moved = False
        for i in range(3):
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[i] = min(max(cand[i] + sign * steps[i], lo[i]), hi[i])
                val = f(cand)
                if val > best + tol:
                    x, best, moved = cand, val, True
                    break
        if not moved:
            steps *= 0.5
            if np.all(steps < 1e-9):
                break
    else:
        raise NumericalError("capacity_entangled hit its iteration cap", best=(best, bloch_state(*x)))
    return min(max(best, 0.0), 2.0), bloch_state(*x)


@dataclass(frozen=True)
class CapacitySample:
    mode: str
    value: float
    theta: float = None
    probs: tuple = None


_UNITARY_CAPACITY = {}


def _optimized_capacity(mode, n):
    if n.is_unitary:
        # every capacity here is invariant under a unitary channel
        if mode not in _UNITARY_CAPACITY:
            ident = ChannelModel.identity()
            fn = capacity_product if mode == PRODUCT else capacity_entangled
            _UNITARY_CAPACITY[mode] = fn(ident)[0]
        return _UNITARY_CAPACITY[mode]
    if mode == PRODUCT:
        return capacity_product(n)[0]
    return capacity_entangled(n)[0]


def _draw(channel_family, p_mode, rng):
    if channel_family == "random_rotation":
        theta = float(rng.uniform(0.0, 2 * math.pi))
        n = ChannelModel.rotation(theta)
    elif isinstance(channel_family, ChannelModel):
        theta, n = None, channel_family
    else:
        raise ValidationError(f"unknown channel family {channel_family!r}")
    if p_mode == "random":
        probs = rng.dirichlet(np.ones(len(BB84_STATES)))
    elif p_mode == "optimized":
        probs = None
    else:
        raise ValidationError(f"unknown p_mode {p_mode!r}")
    return theta, n, probs


def _evaluate(mode, n, probs):
    if probs is None:
        return float(_optimized_capacity(mode, n))
    if mode == PRODUCT:
        return float(_chi_batch(n, BB84_STATES, probs))
    avg = np.einsum("k,kij->ij", probs, np.stack(BB84_STATES))
    return float(mutual_information(n, avg))


def _check_mode(mode):
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")


def sample_capacity(mode, channel_family, p_mode, rng):
    """Draw one stochastic capacity realisation.

    ``channel_family`` is ``"random_rotation"`` or a fixed :class:`ChannelModel`;
    ``p_mode`` is ``"random"`` (Dirichlet(1,...,1) over the BB84 ensemble) or
    ``"optimized"``. ``rng`` is a ``numpy.random.Generator`` and is advanced.
    """
    _check_mode(mode)
    theta, n, probs = _draw(channel_family, p_mode, rng)
    value = min(max(_evaluate(mode, n, probs), 0.0), 1.0 if mode == PRODUCT else 2.0)
    return CapacitySample(mode, value, theta, None if probs is None else tuple(probs))


def sample_capacities(mode, channel_family, p_mode, rng, count):
    """``count`` successive draws of :func:`sample_capacity`, evaluated in one batch."""
    _check_mode(mode)
    draws = [_draw(channel_family, p_mode, rng) for _ in range(count)]
    out = np.empty(count)
    if count == 0:
        return out
    if p_mode == "optimized":
        for i, (_, n, _) in enumerate(draws):
            out[i] = _optimized_capacity(mode, n)
    else:
        stack = np.stack(BB84_STATES)
        probs = np.array([d[2] for d in draws])
        avg = np.einsum("bk,kij->bij", probs, stack)
        us = np.stack([d[1].unitary if d[1].is_unitary else I2 for d in draws])
        if all(d[1].is_unitary for d in draws):
            ua = us @ avg @ np.conj(np.swapaxes(us, -1, -2))
            if mode == PRODUCT:
                outs = us[:, None] @ stack[None] @ np.conj(np.swapaxes(us, -1, -2))[:, None]
                comp = entropy_unchecked(outs)
                out = entropy_unchecked(ua) - np.sum(probs * comp, axis=-1)
            else:
                phi = purify_unchecked(avg)
                ue = np.einsum("bij,kl->bikjl", us, I2).reshape(-1, 4, 4)
                out = (
                    entropy_unchecked(avg)
                    + entropy_unchecked(ua)
                    - entropy_unchecked(ue @ phi @ np.conj(np.swapaxes(ue, -1, -2)))
                )
        else:
            out = np.array([_evaluate(mode, d[1], d[2]) for d in draws])
    return np.clip(out, 0.0, 1.0 if mode == PRODUCT else 2.0)

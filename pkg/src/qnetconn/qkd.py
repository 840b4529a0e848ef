"""BB84 faint-pulse link model and the learned link transmission weight."""
from dataclasses import dataclass, fields, replace
import math

import numpy as np

from qnetconn.channel import sample_capacities
from qnetconn.errors import ValidationError


@dataclass(frozen=True)
class LinkPhysics:
    f_ref: float = 1.0
    mu: float = 1.0
    eta: float = 0.1
    p_opt: float = 0.01
    p_dark: float = 1e-5
    n_det: int = 2
    t_link: float = 1.0

    def __post_init__(self):
        errors = self.problems()
        if errors:
            raise ValidationError("; ".join(errors))

    def problems(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                out.append(f"{f.name} must be a finite number, got {v!r}")
        if out:
            return out
        if self.f_ref <= 0:
            out.append(f"f_ref must be > 0, got {self.f_ref}")
        if self.mu <= 0:
            out.append(f"mu must be > 0, got {self.mu}")
        if not 0 < self.eta <= 1:
            out.append(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 <= self.p_opt < 1:
            out.append(f"p_opt must lie in [0, 1), got {self.p_opt}")
        if not 0 <= self.p_dark < 1:
            out.append(f"p_dark must lie in [0, 1), got {self.p_dark}")
        if int(self.n_det) != self.n_det or self.n_det < 1:
            out.append(f"n_det must be a positive integer, got {self.n_det}")
        if not 0 <= self.t_link <= 1:
            out.append(f"t_link must lie in [0, 1], got {self.t_link}")
        return out

    @property
    def sending_rate(self):
        return self.f_ref * self.mu


@dataclass(frozen=True)
class RateBreakdown:
    r_s: float
    r_raw: float
    r_sift: float
    r_opt: float
    r_det: float
    r_err: float


def rate_breakdown(p):
    r_raw = p.f_ref * p.mu * p.t_link * p.eta
    r_sift = r_raw / 2
    r_opt = r_sift * p.p_opt
    r_det = 0.25 * p.f_ref * p.p_dark * p.n_det
    return RateBreakdown(p.sending_rate, r_raw, r_sift, r_opt, r_det, r_opt + r_det)


def qber(p):
    """Approximate QBER p_opt + p_dark*n / (2 mu t eta), capped at 0.5.

    A link that delivers nothing (mu*t*eta == 0) is pinned at 0.5.
    """
    denom = p.mu * p.t_link * p.eta
    if denom <= 0:
        return 0.5
    return min(p.p_opt + 0.5 * p.p_dark * p.n_det / denom, 0.5)


def binary_entropy(x):
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def secret_key_fraction(qber_value):
    if not 0.0 <= qber_value <= 0.5:
        raise ValidationError(f"qber must lie in [0, 0.5], got {qber_value}")
    return max(0.0, 1.0 - 2.0 * binary_entropy(qber_value))


def edge_weight(p, t_link):
    return secret_key_fraction(qber(replace(p, t_link=t_link)))


@dataclass(frozen=True)
class WeightLearner:
    """EMA settings: ``W <- alpha * w + (1 - alpha) * W`` over ``iterations`` periods
    of ``window`` capacity samples each."""

    alpha: float = 0.5
    iterations: int = 100
    window: int = 1
    rate_scale: float = 0.25

    def __post_init__(self):
        errors = self.problems()
        if errors:
            raise ValidationError("; ".join(errors))

    def problems(self):
        out = []
        if not (isinstance(self.alpha, (int, float)) and 0 < self.alpha < 1):
            out.append(f"alpha must lie in (0, 1), got {self.alpha!r}")
        for name in ("iterations", "window"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                out.append(f"{name} must be a positive integer, got {v!r}")
        if not (isinstance(self.rate_scale, (int, float)) and self.rate_scale > 0 and math.isfinite(self.rate_scale)):
            out.append(f"rate_scale must be > 0, got {self.rate_scale!r}")
        return out

    @property
    def sample_count(self):
        return 1 + self.iterations * self.window


def ema_trajectory(w0, ratios, alpha):
    """Trajectory ``[W_0, W_1, ...]`` for per-period success ratios."""
    traj = [float(w0)]
    w = float(w0)
    for r in ratios:
        w = alpha * float(r) + (1 - alpha) * w
        traj.append(w)
    return traj


def ema_from_samples(sending_rate, samples, learner):
    """Run the link-weight EMA against a pre-drawn capacity stream.

    ``samples`` holds ``1 + iterations * window`` capacities; the first one
    decides the initial weight, the rest are consumed ``window`` at a time.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (learner.sample_count,):
        raise ValidationError(f"expected {learner.sample_count} samples, got {samples.shape}")
    demand = sending_rate * learner.rate_scale
    ok = demand < samples
    ratios = ok[1:].reshape(learner.iterations, learner.window).mean(axis=1)
    traj = ema_trajectory(1.0 if ok[0] else 0.0, ratios, learner.alpha)
    return traj[-1], traj


def learn_t_link(p, learner, mode, channel_family, p_mode, rng):
    """Learn t_link for one link; returns ``(t_link, trajectory)``.

    ``rng`` is a ``numpy.random.Generator``; identical generator state gives
    an identical result.
    """
    samples = sample_capacities(mode, channel_family, p_mode, rng, learner.sample_count)
    return ema_from_samples(p.sending_rate, samples, learner)

"""Physically weighted topologies, node-removal harm and mu-budget recovery.

Each link draws its capacity stream from a generator seeded by
``(master_seed, i, j)`` only. The same link therefore sees the same random
draws whatever mu, group, removal or channel mode is being evaluated, so
differences between sweep points come from the physics and not from
resampling noise, and evaluation order can never change a result.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from qnetconn.channel import MODES, ChannelModel, sample_capacities
from qnetconn.errors import ValidationError
from qnetconn.qkd import LinkPhysics, WeightLearner, edge_weight, ema_from_samples
from qnetconn.spectral import WeightedTopology, algebraic_connectivity

# node-level fields that may differ per node; a link uses the endpoint mean
NODE_FIELDS = ("f_ref", "mu", "eta", "p_opt", "p_dark")


@dataclass(frozen=True)
class LinkEvalConfig:
    physics: LinkPhysics = field(default_factory=LinkPhysics)
    learner: WeightLearner = field(default_factory=WeightLearner)
    mode: str = "product"
    channel_family: object = "random_rotation"
    p_mode: str = "random"
    master_seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.p_mode not in ("random", "optimized"):
            raise ValidationError(f"p_mode must be 'random' or 'optimized', got {self.p_mode!r}")
        if not (self.channel_family == "random_rotation" or isinstance(self.channel_family, ChannelModel)):
            raise ValidationError(f"unknown channel family {self.channel_family!r}")
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.master_seed!r}")


def link_rng(master_seed, i, j):
    i, j = min(i, j), max(i, j)
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(i, j)))


@lru_cache(maxsize=4096)
def _stream(master_seed, i, j, mode, channel_family, p_mode, count):
    out = sample_capacities(mode, channel_family, p_mode, link_rng(master_seed, i, j), count)
    out.setflags(write=False)
    return out


def capacity_stream(cfg, i, j):
    """Capacity samples used to learn link ``(i, j)`` under ``cfg``."""
    return _stream(
        cfg.master_seed, min(i, j), max(i, j), cfg.mode, cfg.channel_family, cfg.p_mode, cfg.learner.sample_count
    )


def node_value(g, cfg, node, name):
    return g.overrides.get(node, {}).get(name, getattr(cfg.physics, name))


def link_physics(g, cfg, i, j):
    values = {name: 0.5 * (node_value(g, cfg, i, name) + node_value(g, cfg, j, name)) for name in NODE_FIELDS}
    return replace(cfg.physics, **values)


@dataclass(frozen=True)
class LinkResult:
    i: int
    j: int
    physics: LinkPhysics
    t_link: float
    weight: float
    trajectory: tuple


def evaluate_link(g, cfg, i, j):
    phys = link_physics(g, cfg, i, j)
    t_link, traj = ema_from_samples(phys.sending_rate, capacity_stream(cfg, i, j), cfg.learner)
    return LinkResult(i, j, replace(phys, t_link=t_link), t_link, edge_weight(phys, t_link), tuple(traj))


def weigh_topology(g, cfg):
    """Copy of ``g`` with every edge weight learned from link physics."""
    weights = {(i, j): evaluate_link(g, cfg, i, j).weight for i, j, _ in g.edges}
    return g.with_weights(weights)


def physical_connectivity(g, cfg):
    """Fiedler value of ``g`` after learning its link weights."""
    return algebraic_connectivity(weigh_topology(g, cfg))[0]


def remove_node(g, node):
    if node not in g.nodes:
        raise ValidationError(f"node {node} is not in the topology")
    return WeightedTopology(
        [n for n in g.nodes if n != node],
        [e for e in g.edges if node not in e[:2]],
        {k: v for k, v in g.overrides.items() if k != node},
    )


@dataclass(frozen=True)
class HarmEntry:
    node: int
    lambda2: float
    delta: float


@dataclass(frozen=True)
class HarmRanking:
    baseline_lambda2: float
    entries: tuple

    @property
    def order(self):
        return [e.node for e in self.entries]


def _connectivity(g, cfg):
    if cfg is None:
        return algebraic_connectivity(g)[0]
    return physical_connectivity(g, cfg)


def harm_ranking(g, candidates, cfg=None):
    """Rank candidate nodes by the Fiedler value left after removing each one.

    Most harmful first; ties are broken by node id. With ``cfg=None`` the
    weights already on ``g`` are used as-is.
    """
    candidates = sorted(set(candidates))
    if not candidates:
        raise ValidationError("harm_ranking needs at least one candidate")
    if g.n - 1 < 2:
        raise ValidationError("removing a node must leave at least 2 nodes")
    base = _connectivity(g, cfg)
    entries = []
    for node in candidates:
        lam = _connectivity(remove_node(g, node), cfg)
        entries.append(HarmEntry(node, lam, lam - base))
    entries.sort(key=lambda e: (e.lambda2, e.node))
    return HarmRanking(base, tuple(entries))


@dataclass(frozen=True)
class RecoveryPlan:
    removed_node: int
    group: tuple
    target_lambda2: float
    steps: tuple
    total_mu_spent: float
    achieved_lambda2: float
    feasible: bool
    trajectory: tuple = ()


def recovery_plan(g, removed, candidate_groups, mu_step, mu_cap, target, cfg, tol=1e-12):
    """Greedy mu increments per candidate group after removing ``removed``.

    Each step raises every member's mu by ``mu_step`` and re-learns the link
    weights, stopping once the Fiedler value reaches ``target`` or a member
    would exceed ``mu_cap``. Cost is ``mu_step * len(group)`` per step.
    Returns one :class:`RecoveryPlan` per group, in input order.
    """
    if not target > 0:
        raise ValidationError(f"target must be > 0, got {target}")
    if not mu_step > 0:
        raise ValidationError(f"mu_step must be > 0, got {mu_step}")
    reduced = remove_node(g, removed)
    plans = []
    for group in candidate_groups:
        group = tuple(group)
        if not group or any(n not in reduced.nodes for n in group):
            raise ValidationError(f"group {list(group)} must be non-empty and avoid the removed node")
        mus = {n: node_value(reduced, cfg, n, "mu") for n in group}
        current = reduced
        lam = physical_connectivity(current, cfg)
        best = lam
        traj = [(0.0, lam)]
        steps = []
        spent = 0.0
        while lam < target - tol:
            if any(m + mu_step > mu_cap + 1e-12 for m in mus.values()):
                break
            for n in group:
                mus[n] += mu_step
                current = current.with_override([n], mu=mus[n])
            steps.append((group, mu_step))
            spent += mu_step * len(group)
            lam = physical_connectivity(current, cfg)
            best = max(best, lam)
            traj.append((spent, lam))
        plans.append(
            RecoveryPlan(removed, group, target, tuple(steps), spent, best, best >= target - tol, tuple(traj))
        )
    return plans

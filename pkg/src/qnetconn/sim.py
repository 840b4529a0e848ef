"""Grid experiments: group mu sweeps, removal sweeps, capacity curves.

A sweep point is ``(mode, group, mu, removal)``. Its value depends only on
the config and ``master_seed``, so points can be evaluated in any order or
in parallel and rows are sorted afterwards.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import hashlib
import json
import math
import os
import tempfile

import numpy as np

from qnetconn import __version__
from qnetconn.channel import MODES, ChannelModel, capacity_entangled, capacity_product, sample_capacity
from qnetconn.errors import ValidationError
from qnetconn.qkd import LinkPhysics, WeightLearner
from qnetconn.resilience import LinkEvalConfig, physical_connectivity, remove_node
from qnetconn.spectral import WeightedTopology, build_grid

TABLE_COLUMNS = ("experiment", "mode", "group", "mu", "removed", "lambda2", "seed", "iterations", "window")

GRID_GROUPS = ((5,), (2, 4, 6, 8), (1, 3, 7, 9))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "sweep"
    grid: tuple = (3, 3)
    nodes: tuple = None
    edges: tuple = None
    node_overrides: dict = field(default_factory=dict)
    physics: LinkPhysics = field(default_factory=LinkPhysics)
    learner: WeightLearner = field(default_factory=WeightLearner)
    channel_family: str = "random_rotation"
    p_mode: str = "random"
    groups: tuple = GRID_GROUPS
    mus: tuple = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)
    modes: tuple = MODES
    removals: tuple = ()
    master_seed: int = 0
    output: str = None
    delimiter: str = ","

    def problems(self):
        out = []
        try:
            g = self.topology()
        except ValidationError as exc:
            return [f"topology: {exc}"]
        nodes = set(g.nodes)
        for grp in self.groups:
            missing = [n for n in grp if n not in nodes]
            if missing:
                out.append(f"sweep.groups: nodes {missing} are not in the topology")
        for mu in self.mus:
            if not (isinstance(mu, (int, float)) and math.isfinite(mu) and mu > 0):
                out.append(f"sweep.mus: mu values must be positive and finite, got {mu!r}")
        if not self.mus:
            out.append("sweep.mus: at least one mu value is required")
        for m in self.modes:
            if m not in MODES:
                out.append(f"sweep.modes: unknown mode {m!r} (expected product or entangled)")
        for r in self.removals:
            if r is not None and r not in nodes:
                out.append(f"sweep.removals: node {r} is not in the topology")
            elif r is not None and g.n - 1 < 2:
                out.append("sweep.removals: removal must leave at least 2 nodes")
        if self.channel_family not in CHANNEL_FAMILIES:
            out.append(f"learning.channel_family must be one of {sorted(CHANNEL_FAMILIES)}, got {self.channel_family!r}")
        if self.p_mode not in ("random", "optimized"):
            out.append(f"learning.p_mode must be 'random' or 'optimized', got {self.p_mode!r}")
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) or self.master_seed < 0:
            out.append(f"seed must be a non-negative integer, got {self.master_seed!r}")
        if len(self.delimiter) != 1:
            out.append(f"output.delimiter must be a single character, got {self.delimiter!r}")
        return out

    def validate(self):
        errors = self.problems()
        if errors:
            raise ValidationError("; ".join(errors))
        return self

    def topology(self):
        if self.nodes is not None:
            g = WeightedTopology(self.nodes, [tuple(e) + (None,) for e in (self.edges or ())])
        else:
            g = build_grid(*self.grid)
        return WeightedTopology(g.nodes, g.edges, self.node_overrides)

    def link_config(self, mode):
        family = CHANNEL_FAMILIES[self.channel_family]
        return LinkEvalConfig(self.physics, self.learner, mode, family, self.p_mode, self.master_seed)

    def resolved(self):
        """Plain-data view of every field, defaults included."""
        d = asdict(self)
        d["node_overrides"] = {str(k): v for k, v in sorted(self.node_overrides.items())}
        d.pop("output")
        return d

    def digest(self):
        blob = json.dumps(self.resolved(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()


CHANNEL_FAMILIES = {
    "random_rotation": "random_rotation",
    "identity": ChannelModel.identity(),
}


@dataclass(frozen=True)
class SweepRow:
    experiment: str
    mode: str
    group: tuple
    mu: float
    removed: int
    lambda2: float
    seed: int
    iterations: int
    window: int

    def sort_key(self):
        return (self.experiment, self.mode, self.group, self.mu, -1 if self.removed is None else self.removed)

    def cells(self):
        return [
            self.experiment,
            self.mode,
            group_label(self.group),
            repr(float(self.mu)),
            "none" if self.removed is None else str(self.removed),
            repr(float(self.lambda2)),
            str(self.seed),
            str(self.iterations),
            str(self.window),
        ]


def group_label(group):
    return "-".join(str(n) for n in group) if group else "none"


def sweep_points(cfg):
    removals = cfg.removals or (None,)
    return [(m, tuple(g), float(mu), r) for m in cfg.modes for g in cfg.groups for mu in cfg.mus for r in removals]


def evaluate_point(cfg, point):
    mode, group, mu, removal = point
    g = cfg.topology()
    if group:
        g = g.with_override(group, mu=mu)
    if removal is not None:
        g = remove_node(g, removal)
    lam = physical_connectivity(g, cfg.link_config(mode))
    return SweepRow(
        cfg.experiment, mode, group, mu, removal, lam, cfg.master_seed, cfg.learner.iterations, cfg.learner.window
    )


def _evaluate_many(args):
    cfg, points = args
    return [evaluate_point(cfg, p) for p in points]


def run_sweep(cfg, workers=1):
    """Evaluate every sweep point; rows come back sorted by
    (experiment, mode, group, mu, removal)."""
    cfg.validate()
    points = sweep_points(cfg)
    if workers > 1 and len(points) > 1:
        chunks = [points[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [r for part in pool.map(_evaluate_many, [(cfg, c) for c in chunks]) for r in part]
    else:
        rows = _evaluate_many((cfg, points))
    return sorted(rows, key=SweepRow.sort_key)


def lambda_series(rows, mode, group, removed=None):
    """``(mus, lambdas)`` for one curve of a sweep table."""
    sel = sorted(
        (r.mu, r.lambda2) for r in rows if r.mode == mode and r.group == tuple(group) and r.removed == removed
    )
    return [m for m, _ in sel], [lam for _, lam in sel]


def collapse_threshold(mus, lambdas):
    """Last mu before connectivity turns down for good.

    Returns the first ``mu_k`` with ``lambda_{k+1} < lambda_k`` such that no
    later point climbs back to ``lambda_k``; ``None`` if there is none.
    """
    for k in range(len(mus) - 1):
        if lambdas[k + 1] < lambdas[k] and max(lambdas[k + 1 :]) < lambdas[k]:
            return mus[k]
    return None


# ---- presets --------------------------------------------------------------

_MU_1_8 = tuple(float(m) for m in range(1, 9))

PRESETS = {
    "fig2": dict(experiment="fig2", groups=GRID_GROUPS, mus=_MU_1_8),
    "fig3": dict(experiment="fig3", groups=((5,),), mus=_MU_1_8, removals=(2, 3, 5)),
    "fig4": dict(experiment="fig4", groups=((2, 4, 6, 8),), mus=_MU_1_8, removals=(2, 3, 5)),
    "fig5": dict(experiment="fig5", groups=((1, 3, 7, 9),), mus=_MU_1_8, removals=(2, 3, 5)),
    "fig6": dict(experiment="fig6", groups=((),), mus=(1.0,), removals=tuple(range(1, 10))),
    "fig7": dict(experiment="fig7", groups=((5,), (4, 6, 8)), mus=_MU_1_8, removals=(2,)),
    "collapse": dict(experiment="collapse", groups=GRID_GROUPS, mus=tuple(float(m) for m in range(1, 17))),
}


def preset(name, **changes):
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(ExperimentConfig(**PRESETS[name]), **changes)


# ---- capacity curves ------------------------------------------------------


@dataclass(frozen=True)
class CapacityConfig:
    rotations: tuple = (math.pi / 7, math.pi / 3, 1.0)
    random_draws: int = 20
    master_seed: int = 0
    depolarizing: tuple = ()


def parse_channel(spec):
    """``identity``, ``rotation:THETA`` or ``depolarizing:Q``."""
    name, _, arg = spec.partition(":")
    try:
        if name == "identity" and not arg:
            return ChannelModel.identity()
        if name == "rotation":
            return ChannelModel.rotation(float(arg))
        if name == "depolarizing":
            return ChannelModel.depolarizing(float(arg))
    except ValueError as exc:
        raise ValidationError(f"bad channel argument in {spec!r}: {exc}") from None
    raise ValidationError(f"unknown channel {spec!r}; use identity, rotation:THETA or depolarizing:Q")


def capacity_curve(cfg=CapacityConfig()):
    """Rows ``(label, C_product, C_entangled)``.

    Optimised capacities for identity, each rotation and each depolarizing
    strength, then ``random_draws`` rows where the input probabilities are a
    Dirichlet draw (same draw for both columns).
    """
    channels = [("identity", ChannelModel.identity())]
    channels += [(f"rotation:{t!r}", ChannelModel.rotation(t)) for t in cfg.rotations]
    channels += [(f"depolarizing:{q!r}", ChannelModel.depolarizing(q)) for q in cfg.depolarizing]
    rows = [(label, capacity_product(n)[0], capacity_entangled(n)[0]) for label, n in channels]
    rng = np.random.default_rng(cfg.master_seed)
    for k in range(cfg.random_draws):
        state = rng.bit_generator.state
        prod = sample_capacity("product", ChannelModel.identity(), "random", rng)
        rng.bit_generator.state = state
        ent = sample_capacity("entangled", ChannelModel.identity(), "random", rng)
        rows.append((f"random-p:{k}", prod.value, ent.value))
    return rows


# ---- output ---------------------------------------------------------------


def provenance_lines(cfg, extra=()):
    lines = [f"qnetconn {__version__}", f"seed: {cfg.master_seed}", f"config_sha256: {cfg.digest()}"]
    for key, value in _flatten(cfg.resolved()):
        lines.append(f"config {key} = {value}")
    lines.extend(extra)
    return ["# " + line for line in lines]


def _flatten(d, prefix=""):
    for key in sorted(d):
        value = d[key]
        if isinstance(value, dict) and value and key != "node_overrides":
            yield from _flatten(value, f"{prefix}{key}.")
        else:
            yield f"{prefix}{key}", json.dumps(value, sort_keys=True, default=list)


def format_table(rows, delimiter=",", header_lines=()):
    import csv
    import io

    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\n")
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

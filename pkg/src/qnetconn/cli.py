"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
Results go to ``--output`` or stdout; diagnostics go to stderr.
"""
import argparse
import configparser
from dataclasses import replace
import logging
import sys

from qnetconn import __version__
from qnetconn.channel import MODES, capacity_entangled, capacity_product
from qnetconn.errors import NumericalError, ValidationError
from qnetconn.qkd import LinkPhysics, WeightLearner, qber, rate_breakdown
from qnetconn.resilience import (
    evaluate_link,
    harm_ranking,
    physical_connectivity,
    recovery_plan,
    weigh_topology,
)
from qnetconn.sim import (
    PRESETS,
    ExperimentConfig,
    format_table,
    parse_channel,
    preset,
    provenance_lines,
    run_sweep,
    write_atomic,
)
from qnetconn.spectral import algebraic_connectivity, component_count

log = logging.getLogger("qnetconn")


class ConfigError(ValidationError):
    """One or more configuration fields are invalid; ``errors`` lists them all."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


PHYSICS_KEYS = {"f_ref": float, "mu": float, "eta": float, "p_opt": float, "p_dark": float, "n_det": int}
LEARNING_KEYS = {"alpha": float, "iterations": int, "window": int, "rate_scale": float, "channel_family": str, "p_mode": str}
SCHEMA = {
    "topology": {"grid", "nodes", "edges"},
    "physics": set(PHYSICS_KEYS),
    "learning": set(LEARNING_KEYS),
    "sweep": {"experiment", "groups", "mus", "modes", "removals"},
    "output": {"path", "delimiter"},
}
NODE_OVERRIDE_KEYS = {"f_ref", "mu", "eta", "p_opt", "p_dark"}


def _ints(text):
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _floats(text):
    text = text.replace(" ", "")
    if ":" in text:
        lo, hi = text.split(":")
        return tuple(float(m) for m in range(int(lo), int(hi) + 1))
    return tuple(float(x) for x in text.split(",") if x)


def _grid(text):
    rows, _, cols = text.lower().partition("x")
    return int(rows), int(cols)


def read_document(path):
    """Parse a sectioned key=value file into ``{section: {key: str}}``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections()}


def apply_overrides(document, overrides):
    doc = {s: dict(v) for s, v in document.items()}
    for item in overrides:
        key, eq, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not eq or not dot or not name:
            raise ValidationError(f"override {item!r} must look like section.key=value")
        doc.setdefault(section, {})[name] = value.strip()
    return doc


def validate_config(document, base=None, seed=0):
    """Turn a parsed document into a validated :class:`ExperimentConfig`.

    Every problem is collected; a :class:`ConfigError` lists all of them.
    """
    cfg = base or ExperimentConfig()
    errors = []
    changes = {}
    physics = {}
    learning = {}

    def convert(section, key, text, fn):
        try:
            return fn(text)
        except (ValueError, TypeError):
            errors.append(f"{section}.{key}: cannot parse {text!r}")
            return None

    for section, entries in document.items():
        if section not in SCHEMA:
            errors.append(f"unknown section [{section}] (expected one of {sorted(SCHEMA)})")
            continue
        for key, text in entries.items():
            if section == "topology" and key.startswith("node."):
                parts = key.split(".")
                if len(parts) != 3 or parts[2] not in NODE_OVERRIDE_KEYS:
                    errors.append(f"topology.{key}: expected node.<id>.<{'|'.join(sorted(NODE_OVERRIDE_KEYS))}>")
                    continue
                node = convert(section, key, parts[1], int)
                value = convert(section, key, text, float)
                if node is not None and value is not None:
                    over = changes.setdefault("node_overrides", {k: dict(v) for k, v in cfg.node_overrides.items()})
                    over.setdefault(node, {})[parts[2]] = value
                continue
            if key not in SCHEMA[section]:
                errors.append(f"unknown key {section}.{key}")
                continue
            if section == "physics":
                v = convert(section, key, text, PHYSICS_KEYS[key])
                if v is not None:
                    physics[key] = v
            elif section == "learning":
                v = convert(section, key, text, LEARNING_KEYS[key])
                if v is None:
                    continue
                if key in ("channel_family", "p_mode"):
                    changes[key] = v
                else:
                    learning[key] = v
            elif section == "topology":
                if key == "grid":
                    changes["grid"] = convert(section, key, text, _grid)
                elif key == "nodes":
                    changes["nodes"] = convert(section, key, text, _ints)
                else:
                    changes["edges"] = convert(
                        section, key, text, lambda t: tuple(_ints(e.replace("-", ",")) for e in t.split(";") if e.strip())
                    )
            elif section == "sweep":
                if key == "experiment":
                    changes["experiment"] = text.strip()
                elif key == "groups":
                    changes["groups"] = convert(
                        section, key, text, lambda t: tuple(_ints(g) for g in t.split("|"))
                    )
                elif key == "mus":
                    changes["mus"] = convert(section, key, text, _floats)
                elif key == "modes":
                    changes["modes"] = tuple(m.strip() for m in text.split(",") if m.strip())
                else:
                    changes["removals"] = convert(
                        section, key, text, lambda t: tuple(None if x == "none" else int(x) for x in t.replace(" ", "").split(",") if x)
                    )
            else:
                changes["output" if key == "path" else "delimiter"] = text.strip() if key == "path" else text

    if "nodes" in changes and "edges" not in changes:
        changes["edges"] = ()
    changes = {k: v for k, v in changes.items() if v is not None}
    phys_errors = _field_problems(LinkPhysics, cfg.physics, physics)
    learn_errors = _field_problems(WeightLearner, cfg.learner, learning)
    errors.extend(phys_errors + learn_errors)
    phys = cfg.physics if phys_errors else replace(cfg.physics, **physics)
    learner = cfg.learner if learn_errors else replace(cfg.learner, **learning)
    new = replace(cfg, physics=phys, learner=learner, master_seed=seed, **changes)
    errors.extend(new.problems())
    if errors:
        raise ConfigError(errors)
    return new


def _field_problems(cls, base, values):
    """Field-level messages for ``values`` applied on top of ``base``."""
    if not values:
        return []
    section = "physics" if cls is LinkPhysics else "learning"
    try:
        replace(base, **values)
        return []
    except ValidationError as exc:
        return [f"{section}: {msg}" for msg in str(exc).split("; ")]


# ---- subcommands ----------------------------------------------------------


def _load_config(args):
    base = preset(args.preset) if getattr(args, "preset", None) else None
    document = read_document(args.config) if args.config else {}
    document = apply_overrides(document, args.set or [])
    return validate_config(document, base=base, seed=args.seed)


def _emit(args, text):
    if args.output:
        write_atomic(args.output, text)
        log.info("wrote %s", args.output)
    else:
        sys.stdout.write(text)


def _header(cfg, extra=()):
    return "\n".join(provenance_lines(cfg, extra)) + "\n"


def cmd_capacity(args):
    n = parse_channel(args.channel)
    lines = [f"# qnetconn {__version__}", f"# channel: {args.channel}"]
    modes = MODES if args.mode == "both" else (args.mode,)
    if "product" in modes:
        c, p = capacity_product(n)
        lines.append(f"C = {c!r}")
        lines.append(f"p_star = {[round(float(x), 12) for x in p]}")
    if "entangled" in modes:
        c, _ = capacity_entangled(n)
        lines.append(f"C_E = {c!r}")
    _emit(args, "\n".join(lines) + "\n")


def cmd_link(args):
    cfg = _load_config(args)
    g = cfg.topology()
    if args.mu is not None:
        g = g.with_override([args.i, args.j], mu=args.mu)
    if (min(args.i, args.j), max(args.i, args.j)) not in {(i, j) for i, j, _ in g.edges}:
        raise ValidationError(f"({args.i}, {args.j}) is not an edge of the topology")
    out = [_header(cfg, [f"link: {args.i}-{args.j}"])]
    for mode in _modes(args):
        res = evaluate_link(g, cfg.link_config(mode), args.i, args.j)
        rates = rate_breakdown(res.physics)
        out.append(
            f"[{mode}] mu={res.physics.mu!r} t_link={res.t_link!r} qber={qber(res.physics)!r} "
            f"weight={res.weight!r}\n"
            f"[{mode}] r_s={rates.r_s!r} r_raw={rates.r_raw!r} r_sift={rates.r_sift!r} "
            f"r_opt={rates.r_opt!r} r_det={rates.r_det!r} r_err={rates.r_err!r}\n"
        )
    _emit(args, "".join(out))


def _modes(args):
    return MODES if args.mode == "both" else (args.mode,)


def cmd_connectivity(args):
    if args.grid:
        args.set = (args.set or []) + [f"topology.grid={args.grid}"]
    cfg = _load_config(args)
    g = cfg.topology()
    out = [_header(cfg)]
    if args.uniform_weight is not None:
        variants = [("uniform", g.with_weights(args.uniform_weight))]
    else:
        variants = [(m, weigh_topology(g, cfg.link_config(m))) for m in _modes(args)]
    for label, wg in variants:
        lam, vec = algebraic_connectivity(wg)
        out.append(f"[{label}] lambda2 = {lam!r}\n")
        out.append(f"[{label}] components = {component_count(wg)}\n")
        out.append(f"[{label}] fiedler_vector = {[round(float(x), 12) + 0.0 for x in vec]}\n")
    _emit(args, "".join(out))


def cmd_harm(args):
    cfg = _load_config(args)
    g = cfg.topology()
    candidates = _ints(args.candidates) if args.candidates else g.nodes
    out = [_header(cfg), "mode,rank,node,lambda2,delta\n"]
    for mode in _modes(args):
        ranking = harm_ranking(g, candidates, cfg.link_config(mode))
        out.append(f"{mode},0,none,{ranking.baseline_lambda2!r},0.0\n")
        for k, e in enumerate(ranking.entries, 1):
            out.append(f"{mode},{k},{e.node},{e.lambda2!r},{e.delta!r}\n")
    _emit(args, "".join(out))


def cmd_recover(args):
    cfg = _load_config(args)
    g = cfg.topology()
    groups = [_ints(s) for s in args.groups.split(";")]
    out = [_header(cfg), "mode,removed,group,target,feasible,total_mu_spent,achieved_lambda2,steps\n"]
    for mode in _modes(args):
        lcfg = cfg.link_config(mode)
        target = args.target if args.target is not None else physical_connectivity(g, lcfg)
        plans = recovery_plan(g, args.removed, groups, args.mu_step, args.mu_cap, target, lcfg)
        for p in plans:
            label = "-".join(map(str, p.group))
            out.append(
                f"{mode},{p.removed_node},{label},{p.target_lambda2!r},{str(p.feasible).lower()},"
                f"{p.total_mu_spent!r},{p.achieved_lambda2!r},{len(p.steps)}\n"
            )
        feasible = [p for p in plans if p.feasible]
        if feasible:
            best = min(feasible, key=lambda p: p.total_mu_spent)
            out.append(f"# {mode}: cheapest feasible group is {'-'.join(map(str, best.group))}\n")
        else:
            out.append(f"# {mode}: no group reaches the target within mu_cap={args.mu_cap!r}\n")
    _emit(args, "".join(out))


def cmd_sweep(args):
    if not args.config and not args.preset:
        raise ValidationError("sweep needs --config FILE or --preset NAME")
    cfg = _load_config(args)
    if args.output is None and cfg.output:
        args.output = cfg.output
    rows = run_sweep(cfg, workers=args.workers)
    _emit(args, format_table(rows, cfg.delimiter, provenance_lines(cfg)))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key=value config file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="inline override (repeatable)")
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--output", help="write results here instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="qnetconn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qnetconn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", parents=[common], help="product and entanglement-assisted capacity")
    p.add_argument("--channel", default="identity", help="identity | rotation:THETA | depolarizing:Q")
    p.add_argument("--mode", choices=("product", "entangled", "both"), default="both")
    p.set_defaults(func=cmd_capacity)

    mode_kw = dict(choices=("product", "entangled", "both"), default="both")

    p = sub.add_parser("link", parents=[common], help="rates, QBER and learned weight of one link")
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--mu", type=float, help="mu for both endpoints")
    p.add_argument("--mode", **mode_kw)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("connectivity", parents=[common], help="Fiedler value of a topology")
    p.add_argument("--grid", help="ROWSxCOLS shorthand")
    p.add_argument("--uniform-weight", type=float, help="skip link learning, use this weight on every edge")
    p.add_argument("--mode", **mode_kw)
    p.set_defaults(func=cmd_connectivity)

    p = sub.add_parser("harm", parents=[common], help="rank nodes by harm of removal")
    p.add_argument("--candidates", help="comma-separated node ids (default: all)")
    p.add_argument("--mode", **mode_kw)
    p.set_defaults(func=cmd_harm)

    p = sub.add_parser("recover", parents=[common], help="mu-budget recovery plans after a removal")
    p.add_argument("--removed", type=int, required=True)
    p.add_argument("--groups", default="5;4,6,8", help="groups separated by ';' (default '5;4,6,8')")
    p.add_argument("--mu-step", type=float, default=1.0)
    p.add_argument("--mu-cap", type=float, default=8.0)
    p.add_argument("--target", type=float, help="target lambda2 (default: value before removal)")
    p.add_argument("--mode", **mode_kw)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("sweep", parents=[common], help="run a sweep from a config or preset")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are validation errors here
        return 0 if exc.code == 0 else 1
    level = logging.ERROR if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Collapse threshold per group and channel mode over mu = 1..16."""
import argparse
from dataclasses import replace

from qnetconn.sim import GRID_GROUPS, collapse_threshold, lambda_series, preset, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rate-scale", type=float, default=None, help="override learner rate_scale")
    args = ap.parse_args()

    cfg = preset("collapse", master_seed=args.seed)
    if args.rate_scale is not None:
        cfg = replace(cfg, learner=replace(cfg.learner, rate_scale=args.rate_scale))
    rows = run_sweep(cfg)
    print("mode,group,mu_star,lambda2_at_mu_star,lambda2_last")
    for mode in cfg.modes:
        for group in GRID_GROUPS:
            mus, lams = lambda_series(rows, mode, group)
            star = collapse_threshold(mus, lams)
            at = lams[mus.index(star)] if star is not None else float("nan")
            print(f"{mode},{'-'.join(map(str, group))},{star},{at!r},{lams[-1]!r}")


if __name__ == "__main__":
    main()

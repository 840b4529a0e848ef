"""Spend needed by groups {5} and {4,6,8} to recover after removing node 2,
across a range of target Fiedler values."""
import argparse

import numpy as np

from qnetconn.resilience import LinkEvalConfig, physical_connectivity, recovery_plan, remove_node
from qnetconn.spectral import build_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mu-cap", type=float, default=8.0)
    ap.add_argument("--points", type=int, default=9)
    args = ap.parse_args()

    grid = build_grid(3, 3)
    print("mode,target,spent_5,spent_4-6-8,feasible_5,feasible_4-6-8")
    for mode in ("product", "entangled"):
        cfg = LinkEvalConfig(mode=mode, master_seed=args.seed)
        floor = physical_connectivity(remove_node(grid, 2), cfg)
        full = physical_connectivity(grid, cfg)
        for target in np.linspace(floor, full, args.points):
            a, b = recovery_plan(grid, 2, [(5,), (4, 6, 8)], 1.0, args.mu_cap, float(target), cfg)
            print(f"{mode},{target:.6f},{a.total_mu_spent},{b.total_mu_spent},{a.feasible},{b.feasible}")


if __name__ == "__main__":
    main()

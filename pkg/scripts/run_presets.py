"""Run every sweep preset and write one CSV per preset.

    python scripts/run_presets.py --out-dir results --seed 0 --workers 4
"""
import argparse
from pathlib import Path

from qnetconn.sim import PRESETS, format_table, preset, provenance_lines, run_sweep, write_atomic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("names", nargs="*", help="subset of presets (default: all)")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.names or sorted(PRESETS):
        cfg = preset(name, master_seed=args.seed)
        rows = run_sweep(cfg, workers=args.workers)
        path = out / f"{name}.csv"
        write_atomic(path, format_table(rows, cfg.delimiter, provenance_lines(cfg)))
        print(f"{name}: {len(rows)} rows -> {path}")


if __name__ == "__main__":
    main()

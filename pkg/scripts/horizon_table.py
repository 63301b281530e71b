"""Planning horizons over a grid of (H, x, eps), with theta computed by the rate solver.

    python scripts/horizon_table.py --out results/horizon_table.csv
"""
import argparse
import itertools
import os

from fbmstore.horizon_planner import HorizonRequest, horizon
from fbmstore.io import metadata, write_csv
from fbmstore.rate_variational import theta


def floats(text):
    return [float(v) for v in text.split(",")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--hs", default="0.3,0.5,0.7,0.8")
    ap.add_argument("--xs", default="0.5,1,2,5,10")
    ap.add_argument("--eps", default="0.1,0.05,0.01")
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--out", default="results/horizon_table.csv")
    args = ap.parse_args()

    rows = []
    for h in floats(args.hs):
        th = theta(h, n=args.n).value
        for x, e in itertools.product(floats(args.xs), floats(args.eps)):
            r = horizon(HorizonRequest(h, th, x, e))
            rows.append((h, th, x, e, r.t, r.t_star))
        print(f"H={h:.2f} theta={th:.6f}  t(x=1, eps=0.05) = {horizon(HorizonRequest(h, th, 1.0, 0.05)).t:.4f}")
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    write_csv(args.out, ("h", "theta", "x", "eps", "t", "t_star"), rows, metadata("scripts/horizon_table", vars(args)))


if __name__ == "__main__":
    main()

"""J(delta) against the single-constraint rate, for several H.

The two curves coincide for small delta (the terminal constraint binds) and
separate once delta passes 1/H - 1, where J stays below the closed form.
"""
import argparse
import os

import numpy as np

from fbmstore.io import metadata, write_csv
from fbmstore.rate_variational import j_delta, single_constraint_rate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--hs", default="0.4,0.5,0.7")
    ap.add_argument("--deltas", default="0:3:0.25")
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--horizon", type=float, default=4.0)
    ap.add_argument("--out", default="results/j_delta_curves.csv")
    args = ap.parse_args()

    a, b, s = (float(v) for v in args.deltas.split(":"))
    deltas = np.round(np.arange(a, b + s / 2, s), 12)
    rows = []
    for h in [float(v) for v in args.hs.split(",")]:
        for d in deltas:
            j = j_delta(h, d, n=args.n, horizon=args.horizon)
            rows.append((h, d, j, single_constraint_rate(h, d), d > 1 / h - 1))
            print(f"H={h:.2f} delta={d:5.2f}  J={j: .6f}  single={rows[-1][3]: .6f}")
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    write_csv(args.out, ("h", "delta", "j_delta", "single_constraint_rate", "beyond_threshold"), rows,
              metadata("scripts/j_delta_curves", vars(args)))


if __name__ == "__main__":
    main()

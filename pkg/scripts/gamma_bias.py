"""Grid-step bias of P(M(t_ref) > x) at H = 1/2.

Compares the simulated reference-horizon probability with e^{-2x} and with the
grid-corrected value e^{-2(x + beta sqrt(step))}, beta = -zeta(1/2)/sqrt(2 pi),
over a ladder of step sizes.
"""
import argparse
import math

import numpy as np
from scipy.special import zeta

from fbmstore.storage_sim import simulate_maxima


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--x", type=float, default=0.5)
    ap.add_argument("--t-ref", type=float, default=64.0)
    ap.add_argument("--reps", type=int, default=20_000)
    ap.add_argument("--steps", default="6,7,8,9")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    beta = -zeta(0.5) / math.sqrt(2 * math.pi)
    print(f"closed form e^(-2x) = {math.exp(-2 * args.x):.5f}")
    for k in (int(v) for v in args.steps.split(",")):
        step = 2.0**-k
        m = simulate_maxima(0.5, [args.t_ref], step, args.reps, args.seed)[:, 0]
        p = float(np.mean(m > args.x))
        se = math.sqrt(p * (1 - p) / args.reps)
        corr = math.exp(-2 * (args.x + beta * math.sqrt(step)))
        print(f"step 2^-{k}: P = {p:.5f} +- {se:.5f}   corrected target {corr:.5f}   "
              f"z(closed) {(p - math.exp(-2 * args.x)) / se: .1f}   z(corrected) {(p - corr) / se: .1f}")


if __name__ == "__main__":
    main()

"""Workload autocovariance at H = 0.7 over a wide lag range, with the
power-law versus Weibull comparison. The comparison is a diagnostic only."""
import argparse
import json

from fbmstore.covariance_probe import conjecture_diagnostic, estimate_cov


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=0.7)
    ap.add_argument("--lags", default="0.5,1,2,4,8,16,32")
    ap.add_argument("--warmup", type=float, default=40.0)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--step", type=float, default=2.0**-5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    lags = [float(v) for v in args.lags.split(",")]
    est = estimate_cov(args.h, lags, args.warmup, args.reps, args.step, args.seed)
    for lag, c, w in zip(est.lags, est.cov, est.ci):
        print(f"lag {lag:6.2f}: cov {c: .5f} +- {w:.5f}")
    try:
        rep = conjecture_diagnostic(est, args.h)
        print(json.dumps(rep.to_dict(), indent=2))
    except ValueError as exc:
        print(f"no comparison: {exc}")
    print(f"mean workload at warmup: {est.mean_q:.4f}; t^(2H-2) target exponent {2 * args.h - 2:.2f}")


if __name__ == "__main__":
    main()

"""Acceptance criteria, one test each. Every test records a PASS/FAIL line that
is printed in the terminal summary, then asserts at the stated tolerance."""
import math
import os
import time

import numpy as np
from scipy import integrate, optimize, special, stats

from fbmstore import cli
from fbmstore.convergence_metrics import d1_hat, d2_hat, weibull_fit
from fbmstore.covariance_probe import conjecture_diagnostic, estimate_cov
from fbmstore.fbm_core import Seed, fgn_autocovariance, sample_fgn_batch
from fbmstore.horizon_planner import HorizonRequest, horizon
from fbmstore.rate_variational import (
    ConstraintSet,
    check_proposition_3_3,
    j_delta,
    min_norm,
    phi,
    single_constraint_rate,
    theta,
)
from fbmstore.srd_rates import CumulantModel, di_decay_rate, k_rate
from fbmstore.storage_sim import simulate_maxima

from conftest import ACCEPTANCE_LINES

TOL = 1e-8


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_01_brownian_variational_exactness():
    start = time.perf_counter()
    p = theta(0.5, n=256, tol=TOL)
    secs = time.perf_counter() - start
    dev = float(np.max(np.abs(p.z - p.grid.points)))
    ok = abs(p.value - 0.5) / 0.5 <= 0.005 and dev <= 1e-6 and secs < 5
    record(1, ok, f"theta(1/2) = {p.value:.10f}, max|z - t| = {dev:.2e}, {secs:.2f} s")
    assert ok


def test_02_theta_bounds():
    start = time.perf_counter()
    rows = []
    ok = True
    for h in (0.6, 0.7, 0.8):
        v = theta(h, n=256, tol=TOL).value
        ub = 0.5 * phi(h)
        rows.append(f"H={h}: {v:.6f} in [0.5, {ub:.6f}]")
        ok &= 0.5 <= v <= ub
    secs = time.perf_counter() - start
    ok &= abs(phi(0.7) - 1.0136) < 5e-5 and secs < 60
    record(2, ok, "; ".join(rows) + f"; phi(0.7) = {phi(0.7):.5f}; {secs:.2f} s")
    assert ok


def test_03_infimum_agreement():
    start = time.perf_counter()
    limits = {0.5: 0.02, 0.7: 0.02, 0.3: 0.05}
    parts, ok = [], True
    for h, lim in limits.items():
        rep = check_proposition_3_3(h, n=256, horizon=3.0, tol=TOL)
        d = rep["max_relative_difference"]
        parts.append(f"H={h}: {d:.4f} < {lim}")
        ok &= d < lim
    secs = time.perf_counter() - start
    ok &= secs < 120
    record(3, ok, "; ".join(parts) + f"; {secs:.2f} s")
    assert ok


def golden(f, a, b, tol=1e-13):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return f(0.5 * (a + b))


def test_04_single_constraint_closed_form():
    worst = 0.0
    for h in np.linspace(0.2, 0.8, 5):
        for d in np.linspace(0.0, 6.0, 5):
            ref = -golden(lambda s: (s + d) ** 2 / (2 * s ** (2 * h)), 1.0, 100.0)
            worst = max(worst, abs(single_constraint_rate(h, d) - ref))
    edge = max(
        abs(single_constraint_rate(h, 1 / h - 1) + 0.5 / h**2) / (0.5 / h**2) for h in np.linspace(0.1, 0.9, 9)
    )
    ok = worst <= 1e-10 and edge <= 1e-14
    record(4, ok, f"max |closed form - golden section| = {worst:.2e}; relative error at delta = 1/H - 1: {edge:.1e}")
    assert ok


def test_05_phi_derivative_at_one():
    hh = 1 - 1e-5
    e = 1e-7
    num = (phi(hh + e) - phi(hh - e)) / (2 * e)
    exact = -3 - 2 * special.digamma(0.5) - 2 * np.euler_gamma
    ok = abs(num - (-0.2274)) <= 1e-2 and abs(exact - (-3 + 4 * math.log(2))) < 1e-13
    record(5, ok, f"central difference {num:.5f}, digamma form {exact:.5f}")
    assert ok


def test_06_monotonicity_suites():
    worst = {"J": 0.0, "D": 0.0, "Deps": 0.0, "dom": 0.0}
    ok = True
    for h in (0.4, 0.5, 0.7):
        top = 1 / h - 1
        ds = np.linspace(0, top, 7)
        j = [j_delta(h, d, tol=TOL) for d in ds[1:]]
        worst["J"] = max(worst["J"], max(np.diff(j)))
        vals = [min_norm(h, ConstraintSet("D_delta", delta=d), tol=TOL).value for d in ds]
        worst["D"] = max(worst["D"], -min(np.diff(vals)))
        for eps in (0.1, 0.5):
            vals = [min_norm(h, ConstraintSet("D_delta_eps", delta=d, eps=eps), tol=TOL).value for d in ds]
            worst["Deps"] = max(worst["Deps"], -min(np.diff(vals)))
        j0 = j_delta(h, 0.0, tol=TOL)
        for d in (top + 0.25, top + 1.0):
            jd = j_delta(h, d, tol=TOL)
            s = single_constraint_rate(h, d)
            worst["dom"] = max(worst["dom"], jd - s, s + 0.5 / h**2)
            ok &= -0.5 / h**2 < j0
    ok &= all(v <= 10 * TOL for v in worst.values())
    record(6, ok, "worst violations " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (limit 1e-7)")
    assert ok


def brownian_gamma(x, t):
    """P(M > x) - P(M(t) > x) for Brownian input with unit drift."""
    st_ = math.sqrt(t)
    return math.exp(-2 * x) * stats.norm.sf((t - x) / st_) - stats.norm.cdf(-(x + t) / st_)


def brownian_exact_metrics(t):
    d1 = -optimize.minimize_scalar(lambda x: -brownian_gamma(x, t), bounds=(0, 20), method="bounded",
                                   options={"xatol": 1e-10}).fun
    d2 = integrate.quad(lambda x: brownian_gamma(x, t), 0, np.inf)[0]
    return d1, d2


def test_07_decay_rate_brownian_anchor(brownian_maxima):
    cfg, m = brownian_maxima
    hz = [2.0, 4.0, 8.0]
    ref = m[:, 3]
    d1 = [d1_hat(m[:, i], ref) for i in range(3)]
    d2 = [d2_hat(m[:, i], ref).estimate for i in range(3)]
    f1, f2 = weibull_fit(0.5, hz, d1), weibull_fit(0.5, hz, d2)
    exact = [brownian_exact_metrics(t) for t in hz]
    e1 = weibull_fit(0.5, hz, [e[0] for e in exact]).slope
    e2 = weibull_fit(0.5, hz, [e[1] for e in exact]).slope
    dec = bool(np.all(np.diff(d1) < 0) and np.all(np.diff(d2) < 0))
    in_band = all(-0.625 <= f.slope <= -0.375 for f in (f1, f2))
    fast = cfg["seconds"] < 15 * 60
    ok = in_band and dec and fast
    record(
        7,
        ok,
        f"H=1/2 slopes D1 {f1.slope:.3f}, D2 {f2.slope:.3f} (band [-0.625, -0.375]); "
        f"closed-form slopes on the same horizons {e1:.3f}, {e2:.3f}; "
        f"strictly decreasing {dec}; simulation {cfg['seconds']:.0f} s",
    )
    assert dec and fast
    assert in_band, "finite-horizon slope outside the +-25% band (see the closed-form slopes)"


def test_07b_long_memory_properties():
    hz = [2.0, 4.0, 8.0]
    m = simulate_maxima(0.7, hz + [64.0], 2.0**-7, 20_000, 7)
    d1 = [d1_hat(m[:, i], m[:, 3]) for i in range(3)]
    d2 = [d2_hat(m[:, i], m[:, 3]).estimate for i in range(3)]
    s1, s2 = weibull_fit(0.7, hz, d1).slope, weibull_fit(0.7, hz, d2).slope
    ok = (min(d1 + d2) > 0 and np.all(np.diff(d1) < 0) and np.all(np.diff(d2) < 0) and s1 < 0 and s2 < 0)
    record(
        "7b",
        ok,
        f"H=0.7 D1 {np.round(d1, 4).tolist()}, D2 {np.round(d2, 4).tolist()}, slopes {s1:.3f}, {s2:.3f} "
        "(property check only: no numeric match to theta(0.7) is expected at these horizons)",
    )
    assert ok


def test_08_cross_module_consistency():
    g = CumulantModel("gaussian_iid", {"mu": 0.0, "sigma2": 1.0})
    diffs = [abs(k_rate(g, x).value - single_constraint_rate(0.5, x)) for x in (0, 0.5, 1, 2, 5)]
    di = di_decay_rate(g)
    ok = max(diffs) <= 1e-8 and abs(di + 0.5) <= 1e-12
    record(8, ok, f"max |K(x) - single-constraint rate| = {max(diffs):.1e}; -I(1) = {di!r}")
    assert ok


def test_09_horizon_formula():
    t = horizon(HorizonRequest(0.5, 0.5, 1.0, 0.05)).t
    mono = True
    for h in (0.3, 0.5, 0.7):
        for e in (0.01, 0.05, 0.2):
            v = [horizon(HorizonRequest(h, 0.5, x, e)).t for x in (0.5, 1, 4)]
            mono &= v == sorted(v)
        for x in (0.5, 1, 4):
            v = [horizon(HorizonRequest(h, 0.5, x, e)).t for e in (0.01, 0.05, 0.2)]
            mono &= v == sorted(v, reverse=True)
    ratio = horizon(HorizonRequest(0.5, 0.5, 2000.0, 0.05)).t / horizon(HorizonRequest(0.5, 0.5, 1000.0, 0.05)).t
    ok = abs(t - 9.9915) <= 1e-3 and mono and abs(ratio - 2) <= 0.02
    record(9, ok, f"t = {t:.5f}; monotone {mono}; t(2x)/t(x) at x=1e3 = {ratio:.5f}")
    assert ok


def test_10_fgn_autocovariance():
    start = time.perf_counter()
    n, paths = 64, 10_000
    worst = 0.0
    for i, h in enumerate((0.3, 0.5, 0.8)):
        x = sample_fgn_batch(h, n, 1.0, paths, Seed(1000 + i).generator())
        for k in range(4):
            per_path = np.mean(x[:, : n - k] * x[:, k:], axis=1)
            se = per_path.std(ddof=1) / math.sqrt(paths)
            worst = max(worst, abs(per_path.mean() - fgn_autocovariance(h, k)) / se)
    secs = time.perf_counter() - start
    ok = worst < 3 and secs < 120
    record(10, ok, f"largest deviation {worst:.2f} standard errors over 12 (H, lag) pairs; {secs:.1f} s")
    assert ok


CLI_RUNS = [
    ["rate", "--h", "0.7", "--n", "64", "--sweep-delta", "0:1:0.25", "--check-prop33"],
    ["metrics", "--h", "0.7", "--horizons", "1,2,4", "--reps", "1000", "--step", "0.015625", "--seed", "3"],
    ["horizon", "--h", "0.7", "--x", "1", "--n", "64"],
    ["srd", "--model", "markov", "--x", "1", "--sweep", "0:2:0.5"],
    ["covprobe", "--h", "0.7", "--reps", "100", "--step", "0.03125"],
]


def test_11_cli_determinism(tmp_path):
    bad = []
    count = 0
    for argv in CLI_RUNS:
        outs = []
        for tag in ("a", "b"):
            d = tmp_path / f"{argv[0]}_{tag}"
            cli.main(argv + ["--outdir", str(d)])
            outs.append({f: (d / f).read_bytes() for f in sorted(os.listdir(d))})
        count += len(outs[0])
        if not outs[0] or outs[0] != outs[1]:
            bad.append(argv[0])
    ok = not bad
    record(11, ok, f"{count} output files across {len(CLI_RUNS)} commands; differing: {bad or 'none'}")
    assert ok


def test_12_conjecture_probe():
    lags = np.geomspace(1, 256, 12)
    h = 0.7
    p = conjecture_diagnostic((lags, 2 * lags ** (2 * h - 2)), h)
    w = conjecture_diagnostic((lags, np.exp(-0.5 * lags ** (2 - 2 * h))), h)
    est = estimate_cov(h, [1, 2, 4, 8, 16], warmup=8.0, reps=300, step=2.0**-5, seed=12)
    try:
        real = conjecture_diagnostic(est, h).preferred
    except ValueError as exc:
        real = f"no fit ({exc})"
    ok = (
        p.preferred == "power"
        and p.power_r2 - p.weibull_r2 >= 0.05
        and w.preferred == "weibull"
        and w.weibull_r2 - w.power_r2 >= 0.05
    )
    record(
        12,
        ok,
        f"planted power -> {p.preferred} (r2 gap {p.power_r2 - p.weibull_r2:.3f}), planted Weibull -> "
        f"{w.preferred} (r2 gap {w.weibull_r2 - w.power_r2:.3f}); real H=0.7 run reports '{real}' (not gated)",
    )
    assert ok

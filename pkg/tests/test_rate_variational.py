import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fbmstore.fbm_core import TimeGrid, fbm_covariance
from fbmstore.qp import SolverError
from fbmstore.rate_variational import (
    ConstraintSet,
    build_gram,
    check_proposition_3_3,
    j_delta,
    min_norm,
    phi,
    phi_prime_at_one,
    rkhs_norm,
    single_constraint_rate,
    theta,
    unit_grid,
)

TOL = 1e-8


def golden_min(f, a, b, tol=1e-12):
    """Plain golden-section search, written independently of the package."""
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
    x = 0.5 * (a + b)
    return x, f(x)


def phi_oracle(h):
    # original form with Gamma(2-2H) and the factor (2-2H) kept separate
    return math.gamma(1.5 - h) / (h * (2 * h - 1) * (2 - 2 * h) * math.gamma(h - 0.5) * math.gamma(2 - 2 * h))


def assert_certified(p, tol=TOL):
    assert p.kkt_residual <= tol
    assert p.duality_gap <= tol * (1 + abs(p.value))
    if p.kind == "B":
        assert np.all(p.dual >= -tol)


# --- Gram matrix ------------------------------------------------------------

def test_gram_brownian():
    g = build_gram(0.5, TimeGrid.from_points([0.5, 1.0]))
    np.testing.assert_allclose(g.entries, [[0.5, 0.5], [0.5, 1.0]], rtol=1e-15)


def test_gram_h07():
    g = build_gram(0.7, TimeGrid.from_points([1.0, 2.0]))
    np.testing.assert_allclose(g.entries, [[1, 1.3195], [1.3195, 2.6390]], atol=1e-4)
    assert g.entries[0, 1] == fbm_covariance(0.7, 1.0, 2.0)


@pytest.mark.parametrize("h", [0.2, 0.5, 0.8])
def test_gram_diagonal_and_factor(h):
    grid = unit_grid(64)
    g = build_gram(h, grid)
    np.testing.assert_allclose(np.diag(g.entries), grid.points ** (2 * h), rtol=1e-14)
    rec = g.chol @ g.chol.T
    assert np.max(np.abs(rec - g.entries)) <= 1e-10 * np.max(np.abs(g.entries))


def test_gram_rejects_origin():
    with pytest.raises(ValueError):
        build_gram(0.5, TimeGrid.from_points([0.0, 1.0]))


# --- Brownian exactness -----------------------------------------------------

@pytest.mark.parametrize("n", [8, 16, 64, 256])
def test_brownian_theta_exact(n):
    p = theta(0.5, n=n)
    assert p.value == pytest.approx(0.5, abs=1e-10)
    np.testing.assert_allclose(p.z, p.grid.points, atol=1e-9)
    assert_certified(p)


def test_brownian_d_delta_zero():
    p = min_norm(0.5, ConstraintSet("D_delta", delta=0.0))
    assert p.value == pytest.approx(0.5, abs=1e-9)


# --- bounds and shapes ------------------------------------------------------

@pytest.mark.parametrize("h", [0.6, 0.7, 0.8])
def test_theta_within_bounds(h):
    p = theta(h, n=256)
    assert 0.5 - TOL <= p.value <= 0.5 * phi(h) + TOL
    assert_certified(p)


def test_path_shape_long_memory():
    """H > 1/2: on the diagonal over an initial stretch and at t = 1, strictly
    above in between."""
    p = theta(0.7, n=256)
    gap = p.z - p.grid.points
    on = np.abs(gap) <= 10 * TOL
    assert on[-1]
    first_off = int(np.argmin(on))
    assert first_off > 0
    assert np.all(on[:first_off])
    assert np.all(gap[first_off:-1] > 10 * TOL)


def test_path_shape_short_memory():
    """H < 1/2: above the diagonal first, then on it up to t = 1."""
    p = theta(0.3, n=256)
    gap = p.z - p.grid.points
    on = np.abs(gap) <= 10 * TOL
    assert not on[0] and on[-1]
    first_on = int(np.argmax(on))
    assert np.all(on[first_on:])


def test_theta_refinement():
    v = [theta(0.7, n=n).value for n in (64, 128, 256)]
    assert abs(v[2] - v[1]) / v[2] < 0.01


@pytest.mark.parametrize("h", [0.3, 0.5, 0.8])
def test_refinement_n_vs_2n(h):
    a, b = theta(h, n=128).value, theta(h, n=256).value
    assert abs(a - b) / b < 0.01


# --- KKT certificate --------------------------------------------------------

@pytest.mark.parametrize(
    "h,cset",
    [
        (0.4, ConstraintSet("B")),
        (0.7, ConstraintSet("D_delta", delta=0.2)),
        (0.7, ConstraintSet("D_delta_eps", delta=0.2, eps=0.5)),
        (0.3, ConstraintSet("A_bar")),
        (0.7, ConstraintSet("A_delta", delta=0.6)),
    ],
)
def test_kkt_certificate(h, cset):
    p = min_norm(h, cset, n=64)
    assert p.kkt_residual <= TOL
    assert p.duality_gap <= TOL * (1 + p.value)
    # stationarity z = G (S lambda) and value = 1/2 z' G^-1 z
    g = build_gram(h, p.grid)
    w = g.solve(p.z)
    assert 0.5 * float(p.z @ w) == pytest.approx(p.value, rel=1e-6)
    # constraint sets written as lower bounds carry nonnegative multipliers
    if cset.kind in ("B", "D_delta", "D_delta_eps"):
        assert np.all(p.dual[:-1] >= -TOL)
        lo = p.grid.points - cset.eps
        assert np.all(p.z[:-1] >= lo[:-1] - TOL)


def test_solver_budget_error_carries_gap():
    with pytest.raises(SolverError) as exc:
        min_norm(0.7, ConstraintSet("B"), n=256, max_iter=1)
    assert np.isfinite(exc.value.gap)


# --- constraint-set validation ---------------------------------------------

def test_constraint_set_validation():
    with pytest.raises(ValueError):
        ConstraintSet("D_delta", delta=-0.1)
    with pytest.raises(ValueError):
        ConstraintSet("D_delta_eps", eps=1.0)
    with pytest.raises(ValueError):
        ConstraintSet("Z")
    with pytest.raises(ValueError):
        j_delta(0.5, -1.0)


# --- J(delta) ---------------------------------------------------------------

@pytest.mark.parametrize("h", [0.4, 0.5, 0.7])
def test_j_delta_at_zero_is_minus_theta(h):
    assert j_delta(h, 0.0) == pytest.approx(-theta(h).value, abs=2 * TOL)


def test_j_delta_brownian_sequence():
    vals = [j_delta(0.5, d) for d in (0, 0.25, 0.5, 0.75, 1.0)]
    assert all(b <= a + 10 * TOL for a, b in zip(vals, vals[1:]))
    assert vals[-1] >= -2.0 - 10 * TOL
    assert vals[-1] <= vals[-2] + 10 * TOL


def test_a_delta_horizon_flag():
    p = min_norm(0.7, ConstraintSet("A_delta", delta=3.0, horizon=1.5), n=64)
    assert p.horizon_flag
    q = min_norm(0.7, ConstraintSet("A_delta", delta=0.0, horizon=3.0), n=64)
    assert not q.horizon_flag


# --- single-constraint rate -------------------------------------------------

@pytest.mark.parametrize("h", [0.2, 0.35, 0.5, 0.65, 0.8])
@pytest.mark.parametrize("d", [0.0, 0.3, 1.0, 2.5, 6.0])
def test_single_constraint_matches_golden_section(h, d):
    _, v = golden_min(lambda s: (s + d) ** 2 / (2 * s ** (2 * h)), 1.0, 100.0)
    assert single_constraint_rate(h, d) == pytest.approx(-v, abs=1e-10)


def test_single_constraint_examples():
    assert single_constraint_rate(0.5, 0.0) == -0.5
    assert single_constraint_rate(0.5, 2.0) == pytest.approx(-4.0, abs=1e-14)


@given(st.floats(0.05, 0.95))
def test_single_constraint_at_threshold(h):
    d = 1 / h - 1
    assert single_constraint_rate(h, d) == pytest.approx(-0.5 / h**2, rel=1e-12)
    above = single_constraint_rate(h, d * (1 + 1e-9) + 1e-12)
    assert above == pytest.approx(-0.5 / h**2, rel=1e-6)


# --- phi --------------------------------------------------------------------

def test_phi_values():
    assert phi(0.7) == pytest.approx(phi_oracle(0.7), rel=1e-12)
    assert phi(0.7) == pytest.approx(1.0136, abs=5e-5)
    assert phi(1 - 1e-9) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        phi(0.5)


def test_phi_derivative_at_one():
    hh = 1 - 1e-5
    num = (phi(hh + 1e-6) - phi(hh - 1e-6)) / 2e-6
    exact = -3 + 4 * math.log(2)
    assert phi_prime_at_one() == pytest.approx(exact, abs=1e-13)
    # digamma oracle: psi(1/2) = -gamma_EM - 2 log 2
    assert special.digamma(0.5) == pytest.approx(-np.euler_gamma - 2 * math.log(2), abs=1e-14)
    assert num == pytest.approx(-0.2274, abs=1e-2)


# --- agreement of the three infima -----------------------------------------

def test_prop33_brownian():
    rep = check_proposition_3_3(0.5)
    for v in rep["values"].values():
        assert v == pytest.approx(0.5, rel=0.02)


def test_prop33_long_memory():
    assert check_proposition_3_3(0.7)["max_relative_difference"] < 0.02


def test_prop33_short_memory():
    assert check_proposition_3_3(0.3)["max_relative_difference"] < 0.05


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_time_reversal_identity(h):
    # reversing time maps {z <= t on (0,1), z(1) = 1} onto {z >= t, z(1) = 1}
    a = min_norm(h, ConstraintSet("A_bar"), n=128).value
    d = min_norm(h, ConstraintSet("D_delta", delta=0.0), n=128).value
    assert a == pytest.approx(d, rel=1e-6)


# --- monotonicity in delta and eps -----------------------------------------

@pytest.mark.parametrize("h", [0.4, 0.5, 0.7])
def test_d_sets_non_decreasing(h):
    ds = np.linspace(0, 1 / h - 1, 6)
    for eps in (None, 0.1, 0.5):
        if eps is None:
            vals = [min_norm(h, ConstraintSet("D_delta", delta=d), n=128).value for d in ds]
        else:
            vals = [min_norm(h, ConstraintSet("D_delta_eps", delta=d, eps=eps), n=128).value for d in ds]
        assert all(b >= a - 10 * TOL for a, b in zip(vals, vals[1:])), (eps, vals)


@pytest.mark.parametrize("h", [0.4, 0.7])
def test_domination_chain(h):
    j0 = j_delta(h, 0.0, n=128)
    for d in (1 / h - 1 + 0.2, 1 / h - 1 + 1.0):
        jd = j_delta(h, d, n=128)
        s = single_constraint_rate(h, d)
        assert jd <= s + 10 * TOL
        assert s <= -0.5 / h**2 + 10 * TOL
        assert -0.5 / h**2 < j0


# --- RKHS norm --------------------------------------------------------------

def test_rkhs_norm_zero_and_kernel_section():
    grid = unit_grid(32)
    assert rkhs_norm(0.7, grid, np.zeros(32)) == 0.0
    g = build_gram(0.7, grid).entries
    z = g[:, 0]
    assert rkhs_norm(0.7, grid, z) == pytest.approx(math.sqrt(g[0, 0]), rel=1e-9)


@settings(max_examples=25)
@given(st.floats(0.2, 0.8), st.integers(2, 4), st.floats(0.2, 5.0))
def test_rkhs_norm_scaling(h, beta, alpha):
    # g(r) = alpha f(beta r): g lives on k/m, f on the stretched grid beta k/m
    m = 16
    g_grid = TimeGrid.from_points(np.arange(1, m + 1) / m)
    f_grid = TimeGrid.from_points(beta * np.arange(1, m + 1) / m)
    f = np.sin(3 * f_grid.points) + f_grid.points ** 0.5
    ratio = rkhs_norm(h, g_grid, alpha * f) / rkhs_norm(h, f_grid, f)
    assert ratio == pytest.approx(alpha * beta**h, rel=1e-8)


# --- serialization ----------------------------------------------------------

def test_rate_path_serialization():
    p = theta(0.6, n=32)
    d = json.loads(p.to_json())
    assert d["value"] == p.value
    assert len(d["z"]) == len(d["lambda"]) == 32
    rows = list(p.csv_rows())
    assert rows[0] == ("t", "z", "lambda")
    assert float(rows[-1][1]) == p.z[-1]

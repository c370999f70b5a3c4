import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from bernstein_lab import foliation as fo


def _symbolic_series():
    s, c2, c4 = sp.symbols("s c2 c4")
    sig = 1 + c2 * s**2 + c4 * s**4
    d1 = sp.diff(sig, s)
    G = sp.diff(sig, s, 2) + 3 * (1 + d1**2) * (d1 / s - 1 / sig)
    ser = sp.expand(sp.series(G, s, 0, 3).removeO())
    return sp.solve([ser.coeff(s, 0), ser.coeff(s, 2)], [c2, c4], dict=True)[0], c2, c4


def test_series_coefficients_match_sympy():
    sol, c2, c4 = _symbolic_series()
    assert sol[c2] == sp.Rational(3, 8)
    assert fo.A2 == float(sol[c2])
    assert fo.A4 == pytest.approx(float(sol[c4]), rel=1e-15)


def test_sigma_pp_near_origin(profile):
    sol, c2, _ = _symbolic_series()
    # second derivative produced by the ODE at the first integrated sample
    assert abs(profile.sigma_pp[1] - 2 * float(sol[c2])) <= 1e-6
    assert profile.sigma[0] == 1.0 and profile.sigma_p[0] == 0.0


def test_matches_independent_radau_integration(profile):
    s0 = 1e-3
    y0 = [1 + fo.A2 * s0**2 + fo.A4 * s0**4, 2 * fo.A2 * s0 + 4 * fo.A4 * s0**3]

    def rhs(s, y):
        return [y[1], -3 * (1 + y[1] ** 2) * (y[1] / s - 1 / y[0])]

    ref = solve_ivp(rhs, (s0, 20.0), y0, method="Radau", rtol=1e-11, atol=1e-13, dense_output=True)
    pts = np.array([0.5, 1.0, 3.0, 10.0, 20.0])
    sig, sp_, _ = profile.evaluate(pts)
    np.testing.assert_allclose(sig, ref.sol(pts)[0], rtol=1e-8)
    np.testing.assert_allclose(sp_, ref.sol(pts)[1], rtol=1e-7)


def test_interpolant_is_nearly_minimal(profile):
    s = 0.5 * (profile.s_grid[1:-1] + profile.s_grid[2:])
    e0, e1, e2 = (profile.curve.excess(s, k) for k in range(3))
    assert np.max(np.abs(fo.mean_curvature_residual(s + e0, 1 + e1, e2, s))) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.5, 50.0))
def test_scaling_of_mean_curvature_residual(lam, s):
    # sigma_lam(s) = lam sigma(s/lam) has G(sigma_lam)(s) = G(sigma)(s/lam) / lam
    sig, sp_, spp = 1.0 + 0.3 * s, 0.9, -0.05
    g1 = fo.mean_curvature_residual(sig, sp_, spp, s)
    g2 = fo.mean_curvature_residual(lam * sig, sp_, spp / lam, lam * s)
    assert g2 == pytest.approx(g1 / lam, rel=1e-12, abs=1e-14)


def test_trajectory_stays_in_region(profile):
    s, inside = fo.trajectory_in_region(profile, s_min=5.0)
    assert s.size > 100 and inside.all()


def test_asymptotic_fit(profile):
    assert profile.a > 0
    m = (profile.s_grid >= 10) & (profile.s_grid <= 200)
    s = profile.s_grid[m]
    tail = np.abs(profile.excess[m] - profile.a * s**-2) * s**3
    assert tail.max() < 10.0


def test_fit_window_errors(profile):
    with pytest.raises(fo.FitError):
        fo.fit_asymptotics(profile, (3.0, 3.5))
    with pytest.raises(fo.FitError):
        fo.fit_asymptotics(profile, (3.0, 9.0))


def test_trap_polynomial_exact():
    z = sp.symbols("z")
    P = 6 * z**13 - 11 * z**10 + 11 * z**3 - 6
    assert fo.trap_polynomial(Fraction(1)) == 0
    assert fo.trap_polynomial_derivative(Fraction(1)) == 1
    assert sp.expand(sp.diff(P, z) - (78 * z**12 - 110 * z**9 + 33 * z**2)) == 0
    for q in (Fraction(3, 2), Fraction(7, 5), Fraction(11, 10)):
        assert fo.trap_polynomial(q) == P.subs(z, sp.Rational(q.numerator, q.denominator))


@settings(max_examples=60, deadline=None)
@given(st.floats(1.001, 1e3))
def test_field_points_inward_on_boundary(x):
    vx, vy = fo.vector_field(x, 1.0 / x)
    assert -(vx / x**2 + vy) > 0
    y = x**-2.5
    vx, vy = fo.vector_field(x, y)
    assert 2.5 * x**-3.5 * vx + vy > 0
    assert fo.trap_polynomial(math.sqrt(x)) > 0


def test_boundary_report():
    rep = fo.verify_trapping_boundary(10_000)
    assert rep.passed
    assert rep.x_range == (1.001, 1e3)
    with pytest.raises(ValueError):
        fo.verify_trapping_boundary(1)


@given(st.floats(1.0, 100.0), st.floats(0.0, 1.0))
def test_region_membership(x, frac):
    lo, hi = x**-2.5, 1.0 / x
    assert fo.in_trapping_region(x, lo + frac * (hi - lo))
    assert not fo.in_trapping_region(x, hi + 1e-6)
    assert not fo.in_trapping_region(0.5, 1.0)


def test_linearization_jacobian_matches_fd():
    h = 1e-6
    J = np.empty((2, 2))
    for k, d in enumerate([(h, 0.0), (0.0, h)]):
        p = fo.vector_field(1 + d[0], 1 + d[1])
        m = fo.vector_field(1 - d[0], 1 - d[1])
        J[:, k] = (np.array(p) - np.array(m)) / (2 * h)
    np.testing.assert_allclose(J, np.array(fo.LINEAR_MATRIX, dtype=float), atol=1e-7)
    assert fo.vector_field(1.0, 1.0) == (0.0, 0.0)


def test_eigenpairs_exact():
    M = fo.LINEAR_MATRIX
    for v, lam in ((fo.MODE_P, -3), (fo.MODE_Q, -4)):
        Mv = tuple(sum(M[i][j] * v[j] for j in range(2)) for i in range(2))
        assert Mv == (lam * v[0], lam * v[1])
    lin = fo.linear_analysis()
    assert [p[1] for p in lin.eigenpairs] == [-3.0, -4.0]
    assert lin.form_monotone and lin.form_min == pytest.approx(2.0, abs=1e-12)


@given(st.fractions(min_value=1, max_value=Fraction(5, 2), max_denominator=1000))
def test_quadratic_form_slope_exact(s):
    M = fo.LINEAR_MATRIX
    e = (Fraction(1), -s)
    eMe = sum(e[i] * M[i][j] * e[j] for i in range(2) for j in range(2))
    assert fo.quadratic_form_slope(s) == -2 * eMe / (1 + s * s)
    assert fo.quadratic_form_slope(s) > 0


def test_quadratic_form_values():
    assert fo.quadratic_form_slope(Fraction(1)) == 2
    assert fo.quadratic_form_slope(Fraction(5, 2)) == Fraction(208, 29)


def test_integrate_leaf_argument_checks():
    with pytest.raises(ValueError):
        fo.integrate_leaf(s_max=5.0)
    with pytest.raises(ValueError):
        fo.integrate_leaf(tol=1e-3)
    err = fo.LeafIntegrationError("x", state={"s": 1.0})
    assert err.state == {"s": 1.0}


def test_mean_curvature_residual_domain():
    with pytest.raises(ValueError):
        fo.mean_curvature_residual(1.0, 0.0, 0.0, 0.0)


def test_csv_outputs(profile, tmp_path):
    fo.write_leaf_csv(profile, tmp_path / "leaf.csv")
    lines = (tmp_path / "leaf.csv").read_text().splitlines()
    assert lines[0] == "s,sigma,sigma_p,sigma_pp"
    assert lines[1].split(",")[:2] == ["0.0", "1.0"]
    fo.write_phase_csv(profile, tmp_path / "phase.csv")
    rows = (tmp_path / "phase.csv").read_text().splitlines()
    assert rows[0] == "t,x,y,in_region" and len(rows) == np.sum(profile.s_grid > 0) + 1


def test_phase_excludes_origin(profile):
    t, x, y = profile.phase(s_min=0.0)
    assert np.all(np.isfinite(t)) and t.size == np.sum(profile.s_grid > 0)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bernstein_lab import barriers as B


@given(st.floats(1e-8, 1e12))
def test_arctan_tail_closed_form(u):
    assert float(B.arctan_tail(u)) == pytest.approx(math.atan(u), rel=1e-10, abs=1e-15)


@pytest.mark.parametrize("s", [1e-3, 0.3, 1.0, 40.0, 1e3])
def test_super_exponent_against_quad(s):
    A = 2.0
    f = lambda tau: A**2 * tau ** (-11 / 12) / (1 + tau ** (1 / 6))  # noqa: E731
    m = max(s, 1.0)
    ref = quad(f, s, m, limit=400, epsabs=0, epsrel=1e-11)[0] + quad(f, m, np.inf, limit=400, epsrel=1e-11)[0]
    assert float(B.SuperProfile(A).exponent(s)) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("s", [1e-3, 0.3, 1.0, 40.0, 1e3])
def test_sub_exponent_against_quad(s):
    Bc = 1.5
    f = lambda tau: tau ** (-2 / 3) / (1 + tau ** (2 / 3))  # noqa: E731
    ref = -Bc * quad(f, s, np.inf, limit=400, epsabs=0, epsrel=1e-11)[0]
    assert float(B.SubProfile(Bc).exponent(s)) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("s", [1e-4, 0.5, 3.0, 50.0])
def test_profiles_integrate_their_derivatives(s):
    F = B.SuperProfile(0.5)
    # substitute tau = x^12 to tame the endpoint singularity
    dF = lambda x: 12 * x**11 * float(np.exp(F.log_dF(x**12)))  # noqa: E731
    ref = quad(dF, 0, s ** (1 / 12), limit=400, epsrel=1e-12)[0]
    assert float(np.exp(F.log_F(s))) == pytest.approx(ref, rel=1e-8)
    G = B.SubProfile(1.0)
    dG = lambda x: 3 * x**2 * float(np.exp(G.log_dG(x**3)))  # noqa: E731
    ref = quad(dG, 0, s ** (1 / 3), limit=400, epsrel=1e-12)[0]
    assert float(G.G(s)) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=40)
@given(st.floats(1e-6, 1e6), st.floats(1.0, 20.0))
def test_super_profile_lower_bound_and_ratio(s, A):
    F = B.SuperProfile(A)
    assert float(F.log_dF(s)) >= math.log(A) - 5 / 6 * math.log(s)
    h = 1e-5 * s
    fd = float(F.log_dF(s + h) - F.log_dF(s - h)) / (2 * h)
    assert float(F.ddF_over_dF(s)) == pytest.approx(fd, rel=1e-5)
    assert float(F.ddF_over_dF(s)) < 0


@given(st.floats(1e-9, 1e9), st.floats(0.1, 8.0))
def test_sub_profile_slope_in_unit_interval(s, Bc):
    G = B.SubProfile(Bc)
    gp = float(np.exp(G.log_dG(s)))
    assert 0 < gp < 1
    assert float(np.exp(G.log_dG(1e12))) == pytest.approx(1.0, abs=1e-3 * Bc)


def test_profiles_are_odd():
    F = B.SuperProfile(1.0)
    s = np.array([0.2, 3.0])
    np.testing.assert_allclose(F(-s)[0], -F(s)[0])
    G = B.SubProfile(1.0)
    np.testing.assert_allclose(G.G(-s), -G.G(s))
    assert F(np.array([0.0]))[0][0] == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(1.0, 20.0))
def test_final_inequality_monotone_in_A(A1, dA):
    s = np.geomspace(1e-2, 1e2, 20)
    t = np.linspace(1, 10, 5)
    S, T = np.meshgrid(s, t, indexing="ij")
    lo = B.final_inequality_value(A1, S, T)
    hi = B.final_inequality_value(A1 + dA, S, T)
    assert np.all(hi >= lo * (1 - 1e-12))
    # both terms are positive: the first alone bounds the value below
    assert np.all(lo >= A1**2 * S ** (-1 / 3) * T**-4.0 * (1 - 1e-12))


def test_final_inequality_input_checks():
    with pytest.raises(ValueError):
        B.check_final_inequality(1.0, [0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        B.check_final_inequality(1.0, [1.0], [0.5])


@pytest.fixture(scope="module")
def base_level(profile):
    return B.LevelSetFunction(profile.curve)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 30.0), st.floats(0.05, 30.0), st.floats(0.1, 10.0))
def test_levelset_homogeneity(base_level, s, d, lam):
    w1 = base_level.value(s, s + d)[0]
    w2 = base_level.value(lam * s, lam * (s + d))[0]
    assert w2 == pytest.approx(lam**3 * w1, rel=1e-9)


@given(st.floats(0.0, 30.0), st.floats(0.05, 30.0))
@settings(deadline=None)
def test_levelset_odd(base_level, s, d):
    assert base_level.value(s + d, s)[0] == -base_level.value(s, s + d)[0]
    assert base_level.value(s, s)[0] == 0.0


def test_leaf_is_unit_level(base_level, profile):
    u = np.array([0.0, 0.5, 2.0, 30.0, 150.0])
    sig = profile.evaluate(u)[0]
    # t - s = e(u) is small for large u, so rounding in sigma limits the accuracy
    tol = 1e-12 + 1e-16 * u / (sig - u)
    assert np.all(np.abs(base_level.value(u, sig) - 1.0) <= tol)


def test_jet_against_fd_and_euler(base_level):
    s = np.array([0.3, 1.5, 4.0])
    t = np.array([1.4, 2.0, 9.0])
    j = base_level.jet(s, t)
    h = 1e-5
    v = base_level.value
    np.testing.assert_allclose(j["ws"], (v(s + h, t) - v(s - h, t)) / (2 * h), rtol=1e-7)
    np.testing.assert_allclose(j["wt"], (v(s, t + h) - v(s, t - h)) / (2 * h), rtol=1e-7)
    # the leaf interpolant is only C^2 across its nodes, so second differences carry O(h) error
    h = 1e-4
    np.testing.assert_allclose(j["wss"], (v(s + h, t) - 2 * v(s, t) + v(s - h, t)) / h**2, rtol=1e-3)
    np.testing.assert_allclose(j["wst"], (v(s + h, t + h) - v(s + h, t - h) - v(s - h, t + h)
                                          + v(s - h, t - h)) / (4 * h * h), rtol=1e-3, atol=1e-6)
    np.testing.assert_allclose(j["wtt"], (v(s, t + h) - 2 * v(s, t) + v(s, t - h)) / h**2, rtol=1e-3)
    # Euler relations for a 3-homogeneous function
    np.testing.assert_allclose(s * j["ws"] + t * j["wt"], 3 * j["w"], rtol=1e-12)
    np.testing.assert_allclose(s * j["wss"] + t * j["wst"], 2 * j["ws"], rtol=1e-9, atol=1e-12)


def test_minimal_leaf_levelsets_are_minimal(base_level):
    s = np.array([0.5, 2.0, 5.0, 8.0])
    t = s + np.array([1.0, 0.5, 3.0, 0.2])
    g = base_level.geometry(s, t)
    assert np.max(np.abs(g["H"])) < 1e-8


def test_geometry_matches_leaf_curvature(spec):
    s = np.array([0.5, 2.0, 5.0])
    t = s + np.array([1.0, 0.5, 3.0])
    g = spec.v_upper.geometry(s, t)
    np.testing.assert_allclose(g["H"], spec.v_upper.leaf_mean_curvature(s, t), rtol=1e-7)
    assert np.all(g["H"] > 0)


def test_domain_errors(base_level):
    with pytest.raises(B.BarrierDomainError):
        base_level.parameters(np.array([1.0]), np.array([1.0]))
    with pytest.raises(B.BarrierDomainError):
        base_level.geometry(0.0, 1.0)
    with pytest.raises(ValueError):
        B.ReducedPoint(-1.0, 1.0)
    assert B.levelset_value(B.ReducedPoint(0.0, 1.0), base_level.curve) == pytest.approx(1.0)


def test_barrier_parameters(spec):
    assert (spec.A, spec.B, spec.D) == (10.0, 1.0, 0.0)
    assert 10 < spec.C_req < 1e3
    assert spec.margins["leaf_ordering"] > 0
    assert spec.margins["final_inequality_global_min"] >= spec.C_req
    c = spec.constants
    assert c["kappa"] == pytest.approx(min(1.0, c["k_H"] * c["k_grad"]))
    assert c["C_req"] == pytest.approx(2 * c["K_hess"] / (c["k_grad"] ** 2 * c["kappa"]))


def test_lower_leaf(spec, perturbed):
    assert spec.leaf_lower(np.array([0.0]))[0][0] == pytest.approx(2.0)
    assert spec.leaf_upper(np.array([0.0]))[0][0] == pytest.approx(1.0)
    s = np.linspace(0, 200, 401)
    assert B.leaf_ordering_margin(spec.leaf_upper, spec.leaf_lower, s) > 0


def test_barrier_ordering(spec):
    S, T = B.verification_grid(8.0, 0.1, margin=0.02)
    assert B.ordering_violation(spec, S, T) == 0.0
    under = B.subsolution_values(S, T, spec)
    assert np.all(under >= 0)
    assert B.subsolution_value(B.ReducedPoint(1.0, 1.0), spec) == 0.0
    sign, lb = B.supersolution_log_value(S, T, spec)
    assert np.all(sign > 0) and np.all(lb > np.log(np.maximum(under, 1e-300)))


def test_sign_checks_refine(spec):
    grid = B.verification_grid(8.0, 0.25, margin=0.25)
    for kind in ("supersolution", "subsolution"):
        r1 = B.verify_mean_curvature_sign(kind, spec, grid, 0.04)
        r2 = B.verify_mean_curvature_sign(kind, spec, grid, 0.02)
        assert r1.max_wrong_sign == 0.0 and r2.max_wrong_sign == 0.0
        assert r1.analytic_max_wrong_sign == 0.0
        assert r1.consistency_error / r2.consistency_error > 3.5
    with pytest.raises(ValueError):
        B.verify_mean_curvature_sign("neither", spec, grid, 0.04)


def test_exports(spec, tmp_path):
    S, T = B.verification_grid(4.0, 0.5)
    B.write_barrier_csv(spec, S, T, 0.05, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "s,t,u_bar,u_under,msop_bar,msop_under" and len(lines) == S.size + 1
    B.write_barrier_json(spec, tmp_path / "b.json")
    assert '"A": 10.0' in (tmp_path / "b.json").read_text()

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bernstein_lab import mss2d as S

H = S.HolomorphicPoly([0, 0, 0.25])
coef = st.complex_numbers(max_magnitude=0.5, allow_nan=False, allow_infinity=False)


@given(st.lists(coef, min_size=1, max_size=4), st.floats(0.2, 5.0),
       st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
def test_quadratic_identity(cs, lam, z):
    Lam = lam - 1 / lam
    h1, h2 = S.h_from_H(S.HolomorphicPoly(cs), Lam, np.array([z]))
    scale = abs(h1[0]) ** 2 + abs(h2[0]) ** 2 + 1
    assert abs(h1[0] ** 2 + h2[0] ** 2 - Lam) <= 1e-12 * scale


def test_degenerate_lambda_one():
    h1, h2 = S.h_from_H(H, 0.0, np.array([0.3 + 0.1j]))
    assert abs(h1[0] ** 2 + h2[0] ** 2) < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_path_independence(x1, x2):
    gen = S.MSS2DGenerator(H, 2.0)
    a = gen.values(np.array([x1]), np.array([x2]), path="axis")
    b = gen.values(np.array([x1]), np.array([x2]), path="staircase")
    assert np.max(np.abs(a - b)) < 1e-12


def test_exact_gradients_match_fd():
    gen = S.MSS2DGenerator(H, 1.7)
    x1, x2 = np.array([0.3, -0.8]), np.array([0.5, 1.1])
    g = gen.gradients(x1, x2)
    e = 1e-5
    d1 = (gen.values(x1 + e, x2) - gen.values(x1 - e, x2)) / (2 * e)
    d2 = (gen.values(x1, x2 + e) - gen.values(x1, x2 - e)) / (2 * e)
    np.testing.assert_allclose(g[:, 0], d1, rtol=1e-7, atol=1e-9)
    np.testing.assert_allclose(g[:, 1], d2, rtol=1e-7, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 4.0), st.floats(0.0, 2 * math.pi))
def test_area_tensor_is_constant_with_exact_gradients(lam, phi):
    Q = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    gen = S.MSS2DGenerator(H, lam, Q)
    x = np.linspace(-1, 1, 9)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    A = S.area_tensor(gen.gradients(X1, X2))
    C = Q.T @ np.diag([lam, 1 / lam]) @ Q
    assert np.max(np.abs(A - C[:, :, None, None])) < 1e-10 * max(lam, 1 / lam)


def test_rotation_equivariance():
    phi = 0.3
    Q = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    g1, g0 = S.MSS2DGenerator(H, 2.0, Q), S.MSS2DGenerator(H, 2.0)
    x, y = np.array([0.3, -1.1]), np.array([0.7, 0.2])
    y1, y2 = Q[0, 0] * x + Q[0, 1] * y, Q[1, 0] * x + Q[1, 1] * y
    assert np.max(np.abs(g1.values(x, y) - g0.values(y1, y2))) < 1e-14


@pytest.fixture(scope="module")
def family():
    return [S.generate_solution(H, 2.0, n_nodes=n) for n in (33, 65, 129, 257)]


def test_residual_orders(family):
    for fn in (S.residual_outer, S.residual_inner, S.area_tensor_deviation):
        errs = [fn(s) for s in family]
        orders = S.order_of_convergence(errs)
        assert np.all(np.abs(orders - 2.0) <= 0.3), (fn.__name__, orders)


def test_negative_control_flagged(family):
    neg = []
    for s in family:
        bad = S.MSS2DSolution(s.lam, s.Lambda, s.rotation, s.x, s.u.copy())
        bad.u[0] += 1e-2 * s.x[:, None] ** 3
        neg.append(S.residual_outer(bad))
    assert min(neg) > 100 * S.residual_outer(family[-1])
    assert neg[-1] >= neg[0]


def test_jorgens_reduction(family):
    rep = S.jorgens_reduction(family[2])
    assert rep.passed and rep.max_det_error < 1e-12 and rep.min_eigenvalue > 0
    rep_fd = S.jorgens_reduction(family[2], h=family[2].h)
    assert rep_fd.max_det_error < 1e-12


def test_scherk_graph():
    sols = [S.scherk_graph(np.linspace(-1, 1, n), shrink=0.5) for n in (129, 257, 513)]
    rep = S.jorgens_reduction(sols[0])
    assert rep.passed and rep.eigen_formula_error < 1e-12
    orders = S.order_of_convergence([S.residual_outer(s) for s in sols])
    assert np.all(np.abs(orders - 2.0) < 0.3)


def test_stride_and_errors(family):
    fine = family[3]
    assert S.residual_outer(fine, h=2 * fine.h) > 0
    with pytest.raises(ValueError):
        S.residual_outer(fine, h=1.5 * fine.h)
    with pytest.raises(ValueError):
        S.HolomorphicPoly([1.0] * 18)
    with pytest.raises(S.ExponentRangeError):
        S.h_from_H(S.HolomorphicPoly([800.0]), 1.0, np.array([0j]))
    with pytest.raises(ValueError):
        S.MSS2DGenerator(H, -1.0)
    with pytest.raises(ValueError):
        S.MSS2DGenerator(H, 1.0, np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        S.MSS2DGenerator(H, 1.0).values(np.array([0.1]), np.array([0.1]), path="spiral")


def test_domain_clamp():
    sol = S.generate_solution(S.HolomorphicPoly([0, 0, 3.0]), 2.0, n_nodes=33)
    assert sol.clamped
    gen = S.MSS2DGenerator(S.HolomorphicPoly([0, 0, 3.0]), 2.0)
    assert gen.max_abs_re_H(sol.x[-1]) <= S.RE_H_LIMIT


def test_exports(family, tmp_path):
    S.write_solution_csv(family[0], tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,u1,u2" and len(lines) == 33 * 33 + 1
    S.write_residual_json({"outer": [1.0]}, tmp_path / "m.json")
    assert "outer" in (tmp_path / "m.json").read_text()

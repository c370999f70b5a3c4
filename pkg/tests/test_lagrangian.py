import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bernstein_lab import lagrangian as Lg

angles = st.floats(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3)


@given(angles, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_composition_law(a, t1, t2):
    assume(abs(a - t1) < math.pi / 2 - 1e-3 and abs(a - t1 - t2) < math.pi / 2 - 1e-3)
    lam = math.tan(a)
    two = Lg.rotate_eigenvalue(Lg.rotate_eigenvalue(lam, t1), t2)
    one = Lg.rotate_eigenvalue(lam, t1 + t2)
    assert two == pytest.approx(one, rel=1e-9, abs=1e-9)


@given(st.lists(angles, min_size=2, max_size=5), st.floats(0.0, 1.0))
def test_slag_shift(angs, frac):
    lam = np.tan(np.array(angs))
    theta = frac * (min(angs) + math.pi / 2 - 1e-3)
    rot = Lg.rotate_eigenvalue(lam, theta)
    n = len(angs)
    assert Lg.slag_value(rot, 0.0) == pytest.approx(Lg.slag_value(lam, 0.0) - n * theta, abs=1e-9)
    assert Lg.slag_value(Lg.SpectrumVector(lam), 1.0) == pytest.approx(np.sum(np.arctan(lam)) - 1.0)


@given(angles, angles, st.floats(-0.5, 0.5))
def test_rotation_monotone(a, b, theta):
    assume(b - a > 1e-6 and abs(a - theta) < math.pi / 2 - 1e-3 and abs(b - theta) < math.pi / 2 - 1e-3)
    assert Lg.rotate_eigenvalue(math.tan(a), theta) < Lg.rotate_eigenvalue(math.tan(b), theta)


def _random_hessian(rng, theta, dim=4):
    lo = max(-math.pi / 2, theta - math.pi / 2) + 1e-2
    hi = min(math.pi / 2, theta + math.pi / 2) - 1e-2
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (Q * np.tan(rng.uniform(lo, hi, dim))) @ Q.T


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(0.05, 3.0))
def test_hessian_rotation_matches_direct_formula(seed, theta):
    rng = np.random.default_rng(seed)
    M = _random_hessian(rng, theta)
    c, s = math.cos(theta), math.sin(theta)
    I = np.eye(4)
    direct = np.linalg.solve((c * I + s * M).T, (-s * I + c * M).T).T
    R = Lg.rotate_hessian(M, theta)
    assert np.allclose(R, direct, rtol=1e-8, atol=1e-8 * np.abs(direct).max())
    assert np.allclose(R, R.T)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(0.05, 3.0))
def test_orthogonal_conjugation_commutes(seed, theta):
    rng = np.random.default_rng(seed)
    M = _random_hessian(rng, theta)
    P, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    lhs = Lg.rotate_hessian(P @ M @ P.T, theta)
    rhs = P @ Lg.rotate_hessian(M, theta) @ P.T
    assert np.allclose(lhs, rhs, atol=1e-8 * max(1.0, np.abs(rhs).max()))


def test_graph_condition():
    with pytest.raises(Lg.GraphConditionError):
        Lg.rotate_eigenvalue(-2.0, math.pi / 4)
    with pytest.raises(Lg.GraphConditionError):
        Lg.rotate_hessian(np.diag([-2.0, 1.0]), math.pi / 4)
    with pytest.raises(ValueError):
        Lg.rotate_hessian(np.ones((2, 3)), 0.1)
    r = Lg.rotate_hessian(np.diag([1.0, 2.0]), 0.3, return_condition=True)
    assert r.condition >= 1.0


def test_spectrum_vector_sorted():
    v = Lg.SpectrumVector([1.0, 3.0, -2.0])
    assert v.lambdas == (3.0, 1.0, -2.0) and v.n == 3


def test_level_set_sampling():
    rng = np.random.default_rng(0)
    x = Lg.sample_level_set(3, 0.7, 1000, rng)
    assert np.allclose(np.arctan(x).sum(axis=1), 0.7, atol=1e-12)
    z = Lg.sample_tangent(x, rng)
    assert np.allclose(np.sum(z / (1 + x**2), axis=1), 0.0, atol=1e-10)
    with pytest.raises(Lg.SamplingError):
        Lg.sample_level_set(2, 3.2, 100, rng, max_rounds=2)


def test_convexity_quadratic_is_second_derivative():
    # along a level curve x(e) with x'(0) = z, d^2/de^2 sum arctan = 0 gives
    # sum x''/(1+x^2) = 2 sum x z^2 / (1+x^2)^2; compare with a direct FD curve
    rng = np.random.default_rng(3)
    x = Lg.sample_level_set(3, 0.4, 1, rng)[0]
    z = Lg.sample_tangent(x[None], rng)[0]
    g = 1 / (1 + x**2)
    q = Lg.convexity_quadratic(x, z)
    # x'' along g-direction correction: x'' = c * g with sum g^2 c = 2 q
    c = 2 * q / np.sum(g * g)
    e = 1e-4
    xe = x + e * z + 0.5 * e * e * c * g
    assert abs(np.arctan(xe).sum() - 0.4) < 1e-9


@pytest.mark.parametrize("n,theta,violation", [(3, math.pi / 2, False), (3, 0.0, True), (4, math.pi, False),
                                               (4, 2.0, True)])
def test_convexity_threshold(n, theta, violation):
    res = Lg.levelset_convexity_witness(n, theta, 20_000, seed=1)
    assert res.violation == violation
    assert (abs(theta) < Lg.convexity_threshold(n)) == violation


def test_acceptance_sweeps():
    res = Lg.levelset_convexity_witness(3, math.pi / 2, 100_000, seed=0)
    assert res.min_value >= -1e-12 and res.n_samples == 100_000
    res = Lg.levelset_convexity_witness(3, 0.0, 100_000, seed=0)
    assert res.min_value <= -0.5
    assert np.isclose(np.arctan(res.x).sum(), 0.0, atol=1e-12)
    assert Lg.convexity_quadratic(np.array(res.x), np.array(res.z)) == pytest.approx(res.min_value)


def test_witness_validation():
    with pytest.raises(ValueError):
        Lg.levelset_convexity_witness(1, 0.0, 10, 0)


def test_jorgens_rotation():
    rng = np.random.default_rng(0)
    rep = Lg.jorgens_rotation_check(Lg.random_unimodular_hessians(500, rng))
    assert rep.passed and rep.max_trace < 1e-10
    with pytest.raises(Lg.HessianInputError):
        Lg.jorgens_rotation_check([np.diag([2.0, 2.0])])
    with pytest.raises(Lg.HessianInputError):
        Lg.jorgens_rotation_check([np.diag([-1.0, -1.0])])


def test_witness_json(tmp_path):
    res = Lg.levelset_convexity_witness(3, 0.0, 1000, seed=0)
    Lg.write_witness_json(res, tmp_path / "w.json")
    text = (tmp_path / "w.json").read_text()
    for key in ("theta", "x", "z", "value", "seed"):
        assert f'"{key}"' in text

"""The cone ``u(z) = k |z| H(z / |z|)`` over ``C^2`` built from the Hopf map.

With ``z1 = x1 + i x2`` and ``z2 = x3 + i x4``, ``|z|^2 H(z/|z|)`` is the
quadratic map ``(|z1|^2 - |z2|^2, -2i z1 z2)`` read in ``R x C = R^3``.
The graph is minimal exactly when ``1 + 4k^2 = 6``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect


class S3InputError(ValueError):
    pass


class StepError(ValueError):
    pass


@dataclass(frozen=True)
class S3Point:
    z1: complex
    z2: complex

    def __post_init__(self):
        if abs(abs(self.z1) ** 2 + abs(self.z2) ** 2 - 1.0) > 1e-12:
            raise S3InputError("point must have unit norm")

    def as_real(self):
        return np.array([self.z1.real, self.z1.imag, self.z2.real, self.z2.imag])


# Q^a(x) = x^T A_a x
_A = np.zeros((3, 4, 4))
_A[0] = np.diag([1.0, 1.0, -1.0, -1.0])
_A[1][0, 3] = _A[1][3, 0] = _A[1][1, 2] = _A[1][2, 1] = 1.0
_A[2][0, 2] = _A[2][2, 0] = -1.0
_A[2][1, 3] = _A[2][3, 1] = 1.0


def hopf_map(p, tol=1e-8):
    """``(|z1|^2 - |z2|^2, Re(-2i z1 z2), Im(-2i z1 z2))``."""
    z1, z2 = (p.z1, p.z2) if isinstance(p, S3Point) else p
    if abs(abs(z1) ** 2 + abs(z2) ** 2 - 1.0) > tol:
        raise S3InputError("point must have unit norm")
    w = -2j * z1 * z2
    return np.array([abs(z1) ** 2 - abs(z2) ** 2, w.real, w.imag])


def quaternion(z1, z2):
    """``q(z) = a + b i + c j + d k`` for ``z1 = a + bi``, ``z2 = c + di``."""
    return np.array([z1.real, z1.imag, z2.real, z2.imag])


def quat_mul(p, q):
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def rotation_matrix(q):
    """Matrix of ``p -> q p q^{-1}`` on pure quaternions."""
    q = np.asarray(q, dtype=float) / np.linalg.norm(q)
    cols = []
    for e in np.eye(3):
        v = quat_mul(quat_mul(q, np.concatenate([[0.0], e])), quat_conj(q))
        cols.append(v[1:])
    return np.column_stack(cols)


def su2_matrix(z1, z2):
    return np.array([[z1, z2], [-np.conj(z2), np.conj(z1)]])


def su2_product(w, z):
    """Group product on ``S^3`` through ``SU(2)``."""
    M = su2_matrix(*w) @ su2_matrix(*z)
    return M[0, 0], M[0, 1]


def cone_map(x, k):
    """``u(x) = k Q(x) / |x|`` for ``x`` in ``R^4`` (last axis)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    Q = np.einsum("...i,aij,...j->...a", x, _A, x)
    return k * Q / r[..., None]


def _jet(x, k):
    """Exact gradient ``(3, 4)`` and Hessians ``(3, 4, 4)`` of the cone map."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    Ax = _A @ x
    Q = Ax @ x
    grad = k * (2 * Ax / r - np.outer(Q, x) / r**3)
    xx = np.outer(x, x)
    I = np.eye(4)
    hess = np.empty((3, 4, 4))
    for a in range(3):
        cross = np.outer(Ax[a], x) + np.outer(x, Ax[a])
        hess[a] = k * (2 * _A[a] / r - 2 * cross / r**3 - Q[a] * I / r**3 + 3 * Q[a] * xx / r**5)
    return grad, hess


def metric(x, k):
    grad, _ = _jet(x, k)
    return np.eye(4) + grad.T @ grad


def axis_residual(k, t=1.0):
    """Closed form on the axis ``(t, 0, 0, 0)``: ``(k(1 - 6/(1 + 4k^2)) / t, 0, 0)``."""
    return np.array([k * (1.0 - 6.0 / (1.0 + 4.0 * k * k)) / t, 0.0, 0.0])


def mss_residual_at(z, k):
    """``g^{ij} u^a_{ij}`` at ``z`` (in ``R^4``)."""
    z = np.asarray(z, dtype=float)
    r = float(np.linalg.norm(z))
    if r == 0:
        raise ValueError("z must be nonzero")
    if z[0] > 0 and not np.any(z[1:]):
        return axis_residual(k, z[0])
    grad, hess = _jet(z, k)
    ginv = np.linalg.inv(np.eye(4) + grad.T @ grad)
    return np.einsum("ij,aij->a", ginv, hess)


def mss_residual_fd(z, k, h=None):
    """``g^{ij} u^a_{ij}`` from centred differences of the explicit map (step ``1e-4 |z|``)."""
    z = np.asarray(z, dtype=float)
    r = float(np.linalg.norm(z))
    if r < 1e-6:
        raise StepError("finite differences break down near the vertex")
    h = 1e-4 * r if h is None else h
    E = np.eye(4) * h
    f0 = cone_map(z, k)
    grad = np.empty((3, 4))
    hess = np.empty((3, 4, 4))
    for i in range(4):
        fp, fm = cone_map(z + E[i], k), cone_map(z - E[i], k)
        grad[:, i] = (fp - fm) / (2 * h)
        hess[:, i, i] = (fp - 2 * f0 + fm) / h**2
        for j in range(i + 1, 4):
            v = (cone_map(z + E[i] + E[j], k) - cone_map(z + E[i] - E[j], k)
                 - cone_map(z - E[i] + E[j], k) + cone_map(z - E[i] - E[j], k)) / (4 * h * h)
            hess[:, i, j] = hess[:, j, i] = v
    ginv = np.linalg.inv(np.eye(4) + grad.T @ grad)
    return np.einsum("ij,aij->a", ginv, hess)


def solve_k(lo=0.5, hi=2.0):
    """Bisection root of the first axis residual component."""
    return float(bisect(lambda k: mss_residual_at(np.array([1.0, 0, 0, 0]), k)[0], lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


@dataclass
class EquivarianceResult:
    residual_at_z: float
    residual_at_axis: float
    difference: float


def equivariance_check(z, k):
    """Compare ``|residual|`` at ``z`` (finite differences) with the axis value at ``|z|``."""
    z = np.asarray(z, dtype=float)
    rz = float(np.linalg.norm(mss_residual_fd(z, k)))
    ra = float(np.linalg.norm(mss_residual_at(np.array([np.linalg.norm(z), 0, 0, 0]), k)))
    return EquivarianceResult(rz, ra, abs(rz - ra))


def random_points(n, rng, r_min=0.5, r_max=2.0):
    v = rng.standard_normal((n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(r_min, r_max, (n, 1))


def lawson_osserman_report(n_samples=100, seed=0):
    k = solve_k()
    rng = np.random.default_rng(seed)
    res = [float(np.max(np.abs(mss_residual_fd(z, k)))) for z in random_points(n_samples, rng)]
    return {"k_star": k, "max_residual": max(res), "n_samples": n_samples}


def write_report_json(report, path):
    from pathlib import Path

    path = Path(path)
    path.write_text(json.dumps(report, indent=2, sort_keys=True))
    return path

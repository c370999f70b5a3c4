"""Eigenvalue rotation for gradient graphs and the special Lagrangian operator.

Rotating the coordinates ``(x, Du)`` of a gradient graph by ``theta`` turns
each Hessian eigenvalue ``lam`` into ``tan(arctan(lam) - theta)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class GraphConditionError(ValueError):
    """``cos(theta) + sin(theta) lam <= 0``: the rotated set is not a graph."""


class SamplingError(RuntimeError):
    pass


class HessianInputError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumVector:
    lambdas: tuple

    def __init__(self, lambdas):
        object.__setattr__(self, "lambdas", tuple(sorted((float(x) for x in lambdas), reverse=True)))

    @property
    def n(self):
        return len(self.lambdas)


def rotate_eigenvalue(lam, theta):
    """``(-sin(theta) + cos(theta) lam) / (cos(theta) + sin(theta) lam)``."""
    lam = np.asarray(lam, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    den = c + s * lam
    if np.any(den <= 0):
        raise GraphConditionError("cos(theta) + sin(theta) * lambda must be positive")
    out = (-s + c * lam) / den
    return float(out) if out.ndim == 0 else out


@dataclass
class RotatedHessian:
    matrix: np.ndarray
    condition: float


def rotate_hessian(M, theta, return_condition=False):
    """``(-sin I + cos M)(cos I + sin M)^{-1}`` through the eigendecomposition of ``M``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    Ms = 0.5 * (M + M.T)
    w, Q = np.linalg.eigh(Ms)
    c, s = math.cos(theta), math.sin(theta)
    den = c + s * w
    if np.any(den <= 0):
        raise GraphConditionError("cos(theta) I + sin(theta) M is not positive definite")
    out = (Q * ((-s + c * w) / den)) @ Q.T
    out = 0.5 * (out + out.T)
    if return_condition:
        return RotatedHessian(out, float(np.max(den) / np.min(den)))
    return out


def slag_value(spec, Theta):
    lam = spec.lambdas if isinstance(spec, SpectrumVector) else spec
    return float(np.sum(np.arctan(np.asarray(lam, dtype=float))) - Theta)


def convexity_quadratic(x, z):
    """``sum x_i z_i^2 / (1 + x_i^2)^2``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return np.sum(x * z**2 / (1 + x**2) ** 2, axis=-1)


@dataclass
class ConvexityResult:
    n: int
    theta: float
    seed: int
    n_samples: int
    violation: bool
    min_value: float
    x: list = field(default_factory=list)
    z: list = field(default_factory=list)

    def to_json(self):
        return {"theta": self.theta, "n": self.n, "x": self.x, "z": self.z,
                "value": self.min_value, "seed": self.seed, "violation": self.violation,
                "n_samples": self.n_samples}


def sample_level_set(n, Theta, n_samples, rng, max_rounds=100):
    """Points of ``{sum arctan x_i = Theta}``.

    ``x_2..x_n`` are tangents of uniform angles (Cauchy distributed);
    ``x_1 = tan(Theta - sum arctan x_i)`` with rejection when the needed
    angle leaves ``(-pi/2, pi/2)``.
    """
    out = []
    got = 0
    for _ in range(max_rounds):
        ang = rng.uniform(-math.pi / 2, math.pi / 2, size=(n_samples, n - 1))
        rest = np.tan(ang)
        a1 = Theta - ang.sum(axis=1)
        ok = np.abs(a1) < math.pi / 2 - 1e-9
        if np.any(ok):
            x = np.column_stack([np.tan(a1[ok]), rest[ok]])
            out.append(x)
            got += x.shape[0]
        if got >= n_samples:
            break
    if got == 0:
        raise SamplingError("no solvable coordinate for this level")
    return np.concatenate(out)[:n_samples]


def sample_tangent(x, rng):
    """Random ``z`` with ``sum z_i / (1 + x_i^2) = 0``."""
    g = 1.0 / (1.0 + x**2)
    z = rng.standard_normal(x.shape)
    z -= (np.sum(z * g, axis=1) / np.sum(g * g, axis=1))[:, None] * g
    return z


def levelset_convexity_witness(n, Theta, n_samples, seed, tol=1e-12, chunk=20000):
    """Sample the level set and report the most negative convexity quadratic seen.

    The whole sweep is evaluated so the returned witness is the minimum over
    all samples, not merely the first negative one.
    """
    if n < 2 or n_samples < 1:
        raise ValueError("need n >= 2 and n_samples >= 1")
    rng = np.random.default_rng(seed)
    best = (math.inf, None, None)
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        x = sample_level_set(n, Theta, m, rng)
        z = sample_tangent(x, rng)
        q = convexity_quadratic(x, z)
        k = int(np.argmin(q))
        if q[k] < best[0]:
            best = (float(q[k]), x[k], z[k])
        done += m
    val, x, z = best
    return ConvexityResult(n=n, theta=float(Theta), seed=seed, n_samples=done, violation=val < -tol,
                           min_value=val, x=[float(v) for v in x], z=[float(v) for v in z])


def convexity_threshold(n):
    """Level-set convexity holds iff ``|Theta| >= (n - 2) pi / 2``."""
    return (n - 2) * math.pi / 2


@dataclass
class JorgensReport:
    n_samples: int
    max_trace: float
    max_abs_eigenvalue: float
    passed: bool

    def to_json(self):
        return self.__dict__.copy()


def jorgens_rotation_check(hessian_samples, trace_tol=1e-8):
    """Rotate positive ``det = 1`` Hessians by ``pi/4``; image must be traceless inside ``(-1, 1)``."""
    max_tr = 0.0
    max_eig = 0.0
    for H in hessian_samples:
        H = np.asarray(H, dtype=float)
        det = float(np.linalg.det(H))
        if abs(det - 1.0) > 1e-6:
            raise HessianInputError(f"det = {det} deviates from 1")
        if np.any(np.linalg.eigvalsh(0.5 * (H + H.T)) <= 0):
            raise HessianInputError("Hessian must be positive definite")
        R = rotate_hessian(H, math.pi / 4)
        max_tr = max(max_tr, abs(float(np.trace(R))))
        max_eig = max(max_eig, float(np.max(np.abs(np.linalg.eigvalsh(R)))))
    n = len(hessian_samples)
    return JorgensReport(n, max_tr, max_eig, bool(max_tr <= trace_tol and max_eig < 1.0))


def random_unimodular_hessians(n, rng):
    """Positive 2x2 matrices with unit determinant."""
    t = rng.uniform(-3, 3, n)
    phi = rng.uniform(0, math.pi, n)
    out = []
    for a, p in zip(t, phi):
        Q = np.array([[math.cos(p), -math.sin(p)], [math.sin(p), math.cos(p)]])
        out.append(Q @ np.diag([math.exp(a), math.exp(-a)]) @ Q.T)
    return out


def write_witness_json(result, path):
    from pathlib import Path

    path = Path(path)
    path.write_text(json.dumps(result.to_json(), indent=2, sort_keys=True))
    return path

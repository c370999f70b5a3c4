"""Entire two-dimensional solutions of the minimal surface system in R^4.

For ``lam > 0``, ``Lambda = lam - 1/lam`` and holomorphic ``H``,
``h^1 = (e^H + Lambda e^-H) / 2`` and ``h^2 = (e^H - Lambda e^-H) / (2i)``
satisfy ``(h^1)^2 + (h^2)^2 = Lambda``.  The potentials ``u~^a`` with
``grad u~^a = (Im h^a, Re h^a)`` are harmonic; the map
``u(x) = u~(y1 / sqrt(lam), sqrt(lam) y2)``, ``y = Q x``, solves the system.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

_GX, _GW = leggauss(16)
J = np.array([[0.0, -1.0], [1.0, 0.0]])
RE_H_LIMIT = 20.0


class HolomorphyError(RuntimeError):
    pass


class ExponentRangeError(OverflowError):
    pass


@dataclass(frozen=True)
class HolomorphicPoly:
    coeffs: tuple

    def __init__(self, coeffs):
        c = tuple(complex(x) for x in coeffs) or (0j,)
        if len(c) - 1 > 16:
            raise ValueError("degree must be <= 16")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in reversed(self.coeffs):
            out = out * z + c
        return out


def h_from_H(Hpoly, Lambda, z):
    """``(h^1, h^2)`` at ``z``."""
    Hz = Hpoly(z)
    if np.any(np.abs(np.real(Hz)) > 700):
        raise ExponentRangeError("|Re H| beyond the exponent range")
    e = np.exp(Hz)
    em = np.exp(-Hz)
    return 0.5 * (e + Lambda * em), (e - Lambda * em) / 2j


def _primitive(Hpoly, Lambda, z, path="axis", seg_len=0.125):
    """``P^a(z) = int_0^z -i h^a``, so ``u~^a = Re P^a``, along a polyline.

    ``path='axis'`` goes ``0 -> Re z -> z``; ``'staircase'`` alternates
    horizontal and vertical steps of the diagonal.
    """
    z = np.asarray(z, dtype=complex).ravel()
    if path == "axis":
        verts = [np.zeros_like(z), z.real.astype(complex), z]
    elif path == "staircase":
        k = 8
        verts = [np.zeros_like(z)]
        for j in range(1, k + 1):
            verts.append(verts[-1] + z.real / k)
            verts.append(verts[-1] + 1j * z.imag / k)
    else:
        raise ValueError(f"unknown path {path!r}")
    total = np.zeros((2, z.size), dtype=complex)
    for a, b in zip(verts[:-1], verts[1:]):
        L = float(np.max(np.abs(b - a))) if z.size else 0.0
        nseg = max(1, int(math.ceil(L / seg_len)))
        for k in range(nseg):
            p = a + (b - a) * k / nseg
            q = a + (b - a) * (k + 1) / nseg
            mid, half = 0.5 * (p + q), 0.5 * (q - p)
            nodes = mid[:, None] + half[:, None] * _GX
            h1, h2 = h_from_H(Hpoly, Lambda, nodes)
            total[0] += -1j * half * np.sum(_GW * h1, axis=1)
            total[1] += -1j * half * np.sum(_GW * h2, axis=1)
    return total


@dataclass
class MSS2DGenerator:
    """Closed-form evaluation of a generated solution at arbitrary points."""

    H: HolomorphicPoly
    lam: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        self.rotation = np.asarray(self.rotation, dtype=float)
        Q = self.rotation
        if not np.allclose(Q @ Q.T, np.eye(2), atol=1e-12):
            raise ValueError("rotation must be orthogonal")

    @property
    def Lambda(self):
        return self.lam - 1.0 / self.lam

    def _pre(self, x1, x2):
        Q = self.rotation
        y1 = Q[0, 0] * x1 + Q[0, 1] * x2
        y2 = Q[1, 0] * x1 + Q[1, 1] * x2
        r = math.sqrt(self.lam)
        return y1 / r + 1j * (r * y2)

    def values(self, x1, x2, path="axis"):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        z = self._pre(x1, x2)
        P = _primitive(self.H, self.Lambda, z, path)
        return P.real.reshape((2,) + x1.shape)

    def gradients(self, x1, x2):
        """Exact ``Du`` as an array ``(2, 2, ...)``: ``[a, i] = d_i u^a``."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        z = self._pre(x1, x2)
        h = h_from_H(self.H, self.Lambda, z)
        r = math.sqrt(self.lam)
        out = np.empty((2, 2) + x1.shape)
        for a in range(2):
            gy = np.stack([h[a].imag / r, h[a].real * r])  # d/dy
            out[a] = np.einsum("ki,k...->i...", self.rotation, gy)
        return out

    def max_abs_re_H(self, L):
        """Max of ``|Re H|`` over the image of ``[-L, L]^2`` (boundary sampling)."""
        t = np.linspace(-L, L, 257)
        xs = np.concatenate([t, t, np.full_like(t, -L), np.full_like(t, L)])
        ys = np.concatenate([np.full_like(t, -L), np.full_like(t, L), t, t])
        X, Y = np.meshgrid(t, t)
        xs = np.concatenate([xs, X.ravel()])
        ys = np.concatenate([ys, Y.ravel()])
        return float(np.max(np.abs(np.real(self.H(self._pre(xs, ys))))))


@dataclass
class MSS2DSolution:
    lam: float
    Lambda: float
    rotation: np.ndarray
    x: np.ndarray  # 1-D axis, same for both coordinates
    u: np.ndarray  # (2, N, N), [a, i, j] at (x[i], x[j])
    grad: np.ndarray | None = None
    clamped: bool = False

    @property
    def h(self):
        return float(self.x[1] - self.x[0])


def generate_solution(Hpoly, lam, rotation=None, half_width=2.0, n_nodes=129, check_paths=True):
    """Sample a generated solution on ``[-L, L]^2``.

    ``L`` starts at ``half_width`` and is shrunk until ``|Re H| <= 20`` on the
    image domain.  Raises :class:`HolomorphyError` if axis-first and staircase
    path integrals disagree by more than ``1e-9``.
    """
    gen = MSS2DGenerator(Hpoly, lam, np.eye(2) if rotation is None else rotation)
    L = float(half_width)
    clamped = False
    while gen.max_abs_re_H(L) > RE_H_LIMIT:
        L *= 0.9
        clamped = True
    x = np.linspace(-L, L, n_nodes)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    u = gen.values(X1, X2)
    if check_paths:
        sub = (slice(None, None, 8), slice(None, None, 8))
        alt = gen.values(X1[sub], X2[sub], path="staircase")
        scale = max(1.0, float(np.max(np.abs(u))))
        err = float(np.max(np.abs(alt - u[(slice(None),) + sub])))
        if err > 1e-9 * scale:
            raise HolomorphyError(f"path discrepancy {err:.3e}")
    return MSS2DSolution(lam=lam, Lambda=gen.Lambda, rotation=gen.rotation, x=x, u=u,
                         grad=gen.gradients(X1, X2), clamped=clamped)


def from_function(f, x):
    """Wrap an arbitrary sampled map ``f(X1, X2) -> (m, ...)`` (used for controls)."""
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    u = np.asarray(f(X1, X2), dtype=float)
    if u.ndim == 2:
        u = u[None]
    return MSS2DSolution(lam=float("nan"), Lambda=float("nan"), rotation=np.eye(2), x=x, u=u)


def _fd_gradient(u, h):
    """Centred differences on interior nodes; shape ``(m, 2, N-2, N-2)``."""
    d1 = (u[:, 2:, 1:-1] - u[:, :-2, 1:-1]) / (2 * h)
    d2 = (u[:, 1:-1, 2:] - u[:, 1:-1, :-2]) / (2 * h)
    return np.stack([d1, d2], axis=1)


def area_tensor(Du):
    """``sqrt(det g) g^{-1}`` for ``Du`` of shape ``(m, 2, ...)``."""
    g = np.eye(2).reshape((2, 2) + (1,) * (Du.ndim - 2)) + np.einsum("ai...,aj...->ij...", Du, Du)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    inv = np.stack([np.stack([g[1, 1], -g[0, 1]]), np.stack([-g[1, 0], g[0, 0]])]) / det
    return np.sqrt(det) * inv


def _divergence(F, h):
    """``d_i F_i`` by centred differences; ``F`` has shape ``(..., 2, N, N)``."""
    return (F[..., 0, 2:, 1:-1] - F[..., 0, :-2, 1:-1]) / (2 * h) + (
        F[..., 1, 1:-1, 2:] - F[..., 1, 1:-1, :-2]) / (2 * h)


def _strided(sol, h):
    if h is None:
        return sol.u, sol.h
    k = int(round(h / sol.h))
    if k < 1 or not math.isclose(k * sol.h, h, rel_tol=1e-9):
        raise ValueError("h must be a multiple of the grid spacing")
    return sol.u[:, ::k, ::k], sol.h * k


def residual_outer(sol, h=None):
    """``max |d_i(sqrt(det g) g^{ij} d_j u^a)|`` over nodes at least ``2h`` from the edge."""
    u, hh = _strided(sol, h)
    Du = _fd_gradient(u, hh)
    A = area_tensor(Du)
    flux = np.einsum("ij...,aj...->ai...", A, Du)
    return float(np.max(np.abs(_divergence(flux, hh))))


def residual_inner(sol, h=None):
    """``max |d_i(sqrt(det g) g^{ij})|`` (row-wise divergence)."""
    u, hh = _strided(sol, h)
    A = area_tensor(_fd_gradient(u, hh))
    return float(np.max(np.abs(_divergence(np.swapaxes(A, 0, 1), hh))))


def area_tensor_deviation(sol, h=None):
    """Max deviation of the finite-difference ``sqrt(det g) g^{-1}`` from its exact constant."""
    u, hh = _strided(sol, h)
    A = area_tensor(_fd_gradient(u, hh))
    Q = sol.rotation
    C = Q.T @ np.diag([sol.lam, 1.0 / sol.lam]) @ Q
    return float(np.max(np.abs(A - C[:, :, None, None])))


@dataclass
class JorgensReductionReport:
    n_samples: int
    max_det_error: float
    min_eigenvalue: float
    passed: bool
    eigen_formula_error: float | None = None

    def to_json(self):
        return self.__dict__.copy()


def jorgens_reduction(sol, h=None, det_tol=1e-8):
    """Rebuild ``D^2 Phi = -J (sqrt(det g) g^{-1}) J`` and check it is positive with ``det = 1``.

    Uses exact gradients when the solution carries them.  For a scalar map
    also checks the eigenvalues ``(1 + |grad u|^2)^(+-1/2)``.
    """
    if sol.grad is not None and h is None:
        Du = sol.grad
    else:
        u, hh = _strided(sol, h)
        Du = _fd_gradient(u, hh)
    A = area_tensor(Du)
    D2 = -np.einsum("ij,jk...,kl->il...", J, A, J)
    D2 = D2.reshape(2, 2, -1)
    det = D2[0, 0] * D2[1, 1] - D2[0, 1] * D2[1, 0]
    M = np.moveaxis(D2, -1, 0)
    eig = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, 1, 2)))
    det_err = float(np.max(np.abs(det - 1.0)))
    formula_err = None
    if Du.shape[0] == 1:
        q = 1.0 + np.sum(Du[0] ** 2, axis=0).ravel()
        ref = np.stack([q**-0.5, q**0.5], axis=1)
        formula_err = float(np.max(np.abs(eig - ref) / ref))
    return JorgensReductionReport(
        n_samples=int(det.size), max_det_error=det_err, min_eigenvalue=float(eig.min()),
        passed=bool(det_err <= det_tol and eig.min() > 0), eigen_formula_error=formula_err,
    )


def scherk_graph(x, shrink=0.9):
    """Scalar minimal graph ``log(cos y / cos x)`` on ``|x|, |y| < shrink pi / 2``."""
    s = shrink * math.pi / 2 / float(np.max(np.abs(x)))
    xs = x * s

    def f(X1, X2):
        return np.log(np.cos(X2)) - np.log(np.cos(X1))

    sol = from_function(f, xs)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    sol.grad = np.stack([np.tan(X1), -np.tan(X2)])[None]
    return sol


def order_of_convergence(errors, factor=2.0):
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(factor)


def write_solution_csv(sol, path):
    path = Path(path)
    X1, X2 = np.meshgrid(sol.x, sol.x, indexing="ij")
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x1", "x2", "u1", "u2"])
        for row in zip(X1.ravel(), X2.ravel(), sol.u[0].ravel(), sol.u[-1].ravel()):
            wr.writerow([repr(float(v)) for v in row])
    return path


def write_residual_json(report, path):
    path = Path(path)
    path.write_text(json.dumps(report, indent=2, sort_keys=True))
    return path

"""Radial stability analysis of minimal cones with ``|II|^2 = kappa / r^2``.

On a cone of dimension ``n`` the Jacobi operator acting on radial functions
is ``L f = f'' + (n - 1) f' / r + kappa f / r^2``, and the second variation
of area reduces (link measure factored out) to
``Q(phi) = int (phi'^2 - kappa phi^2 / r^2) r^(n-1) dr``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import simpson
from scipy.linalg import eigh


class OscillationError(ValueError):
    pass


@dataclass(frozen=True)
class ConeSpec:
    n: int
    kappa: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @classmethod
    def symmetric(cls, m):
        """``{|x| = |y|}`` in ``R^m x R^m``: ``n = 2m - 1``, ``|II|^2 = (2m - 2) / r^2``."""
        return cls(n=2 * m - 1, kappa=float(2 * m - 2))

    @property
    def hardy_constant(self):
        return (self.n - 2) ** 2 / 4.0


@dataclass
class RadialTestFunction:
    a: float
    b: float
    r: np.ndarray
    samples: np.ndarray
    derivative: np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError("need 0 < a < b")


def radial_jacobi_coefficient(spec, alpha):
    """Coefficient of ``r^(alpha - 2)`` in ``L r^alpha``."""
    return alpha * (alpha + spec.n - 2) + spec.kappa


def simons_exponents(n, gamma):
    """Roots of ``lam^2 + (n - 4) lam + gamma = 0`` and whether they are complex."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    roots = np.roots([1.0, n - 4.0, gamma]).astype(complex)
    roots = roots[np.lexsort((roots.imag, -roots.real))]
    return roots, (n - 4) ** 2 < 4 * gamma


def oscillating_test_function(n, gamma, r_min, n_samples=2001):
    """``psi = r^(-(n-4)/2) sin(omega log(r / a))`` on ``[a, a e^(pi/omega)]``."""
    _, osc = simons_exponents(n, gamma)
    if not osc:
        raise OscillationError(f"no oscillating solution for n={n}, gamma={gamma}")
    omega = math.sqrt(4 * gamma - (n - 4) ** 2) / 2.0
    a = float(r_min)
    b = a * math.exp(math.pi / omega)
    r = np.geomspace(a, b, n_samples)
    psi, dpsi = _psi(r, n, omega, a)
    psi[0] = psi[-1] = 0.0
    return RadialTestFunction(a=a, b=b, r=r, samples=psi, derivative=dpsi)


def _psi(r, n, omega, a):
    p = -(n - 4) / 2.0
    x = omega * np.log(r / a)
    psi = r**p * np.sin(x)
    dpsi = r ** (p - 1) * (p * np.sin(x) + omega * np.cos(x))
    return psi, dpsi


def oscillating_residual(n, gamma, a, r):
    """``psi'' + (n - 3) psi' / r + gamma psi / r^2`` from the closed form."""
    omega = math.sqrt(4 * gamma - (n - 4) ** 2) / 2.0
    p = -(n - 4) / 2.0
    x = omega * np.log(np.asarray(r, dtype=float) / a)
    s, c = np.sin(x), np.cos(x)
    r = np.asarray(r, dtype=float)
    psi = r**p * s
    d1 = r ** (p - 1) * (p * s + omega * c)
    d2 = r ** (p - 2) * ((p * (p - 1) - omega**2) * s + (2 * p - 1) * omega * c)
    scale = r ** (p - 2) * (abs(p * (p - 1)) + omega**2 + abs(2 * p - 1) * omega + abs(p) + omega + gamma)
    return (d2 + (n - 3) * d1 / r + gamma * psi / r**2) / scale


def stability_quadratic_form(spec, phi):
    """Simpson quadrature of ``(phi'^2 - kappa phi^2 / r^2) r^(n-1)`` on the sample grid.

    Uses the stored derivative when present, else second-order differences.
    """
    r, f = phi.r, phi.samples
    df = phi.derivative if phi.derivative is not None else np.gradient(f, r, edge_order=2)
    integrand = (df**2 - spec.kappa * f**2 / r**2) * r ** (spec.n - 1)
    return float(simpson(integrand, x=r))


def multiply_by_curvature(spec, psi):
    """``phi = c psi`` with ``c = sqrt(kappa) / r``."""
    c = math.sqrt(spec.kappa) / psi.r
    f = c * psi.samples
    df = None
    if psi.derivative is not None:
        df = c * psi.derivative - c / psi.r * psi.samples
    return RadialTestFunction(a=psi.a, b=psi.b, r=psi.r, samples=f, derivative=df)


@dataclass
class InstabilityCertificate:
    n: int
    kappa: float
    gamma: float
    oscillation: bool
    form_value: float | None
    normalized_margin: float | None
    certified: bool
    reason: str = ""

    def to_json(self):
        return self.__dict__.copy()


def simons_instability_certificate(spec, gamma, r_min=1.0):
    """Try to certify instability with ``phi = c psi``.

    ``normalized_margin`` is ``Q(phi) / int c^2 psi^2 r^(n-3) dr``; for a cone
    with ``L c = 2c / r^2`` it equals ``-(2 - gamma)`` up to quadrature error.
    """
    if spec.kappa <= 0:
        raise ValueError("certificate needs a non-flat cone (kappa > 0)")
    try:
        psi = oscillating_test_function(spec.n, gamma, r_min)
    except OscillationError as exc:
        return InstabilityCertificate(spec.n, spec.kappa, gamma, False, None, None, False, str(exc))
    phi = multiply_by_curvature(spec, psi)
    Q = stability_quadratic_form(spec, phi)
    norm = float(simpson(phi.samples**2 * phi.r ** (spec.n - 3), x=phi.r))
    return InstabilityCertificate(spec.n, spec.kappa, gamma, True, Q, Q / norm, Q < 0,
                                  "negative form" if Q < 0 else "form not negative")


_GX, _GW = leggauss(6)


def _element_matrices(r, n, kappa):
    """Tridiagonal bands of stiffness, potential and mass for P1 hats."""
    a, b = r[:-1], r[1:]
    L = b - a
    x = 0.5 * (a + b)[:, None] + 0.5 * L[:, None] * _GX
    w = 0.5 * L[:, None] * _GW
    N0 = (b[:, None] - x) / L[:, None]
    N1 = (x - a[:, None]) / L[:, None]
    wk = w * x ** (n - 1)
    wm = w * x ** (n - 3)
    k = np.sum(wk, axis=1) / L**2
    m00 = np.sum(wm * N0 * N0, axis=1)
    m01 = np.sum(wm * N0 * N1, axis=1)
    m11 = np.sum(wm * N1 * N1, axis=1)
    nn = r.size
    K = np.zeros((nn, nn))
    M = np.zeros((nn, nn))
    idx = np.arange(nn - 1)
    np.add.at(K, (idx, idx), k)
    np.add.at(K, (idx + 1, idx + 1), k)
    np.add.at(K, (idx, idx + 1), -k)
    np.add.at(K, (idx + 1, idx), -k)
    np.add.at(M, (idx, idx), m00)
    np.add.at(M, (idx + 1, idx + 1), m11)
    np.add.at(M, (idx, idx + 1), m01)
    np.add.at(M, (idx + 1, idx), m01)
    A = K - kappa * M
    return A[1:-1, 1:-1], M[1:-1, 1:-1]


def discrete_form_minimum(spec, a=1.0, b=20.0, n_nodes=256, spacing="log"):
    """Smallest ``Q(phi) / int phi^2 r^(n-3)`` over P1 hats vanishing at ``a, b``.

    With log-spaced nodes the continuum value is
    ``(n - 2)^2 / 4 - kappa + (pi / log(b / a))^2``.
    """
    r = np.geomspace(a, b, n_nodes) if spacing == "log" else np.linspace(a, b, n_nodes)
    A, M = _element_matrices(r, spec.n, spec.kappa)
    vals, vecs = eigh(A, M, subset_by_index=[0, 0])
    return float(vals[0]), r, np.concatenate([[0.0], vecs[:, 0], [0.0]])


def continuum_form_minimum(spec, a=1.0, b=20.0):
    return spec.hardy_constant - spec.kappa + (math.pi / math.log(b / a)) ** 2


@dataclass
class StabilityReport:
    n: int
    kappa: float
    hardy_constant: float
    exponents: list
    oscillation: bool
    form_min: float
    eps_h: float
    stable: bool

    def to_json(self):
        return self.__dict__.copy()


def stability_report(spec, gamma=1.9, a=1.0, b=20.0, n_nodes=256):
    """Form minimum on 256 nodes with ``eps_h`` from one refinement."""
    mu, _, _ = discrete_form_minimum(spec, a, b, n_nodes)
    mu2, _, _ = discrete_form_minimum(spec, a, b, 2 * n_nodes - 1)
    eps_h = abs(mu - mu2)
    roots, osc = simons_exponents(spec.n, gamma)
    return StabilityReport(
        n=spec.n, kappa=spec.kappa, hardy_constant=spec.hardy_constant,
        exponents=[[float(z.real), float(z.imag)] for z in roots], oscillation=bool(osc),
        form_min=mu, eps_h=eps_h, stable=bool(mu >= -10 * eps_h),
    )


def write_report_json(report, path):
    from pathlib import Path

    path = Path(path)
    path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True))
    return path

"""Minimal leaf of the Simons-cone foliation in R^8.

The leaf is the hypersurface ``{|y| = sigma(|x|)}`` with ``x, y`` in ``R^4``.
It is minimal exactly when

    G(sigma) = sigma'' + 3 (1 + sigma'^2) (sigma'/s - 1/sigma) = 0,

and with ``X(t) = (e^{-t} sigma(e^t), sigma'(e^t))`` the equation becomes the
autonomous planar system ``X' = V(X)``.  This module integrates the leaf from
even initial data, checks the phase-plane trapping region and fits the
two-mode expansion of the trajectory around the fixed point ``(1, 1)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

S0 = 1e-3
TRAP_BAND = 1e-10
MEMBERSHIP_TOL = 1e-12
EXTRAPOLATION_LIMIT = 1e8

# series sigma = 1 + A2 s^2 + A4 s^4 + O(s^6) about the even initial data
A2 = 3.0 / 8.0
A4 = -15.0 / 512.0


class LeafIntegrationError(RuntimeError):
    """Raised when the leaf ODE cannot be integrated.

    The ``state`` attribute carries the last accepted solver state.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class FitError(ValueError):
    pass


def mean_curvature_residual(sigma, sigma_p, sigma_pp, s):
    """Return ``G(sigma)`` at radius ``s``.

    Up to the positive factor ``(1 + sigma'^2)^{-3/2}`` this is the mean
    curvature of the leaf, positive when the curvature vector points away
    from the cone ``{|x| = |y|}``.
    """
    s = np.asarray(s, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(s <= 0) or np.any(sigma <= 0):
        raise ValueError("mean_curvature_residual needs s > 0 and sigma > 0")
    out = sigma_pp + 3.0 * (1.0 + sigma_p**2) * (sigma_p / s - 1.0 / sigma)
    return float(out) if np.ndim(out) == 0 else out


def _sigma_pp_from_ode(sigma, sigma_p, s):
    return -3.0 * (1.0 + sigma_p**2) * (sigma_p / s - 1.0 / sigma)


def vector_field(x, y):
    if x == 0:
        raise ValueError("vector field undefined on x = 0")
    return (-x + y, 3.0 * (1.0 + y * y) * (1.0 / x - y))


def in_trapping_region(x, y, tol=MEMBERSHIP_TOL):
    """Membership in ``{x >= 1} & {x^{-5/2} <= y <= x^{-1}}``."""
    if x < 1.0 - tol:
        return False
    if x <= 0:
        return False
    return x ** -2.5 - tol <= y <= 1.0 / x + tol


def trap_polynomial(z):
    """``P(z) = 6 z^13 - 11 z^10 + 11 z^3 - 6``; exact for Fraction input."""
    return 6 * z**13 - 11 * z**10 + 11 * z**3 - 6


def trap_polynomial_derivative(z):
    return 78 * z**12 - 110 * z**9 + 33 * z**2


@dataclass(frozen=True)
class BoundaryReport:
    n_samples: int
    x_range: tuple
    top_min_margin: float
    top_max_vertical: float
    top_max_horizontal: float
    bottom_min_margin: float
    bottom_min_poly: float
    P_at_1: Fraction
    dP_at_1: Fraction
    min_dP_over_z2: float

    @property
    def passed(self):
        return (
            self.top_min_margin > 0
            and self.bottom_min_margin > 0
            and self.top_max_horizontal < 0
            and self.top_max_vertical == 0.0
            and self.bottom_min_poly > 0
            and self.P_at_1 == 0
            and self.dP_at_1 == 1
        )


def verify_trapping_boundary(n_samples, x_min=1.001, x_max=1e3):
    """Check that ``V`` points strictly into the trapping region.

    Margins are the inward normal components ``-grad(phi) . V`` for the
    defining functions ``phi = y - 1/x`` (top) and ``phi = x^{-5/2} - y``
    (bottom).  The bottom inequality is also checked in its polynomial form
    ``P(sqrt(x)) > 0``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    x = np.geomspace(x_min, x_max, n_samples)

    y_top = 1.0 / x
    vx_top = -x + y_top
    vy_top = 3.0 * (1.0 + y_top**2) * (1.0 / x - y_top)
    top_margin = -(vx_top / x**2 + vy_top)

    y_bot = x**-2.5
    vx_bot = -x + y_bot
    vy_bot = 3.0 * (1.0 + y_bot**2) * (1.0 / x - y_bot)
    bottom_margin = 2.5 * x**-3.5 * vx_bot + vy_bot

    z = np.sqrt(x)
    poly = trap_polynomial(z)
    dP_z2 = trap_polynomial_derivative(z) / z**2

    return BoundaryReport(
        n_samples=n_samples,
        x_range=(float(x[0]), float(x[-1])),
        top_min_margin=float(top_margin.min()),
        top_max_vertical=float(np.abs(vy_top).max()),
        top_max_horizontal=float(vx_top.max()),
        bottom_min_margin=float(bottom_margin.min()),
        bottom_min_poly=float(poly.min()),
        P_at_1=trap_polynomial(Fraction(1)),
        dP_at_1=trap_polynomial_derivative(Fraction(1)),
        min_dP_over_z2=float(dP_z2.min()),
    )


LINEAR_MATRIX = ((-1, 1), (-6, -6))
MODE_P = (1, -2)
MODE_Q = (1, -3)


def quadratic_form_slope(s):
    """``-2 M e . e`` for ``e = (1, -s)/sqrt(1 + s^2)``; exact on Fractions."""
    return 2 * (6 * s * s - 5 * s + 1) / (1 + s * s)


@dataclass(frozen=True)
class LinearAnalysis:
    matrix: np.ndarray
    eigenpairs: tuple
    form_min: float
    form_max: float
    form_monotone: bool


def linear_analysis(n_slopes=1001):
    M = np.array(LINEAR_MATRIX, dtype=float)
    pairs = []
    for vec in (MODE_P, MODE_Q):
        v = np.array(vec, dtype=float)
        Mv = M @ v
        pairs.append((vec, Mv[0] / v[0]))
    slopes = np.linspace(1.0, 2.5, n_slopes)
    vals = []
    for s in slopes:
        e = np.array([1.0, -s]) / math.hypot(1.0, s)
        vals.append(-2.0 * e @ M @ e)
    vals = np.array(vals)
    return LinearAnalysis(
        matrix=M,
        eigenpairs=tuple(pairs),
        form_min=float(vals.min()),
        form_max=float(vals.max()),
        form_monotone=bool(np.all(np.diff(vals) > 0)),
    )


class LeafCurve:
    """Smooth evaluator for an even leaf ``sigma(s) = s + e(s)``.

    The excess ``e = sigma - s`` is interpolated by quintic Hermite pieces
    through ``(e, e', e'')``; past the last sample it is continued by the
    power tail ``sum c_k s^{p_k}`` fitted to the final samples.
    """

    def __init__(self, s, e, e_p, e_pp, tail_powers=(-2.0, -3.0, -4.0)):
        s = np.asarray(s, dtype=float)
        self.s = s
        self.s_max = float(s[-1])
        self._poly = BPoly.from_derivatives(s, np.column_stack([e, e_p, e_pp]))
        self.tail_powers = tuple(float(p) for p in tail_powers)
        mask = s >= 0.25 * self.s_max
        basis = np.column_stack([s[mask] ** p for p in self.tail_powers])
        scale = s[mask] ** 2
        coef, *_ = np.linalg.lstsq(basis * scale[:, None], np.asarray(e)[mask] * scale, rcond=None)
        self.tail_coeffs = coef

    def excess(self, s, nu=0):
        s = np.asarray(s, dtype=float)
        if np.any(s > EXTRAPOLATION_LIMIT):
            raise ValueError("leaf evaluated beyond extrapolation limit")
        inside = s <= self.s_max
        out = np.empty_like(s)
        if np.any(inside):
            out[inside] = self._poly(s[inside], nu)
        if np.any(~inside):
            st = s[~inside]
            val = np.zeros_like(st)
            for c, p in zip(self.tail_coeffs, self.tail_powers):
                k = 1.0
                for j in range(nu):
                    k *= p - j
                val += c * k * st ** (p - nu)
            out[~inside] = val
        return out

    def __call__(self, s):
        """Return ``(sigma, sigma', sigma'')`` at ``s >= 0``."""
        s = np.asarray(s, dtype=float)
        e0, e1, e2 = self.excess(s, 0), self.excess(s, 1), self.excess(s, 2)
        return s + e0, 1.0 + e1, e2


@dataclass
class LeafProfile:
    s_grid: np.ndarray
    sigma: np.ndarray
    sigma_p: np.ndarray
    sigma_pp: np.ndarray
    a: float
    b: float
    fit_window: tuple
    excess: np.ndarray = field(repr=False, default=None)
    tol: float = 1e-12
    _curve: LeafCurve = field(repr=False, default=None)

    def __post_init__(self):
        if self.excess is None:
            self.excess = self.sigma - self.s_grid
        if self._curve is None:
            self._curve = LeafCurve(self.s_grid, self.excess, self.sigma_p - 1.0, self.sigma_pp)

    @property
    def curve(self):
        return self._curve

    def evaluate(self, s):
        """``(sigma, sigma', sigma'')`` at ``s >= 0``.

        ``sigma''`` comes from the leaf equation applied to the interpolated
        ``(sigma, sigma')``, written as ``e'/s + e/(s sigma)`` to avoid
        cancellation; this keeps it smooth across interpolation nodes.
        """
        s = np.asarray(s, dtype=float)
        e = self._curve.excess(s, 0)
        ep = self._curve.excess(s, 1)
        sig = s + e
        sp = 1.0 + ep
        with np.errstate(divide="ignore", invalid="ignore"):
            spp = -3.0 * (1.0 + sp**2) * (ep / s + e / (s * sig))
        spp = np.where(s > 0, spp, 0.75)
        return sig, sp, spp

    def phase(self, s_min=1.0):
        """Phase samples ``(t, x, y)`` for ``s >= s_min`` (``s = 0`` always excluded)."""
        m = (self.s_grid >= s_min) & (self.s_grid > 0)
        s = self.s_grid[m]
        return np.log(s), 1.0 + self.excess[m] / s, self.sigma_p[m]

    def phase_deviation(self, s_min=1.0):
        """``(t, Y)`` with ``Y = X - (1, 1)`` computed without cancellation."""
        m = self.s_grid >= s_min
        s = self.s_grid[m]
        Y = np.column_stack([self.excess[m] / s, self.sigma_p[m] - 1.0])
        return np.log(s), Y


def _series(s):
    sig = 1.0 + A2 * s**2 + A4 * s**4
    sig_p = 2 * A2 * s + 4 * A4 * s**3
    return sig, sig_p


def _rhs_inner(s, u):
    sig, sp = u
    return [sp, _sigma_pp_from_ode(sig, sp, s)]


def _rhs_phase(t, Y):
    y1, y2 = Y
    return [-y1 + y2, 3.0 * (1.0 + (1.0 + y2) ** 2) * (-y1 / (1.0 + y1) - y2)]


def _nonphysical(s, u):
    return u[0]


_nonphysical.terminal = True


def integrate_leaf(s_max=200.0, tol=1e-12, samples_per_unit=100, inner_samples=200):
    """Integrate the leaf ODE from ``sigma(0) = 1, sigma'(0) = 0`` to ``s_max``.

    For ``s <= 1`` the ODE is integrated in ``s`` starting from the Taylor
    series at ``s = 1e-3``.  For ``s >= 1`` the autonomous phase system is
    integrated in ``t = log s`` for the deviation ``Y = X - (1, 1)``, which
    keeps relative accuracy as the trajectory approaches the fixed point.
    """
    if s_max < 10:
        raise ValueError("s_max must be >= 10")
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")

    sig0, sp0 = _series(S0)
    s_in = np.linspace(S0, 1.0, inner_samples)
    inner = solve_ivp(
        _rhs_inner, (S0, 1.0), [sig0, sp0], method="DOP853",
        rtol=tol, atol=tol * 1e-3, t_eval=s_in, events=_nonphysical,
    )
    if inner.status != 0:
        state = {"s": float(inner.t[-1]) if inner.t.size else S0,
                 "y": inner.y[:, -1].tolist() if inner.y.size else None}
        raise LeafIntegrationError(f"inner leaf integration failed: {inner.message}", state)

    sig_in, sp_in = inner.y
    spp_in = _sigma_pp_from_ode(sig_in, sp_in, s_in)

    t_max = math.log(s_max)
    n_t = max(int(math.ceil(t_max * samples_per_unit)), 10)
    t_eval = np.linspace(0.0, t_max, n_t + 1)
    Y0 = [sig_in[-1] - 1.0, sp_in[-1] - 1.0]
    outer = solve_ivp(
        _rhs_phase, (0.0, t_max), Y0, method="DOP853",
        rtol=tol, atol=1e-30, t_eval=t_eval,
    )
    if outer.status != 0:
        raise LeafIntegrationError(
            f"phase integration failed: {outer.message}",
            {"t": float(outer.t[-1]), "Y": outer.y[:, -1].tolist()},
        )
    y1, y2 = outer.y
    s_out = np.exp(t_eval)
    s_out[0] = 1.0
    s_out[-1] = s_max
    e_out = s_out * y1
    sp_out = 1.0 + y2
    sig_out = s_out + e_out
    spp_out = -3.0 * (1.0 + sp_out**2) * (y2 + y1 / (1.0 + y1)) / s_out
    if np.any(1.0 + y1 <= 0):
        raise LeafIntegrationError("leaf left the physical domain", {"Y": outer.y[:, -1].tolist()})

    s_grid = np.concatenate([[0.0], s_in, s_out[1:]])
    sigma = np.concatenate([[1.0], sig_in, sig_out[1:]])
    sigma_p = np.concatenate([[0.0], sp_in, sp_out[1:]])
    sigma_pp = np.concatenate([[0.75], spp_in, spp_out[1:]])
    excess = np.concatenate([[1.0], sig_in - s_in, e_out[1:]])

    profile = LeafProfile(s_grid, sigma, sigma_p, sigma_pp, a=float("nan"), b=float("nan"),
                          fit_window=(3.0, 5.0), excess=excess, tol=tol)
    window = (3.0, min(5.0, t_max))
    a, b, _ = fit_asymptotics(profile, window)
    profile.a, profile.b, profile.fit_window = a, b, window
    return profile


def fit_asymptotics(profile, t_window=(3.0, 5.0)):
    """Least-squares fit ``Y(t) ~ a e^{-3t} p + b e^{-4t} q`` on a window.

    Rows are rescaled by ``e^{3t}`` so the design stays O(1).  Returns
    ``(a, b, max_residual)`` where the residual is ``|Y - fit| e^{6t}``.
    """
    lo, hi = t_window
    if hi - lo < 1.0:
        raise FitError("fit window shorter than 1")
    t, Y = _phase_arrays(profile)
    if lo < t[0] - 1e-12 or hi > t[-1] + 1e-12:
        raise FitError("fit window outside the integrated range")
    m = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    t, Y = t[m], Y[m]
    if t.size < 4:
        raise FitError("too few samples in the fit window")
    p = np.array(MODE_P, dtype=float)
    q = np.array(MODE_Q, dtype=float)
    w = np.exp(3.0 * t)
    rows = np.vstack([
        np.column_stack([np.full_like(t, p[k]), np.exp(-t) * q[k]]) for k in range(2)
    ])
    rhs = np.concatenate([Y[:, k] * w for k in range(2)])
    if np.linalg.cond(rows) > 1e8:
        raise FitError("ill-conditioned asymptotic fit")
    (a, b), *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    fit = a * np.exp(-3 * t)[:, None] * p + b * np.exp(-4 * t)[:, None] * q
    resid = np.linalg.norm(Y - fit, axis=1) * np.exp(6 * t)
    return float(a), float(b), float(resid.max())


def _phase_arrays(profile):
    if isinstance(profile, LeafProfile):
        return profile.phase_deviation()
    t, Y = profile
    return np.asarray(t, dtype=float), np.asarray(Y, dtype=float)


def trajectory_in_region(profile, s_min=0.0, band=TRAP_BAND):
    """Per-sample trapping membership for samples with ``s >= s_min``."""
    m = (profile.s_grid > 0) & (profile.s_grid >= s_min)
    s = profile.s_grid[m]
    x = 1.0 + profile.excess[m] / s
    y = profile.sigma_p[m]
    return s, np.array([in_trapping_region(xi, yi, band) for xi, yi in zip(x, y)])


def write_leaf_csv(profile, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "sigma", "sigma_p", "sigma_pp"])
        for row in zip(profile.s_grid, profile.sigma, profile.sigma_p, profile.sigma_pp):
            wr.writerow([repr(float(v)) for v in row])
    return path


def write_phase_csv(profile, path, band=TRAP_BAND):
    path = Path(path)
    t, x, y = profile.phase(s_min=0.0)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x", "y", "in_region"])
        for ti, xi, yi in zip(t, x, y):
            wr.writerow([repr(float(ti)), repr(float(xi)), repr(float(yi)),
                         int(in_trapping_region(xi, yi, band))])
    return path

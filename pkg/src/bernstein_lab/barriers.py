"""Cubic-growth super- and subsolutions for the minimal surface equation on R^8.

Everything lives in the reduced quarter plane ``(s, t) = (|x|, |y|)``.  A leaf
``sigma`` defines the 3-homogeneous function ``w`` by
``w(lam u, lam sigma(u)) = lam^3`` on ``{t > s}``, odd across the diagonal.
The barriers compose ``w`` with one-variable profiles:

* supersolution ``u_bar = F(v_bar)`` with
  ``F'(s) = A s^{-5/6} + exp(A^2 int_s^inf tau^{-11/12} / (1 + tau^{1/6}))``;
* subsolution ``u_under = max(G(v_under) - D, 0)`` with
  ``G'(s) = exp(-B int_s^inf tau^{-2/3} / (1 + tau^{2/3}))``.

``F'`` is astronomically large for moderate ``A`` (``e^{1885}`` at ``A = 10``,
``s -> 0``), so ``F`` and ``F'`` are carried as logarithms throughout.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from .foliation import EXTRAPOLATION_LIMIT, mean_curvature_residual

_GL_X, _GL_W = leggauss(32)


class BarrierRangeError(ValueError):
    pass


class BarrierDomainError(ValueError):
    pass


class BarrierConstructionError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# level-set function


@dataclass(frozen=True)
class ReducedPoint:
    s: float
    t: float

    def __post_init__(self):
        if self.s < 0 or self.t < 0:
            raise ValueError("reduced coordinates must be nonnegative")


class LevelSetFunction:
    """The 3-homogeneous function whose 1-level set is a given leaf."""

    def __init__(self, curve, leaf_G=None):
        self.curve = curve
        self.e0 = float(curve.excess(np.array([0.0]))[0])
        self._leaf_G = leaf_G

    def parameters(self, s, t, max_iter=200):
        """Return ``(lam, u)`` with ``(s, t) = (lam u, lam sigma(u))`` for ``t > s``.

        Solves ``lam e(s/lam) = t - s`` (``e = sigma - id``) by safeguarded
        Newton iteration; the left side is increasing in ``lam`` with
        derivative ``f0(u) = e - u e' > 0``.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        d = t - s
        if np.any(d <= 0) or np.any(s < 0):
            raise BarrierDomainError("parameters need t > s >= 0")
        lo = d / self.e0
        hi = np.maximum(2.0 * t / self.e0, 2.0 * lo)
        for _ in range(200):
            phi_hi = self._phi(hi, s, d)
            bad = phi_hi <= 0
            if not np.any(bad):
                break
            hi = np.where(bad, 2.0 * hi, hi)
        with np.errstate(divide="ignore"):
            u_lo = s / lo
        if np.any(u_lo > EXTRAPOLATION_LIMIT):
            # the root may still be in range; tighten lo to the range edge
            lo = np.maximum(lo, s / EXTRAPOLATION_LIMIT)
            if np.any(self._phi(lo, s, d) > 0):
                raise BarrierRangeError("point too close to the diagonal for the leaf range")
        lam = 0.5 * (lo + hi)
        for _ in range(max_iter):
            u = s / lam
            e = self.curve.excess(u, 0)
            ep = self.curve.excess(u, 1)
            phi = lam * e - d
            f0 = e - u * ep
            lo = np.where(phi <= 0, lam, lo)
            hi = np.where(phi > 0, lam, hi)
            step = lam - phi / f0
            ok = (step > lo) & (step < hi) & np.isfinite(step)
            new = np.where(ok, step, 0.5 * (lo + hi))
            done = np.abs(new - lam) <= 1e-14 * lam
            lam = new
            if np.all(done):
                break
        return lam, s / lam

    def _phi(self, lam, s, d):
        u = s / lam
        return lam * self.curve.excess(np.minimum(u, EXTRAPOLATION_LIMIT), 0) - d

    def value(self, s, t):
        """Odd-extended value; zero on the diagonal."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(np.broadcast(s, t).shape)
        s, t = np.broadcast_arrays(s, t)
        up = t > s
        dn = s > t
        if np.any(up):
            lam, _ = self.parameters(s[up], t[up])
            out[up] = lam**3
        if np.any(dn):
            lam, _ = self.parameters(t[dn], s[dn])
            out[dn] = -(lam**3)
        return out

    def jet(self, s, t):
        """Value and first/second partials of ``w`` on ``{t > s}``.

        Implicit differentiation of ``(s, t) = (lam u, lam sigma(u))``,
        ``w = lam^3``.
        """
        lam, u = self.parameters(s, t)
        sig, sp, spp = self.curve(u)
        f0 = self.curve.excess(u, 0) - u * self.curve.excess(u, 1)
        lam_s, lam_t = -sp / f0, 1.0 / f0
        u_s, u_t = sig / (lam * f0), -u / (lam * f0)
        ws = -3.0 * lam**2 * sp / f0
        wt = 3.0 * lam**2 / f0
        ws_l, ws_u = -6.0 * lam * sp / f0, -3.0 * lam**2 * spp * sig / f0**2
        wt_l, wt_u = 6.0 * lam / f0, 3.0 * lam**2 * u * spp / f0**2
        return {
            "lam": lam, "u": u, "w": lam**3, "ws": ws, "wt": wt,
            "wss": ws_l * lam_s + ws_u * u_s,
            "wst": ws_l * lam_t + ws_u * u_t,
            "wtt": wt_l * lam_t + wt_u * u_t,
            "sigma": sig, "sigma_p": sp, "sigma_pp": spp, "f0": f0,
        }

    def geometry(self, s, t):
        """8-D gradient/Hessian data of ``v(x, y) = w(|x|, |y|)`` on ``{t > s > 0}``.

        ``H`` is the mean curvature of the level set through the point, with
        the sign convention ``H = -div(grad v / |grad v|)`` (positive when the
        curvature vector points away from the cone).
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(s <= 0):
            raise BarrierDomainError("geometry needs s > 0")
        j = self.jet(s, t)
        ws, wt, wss, wst, wtt = j["ws"], j["wt"], j["wss"], j["wst"], j["wtt"]
        g2 = ws**2 + wt**2
        grad = np.sqrt(g2)
        lap = wss + wtt + 3.0 * ws / s + 3.0 * wt / t
        vnn = (ws**2 * wss + 2 * ws * wt * wst + wt**2 * wtt) / g2
        H = -(lap - vnn) / grad
        tr = wss + wtt
        disc = np.sqrt(0.25 * (wss - wtt) ** 2 + wst**2)
        hess = np.max(np.abs(np.stack([0.5 * tr + disc, 0.5 * tr - disc, ws / s, wt / t])), axis=0)
        j.update(grad=grad, lap=lap, vnn=vnn, H=H, hess=hess)
        return j

    def leaf_mean_curvature(self, s, t):
        """Level-set mean curvature from ``G(sigma)(1 + sigma'^2)^{-3/2} / lam``."""
        j = self.jet(s, t)
        G = mean_curvature_residual(j["sigma"], j["sigma_p"], j["sigma_pp"], j["u"])
        return G * (1.0 + j["sigma_p"] ** 2) ** -1.5 / j["lam"]


def levelset_value(p, leaf):
    """``w`` at a reduced point for a leaf (``LeafCurve`` or object with ``.curve``)."""
    curve = leaf.curve if hasattr(leaf, "curve") else leaf
    return float(LevelSetFunction(curve).value(p.s, p.t)[0])


# ---------------------------------------------------------------------------
# one-variable profiles


def arctan_tail(upper):
    """``int_0^upper du / (1 + u^2)`` by Gauss-Legendre, split at ``u = 1``.

    Both exponent integrals reduce to this after the substitutions
    ``tau = u^{-12}`` and ``tau = u^{-3}``.
    """
    U = np.asarray(upper, dtype=float)
    lo = np.minimum(U, 1.0)
    nodes = 0.5 * lo[..., None] * (_GL_X + 1.0)
    part = 0.5 * lo * np.sum(_GL_W / (1.0 + nodes**2), axis=-1)
    big = U > 1.0
    if np.any(big):
        # int_1^U du/(1+u^2) = int_{1/U}^1 dx/(1+x^2)
        a = 1.0 / np.where(big, U, 1.0)
        mid = 0.5 * (1.0 + a)
        half = 0.5 * (1.0 - a)
        x = mid[..., None] + half[..., None] * _GL_X
        part = part + np.where(big, half * np.sum(_GL_W / (1.0 + x**2), axis=-1), 0.0)
    return part


class _LogCumulative:
    """Cumulative ``log int_0^x exp(L(y)) dy`` on a geometric panel grid."""

    def __init__(self, logf, x_max, x_min=1e-12, n_panels=2400):
        self.logf = logf
        self.edges = np.concatenate([[0.0], np.geomspace(x_min, x_max, n_panels)])
        a, b = self.edges[:-1], self.edges[1:]
        logs = self._panel(a, b)
        self.cum = np.concatenate([[-np.inf], np.logaddexp.accumulate(logs)])
        self.x_max = x_max

    def _panel(self, a, b):
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[..., None] + half[..., None] * _GL_X
        with np.errstate(divide="ignore"):
            vals = self.logf(x) + np.log(_GL_W) + np.log(half)[..., None]
        return logsumexp(vals, axis=-1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x > self.x_max):
            raise BarrierRangeError("profile table exceeded")
        k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.edges) - 2)
        a = self.edges[k]
        with np.errstate(divide="ignore"):
            part = np.where(x > a, self._panel(a, np.maximum(x, a + 1e-300)), -np.inf)
        return np.logaddexp(self.cum[k], part)


class SuperProfile:
    """``F`` for the supersolution, odd, with ``F(0) = 0``."""

    def __init__(self, A, v_max=1e40):
        self.A = float(A)
        self.v_max = v_max
        A2 = self.A**2
        # F = 6 A s^{1/6} + int_0^s e^{E};  with tau = x^12 the integrand is
        # 12 x^11 exp(12 A^2 arctan(1/x))
        self._tail = _LogCumulative(
            lambda x: math.log(12.0) + 11.0 * np.log(x) + 12.0 * A2 * np.arctan(1.0 / x),
            x_max=v_max ** (1.0 / 12.0) * 1.0001,
        )

    def exponent(self, s):
        """``A^2 int_s^inf tau^{-11/12}/(1 + tau^{1/6}) dtau``."""
        s = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            return self.A**2 * 12.0 * arctan_tail(s ** (-1.0 / 12.0))

    def log_dF(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            return np.logaddexp(math.log(self.A) - 5.0 / 6.0 * np.log(s), self.exponent(s))

    def ddF_over_dF(self, s):
        """``F''/F'`` for ``s > 0``."""
        s = np.asarray(s, dtype=float)
        lF = self.log_dF(s)
        wA = np.exp(math.log(self.A) - 5.0 / 6.0 * np.log(s) - lF)
        wE = np.exp(self.exponent(s) - lF)
        return -(5.0 / 6.0) * wA / s - self.A**2 * s ** (-11.0 / 12.0) / (1.0 + s ** (1.0 / 6.0)) * wE

    def log_F(self, s):
        """``log F(|s|)``; ``-inf`` at 0."""
        s = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            return np.logaddexp(math.log(6.0 * self.A) + np.log(s) / 6.0, self._tail(s ** (1.0 / 12.0)))

    def __call__(self, s):
        """``(F, F', F'')`` as floats; entries overflow to ``inf`` when huge."""
        s = np.asarray(s, dtype=float)
        sign = np.sign(s)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            Fp = np.exp(self.log_dF(s))
            F = sign * np.exp(self.log_F(s))
            Fpp = sign * np.where(np.isfinite(Fp), Fp * self.ddF_over_dF(np.abs(s)), -np.inf)
        return F, Fp, Fpp


def F_profile(s, A):
    F, Fp, Fpp = SuperProfile(A, v_max=max(1e40, float(np.max(np.abs(s))) * 2))(s)
    return F, Fp, Fpp


class SubProfile:
    """``G`` for the subsolution with ``G(0) = 0`` and ``0 < G' < 1``."""

    def __init__(self, B, v_max=1e12):
        self.B = float(B)
        self.v_max = v_max
        B3 = 3.0 * self.B
        # G(s) = int_0^{s^{1/3}} 3 x^2 exp(-3B arctan(1/x)) dx
        self._cum = _LogCumulative(
            lambda x: math.log(3.0) + 2.0 * np.log(x) - B3 * np.arctan(1.0 / x),
            x_max=v_max ** (1.0 / 3.0) * 1.0001, n_panels=1200,
        )

    def exponent(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            return -self.B * 3.0 * arctan_tail(s ** (-1.0 / 3.0))

    def log_dG(self, s):
        return self.exponent(s)

    def ddG_over_dG(self, s):
        s = np.asarray(s, dtype=float)
        return self.B * s ** (-2.0 / 3.0) / (1.0 + s ** (2.0 / 3.0))

    def G(self, s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * np.exp(self._cum(np.abs(s) ** (1.0 / 3.0)))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        Gp = np.exp(self.log_dG(s))
        with np.errstate(divide="ignore", invalid="ignore"):
            Gpp = np.sign(s) * Gp * self.ddG_over_dG(np.abs(s))
        return self.G(s), Gp, Gpp


# ---------------------------------------------------------------------------
# final inequality


def final_inequality_value(A, s, t, profile=None):
    """``F'^2(s) s^{4/3} t^{-4} - s (F''/F')(s) t`` (``inf`` on overflow)."""
    prof = profile or SuperProfile(A)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        first = np.exp(2.0 * prof.log_dF(s) + (4.0 / 3.0) * np.log(s) - 4.0 * np.log(t))
    return first - s * prof.ddF_over_dF(s) * t


def check_final_inequality(A, s_grid, t_grid, profile=None):
    """Minimum of the final-inequality right side over the product grid."""
    s = np.asarray(s_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if np.any(s <= 0) or np.any(t < 1):
        raise ValueError("need s > 0 and t >= 1")
    S, T = np.meshgrid(s, t, indexing="ij")
    return float(np.min(final_inequality_value(A, S, T, profile)))


WIDE_S = np.geomspace(1e-12, 1e300, 1200)
WIDE_T = np.geomspace(1.0, 1e12, 400)


def final_inequality_global_min(A, profile=None):
    """Minimum over a wide grid where ``F'`` has relaxed to ``O(1)``."""
    return check_final_inequality(A, WIDE_S, WIDE_T, profile)


# ---------------------------------------------------------------------------
# barriers


@dataclass
class BarrierSpec:
    eps0: float
    A: float
    B: float
    D: float
    leaf_upper: object
    leaf_lower: object
    C_req: float = float("nan")
    constants: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def v_upper(self):
        if "vu" not in self._cache:
            self._cache["vu"] = LevelSetFunction(self.leaf_upper)
        return self._cache["vu"]

    @property
    def v_lower(self):
        if "vl" not in self._cache:
            self._cache["vl"] = LevelSetFunction(self.leaf_lower)
        return self._cache["vl"]

    @property
    def F(self):
        if "F" not in self._cache:
            self._cache["F"] = SuperProfile(self.A)
        return self._cache["F"]

    @property
    def G(self):
        if "G" not in self._cache:
            self._cache["G"] = SubProfile(self.B)
        return self._cache["G"]

    def to_json(self):
        return {
            "eps0": self.eps0, "A": self.A, "B": self.B, "D": self.D,
            "C_req": self.C_req, "constants": self.constants, "margins": self.margins,
            "note": "C_req and the choices of A, B, D come from measured constants",
        }


def supersolution_log_value(s, t, spec):
    """``(sign, log|u_bar|)`` so that values beyond float range stay usable."""
    v = spec.v_upper.value(s, t)
    with np.errstate(divide="ignore"):
        return np.sign(v), spec.F.log_F(v)


def supersolution_value(p, spec):
    sign, logv = supersolution_log_value(p.s, p.t, spec)
    with np.errstate(over="ignore"):
        return float(sign[0] * np.exp(logv[0])) if sign[0] != 0 else 0.0


def subsolution_values(s, t, spec):
    """Vectorized ``u_under`` (odd across the diagonal)."""
    v = spec.v_lower.value(s, t)
    g = spec.G.G(np.abs(v))
    return np.sign(v) * np.maximum(g - spec.D, 0.0)


def subsolution_value(p, spec):
    return float(subsolution_values(p.s, p.t, spec)[0])


def operator_sign_analytic(level, profile_logd, profile_ratio, s, t, cutoff=None):
    """Closed form of ``div(grad u / W) * W / Phi'(v)`` for ``u = Phi(v)``.

    Equals ``(v_nn + (Phi''/Phi') |grad v|^2) / (1 + Phi'^2 |grad v|^2) - |grad v| H``.
    """
    g = level.geometry(s, t)
    v = g["w"]
    lg = profile_logd(v)
    R = profile_ratio(v)
    with np.errstate(over="ignore"):
        denom = 1.0 + np.exp(2.0 * lg + 2.0 * np.log(g["grad"]))
    val = (g["vnn"] + R * g["grad"] ** 2) / denom - g["grad"] * g["H"]
    if cutoff is not None:
        val = np.where(cutoff(v), val, 0.0)
    return val


def _flux(level, logd, s, t):
    """``s^3 t^3 grad u / W`` with ``grad u / W = grad v / sqrt(Phi'^-2 + |grad v|^2)``."""
    j = level.jet(s, t)
    ws, wt = j["ws"], j["wt"]
    inv = np.exp(-2.0 * logd(j["w"]))
    den = np.sqrt(inv + ws**2 + wt**2)
    wgt = s**3 * t**3
    return wgt * ws / den, wgt * wt / den, j["w"]


def reduced_operator_fd(level, logd, s, t, h, active=None):
    """Centered-difference ``d_s(s^3 t^3 u_s/W) + d_t(s^3 t^3 u_t/W)``, divided by ``s^3 t^3``.

    Fluxes are evaluated at the four half-step points around each node;
    ``active(v)`` marks where the profile is switched on (zero flux elsewhere).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(s)
    for ds, dt, comp, sign in ((0.5, 0, 0, 1), (-0.5, 0, 0, -1), (0, 0.5, 1, 1), (0, -0.5, 1, -1)):
        ss, tt = s + ds * h, t + dt * h
        Fs, Ft, v = _flux(level, logd, ss, tt)
        flux = Fs if comp == 0 else Ft
        if active is not None:
            flux = np.where(active(v), flux, 0.0)
        out += sign * flux / h
    return out / (s**3 * t**3)


def verification_grid(R, h, margin=None):
    """Interior points of ``{t > s} cap B_R`` away from the diagonal and axes."""
    margin = 4 * h if margin is None else margin
    pts = np.arange(margin, R, h)
    S, T = np.meshgrid(pts, pts, indexing="ij")
    m = (T > S + margin) & (S**2 + T**2 < R**2) & (S >= margin)
    return S[m], T[m]


@dataclass
class SignReport:
    kind: str
    h: float
    n_points: int
    max_wrong_sign: float
    analytic_max_wrong_sign: float
    min_abs_operator: float
    consistency_error: float

    def to_json(self):
        return self.__dict__.copy()


def verify_mean_curvature_sign(kind, spec, grid, h):
    """Finite-difference sign check of the reduced MSE operator on a barrier.

    ``kind`` is ``"supersolution"`` (operator must be ``<= 0``) or
    ``"subsolution"`` (``>= 0``).  Reports the largest wrong-signed value
    of the difference operator and of the closed-form operator, and the
    max deviation of the difference operator from the exact one, which is
    ``S / sqrt(Phi'^{-2} + |grad v|^2)`` with ``S`` the closed form.
    """
    s, t = (np.asarray(a, dtype=float) for a in grid)
    if np.any(s - h <= 0) or np.any(t - s <= h):
        raise BarrierDomainError("grid touches the axis or the diagonal")
    if kind == "supersolution":
        level, logd, ratio, active = spec.v_upper, spec.F.log_dF, spec.F.ddF_over_dF, None
        sgn = 1.0
    elif kind == "subsolution":
        level, logd, ratio = spec.v_lower, spec.G.log_dG, spec.G.ddG_over_dG
        Dlev = spec.D

        def active(v):
            return spec.G.G(np.abs(v)) > Dlev

        sgn = -1.0
    else:
        raise ValueError(f"unknown barrier kind {kind!r}")
    op = reduced_operator_fd(level, logd, s, t, h, active)
    an = operator_sign_analytic(level, logd, ratio, s, t, cutoff=active)
    g = level.jet(s, t)
    q = np.sqrt(np.exp(-2.0 * logd(g["w"])) + g["ws"] ** 2 + g["wt"] ** 2)
    # stencils straddling the cutoff are excluded from the consistency error
    smooth = np.ones(s.shape, dtype=bool)
    if active is not None:
        for ds, dt in ((h, 0), (-h, 0), (0, h), (0, -h), (0, 0)):
            smooth &= active(level.value(s + ds, t + dt))
    err = np.abs(op - an / q)[smooth]
    return SignReport(
        kind=kind, h=h, n_points=int(s.size),
        max_wrong_sign=float(max(np.max(sgn * op), 0.0)) + 0.0,
        analytic_max_wrong_sign=float(max(np.max(sgn * an), 0.0)) + 0.0,
        min_abs_operator=float(np.min(np.abs(op))),
        consistency_error=float(np.max(err)) if err.size else 0.0,
    )


# ---------------------------------------------------------------------------
# construction


def measure_constants(leaf_upper, base_sigma, eps0, u_grid=None):
    """Measured constants of the level-set estimates on ``lam = 1``.

    ``K_hess = max |D^2 v| / (lam sigma^{7/2})``,
    ``k_grad = min |grad v| / (lam^2 sigma^2)`` and
    ``k_H = min H lam sigma^{9/2}``, all scale invariant.
    """
    curve = leaf_upper.curve if hasattr(leaf_upper, "curve") else leaf_upper
    level = LevelSetFunction(curve)
    if u_grid is None:
        u_grid = np.geomspace(1e-3, 50.0, 400)
    sig_u, _, _ = curve(u_grid)
    s = u_grid
    t = sig_u
    g = level.geometry(s, t)
    sig = base_sigma(g["u"])
    lam = g["lam"]
    K_hess = float(np.max(g["hess"] / (lam * sig**3.5)))
    k_grad = float(np.min(g["grad"] / (lam**2 * sig**2)))
    H_leaf = level.leaf_mean_curvature(s, t)
    k_H = float(np.min(H_leaf * lam * sig**4.5))
    kappa = min(1.0, k_H * k_grad)
    C_req = 2.0 * K_hess / (k_grad**2 * kappa)
    return {"K_hess": K_hess, "k_grad": k_grad, "k_H": k_H, "kappa": kappa,
            "H_consistency": float(np.max(np.abs(g["H"] - H_leaf) / np.abs(H_leaf))),
            "C_req": C_req}


def lower_leaf_curve(perturbed):
    """Curve for ``sigma_under(s) = 2 (sigma - eps0 f)(s/2)``."""
    from .foliation import LeafCurve

    b = perturbed.base
    e = b.excess - perturbed.eps0 * perturbed.f
    ep = b.sigma_p - 1.0 - perturbed.eps0 * perturbed.f_p
    epp = b.sigma_pp - perturbed.eps0 * perturbed.f_pp
    return LeafCurve(2.0 * b.s_grid, 2.0 * e, ep, 0.5 * epp, tail_powers=(-2.0, -2.5, -3.0))


def leaf_ordering_margin(upper_curve, lower_curve, s):
    """``min (sigma_under - sigma_bar)`` over ``s``."""
    return float(np.min(lower_curve.excess(s, 0) - upper_curve.excess(s, 0)))


def ordering_violation(spec, s, t):
    """Largest ``u_under - u_bar`` over points of ``{t > s}`` (compared in log space)."""
    under = subsolution_values(s, t, spec)
    pos = under > 0
    if not np.any(pos):
        return 0.0
    _, log_bar = supersolution_log_value(s[pos], t[pos], spec)
    log_under = np.log(under[pos])
    excess = log_under - log_bar
    worst = np.max(excess)
    if worst <= 0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.max(under[pos] - np.exp(log_bar)))


def build_barriers(perturbed, check_R=8.0, check_h=None, A_start=10.0, B_start=1.0,
                   D_start=1.0 / 64, max_doublings=30):
    """Choose ``A, B, D`` by doubling searches against measured constants."""
    upper = perturbed.curve
    lower = lower_leaf_curve(perturbed)
    s_chk = np.linspace(0.0, upper.s_max, 2001)
    order = leaf_ordering_margin(upper, lower, s_chk)
    if order <= 0:
        raise BarrierConstructionError("leaf ordering sigma_bar < sigma_under fails")

    base_sigma = lambda u: perturbed.base.evaluate(u)[0]  # noqa: E731
    consts = measure_constants(upper, base_sigma, perturbed.eps0)
    C_req = consts["C_req"]

    A = A_start
    for _ in range(max_doublings):
        if final_inequality_global_min(A) >= C_req:
            break
        A *= 2.0
    else:
        raise BarrierConstructionError("no A satisfies the final inequality")

    h = check_h or check_R / 64
    grid = verification_grid(check_R, h)
    spec = BarrierSpec(eps0=perturbed.eps0, A=A, B=B_start, D=D_start,
                       leaf_upper=upper, leaf_lower=lower, C_req=C_req, constants=consts)

    for _ in range(max_doublings):
        rep = verify_mean_curvature_sign("subsolution", spec, grid, h)
        if rep.analytic_max_wrong_sign == 0.0:
            break
        spec = _respec(spec, B=spec.B * 2.0)
    else:
        raise BarrierConstructionError("no B makes the subsolution sign check pass")

    # D = 0 is tried before the doubling ladder
    S, T = verification_grid(check_R, h / 2, margin=h / 4)
    for D in [0.0] + [D_start * 2.0**k for k in range(max_doublings)]:
        spec = _respec(spec, D=D)
        if ordering_violation(spec, S, T) <= 0.0:
            break
    else:
        raise BarrierConstructionError("no D gives u_under <= u_bar")

    spec.margins = {
        "leaf_ordering": order,
        "final_inequality_global_min": final_inequality_global_min(A),
        "subsolution_wrong_sign": verify_mean_curvature_sign("subsolution", spec, grid, h).analytic_max_wrong_sign,
        "supersolution_wrong_sign": verify_mean_curvature_sign("supersolution", spec, grid, h).analytic_max_wrong_sign,
    }
    return spec


def _respec(spec, **kw):
    data = dict(eps0=spec.eps0, A=spec.A, B=spec.B, D=spec.D, leaf_upper=spec.leaf_upper,
                leaf_lower=spec.leaf_lower, C_req=spec.C_req, constants=spec.constants)
    data.update(kw)
    new = BarrierSpec(**data)
    for key in ("vu", "vl", "F"):
        if key in spec._cache and not ("A" in kw and key == "F"):
            new._cache[key] = spec._cache[key]
    return new


def write_barrier_csv(spec, s, t, h, path):
    """CSV ``s,t,u_bar,u_under,msop_bar,msop_under`` (``u_bar`` may be ``inf``)."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    sign, lb = supersolution_log_value(s, t, spec)
    with np.errstate(over="ignore"):
        ubar = sign * np.exp(lb)
    under = subsolution_values(s, t, spec)
    op_bar = reduced_operator_fd(spec.v_upper, spec.F.log_dF, s, t, h)
    D = spec.D
    op_under = reduced_operator_fd(spec.v_lower, spec.G.log_dG, s, t, h,
                                   active=lambda v: spec.G.G(np.abs(v)) > D)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "t", "u_bar", "u_under", "msop_bar", "msop_under"])
        for row in zip(s, t, ubar, under, op_bar, op_under):
            wr.writerow([repr(float(x)) for x in row])
    return path


def write_barrier_json(spec, path):
    path = Path(path)
    path.write_text(json.dumps(spec.to_json(), indent=2, sort_keys=True))
    return path

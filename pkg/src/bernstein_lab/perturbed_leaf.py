"""Perturbation of the minimal leaf into a leaf with signed mean curvature.

The linearization of ``G`` at the leaf is ``Lf = f'' + (log p)' f' + q f``
with ``p = s^3 sigma^3 (1 + sigma'^2)^{-3/2}`` and
``q = 3 (1 + sigma'^2) sigma^{-2}``.  Rescaling invariance supplies the
kernel element ``f0 = sigma - s sigma'`` and reduction of order gives

    f(s) = f0(s) int_0^s f0^{-2} p^{-1} int_0^t f0 p g

for ``Lf = g``.  With ``g = sigma^{-9/2}`` the leaf ``sigma + eps0 f`` has
``G > 0`` once ``eps0`` is small.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .foliation import LeafCurve, LeafProfile, mean_curvature_residual

ODE_START = 1e-4
FD_REL_STEP = np.finfo(float).eps ** (1.0 / 3.0)


class ConstructionError(RuntimeError):
    pass


def _derivs(profile, s):
    if hasattr(profile, "evaluate"):
        return profile.evaluate(s)
    return profile(s)


def _range_check(profile, s):
    s = np.asarray(s, dtype=float)
    s_max = getattr(profile, "s_max", None)
    if s_max is None and hasattr(profile, "s_grid"):
        s_max = profile.s_grid[-1]
    if np.any(s <= 0) or (s_max is not None and np.any(s > s_max * (1 + 1e-12))):
        raise ValueError("s outside the profile range")
    return s


def sigma_third(sigma, sigma_p, sigma_pp, s):
    """``sigma'''`` obtained by differentiating the leaf equation once."""
    k = sigma_p / s - 1.0 / sigma
    dk = sigma_pp / s - sigma_p / s**2 + sigma_p / sigma**2
    return -6.0 * sigma_p * sigma_pp * k - 3.0 * (1.0 + sigma_p**2) * dk


def jacobi_field_f0(profile):
    """``f0 = sigma - s sigma'`` on the profile grid (computed as ``e - s e'``)."""
    s = profile.s_grid
    return profile.excess - s * (profile.sigma_p - 1.0)


def jacobi_field_f0_derivs(profile, s):
    """``(f0, f0', f0'')`` at arbitrary ``s > 0`` from the leaf equation."""
    s = np.asarray(s, dtype=float)
    curve = profile.curve if hasattr(profile, "curve") else None
    sig, sp, spp = _derivs(profile, s)
    if curve is not None:
        f0 = curve.excess(s, 0) - s * curve.excess(s, 1)
    else:
        f0 = sig - s * sp
    s3 = sigma_third(sig, sp, spp, s)
    return f0, -s * spp, -spp - s * s3


def log_p_prime(sigma, sigma_p, sigma_pp, s):
    return 3.0 / s + 3.0 * sigma_p / sigma - 3.0 * sigma_p * sigma_pp / (1.0 + sigma_p**2)


def weight_p(sigma, sigma_p, s):
    return s**3 * sigma**3 * (1.0 + sigma_p**2) ** -1.5


def potential_q(sigma, sigma_p):
    return 3.0 * (1.0 + sigma_p**2) / sigma**2


def linearized_apply(f, f_p, f_pp, profile, s):
    """Apply the linearized leaf operator to ``f`` given its derivatives at ``s``."""
    s = _range_check(profile, s)
    sig, sp, spp = _derivs(profile, s)
    out = f_pp + log_p_prime(sig, sp, spp, s) * f_p + potential_q(sig, sp) * f
    return float(out) if np.ndim(out) == 0 else out


def curvature_forcing(profile):
    """The forcing ``g = sigma^{-9/2}`` used for the perturbed leaf."""

    def g(s):
        return _derivs(profile, np.asarray(s, dtype=float))[0] ** -4.5

    return g


@dataclass
class LinearizedSolution:
    s: np.ndarray
    f: np.ndarray
    f_p: np.ndarray
    f_pp: np.ndarray
    residual: float
    c_inf: float
    tail_K: float

    def tail_bound(self, s_min=10.0):
        return self.tail_K


def solve_linearized(g, profile, s_eval=None, rtol=1e-12):
    """Solve ``Lf = g`` with ``f(0) = f'(0) = 0`` by reduction of order.

    The two nested integrals are carried as the ODE system
    ``J' = f0 p g``, ``w' = J / (p f0^2)`` so that ``f = f0 w`` and
    ``f' = f0' w + f0 w'``.  ``f''`` is a centered difference of the
    integral representation of ``f'``; the reported residual re-applies
    the operator.
    """
    s_all = profile.s_grid if s_eval is None else np.asarray(s_eval, dtype=float)
    s_max = float(profile.s_grid[-1])

    f0_grid = jacobi_field_f0(profile)
    if np.any(f0_grid <= 0):
        bad = profile.s_grid[np.argmax(f0_grid <= 0)]
        raise ConstructionError(f"f0 changes sign near s = {bad:.6g}")

    def rhs(s, u):
        sig, sp, spp = _derivs(profile, np.array([s]))
        f0 = jacobi_field_f0_derivs(profile, np.array([s]))[0]
        p = weight_p(sig, sp, s)
        return [float((f0 * p * g(np.array([s])))[0]), float((u[0] / (p * f0**2))[0])]

    g0 = float(np.atleast_1d(g(np.array([0.0])))[0])
    s_start = ODE_START
    u0 = [g0 * s_start**4 / 4.0, g0 * s_start**2 / 8.0]
    sol = solve_ivp(rhs, (s_start, s_max), u0, method="DOP853", rtol=rtol,
                    atol=1e-300, dense_output=True)
    if sol.status != 0:
        raise ConstructionError(f"linearized quadrature failed: {sol.message}")

    def f_and_fp(s):
        s = np.asarray(s, dtype=float)
        J, w = sol.sol(s)
        f0, f0p, _ = jacobi_field_f0_derivs(profile, s)
        sig, sp, _ = _derivs(profile, s)
        wp = J / (weight_p(sig, sp, s) * f0**2)
        return f0 * w, f0p * w + f0 * wp

    s_all = np.asarray(s_all, dtype=float)
    f = np.zeros_like(s_all)
    fp = np.zeros_like(s_all)
    fpp = np.full_like(s_all, g0 / 4.0)
    pos = s_all > 0
    sp_ = s_all[pos]
    f[pos], fp[pos] = f_and_fp(np.maximum(sp_, s_start))

    h = FD_REL_STEP * np.maximum(sp_, 1.0)
    lo = np.maximum(sp_ - h, s_start)
    hi = np.minimum(sp_ + h, s_max)
    fpp[pos] = (f_and_fp(hi)[1] - f_and_fp(lo)[1]) / (hi - lo)

    small = pos & (s_all < 10 * s_start)
    if np.any(small):
        # below the ODE start the leading series term is exact to O(s^4)
        f[small] = g0 * s_all[small] ** 2 / 8.0
        fp[small] = g0 * s_all[small] / 4.0
        fpp[small] = g0 / 4.0

    resid_pts = pos & (s_all >= 10 * s_start)
    Lf = linearized_apply(f[resid_pts], fp[resid_pts], fpp[resid_pts], profile, s_all[resid_pts])
    gv = g(s_all[resid_pts])
    residual = float(np.max(np.abs(Lf - gv) / (1.0 + np.abs(gv)))) if np.any(resid_pts) else 0.0

    c_inf, K = _fit_f_tail(s_all, f)
    return LinearizedSolution(s_all, f, fp, fpp, residual, c_inf, K)


def _fit_f_tail(s, f, s_min=10.0):
    m = s >= s_min
    if m.sum() < 4:
        return float("nan"), float("nan")
    st = s[m]
    A = np.column_stack([np.ones_like(st), st**-0.5, st**-1.0])
    coef, *_ = np.linalg.lstsq(A, f[m] * st**2, rcond=None)
    c = float(coef[0])
    K = float(np.max(np.abs(f[m] - c * st**-2.0) * st**2.5))
    return c, K


def perturbed_curvature(profile, f, f_p, f_pp, eps):
    """``G(sigma + eps f)`` on the profile grid (``s > 0`` samples).

    The difference ``G(sigma + eps f) - G(sigma)`` is expanded exactly so the
    small quantity is never formed by cancelling O(1/s) terms.
    """
    s = profile.s_grid
    m = s > 0
    s = s[m]
    sig, sp, spp = profile.sigma[m], profile.sigma_p[m], profile.sigma_pp[m]
    f, fp, fpp = f[m], f_p[m], f_pp[m]
    base = mean_curvature_residual(sig, sp, spp, s)
    sig_b = sig + eps * f
    sp_b = sp + eps * fp
    k0 = sp / s - 1.0 / sig
    delta = (eps * fpp
             + 3.0 * (1.0 + sp_b**2) * (eps * fp / s + eps * f / (sig * sig_b))
             + 3.0 * (2.0 * eps * sp * fp + eps**2 * fp**2) * k0)
    return s, base + delta


def choose_epsilon0(profile, sol, eps_start=0.1, max_halvings=20, eps_floor=1e-6):
    """Largest ``eps0`` in ``0.1 * 2^-k`` with ``G(sigma_bar) sigma^{9/2} >= eps0/2``."""
    eps = eps_start
    for _ in range(max_halvings + 1):
        s, G = perturbed_curvature(profile, sol.f, sol.f_p, sol.f_pp, eps)
        margin = G * profile.sigma[profile.s_grid > 0] ** 4.5
        if np.min(margin) >= eps / 2.0:
            return eps
        eps /= 2.0
        if eps < eps_floor:
            break
    raise ConstructionError("no eps0 >= 1e-6 gives the required curvature margin")


def taylor_control(profile, sol, eps):
    """``max |G(sigma + eps f) - G(sigma) - eps dG[f]| sigma^7 / eps^2``.

    The remainder is expanded in closed form (every term carries ``eps^2``);
    on the leaf ``dG[f]`` coincides with ``Lf``.
    """
    s = profile.s_grid
    m = s > 0
    s = s[m]
    sig, sp = profile.sigma[m], profile.sigma_p[m]
    f, fp = sol.f[m], sol.f_p[m]
    sig_b = sig + eps * f
    k0 = sp / s - 1.0 / sig
    rem = (3.0 * (2.0 * eps * sp * fp + eps**2 * fp**2) * (eps * fp / s + eps * f / (sig * sig_b))
           - 3.0 * (1.0 + sp**2) * eps**2 * f**2 / (sig**2 * sig_b)
           + 3.0 * eps**2 * fp**2 * k0)
    return float(np.max(np.abs(rem) * sig**7) / eps**2)


@dataclass
class PerturbedLeaf:
    base: LeafProfile
    f: np.ndarray
    eps0: float
    sigma_bar: np.ndarray
    a_bar: float
    f_p: np.ndarray = field(repr=False, default=None)
    f_pp: np.ndarray = field(repr=False, default=None)
    c_inf: float = float("nan")
    min_margin: float = float("nan")
    solution: LinearizedSolution = field(repr=False, default=None)
    _curve: LeafCurve = field(repr=False, default=None)

    def __post_init__(self):
        if self._curve is None:
            self._curve = self.signed_curve(+1)

    def signed_curve(self, sign):
        b = self.base
        e = b.excess + sign * self.eps0 * self.f
        return LeafCurve(b.s_grid, e, b.sigma_p - 1.0 + sign * self.eps0 * self.f_p,
                         b.sigma_pp + sign * self.eps0 * self.f_pp,
                         tail_powers=(-2.0, -2.5, -3.0))

    @property
    def curve(self):
        return self._curve

    @property
    def s_grid(self):
        return self.base.s_grid

    @property
    def s_max(self):
        return float(self.base.s_grid[-1])

    def evaluate(self, s):
        return self._curve(s)

    @property
    def sigma_bar_p(self):
        return self.base.sigma_p + self.eps0 * self.f_p

    @property
    def sigma_bar_pp(self):
        return self.base.sigma_pp + self.eps0 * self.f_pp

    def curvature_margin(self):
        """``G(sigma_bar) sigma^{9/2}`` on the ``s > 0`` samples."""
        s, G = perturbed_curvature(self.base, self.f, self.f_p, self.f_pp, self.eps0)
        return s, G * self.base.sigma[self.base.s_grid > 0] ** 4.5

    def asymptotic_K(self, s_min=10.0):
        s = self.base.s_grid
        m = s >= s_min
        e_bar = self.base.excess[m] + self.eps0 * self.f[m]
        return float(np.max(np.abs(e_bar - self.a_bar * s[m] ** -2.0) * s[m] ** 2.5))


def build_perturbed_leaf(profile, eps_start=0.1):
    sol = solve_linearized(curvature_forcing(profile), profile)
    eps0 = choose_epsilon0(profile, sol, eps_start=eps_start)
    leaf = PerturbedLeaf(
        base=profile, f=sol.f, eps0=eps0, sigma_bar=profile.sigma + eps0 * sol.f,
        a_bar=profile.a + eps0 * sol.c_inf, f_p=sol.f_p, f_pp=sol.f_pp,
        c_inf=sol.c_inf, solution=sol,
    )
    leaf.min_margin = float(leaf.curvature_margin()[1].min())
    if leaf.a_bar <= 0:
        raise ConstructionError("perturbed asymptotic coefficient is not positive")
    return leaf


def write_perturbed_csv(leaf, path):
    path = Path(path)
    s, margin = leaf.curvature_margin()
    full_margin = np.full(leaf.s_grid.shape, np.nan)
    full_margin[leaf.s_grid > 0] = margin
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "f", "sigma_bar", "G_sigma_bar_margin"])
        for row in zip(leaf.s_grid, leaf.f, leaf.sigma_bar, full_margin):
            wr.writerow([repr(float(v)) for v in row])
    return path

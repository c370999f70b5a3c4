"""Dirichlet problem for the symmetry-reduced minimal surface equation.

Solves ``d_s(s^3 t^3 u_s / W) + d_t(s^3 t^3 u_t / W) = 0`` with
``W = sqrt(1 + u_s^2 + u_t^2)`` on the quarter disk ``{0 <= s <= t, s^2 + t^2 <= R^2}``.
The solution is odd across ``t = s`` (it vanishes there) and even across
``s = 0``, where the weight makes the flux vanish.

Cell-centred nodes ``((i + 1/2) h, (j + 1/2) h)``; nodes with ``i = j`` sit on
the diagonal and are fixed to zero.  Neighbours across the arc are replaced
by the arc intersection (Shortley-Weller), which carries the boundary data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve


class SolverFailure(RuntimeError):
    """Nonlinear iteration diverged; ``iterate`` holds the last grid values."""

    def __init__(self, message, iterate=None, history=None):
        super().__init__(message)
        self.iterate = iterate
        self.history = history or []


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 500
    damping: float = 0.7
    anderson_depth: int = 5

    def __post_init__(self):
        if self.tol < 1e-14:
            raise ValueError("tol must be >= 1e-14")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")
        if self.anderson_depth < 0:
            raise ValueError("anderson_depth must be >= 0")


@dataclass
class SymmetricGrid:
    R: float
    h: float
    values: np.ndarray  # (N, N), [i, j] at (s_i, t_j); NaN outside {t >= s} cap disk
    residual: float = float("nan")
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def centers(self):
        return (np.arange(self.values.shape[0]) + 0.5) * self.h

    def mask(self):
        """Nodes of the closed sector ``{t >= s}`` inside the disk (diagonal included)."""
        return np.isfinite(self.values)

    def points(self, include_diagonal=False):
        """``(s, t, u)`` of the unknown nodes (``t > s``)."""
        c = self.centers
        I, J = np.nonzero(self.mask())
        keep = (J > I) | include_diagonal
        I, J = I[keep], J[keep]
        return c[I], c[J], self.values[I, J]


class _Layout:
    """Index bookkeeping for the sector grid."""

    def __init__(self, R, h):
        N = int(math.ceil(R / h))
        c = (np.arange(N) + 0.5) * h
        S, T = np.meshgrid(c, c, indexing="ij")
        inside = S**2 + T**2 < R**2
        upper = np.triu(np.ones((N, N), dtype=bool), k=1)
        self.N, self.c, self.R, self.h = N, c, R, h
        self.inside = inside
        self.unknown = inside & upper
        self.diag = inside & np.eye(N, dtype=bool)
        self.I, self.J = np.nonzero(self.unknown)
        self.index = -np.ones((N, N), dtype=np.int64)
        self.index[self.I, self.J] = np.arange(self.I.size)
        I, J = self.I, self.J
        s, t = c[I], c[J]
        self.s, self.t = s, t
        # east: (i+1, j) or the arc
        e_in = np.zeros(I.size, dtype=bool)
        ok = I + 1 < N
        e_in[ok] = inside[I[ok] + 1, J[ok]]
        self.e_in = e_in
        self.dE = np.where(e_in, h, np.sqrt(np.maximum(R**2 - t**2, 0.0)) - s)
        # north: (i, j+1) or the arc
        n_in = np.zeros(I.size, dtype=bool)
        ok = J + 1 < N
        n_in[ok] = inside[I[ok], J[ok] + 1]
        self.n_in = n_in
        self.dN = np.where(n_in, h, np.sqrt(np.maximum(R**2 - s**2, 0.0)) - t)
        self.arc_E = (np.sqrt(np.maximum(R**2 - t**2, 0.0)), t)
        self.arc_N = (s, np.sqrt(np.maximum(R**2 - s**2, 0.0)))
        self.dE = np.maximum(self.dE, 1e-12 * h)
        self.dN = np.maximum(self.dN, 1e-12 * h)


def _full_field(lay, x):
    """``(N + 1, N + 1)`` array of node values, row/col 0 being the ``s = -h/2`` ghost.

    Lower triangle by odd reflection, ghost column by even reflection in ``s``.
    """
    N = lay.N
    U = np.zeros((N, N))
    U[lay.I, lay.J] = x
    U = U - U.T
    U[~(lay.inside | lay.inside.T)] = 0.0
    G = np.zeros((N + 1, N + 1))
    G[1:, 1:] = U
    G[0, 1:] = U[0, :]
    return G


def _node_gradients(lay, x, uE, uN):
    """Second-order gradients at unknowns and at diagonal nodes (for ``W``)."""
    G = _full_field(lay, x)
    I, J = lay.I + 1, lay.J + 1
    uP = x
    uW = G[I - 1, J]
    uS = G[I, J - 1]
    h = lay.h
    dE, dN = lay.dE, lay.dN
    us = (h**2 * (uE - uP) + dE**2 * (uP - uW)) / (dE * h * (dE + h))
    ut = (h**2 * (uN - uP) + dN**2 * (uP - uS)) / (dN * h * (dN + h))
    # diagonal nodes: all four neighbours are grid nodes by reflection
    d = np.nonzero(lay.diag.diagonal())[0]
    k = d + 1
    dus = (G[k + 1, k] - G[k - 1, k]) / (2 * h)
    dut = (G[k, k + 1] - G[k, k - 1]) / (2 * h)
    return us, ut, d, dus, dut


def _assemble(lay, x, gE, gN):
    """Lagged-coefficient matrix and right side at the iterate ``x``."""
    N, h = lay.N, lay.h
    I, J, s, t = lay.I, lay.J, lay.s, lay.t
    n = I.size
    uE = np.where(lay.e_in, 0.0, gE)
    uN = np.where(lay.n_in, 0.0, gN)
    G = _full_field(lay, x)
    uE = np.where(lay.e_in, G[np.minimum(I + 2, N), J + 1], uE)
    uN = np.where(lay.n_in, G[I + 1, np.minimum(J + 2, N)], uN)
    us, ut, d, dus, dut = _node_gradients(lay, x, uE, uN)
    US = np.zeros((N, N))
    UT = np.zeros((N, N))
    US[I, J], UT[I, J] = us, ut
    US[d, d], UT[d, d] = dus, dut
    uP = x
    uW = G[I, J + 1]
    uS = G[I + 1, J]
    # face 1/W: normal difference plus mean tangential node gradient
    tE = np.where(lay.e_in, 0.5 * (ut + UT[np.minimum(I + 1, N - 1), J]), ut)
    tN = np.where(lay.n_in, 0.5 * (us + US[I, np.minimum(J + 1, N - 1)]), us)
    tW = 0.5 * (ut + UT[np.maximum(I - 1, 0), J])
    tS = 0.5 * (us + US[I, J - 1])
    iwE = 1.0 / np.sqrt(1.0 + ((uE - uP) / lay.dE) ** 2 + tE**2)
    iwN = 1.0 / np.sqrt(1.0 + ((uN - uP) / lay.dN) ** 2 + tN**2)
    iwW = 1.0 / np.sqrt(1.0 + ((uP - uW) / h) ** 2 + tW**2)
    iwS = 1.0 / np.sqrt(1.0 + ((uP - uS) / h) ** 2 + tS**2)
    dE, dN = lay.dE, lay.dN
    hs = 0.5 * (dE + h)
    ht = 0.5 * (dN + h)
    # cell averages of the cubic weights, exact on the first cell at s = 0
    ms = s**3 + 0.25 * s * h**2
    mt = t**3 + 0.25 * t * h**2
    cE = (s + 0.5 * dE) ** 3 * mt * iwE / (dE * hs)
    cW = np.where(I > 0, (s - 0.5 * h) ** 3 * mt * iwW / (h * hs), 0.0)
    cN = ms * (t + 0.5 * dN) ** 3 * iwN / (dN * ht)
    cS = ms * (t - 0.5 * h) ** 3 * iwS / (h * ht)
    diag = -(cE + cW + cN + cS)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [diag]
    rhs = np.zeros(n)
    idx = lay.index

    def couple(coef, ni, nj, known_val, is_grid):
        nonlocal rhs
        jj = np.where(is_grid, idx[np.clip(ni, 0, N - 1), np.clip(nj, 0, N - 1)], -1)
        unk = jj >= 0
        rows.append(np.nonzero(unk)[0])
        cols.append(jj[unk])
        vals.append(coef[unk])
        rhs = rhs - np.where(unk, 0.0, coef * known_val)

    couple(cE, I + 1, J, np.where(lay.e_in, 0.0, gE), lay.e_in)
    couple(cW, I - 1, J, 0.0, I > 0)
    couple(cN, I, J + 1, np.where(lay.n_in, 0.0, gN), lay.n_in)
    couple(cS, I, J - 1, 0.0, np.ones(n, dtype=bool))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A, rhs, diag


def weighted_residual(A, rhs, diag, x):
    """``max |(A x - b)_P / A_PP|``: the nodal update a Jacobi sweep would make."""
    return float(np.max(np.abs((A @ x - rhs) / diag))) if x.size else 0.0


def dirichlet_solve(R, h, boundary, cfg=None, initial=None):
    """Solve the reduced MSE with Dirichlet data ``boundary(s, t)`` on the arc.

    ``boundary`` is a vectorized callable; it is evaluated only at arc points
    and must be odd across the diagonal (arc points may lie below it).
    Returns a :class:`SymmetricGrid` whose residual is the weighted max-norm
    nonlinear residual of the returned values.
    """
    cfg = cfg or SolverConfig()
    if h > R / 32 * (1 + 1e-12):
        raise ValueError("need h <= R/32")
    lay = _Layout(R, h)
    gE = np.asarray(boundary(*lay.arc_E), dtype=float)
    gN = np.asarray(boundary(*lay.arc_N), dtype=float)
    if not (np.all(np.isfinite(gE[~lay.e_in])) and np.all(np.isfinite(gN[~lay.n_in]))):
        raise ValueError("boundary data must be finite on the arc")
    gE = np.where(lay.e_in, 0.0, gE)
    gN = np.where(lay.n_in, 0.0, gN)
    x = np.zeros(lay.I.size) if initial is None else np.asarray(initial(lay.s, lay.t), dtype=float)
    history = []
    past = []
    worse = 0
    res = float("inf")
    for it in range(cfg.max_iter + 1):
        A, rhs, diag = _assemble(lay, x, gE, gN)
        res = weighted_residual(A, rhs, diag, x)
        history.append(res)
        if res <= cfg.tol:
            break
        if it == cfg.max_iter:
            break
        if len(history) > 1 and res > history[-2]:
            worse += 1
            if worse >= 10:
                raise SolverFailure("residual increased over 10 successive steps",
                                    iterate=_to_grid(lay, x), history=history)
        else:
            worse = 0
        f = spsolve(A.tocsc(), rhs) - x
        x = _anderson_step(x, f, past, cfg)
    return SymmetricGrid(R=R, h=h, values=_to_grid(lay, x), residual=res,
                         iterations=len(history) - 1, history=history)


def _anderson_step(x, f, past, cfg):
    """Damped Anderson mixing of the Picard map ``x -> A(x)^{-1} b(x)``; ``f = G(x) - x``."""
    past.append((x.copy(), f.copy()))
    if len(past) > cfg.anderson_depth + 1:
        past.pop(0)
    if len(past) < 2:
        return x + cfg.damping * f
    dX = np.column_stack([past[k + 1][0] - past[k][0] for k in range(len(past) - 1)])
    dF = np.column_stack([past[k + 1][1] - past[k][1] for k in range(len(past) - 1)])
    gamma, *_ = np.linalg.lstsq(dF, f, rcond=1e-10)
    return x + cfg.damping * f - (dX + cfg.damping * dF) @ gamma


def _to_grid(lay, x):
    V = np.full((lay.N, lay.N), np.nan)
    V[lay.I, lay.J] = x
    V[lay.diag] = 0.0
    return V


def restrict_to_coarse(fine, coarse):
    """Average of the four fine children of each coarse node (``NaN`` if any is missing).

    Fine grid must have exactly half the spacing.  Odd reflection supplies the
    children below the diagonal.
    """
    if not math.isclose(fine.h * 2.0, coarse.h, rel_tol=1e-12):
        raise ValueError("fine grid must halve the spacing")
    F = fine.values
    F = np.where(np.isnan(F), -F.T, F)
    Nc = coarse.values.shape[0]
    Nf = F.shape[0]
    out = np.full((Nc, Nc), np.nan)
    m = min(Nc, Nf // 2)
    blocks = F[: 2 * m, : 2 * m].reshape(m, 2, m, 2)
    out[:m, :m] = blocks.mean(axis=(1, 3))
    out[~coarse.mask()] = np.nan
    return out


def refinement_difference(coarse, fine):
    """``max |u_h - R u_{h/2}|`` over coarse nodes whose fine children all exist."""
    r = restrict_to_coarse(fine, coarse)
    d = np.abs(coarse.values - r)
    return float(np.nanmax(d)) if np.any(np.isfinite(d)) else float("nan")


@dataclass
class TrappingReport:
    above: float
    below: float
    diagonal_max: float
    min_value: float
    n_points: int

    def to_json(self):
        return self.__dict__.copy()


def verify_trapping(sol, spec):
    """Violations ``max(u - u_bar)`` and ``max(u_under - u)`` over nodes with ``t > s``.

    ``u_bar`` can exceed the float range; it is compared in log space.
    """
    from .barriers import subsolution_values, supersolution_log_value

    s, t, u = sol.points()
    under = subsolution_values(s, t, spec)
    below = float(max(np.max(under - u), 0.0)) if u.size else 0.0
    sign, lb = supersolution_log_value(s, t, spec)
    with np.errstate(divide="ignore"):
        lu = np.log(np.maximum(u, 1e-300))
    above_mask = (u > 0) & (lu > lb)
    if np.any(above_mask):
        above = float(np.max(u[above_mask] - np.exp(lb[above_mask])))
    else:
        above = 0.0
    diag = np.diagonal(sol.values)
    return TrappingReport(
        above=above, below=below,
        diagonal_max=float(np.nanmax(np.abs(diag))) if np.any(np.isfinite(diag)) else 0.0,
        min_value=float(np.min(u)) if u.size else 0.0, n_points=int(u.size),
    )


class GrowthFitError(RuntimeError):
    pass


def growth_exponent(sol_family):
    """Slope of the least-squares fit of ``log max|u_R|`` against ``log R``."""
    if len(sol_family) < 3:
        raise GrowthFitError("need at least three radii")
    R = np.array([sol.R for sol in sol_family], dtype=float)
    ratios = R[1:] / R[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-9) or ratios[0] <= 1:
        raise GrowthFitError("radii must form an increasing geometric progression")
    m = np.array([np.nanmax(np.abs(sol.values)) for sol in sol_family])
    if np.any(m <= 0) or not np.all(np.isfinite(m)):
        raise GrowthFitError("max |u_R| must be positive and finite")
    slope, _ = np.polyfit(np.log(R), np.log(m), 1)
    return float(slope)


def write_solution_csv(sol, path):
    s, t, u = sol.points(include_diagonal=True)
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "t", "u"])
        for row in zip(s, t, u):
            wr.writerow([repr(float(v)) for v in row])
    return path


def write_solution_json(sol, path, trapping=None, growth=None):
    data = {"R": sol.R, "h": sol.h, "residual": sol.residual, "iterations": sol.iterations,
            "residual_history": list(map(float, sol.history))}
    if trapping is not None:
        data["trapping"] = trapping.to_json()
    if growth is not None:
        data["growth"] = growth
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True))
    return path

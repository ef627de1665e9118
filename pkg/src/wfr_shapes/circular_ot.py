"""One-dimensional optimal transport on the circle with the extended loss.

Optimal couplings between unit-mass circular densities are shift plans in
the quantile domain: the ``u``-th quantile of one measure is matched with the
``(u + theta)``-th quantile of the other for a constant mass offset
``theta``.  This module evaluates the cost of a shift, searches for the best
shift, cross-checks against an exact linear-programming oracle on small
grids, and turns a shift into an explicit monotone reparametrization when
the densities are strictly positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .measures import (
    TWO_PI,
    HALF_PI,
    CdfLift,
    GridDensity,
    cdf_lift,
    circ_dist,
    ell,
)

#: displacements within this band of pi/2 are treated as infinite-cost
DISPLACEMENT_GUARD = 1e-9

#: density floor (relative to the mean) below which CDFs are not invertible
DENSITY_FLOOR_REL = 1e-12

#: uniform refinement of the quantile grid used by the shift-cost quadrature
QUANTILE_REFINEMENT = 4096

COARSE_SCAN = 256


class NoAdmissibleShiftError(ValueError):
    """All quantile shifts have infinite cost (supports too far apart)."""


class NonInvertibleCdfError(ValueError):
    """A density vanishes on a cell, so its CDF has no inverse."""


class InfeasibleTransportError(ValueError):
    """The discrete transport problem admits no finite-cost coupling."""


@dataclass(frozen=True, eq=False)
class ShiftPlanResult:
    """Optimal quantile shift between two unit-mass densities."""

    theta: float
    cost: float
    quantiles: tuple


@dataclass(frozen=True, eq=False)
class Reparametrization:
    """Strictly increasing piecewise-linear circle homeomorphism, stored as
    one period of its lift: ``phi(t + 2*pi) = phi(t) + 2*pi``."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.shape != v.shape or b.size < 2:
            raise ValueError("breaks and values must be matching 1-D arrays")
        if np.any(np.diff(b) <= 0) or np.any(np.diff(v) <= 0):
            raise ValueError("reparametrization must be strictly increasing")
        if b[-1] - b[0] >= TWO_PI:
            raise ValueError("breakpoints must span less than one period")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls) -> "Reparametrization":
        return cls(np.array([0.0, math.pi]), np.array([0.0, math.pi]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        b0 = self.breaks[0]
        k = np.floor((t - b0) / TWO_PI)
        tau = np.clip(t - k * TWO_PI, b0, b0 + TWO_PI)
        ext_b = np.concatenate([self.breaks, [b0 + TWO_PI]])
        ext_v = np.concatenate([self.values, [self.values[0] + TWO_PI]])
        out = np.interp(tau, ext_b, ext_v) + k * TWO_PI
        return float(out[0]) if scalar else out

    def slope(self, t):
        """Derivative of the lift (piecewise constant, positive)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        b0 = self.breaks[0]
        tau = np.clip((t - b0) % TWO_PI + b0, b0, b0 + TWO_PI)
        ext_b = np.concatenate([self.breaks, [b0 + TWO_PI]])
        ext_v = np.concatenate([self.values, [self.values[0] + TWO_PI]])
        slopes = np.diff(ext_v) / np.diff(ext_b)
        idx = np.clip(np.searchsorted(ext_b, tau, side="right") - 1, 0, slopes.size - 1)
        out = slopes[idx]
        return float(out[0]) if scalar else out

    def inverse(self) -> "Reparametrization":
        v0 = self.values[0]
        shift = math.floor(v0 / TWO_PI) * TWO_PI
        return Reparametrization(self.values - shift, self.breaks + shift)

    def compose_check_identity(self, other: "Reparametrization", ts) -> float:
        """Sup-norm of ``self(other(t)) - t`` over the sample points."""
        ts = np.asarray(ts, dtype=float)
        return float(np.max(np.abs(self(other(ts)) - ts)))


def _unit_quantile(eta: GridDensity) -> CdfLift:
    if abs(eta.total_mass - 1.0) > 1e-9:
        raise ValueError("density must be normalized to unit mass")
    return cdf_lift(eta).pseudo_inverse()


class _ShiftCost:
    """Shift-cost evaluator sharing quantile data across many offsets."""

    def __init__(self, Q0: CdfLift, Q1: CdfLift):
        self.Q0 = Q0
        self.Q1 = Q1
        base = np.concatenate(
            [Q0.breaks % 1.0, np.arange(QUANTILE_REFINEMENT) / QUANTILE_REFINEMENT]
        )
        self.base = np.unique(np.clip(base, 0.0, 1.0))
        self.q0_base = np.asarray(Q0(self.base), dtype=float)

    def _integrate(self, grid, q0, q1):
        d = circ_dist(q0, q1)
        if np.any(d >= HALF_PI - DISPLACEMENT_GUARD):
            return math.inf
        vals = ell(d)
        ext = np.concatenate([grid, [grid[0] + 1.0]])
        ext_vals = np.concatenate([vals, [vals[0]]])
        return float(np.sum(0.5 * (ext_vals[1:] + ext_vals[:-1]) * np.diff(ext)))

    def rough(self, theta: float) -> float:
        """Trapezoid on the theta-independent grid (used by the coarse scan)."""
        q1 = np.asarray(self.Q1(self.base + theta), dtype=float)
        return self._integrate(self.base, self.q0_base, q1)

    def exact(self, theta: float) -> float:
        """Trapezoid on the union grid including the shifted breakpoints."""
        grid = np.unique(
            np.clip(
                np.concatenate([self.base, (self.Q1.breaks - theta) % 1.0]), 0.0, 1.0
            )
        )
        q0 = np.asarray(self.Q0(grid), dtype=float)
        q1 = np.asarray(self.Q1(grid + theta), dtype=float)
        return self._integrate(grid, q0, q1)


def shift_cost(eta0: GridDensity, eta1: GridDensity, theta: float) -> float:
    """Cost of the quantile shift plan at mass offset ``theta``.

    Matches the ``u``-th quantile of ``eta0`` with the ``(u + theta)``-th
    quantile of ``eta1`` and integrates ``ell`` of their circular distance
    over one unit of mass (trapezoidal rule on the union quantile grid).
    Returns ``inf`` as soon as a matched pair reaches the ``pi/2`` guard.
    """
    Q0 = _unit_quantile(eta0)
    Q1 = _unit_quantile(eta1)
    return _ShiftCost(Q0, Q1).exact(theta)


def optimal_shift(eta0: GridDensity, eta1: GridDensity) -> ShiftPlanResult:
    """Best quantile shift between two unit-mass densities.

    A coarse scan over one mass period seeds golden-section refinement; ties
    within the scan are all refined and the smallest nonnegative offset
    achieving the minimum is returned.
    """
    Q0 = _unit_quantile(eta0)
    Q1 = _unit_quantile(eta1)
    ev = _ShiftCost(Q0, Q1)

    for n_scan in (COARSE_SCAN, 4 * COARSE_SCAN, 16 * COARSE_SCAN):
        thetas = np.arange(n_scan) / n_scan
        vals = np.array([ev.rough(t) for t in thetas])
        if np.any(np.isfinite(vals)):
            break
    else:
        raise NoAdmissibleShiftError("every quantile shift has infinite cost")

    best = float(np.min(vals))
    candidates = [k for k in range(n_scan) if vals[k] <= best + 1e-9]
    refined = []
    h = 1.0 / n_scan
    for k in candidates:
        lo, hi = thetas[k] - h, thetas[k] + h
        t_star, c_star = _golden_section(ev.exact, lo, hi, xtol=1e-10)
        t_star %= 1.0
        if 1.0 - t_star < 1e-8:  # canonical nonnegative representative
            t_star = 0.0
        refined.append((c_star, t_star))
    c_min = min(c for c, _ in refined)
    theta_star = min(t for c, t in refined if c <= c_min + 1e-9)
    return ShiftPlanResult(theta=theta_star, cost=c_min, quantiles=(Q0, Q1))


def _golden_section(f, lo, hi, xtol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    t = c if fc <= fd else d
    return t, min(fc, fd)


def kantorovich_lp_cost(eta0: GridDensity, eta1: GridDensity) -> float:
    """Exact optimal transport cost between two small unit-mass grid densities.

    Solves the balanced Kantorovich linear program between the cell masses
    with cost ``ell(dist)`` on cell centers; infinite-cost cells are excluded
    from the variable set.  Intended as an independent oracle for
    ``optimal_shift`` on grids of at most 64 cells.
    """
    if eta0.resolution > 64 or eta1.resolution > 64:
        raise ValueError("the LP oracle is limited to grids of at most 64 cells")
    a = eta0.cell_masses
    b = eta1.cell_masses
    if abs(a.sum() - 1.0) > 1e-9 or abs(b.sum() - 1.0) > 1e-9:
        raise ValueError("densities must be normalized to unit mass")
    rows = np.nonzero(a > 0)[0]
    cols = np.nonzero(b > 0)[0]
    D = circ_dist(eta0.cell_centers[rows][:, None], eta1.cell_centers[cols][None, :])
    finite = D < HALF_PI - DISPLACEMENT_GUARD
    if np.any(~np.any(finite, axis=1)) or np.any(~np.any(finite, axis=0)):
        raise InfeasibleTransportError("a cell has no admissible partner")
    C = ell(np.minimum(D, HALF_PI))
    vi, vj = np.nonzero(finite)
    nv = vi.size
    n_rows, n_cols = rows.size, cols.size
    A_eq = np.zeros((n_rows + n_cols, nv))
    A_eq[vi, np.arange(nv)] = 1.0
    A_eq[n_rows + vj, np.arange(nv)] = 1.0
    b_eq = np.concatenate([a[rows], b[cols]])
    res = linprog(C[vi, vj], A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise InfeasibleTransportError(f"transport LP failed: {res.message}")
    return float(res.fun)


def build_reparametrization(
    nu0: GridDensity, nu1: GridDensity, theta: float
) -> Reparametrization:
    """Monotone map matching two strictly positive parameter densities.

    Returns the piecewise-linear lift ``phi`` with
    ``F1(phi(t)) = F0(t) - theta`` where ``F_i`` are the CDFs of the
    unit-normalized densities, so that ``phi`` pushes ``nu0`` forward to
    ``nu1`` (after the common normalization).  Densities must be bounded
    away from zero cell-wise; otherwise the CDFs are not invertible and no
    reparametrization exists.
    """
    for nu in (nu0, nu1):
        mean = float(np.mean(nu.values))
        if mean <= 0 or np.min(nu.values) < DENSITY_FLOOR_REL * mean:
            raise NonInvertibleCdfError(
                "density vanishes on a cell; CDF not invertible"
            )
    n0 = nu0.normalized()
    n1 = nu1.normalized()
    F0 = cdf_lift(n0)
    F1 = cdf_lift(n1)
    Q1 = F1.pseudo_inverse()

    # breakpoints: nu0 grid edges plus preimages of nu1 grid edges
    t_own = nu0.cell_edges[:-1]
    u_edges = F1.values + theta  # mass levels where phi crosses nu1 edges
    Q0 = F0.pseudo_inverse()
    t_cross = np.asarray(Q0(u_edges), dtype=float) % TWO_PI
    t_all = np.unique(np.concatenate([t_own, t_cross]) % TWO_PI)
    phi_vals = np.asarray(Q1(np.asarray(F0(t_all), dtype=float) - theta), dtype=float)
    # strictly increasing after dropping duplicate breakpoints
    keep = np.concatenate([[True], np.diff(t_all) > 1e-14])
    t_all, phi_vals = t_all[keep], phi_vals[keep]
    keep2 = np.concatenate([[True], np.diff(phi_vals) > 0])
    return Reparametrization(t_all[keep2], phi_vals[keep2])

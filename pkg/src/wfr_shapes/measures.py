"""Measures on the circle: atomic and grid densities, the transport loss,
admissibility predicates, and monotone lifts (CDFs / pseudo-inverses) on the
universal cover.

Angles are plain floats canonicalized to ``[0, 2*pi)``.  All containers are
immutable after construction and all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

#: Atoms closer than this are merged into one.
MERGE_TOL = 1e-12

#: Displacements within this guard of pi/2 are treated as infinite-cost.
FINITE_STRIP_GUARD = 1e-12

#: Grid cells with value <= this fraction of the max count as empty support.
SUPPORT_REL_TOL = 1e-14


class ZeroMeasureError(ValueError):
    """Raised when an operation needs a nonzero measure."""


def canonical_angle(theta):
    """Map an angle (scalar or array) to its representative in ``[0, 2*pi)``."""
    out = np.asarray(theta, dtype=float) % TWO_PI
    # float64 modulo can return 2*pi itself for inputs just below a period
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def circ_dist(a, b):
    """Geodesic distance on the circle, in ``[0, pi]``.

    Accepts scalars or arrays (broadcasting).
    """
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % TWO_PI
    out = np.minimum(d, TWO_PI - d)
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out)
    return out


def ell(zeta):
    """Transport loss ``-log(cos^2(zeta))``, extended by ``+inf`` for ``zeta >= pi/2``.

    The infinity is a genuine ``math.inf`` so that sums and comparisons
    saturate exactly; it is never approximated by a large float.
    """
    z = np.asarray(zeta, dtype=float)
    if np.any(z < 0):
        raise ValueError("ell is defined for nonnegative arguments only")
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.cos(z)
        vals = np.where(z < HALF_PI, -2.0 * np.log(np.abs(c)), np.inf)
    vals = np.maximum(vals, 0.0)
    if np.ndim(zeta) == 0:
        return float(vals)
    return vals


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative atomic measure on the circle.

    Atoms are stored sorted by canonical angle; atoms closer than
    ``MERGE_TOL`` (including across the wrap) are merged.  Zero-mass atoms are
    dropped, so the empty measure is represented by empty arrays.
    """

    angles: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        ang = canonical_angle(np.atleast_1d(np.asarray(self.angles, dtype=float)))
        mas = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if ang.shape != mas.shape or ang.ndim != 1:
            raise ValueError("angles and masses must be 1-D arrays of equal length")
        if np.any(mas < 0):
            raise ValueError("masses must be nonnegative")
        keep = mas > 0
        ang, mas = ang[keep], mas[keep]
        order = np.argsort(ang, kind="stable")
        ang, mas = ang[order], mas[order]
        if ang.size > 1:
            ang, mas = _merge_close_atoms(ang, mas)
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "masses", mas)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def first_moment(self) -> np.ndarray:
        return np.array(
            [
                float(np.sum(self.masses * np.cos(self.angles))),
                float(np.sum(self.masses * np.sin(self.angles))),
            ]
        )

    @property
    def num_atoms(self) -> int:
        return int(self.angles.size)

    def is_zero(self) -> bool:
        return self.angles.size == 0

    def rotated(self, alpha: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.angles + alpha, self.masses.copy())

    def scaled(self, a: float) -> "DiscreteMeasure":
        if a < 0:
            raise ValueError("scale factor must be nonnegative")
        return DiscreteMeasure(self.angles.copy(), a * self.masses)

    def restricted(self, indices) -> "DiscreteMeasure":
        idx = np.asarray(indices, dtype=int)
        return DiscreteMeasure(self.angles[idx], self.masses[idx])

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return DiscreteMeasure(
            np.concatenate([self.angles, other.angles]),
            np.concatenate([self.masses, other.masses]),
        )


def _merge_close_atoms(ang: np.ndarray, mas: np.ndarray):
    """Merge sorted atoms closer than MERGE_TOL, including the wrap pair."""
    groups = np.concatenate([[0], np.cumsum(np.diff(ang) >= MERGE_TOL)])
    n_groups = groups[-1] + 1
    new_mas = np.zeros(n_groups)
    np.add.at(new_mas, groups, mas)
    # representative angle: first atom of the group (deterministic)
    first = np.searchsorted(groups, np.arange(n_groups), side="left")
    new_ang = ang[first]
    # wraparound: last group touching first group across 2*pi
    if n_groups > 1 and (new_ang[0] + TWO_PI) - new_ang[-1] < MERGE_TOL:
        new_mas[0] += new_mas[-1]
        new_ang, new_mas = new_ang[:-1], new_mas[:-1]
    return new_ang, new_mas


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Piecewise-constant nonnegative density on the uniform circular grid.

    Cell ``k`` covers ``[2*pi*k/G, 2*pi*(k+1)/G)`` and carries density
    ``values[k]``, hence mass ``values[k] * 2*pi/G``.
    """

    resolution: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size != self.resolution:
            raise ValueError("values must be a 1-D array of length `resolution`")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")
        if np.any(vals < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def cell_width(self) -> float:
        return TWO_PI / self.resolution

    @property
    def cell_edges(self) -> np.ndarray:
        return np.arange(self.resolution + 1) * self.cell_width

    @property
    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) * self.cell_width

    @property
    def cell_masses(self) -> np.ndarray:
        return self.values * self.cell_width

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.cell_width)

    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    def support_cells(self) -> np.ndarray:
        """Indices of cells counted as support (value above the noise floor)."""
        if self.is_zero():
            return np.array([], dtype=int)
        thr = SUPPORT_REL_TOL * float(np.max(self.values))
        return np.nonzero(self.values > thr)[0]

    def normalized(self) -> "GridDensity":
        m = self.total_mass
        if m <= 0:
            raise ZeroMeasureError("cannot normalize the zero density")
        return GridDensity(self.resolution, self.values / m)

    def scaled(self, a: float) -> "GridDensity":
        if a < 0:
            raise ValueError("scale factor must be nonnegative")
        return GridDensity(self.resolution, a * self.values)

    def rolled(self, k: int) -> "GridDensity":
        """Rotate by ``k`` whole cells (angle ``2*pi*k/G``)."""
        return GridDensity(self.resolution, np.roll(self.values, k))

    def as_discrete(self) -> DiscreteMeasure:
        """One atom per nonempty cell, placed at the cell center."""
        idx = np.nonzero(self.values > 0)[0]
        return DiscreteMeasure(self.cell_centers[idx], self.cell_masses[idx])


def support_angles(mu) -> np.ndarray:
    """Support of a measure as an array of angles (cell centers for grids)."""
    if isinstance(mu, DiscreteMeasure):
        return mu.angles
    if isinstance(mu, GridDensity):
        return mu.cell_centers[mu.support_cells()]
    raise TypeError(f"unsupported measure type: {type(mu)!r}")


def _support_sets(mu0, mu1):
    s0 = support_angles(mu0)
    s1 = support_angles(mu1)
    if s0.size == 0 or s1.size == 0:
        raise ZeroMeasureError("admissibility is undefined for the zero measure")
    return s0, s1


def _dist_to_support(points: np.ndarray, mu) -> np.ndarray:
    """Circular distance from each point to the support of ``mu``.

    For grid densities the support is a union of cells; the distance to a
    cell is zero inside it and measured to the nearer edge outside.
    """
    if isinstance(mu, DiscreteMeasure):
        return np.min(circ_dist(points[:, None], mu.angles[None, :]), axis=1)
    cells = mu.support_cells()
    lo = cells * mu.cell_width
    hi = lo + mu.cell_width
    d_lo = circ_dist(points[:, None], lo[None, :])
    d_hi = circ_dist(points[:, None], hi[None, :])
    inside = (
        (points[:, None] >= lo[None, :]) & (points[:, None] < hi[None, :])
    )
    d = np.minimum(d_lo, d_hi)
    d[inside] = 0.0
    return np.min(d, axis=1)


def is_weakly_admissible(mu0, mu1) -> bool:
    """True iff neither measure charges the far set of the other.

    The far set of ``mu_j`` is ``{x : dist(x, supp mu_j) >= pi/2}``; a pair is
    weakly admissible when each measure puts zero mass there.
    """
    s0, s1 = _support_sets(mu0, mu1)
    d0 = _dist_to_support(s0, mu1)
    d1 = _dist_to_support(s1, mu0)
    thr = HALF_PI - FINITE_STRIP_GUARD
    return bool(np.all(d0 < thr) and np.all(d1 < thr))


def is_admissible(mu0, mu1) -> bool:
    """True iff both directed sup-inf values of ``ell(dist)`` over the supports are finite."""
    s0, s1 = _support_sets(mu0, mu1)
    d0 = _dist_to_support(s0, mu1)
    d1 = _dist_to_support(s1, mu0)
    h0 = float(np.max(ell(np.minimum(d0, np.pi / 2))))
    h1 = float(np.max(ell(np.minimum(d1, np.pi / 2))))
    return math.isfinite(h0) and math.isfinite(h1)


@dataclass(frozen=True, eq=False)
class CdfLift:
    """Monotone lift of a nondecreasing circular function to the real line.

    The graph over one period is stored as breakpoint arrays ``(breaks,
    values)``; repeated ``breaks`` entries encode jumps, repeated ``values``
    entries encode plateaus.  Outside one period the function extends by
    ``F(t + x_period) = F(t) + y_period``.

    For the CDF of a measure centered at 0 the convention is ``F(0) = 0``
    with atoms at the origin jumping on the right of 0, so
    ``F(0-) <= 0 <= F(0)`` holds.
    """

    breaks: np.ndarray
    values: np.ndarray
    x_period: float
    y_period: float
    #: which branch to return at a jump: "low" (CDFs) or "high" (quantiles)
    jump_side: str = "low"

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.shape != v.shape or b.ndim != 1 or b.size < 2:
            raise ValueError("breaks and values must be matching 1-D arrays")
        if np.any(np.diff(b) < 0) or np.any(np.diff(v) < 0):
            raise ValueError("breaks and values must be nondecreasing")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return self._eval(t, self.jump_side)

    def _eval(self, t, side: str):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        b = self.breaks
        v = self.values
        b0 = b[0]
        k = np.floor((t - b0) / self.x_period)
        tau = t - k * self.x_period
        # guard roundoff on both ends of the period window
        tau = np.clip(tau, b0, b0 + self.x_period)
        if side == "low":
            idx = np.searchsorted(b, tau, side="left")
            idx = np.clip(idx, 0, b.size - 1)
            hit = b[idx] == tau
            hit_val = v[idx]
        else:
            r = np.searchsorted(b, tau, side="right")
            hit = (r > 0) & (b[np.maximum(r - 1, 0)] == tau)
            hit_val = v[np.maximum(r - 1, 0)]
            idx = r
        lo = np.clip(idx - 1, 0, b.size - 2)
        hi = lo + 1
        width = b[hi] - b[lo]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(width > 0, (tau - b[lo]) / np.where(width > 0, width, 1.0), 0.0)
        interp = (1 - s) * v[lo] + s * v[hi]
        out = np.where(hit, hit_val, interp) + k * self.y_period
        return float(out[0]) if scalar else out

    def pseudo_inverse(self) -> "CdfLift":
        """Generalized inverse ``t -> inf{s : F(s) > t}`` as a new lift."""
        side = "high" if self.jump_side == "low" else "low"
        return CdfLift(
            breaks=self.values.copy(),
            values=self.breaks.copy(),
            x_period=self.y_period,
            y_period=self.x_period,
            jump_side=side,
        )

    @property
    def total_mass(self) -> float:
        return self.y_period


def cdf_lift(rho) -> CdfLift:
    """Cumulative distribution function of a circular measure, centered at 0.

    ``F(t)`` equals the mass of ``[0, t)`` for ``t in [0, 2*pi)`` and extends
    by ``F(t + 2*pi) = F(t) + total mass``.
    """
    if isinstance(rho, DiscreteMeasure):
        if rho.is_zero():
            raise ZeroMeasureError("cdf_lift of the zero measure")
        cum = np.cumsum(rho.masses)
        breaks = [0.0]
        vals = [0.0]
        prev = 0.0
        for theta, c in zip(rho.angles, cum):
            if theta > 0.0:
                breaks.extend([theta, theta])
                vals.extend([prev, c])
            else:
                # atom exactly at the origin: jump on the right of 0
                breaks.append(0.0)
                vals.append(c)
            prev = c
        breaks.append(TWO_PI)
        vals.append(cum[-1])
        return CdfLift(np.asarray(breaks), np.asarray(vals), TWO_PI, float(cum[-1]))
    if isinstance(rho, GridDensity):
        if rho.is_zero():
            raise ZeroMeasureError("cdf_lift of the zero density")
        cum = np.concatenate([[0.0], np.cumsum(rho.cell_masses)])
        return CdfLift(rho.cell_edges, cum, TWO_PI, float(cum[-1]))
    raise TypeError(f"unsupported measure type: {type(rho)!r}")


def pseudo_inverse(F: CdfLift) -> CdfLift:
    """Pseudo-inverse ``F^[-1](t) = inf{s : F(s) > t}`` of a monotone lift."""
    return F.pseudo_inverse()


def pushforward_lebesgue(quantile: CdfLift, resolution: int) -> GridDensity:
    """Push Lebesgue measure on one mass period through a quantile lift,
    binned onto the circular grid.

    Exact for piecewise-linear quantiles: each linear segment contributes its
    parameter length, split across the cells its image crosses.
    """
    G = int(resolution)
    mass_per_cell = np.zeros(G)
    width = TWO_PI / G
    u = quantile.breaks
    q = quantile.values
    for seg in range(u.size - 1):
        du = u[seg + 1] - u[seg]
        if du <= 0:
            continue  # jump in the quantile: zero Lebesgue mass
        q0, q1 = q[seg], q[seg + 1]
        if q1 == q0:
            cell = int(np.floor(canonical_angle(q0) / width)) % G
            mass_per_cell[cell] += du
            continue
        # split [q0, q1] at grid lines, distribute du proportionally
        k0 = math.floor(q0 / width)
        k1 = math.ceil(q1 / width)
        cuts = np.concatenate([[q0], np.arange(k0 + 1, k1) * width, [q1]])
        cuts = cuts[(cuts >= q0) & (cuts <= q1)]
        cuts = np.unique(cuts)
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            mid = 0.5 * (a + b)
            cell = int(np.floor(canonical_angle(mid) / width)) % G
            mass_per_cell[cell] += du * (b - a) / (q1 - q0)
    return GridDensity(G, mass_per_cell / width)


def bin_to_grid(mu, resolution: int) -> GridDensity:
    """Bin a measure onto the uniform circular grid, conserving mass exactly.

    Atoms land in their containing left-closed cell.  Grid inputs are
    re-binned by exact interval overlap.
    """
    G = int(resolution)
    if G < 4:
        raise ValueError("grid resolution must be at least 4")
    width = TWO_PI / G
    if isinstance(mu, DiscreteMeasure):
        cells = np.floor(mu.angles / width).astype(int) % G
        masses = np.zeros(G)
        np.add.at(masses, cells, mu.masses)
        return GridDensity(G, masses / width)
    if isinstance(mu, GridDensity):
        masses = np.zeros(G)
        w_in = mu.cell_width
        for k, val in enumerate(mu.values):
            if val == 0.0:
                continue
            a, b = k * w_in, (k + 1) * w_in
            k0 = math.floor(a / width)
            k1 = math.ceil(b / width)
            cuts = np.concatenate([[a], np.arange(k0 + 1, k1) * width, [b]])
            cuts = np.unique(cuts[(cuts >= a) & (cuts <= b)])
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                if hi <= lo:
                    continue
                cell = int(math.floor(0.5 * (lo + hi) / width)) % G
                masses[cell] += val * (hi - lo)
        return GridDensity(G, masses / width)
    raise TypeError(f"unsupported measure type: {type(mu)!r}")


def entropy_term(sigma, weights) -> float:
    """``sum_i w_i * (sigma_i log sigma_i - sigma_i + 1)`` with the 0log0 = 0 convention."""
    s = np.asarray(sigma, dtype=float)
    w = np.asarray(weights, dtype=float)
    return float(np.sum(xlogy(w * s, s) - w * s + w))

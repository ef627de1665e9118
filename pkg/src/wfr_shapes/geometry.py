"""Convex loops and their length measures.

A convex loop is represented either exactly, as an ordered list of edges
(direction, length) whose vectors sum to zero, or approximately, as a sampled
closed polyline.  The length measure pushes arc length through the unit
tangent map; for polygons it is atomic, for sampled curves it is binned into
a grid density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (
    TWO_PI,
    DiscreteMeasure,
    GridDensity,
    ZeroMeasureError,
    bin_to_grid,
    canonical_angle,
)

#: slack for the monotone-tangent convexity test on sampled curves
CONVEXITY_SLACK = 1e-9

#: closedness gate for edge lists, relative to max(1, total length)
CLOSEDNESS_TOL = 1e-8

#: antipodality / equal-mass tolerance for dipole detection
DEGENERACY_TOL = 1e-12


class NotConvexError(ValueError):
    """Raised when a sampled curve fails the monotone-tangent test."""


class NotClosedError(ValueError):
    """Raised when an edge list or measure has a nonzero first moment."""


@dataclass(frozen=True, eq=False)
class ConvexLoop:
    """Convex polygon as an ordered, positively oriented edge list.

    ``directions`` are strictly increasing in ``[0, 2*pi)`` and ``lengths``
    are positive.  Edge vectors must sum to zero (the loop closes); loops are
    identified up to translation by anchoring the first vertex at the origin.
    """

    directions: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        d = canonical_angle(np.atleast_1d(np.asarray(self.directions, dtype=float)))
        ln = np.atleast_1d(np.asarray(self.lengths, dtype=float))
        if d.shape != ln.shape or d.ndim != 1 or d.size < 2:
            raise ValueError("need matching 1-D direction/length arrays with >= 2 edges")
        if np.any(ln <= 0):
            raise ValueError("edge lengths must be positive")
        order = np.argsort(d, kind="stable")
        d, ln = d[order], ln[order]
        if np.any(np.diff(d) <= 0):
            raise ValueError("edge directions must be strictly increasing over one turn")
        total = float(np.sum(ln))
        residual = math.hypot(
            float(np.sum(ln * np.cos(d))), float(np.sum(ln * np.sin(d)))
        )
        if residual > CLOSEDNESS_TOL * max(1.0, total):
            raise NotClosedError(
                f"edge vectors do not close (residual {residual:.3e})"
            )
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "lengths", ln)

    @property
    def num_edges(self) -> int:
        return int(self.directions.size)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    def vertices(self) -> np.ndarray:
        """Vertices anchored at the origin, shape (n+1, 2), last == first."""
        steps = np.stack(
            [self.lengths * np.cos(self.directions), self.lengths * np.sin(self.directions)],
            axis=1,
        )
        return np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])

    def closedness_residual(self) -> float:
        v = self.vertices()
        return float(np.hypot(*v[-1]))

    def diameter(self) -> float:
        v = self.vertices()[:-1]
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=2))))


@dataclass(frozen=True, eq=False)
class ParamCurve:
    """Sampled closed curve: points in the plane with strictly increasing
    parameter values in ``[0, 2*pi)``, closed piecewise-linearly."""

    points: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        t = np.asarray(self.params, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
            raise ValueError("points must be an (n, 2) array with n >= 3")
        if t.shape != (p.shape[0],):
            raise ValueError("params must match the number of points")
        if t[0] < 0 or t[-1] >= TWO_PI or np.any(np.diff(t) <= 0):
            raise ValueError("params must be strictly increasing within [0, 2*pi)")
        seg = np.diff(np.vstack([p, p[:1]]), axis=0)
        if np.any(np.hypot(seg[:, 0], seg[:, 1]) == 0):
            raise ValueError("consecutive samples must be distinct")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "params", t)

    @classmethod
    def from_points(cls, points) -> "ParamCurve":
        """Uniform parametrization ``t_k = 2*pi*k/n``."""
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        return cls(points, np.arange(n) * (TWO_PI / n))

    @property
    def num_samples(self) -> int:
        return int(self.points.shape[0])

    def segment_vectors(self) -> np.ndarray:
        return np.diff(np.vstack([self.points, self.points[:1]]), axis=0)

    def segment_dt(self) -> np.ndarray:
        t = self.params
        dt = np.diff(np.concatenate([t, [t[0] + TWO_PI]]))
        return dt

    def segment_lengths(self) -> np.ndarray:
        v = self.segment_vectors()
        return np.hypot(v[:, 0], v[:, 1])

    def segment_angles(self) -> np.ndarray:
        v = self.segment_vectors()
        return canonical_angle(np.arctan2(v[:, 1], v[:, 0]))

    def total_length(self) -> float:
        return float(np.sum(self.segment_lengths()))

    def has_uniform_params(self, rel_tol: float = 1e-9) -> bool:
        dt = self.segment_dt()
        return bool(np.max(np.abs(dt - dt[0])) <= rel_tol * dt[0])


@dataclass(frozen=True, eq=False)
class GaussLift:
    """Nondecreasing left-continuous lift of the unit-tangent map.

    Piecewise constant: value ``angles[k]`` on ``(breaks[k], breaks[k+1]]``,
    extended by ``T(t + 2*pi) = T(t) + 2*pi``.  Jumps (including the wrap
    jump) never exceed ``pi`` and one period turns by exactly ``2*pi``.
    """

    breaks: np.ndarray
    angles: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        k = np.floor((t - self.breaks[0]) / TWO_PI)
        tau = np.clip(t - k * TWO_PI, self.breaks[0], self.breaks[0] + TWO_PI)
        # left-continuous: value of the segment ending at or after tau
        idx = np.searchsorted(self.breaks, tau, side="left") - 1
        idx = np.clip(idx, 0, self.angles.size - 1)
        out = self.angles[idx] + k * TWO_PI
        return float(out[0]) if scalar else out

    def jumps(self) -> np.ndarray:
        inner = np.diff(self.angles)
        wrap = self.angles[0] + TWO_PI - self.angles[-1]
        return np.concatenate([inner, [wrap]])

    def total_turn(self) -> float:
        return float(np.sum(self.jumps()))


def gauss_lift(curve: ParamCurve) -> GaussLift:
    """Unwrapped tangent angles of a convex sampled curve.

    Raises ``NotConvexError`` when the tangent fails to rotate monotonically
    counterclockwise (within slack) or winds more than once.
    """
    raw = curve.segment_angles()
    diffs = (raw[1:] - raw[:-1]) % TWO_PI
    # tolerate tiny backwards noise; anything else breaking monotonicity is a
    # genuine concavity
    diffs = np.where(diffs > TWO_PI - CONVEXITY_SLACK, 0.0, diffs)
    if np.any(diffs > math.pi + CONVEXITY_SLACK):
        raise NotConvexError("tangent angle does not unwrap monotonically")
    unwrapped = raw[0] + np.concatenate([[0.0], np.cumsum(diffs)])
    wrap_jump = unwrapped[0] + TWO_PI - unwrapped[-1]
    if wrap_jump < -CONVEXITY_SLACK or wrap_jump > math.pi + CONVEXITY_SLACK:
        raise NotConvexError("tangent angle does not complete exactly one turn")
    return GaussLift(breaks=curve.params.copy(), angles=unwrapped)


def length_measure(loop, resolution: int = 256):
    """Length measure: pushforward of arc length through the tangent map.

    For a ``ConvexLoop`` this is exact: one atom per edge at the edge
    direction with the edge length as mass.  For a sampled ``ParamCurve``
    (which must pass the convexity test) segment lengths are binned by
    tangent angle into a ``GridDensity`` of the given resolution; total mass
    equals the curve length exactly.
    """
    if isinstance(loop, ConvexLoop):
        return DiscreteMeasure(loop.directions.copy(), loop.lengths.copy())
    if isinstance(loop, ParamCurve):
        gauss_lift(loop)  # raises NotConvexError on failure
        angles = loop.segment_angles()
        lengths = loop.segment_lengths()
        mu = DiscreteMeasure(angles, lengths)
        if mu.num_atoms < 2:
            raise ValueError("degenerate curve: fewer than 2 distinct tangent directions")
        return bin_to_grid(mu, resolution)
    raise TypeError(f"unsupported loop type: {type(loop)!r}")


def reconstruct_loop(mu: DiscreteMeasure) -> ConvexLoop:
    """Convex loop whose length measure is ``mu`` (unique up to translation).

    Requires a vanishing first moment: ``|first moment| <= 1e-8 * mass``.
    """
    if mu.is_zero():
        raise ZeroMeasureError("cannot reconstruct a loop from the zero measure")
    moment = float(np.hypot(*mu.first_moment))
    if moment > 1e-8 * mu.total_mass:
        raise NotClosedError(
            f"measure has nonzero first moment ({moment:.3e}); not closed"
        )
    return ConvexLoop(mu.angles.copy(), mu.masses.copy())


def is_degenerate(mu: DiscreteMeasure):
    """Direction ``x`` if ``mu = r*delta_x + r*delta_{-x}``, else ``None``."""
    if mu.num_atoms != 2:
        return None
    a0, a1 = mu.angles
    m0, m1 = mu.masses
    if abs(circ_dist_scalar(a0, a1) - math.pi) > DEGENERACY_TOL:
        return None
    if abs(m0 - m1) > DEGENERACY_TOL * max(m0, m1):
        return None
    return float(a0)


def circ_dist_scalar(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def sample_ellipse(a: float, b: float, n: int) -> ParamCurve:
    """Ellipse ``(a cos u, b sin u)`` sampled at ``n`` equally spaced standard angles."""
    if n < 16:
        raise ValueError("need at least 16 samples")
    if a <= 0 or b <= 0:
        raise ValueError("semi-axes must be positive")
    u = np.arange(n) * (TWO_PI / n)
    pts = np.stack([a * np.cos(u), b * np.sin(u)], axis=1)
    return ParamCurve(pts, u.copy())


def sample_circle(radius: float, n: int) -> ParamCurve:
    return sample_ellipse(radius, radius, n)


def sample_segment_loop(direction: float, half_length: float, n: int) -> ParamCurve:
    """Degenerate loop tracing a segment back and forth at constant speed.

    The image is the segment of the given half-length through the origin in
    the given direction; the length measure is the antipodal dipole
    ``L*delta_d + L*delta_{d+pi}`` with ``L = half_length``.
    """
    if n < 4 or n % 2:
        raise ValueError("need an even number of samples, at least 4")
    e = np.array([math.cos(direction), math.sin(direction)])
    half = n // 2
    s = np.concatenate([np.linspace(-1, 1, half, endpoint=False),
                        np.linspace(1, -1, half, endpoint=False)])
    pts = half_length * s[:, None] * e[None, :]
    return ParamCurve.from_points(pts)


def resample_curve(curve: ParamCurve, warp, n: int) -> ParamCurve:
    """Resample the same polyline at parameters ``warp(t_k)`` on a uniform grid.

    ``warp`` must be a strictly increasing lift with period ``2*pi``
    (callable).  The image is unchanged; only the parametrization moves.
    """
    t_new = np.arange(n) * (TWO_PI / n)
    s = np.asarray([warp(t) for t in t_new], dtype=float) % TWO_PI
    pts = _eval_polyline(curve, s)
    return ParamCurve(pts, t_new)


def _eval_polyline(curve: ParamCurve, s: np.ndarray) -> np.ndarray:
    """Point on the closed polyline at parameter values ``s`` in [0, 2*pi)."""
    t = curve.params
    pts = curve.points
    ext_t = np.concatenate([t, [t[0] + TWO_PI]])
    ext_p = np.vstack([pts, pts[:1]])
    idx = np.searchsorted(ext_t, s, side="right") - 1
    idx = np.clip(idx, 0, ext_t.size - 2)
    w = (s - ext_t[idx]) / (ext_t[idx + 1] - ext_t[idx])
    return (1 - w)[:, None] * ext_p[idx] + w[:, None] * ext_p[idx + 1]


def round_corners(loop: ConvexLoop, ratio: float = 1e-2, n: int = 4096) -> ParamCurve:
    """Replace polygon corners by tangent circular arcs and sample the result.

    The arc radius is ``ratio`` times the polygon diameter, shrunk if needed
    so the trimmed edges stay positive.  The rounded curve is strictly convex
    in the measure sense: every tangent direction receives positive mass, so
    the pulled-back densities of the elastic pipeline are invertible.  The
    output carries ``n`` uniform parameters; samples are allocated to pieces
    by arc length plus turning angle, so that the short corner arcs still
    resolve every tangent direction.
    """
    dirs = loop.directions
    lens = loop.lengths
    m = loop.num_edges
    turns = np.concatenate([np.diff(dirs), [dirs[0] + TWO_PI - dirs[-1]]])
    # turns[k] is the corner after edge k
    tan_half = np.tan(turns / 2.0)
    rho = ratio * loop.diameter()
    # trim at both ends of edge k: corner before (k-1) and after (k)
    for _ in range(60):
        trims = rho * tan_half
        slack = lens - (np.roll(trims, 1) + trims)
        if np.all(slack > 1e-12 * loop.total_length):
            break
        rho *= 0.5
    else:
        raise ValueError("cannot round corners: edges too short")

    pieces = []  # (kind, data, length)
    verts = loop.vertices()
    e = np.stack([np.cos(dirs), np.sin(dirs)], axis=1)
    for k in range(m):
        start = verts[k] + np.roll(rho * tan_half, 1)[k] * e[k]
        end = verts[k + 1] - rho * tan_half[k] * e[k]
        pieces.append(("line", (start, end), float(np.hypot(*(end - start)))))
        # arc at vertex k+1, turning from dirs[k] to dirs[k] + turns[k]
        normal = np.array([-e[k][1], e[k][0]])
        center = end + rho * normal
        a0 = dirs[k] - math.pi / 2.0
        pieces.append(("arc", (center, a0, turns[k]), float(rho * turns[k])))

    total = sum(p[2] for p in pieces)
    # half the samples follow arc length, half follow turning angle
    weights = np.array(
        [plen / total + (data[2] / TWO_PI if kind == "arc" else 0.0)
         for kind, data, plen in pieces]
    )
    weights /= weights.sum()
    counts = np.maximum(1, np.floor(weights * n).astype(int))
    while counts.sum() > n:
        counts[np.argmax(counts)] -= 1
    while counts.sum() < n:
        counts[np.argmax(weights * n - counts)] += 1

    chunks = []
    for (kind, data, plen), cnt in zip(pieces, counts):
        local = (np.arange(cnt) + 0.5) * (plen / cnt)
        if kind == "line":
            start, end = data
            w = local / plen if plen > 0 else np.zeros(cnt)
            chunks.append((1 - w)[:, None] * start + w[:, None] * end)
        else:
            center, a0, _ = data
            ang = a0 + local / rho
            chunks.append(center + rho * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    pts = np.vstack(chunks)
    return ParamCurve.from_points(pts)

"""Open polygonal curves on a flat substrate and their discrete geometry.

A curve is stored left to right: node 0 is the left contact point and node N
the right one, both on ``y = 0``.  With the unit normal ``n = (-t_y, t_x)``
(the tangent rotated counterclockwise) the normal at the top of an island
points up, away from the film, and :func:`polygon_area` is positive.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import CurveError, FieldMismatch, ZeroSegment

logger = logging.getLogger(__name__)

#: Number of times an arccos argument had to be clamped into [-1, 1].
clamp_events = 0


@dataclass(frozen=True, eq=False)
class OpenCurve:
    """Ordered chain of ``N + 1`` nodes with both endpoints on the substrate."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise CurveError(f"nodes must have shape (N+1, 2), got {nodes.shape}")
        if nodes.shape[0] < 3:
            raise CurveError("an open curve needs N >= 2 segments")
        if not np.all(np.isfinite(nodes)):
            raise CurveError("non-finite node coordinates")
        if nodes[0, 1] != 0.0 or nodes[-1, 1] != 0.0:
            raise CurveError("endpoints must lie exactly on y = 0")
        if nodes[0, 0] > nodes[-1, 0]:
            raise CurveError("left contact point lies right of the right one")
        lengths = np.hypot(*np.diff(nodes, axis=0).T)
        if lengths.min() <= 0.0:
            raise ZeroSegment(f"segment {int(lengths.argmin()) + 1} has zero length")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_xy(cls, x, y) -> "OpenCurve":
        return cls(np.column_stack([x, y]))

    @property
    def N(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def x(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.nodes[:, 1]

    @property
    def x_left(self) -> float:
        return float(self.nodes[0, 0])

    @property
    def x_right(self) -> float:
        return float(self.nodes[-1, 0])

    def translated(self, dx: float) -> "OpenCurve":
        return OpenCurve(self.nodes + np.array([dx, 0.0]))

    def __eq__(self, other):
        if not isinstance(other, OpenCurve):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes)

    def __repr__(self):
        return f"OpenCurve(N={self.N}, x=[{self.x_left:.6g}, {self.x_right:.6g}])"


CurveLike = Union[OpenCurve, np.ndarray]


def as_nodes(curve: CurveLike) -> np.ndarray:
    """Node array of a curve; raw ``(N+1, 2)`` arrays pass through unchecked."""
    if isinstance(curve, OpenCurve):
        return curve.nodes
    return np.asarray(curve, dtype=float)


@dataclass(frozen=True)
class SegmentFrame:
    length: np.ndarray   # (N,)
    tangent: np.ndarray  # (N, 2)
    normal: np.ndarray   # (N, 2)


def segment_vectors(curve: CurveLike) -> np.ndarray:
    return np.diff(as_nodes(curve), axis=0)


def segment_lengths(curve: CurveLike) -> np.ndarray:
    h = segment_vectors(curve)
    return np.hypot(h[:, 0], h[:, 1])


def _checked_lengths(curve: CurveLike) -> tuple[np.ndarray, np.ndarray]:
    h = segment_vectors(curve)
    length = np.hypot(h[:, 0], h[:, 1])
    if np.any(length == 0.0):
        j = int(np.flatnonzero(length == 0.0)[0]) + 1
        raise ZeroSegment(f"segment {j} has zero length")
    return h, length


def segment_frames(curve: CurveLike) -> SegmentFrame:
    h, length = _checked_lengths(curve)
    tangent = h / length[:, None]
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    return SegmentFrame(length, tangent, normal)


def polygon_area(curve: CurveLike) -> float:
    """Trapezoidal area between the curve and the substrate."""
    p = as_nodes(curve)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])))


def total_length(curve: CurveLike) -> float:
    return float(np.sum(segment_lengths(curve)))


def discrete_energy(curve: CurveLike, sigma: float) -> float:
    """Interface length minus ``sigma`` times the wetted substrate span."""
    p = as_nodes(curve)
    return total_length(p) - sigma * float(p[-1, 0] - p[0, 0])


@dataclass(frozen=True)
class Piecewise:
    """A field given by its one-sided values on each segment.

    ``start[j]`` is the limit at the left end of segment ``j`` and ``end[j]``
    the limit at its right end; both have leading dimension ``N``.
    """

    start: np.ndarray
    end: np.ndarray


def _one_sided(field, n_seg: int) -> Piecewise:
    if isinstance(field, Piecewise):
        if len(field.start) != n_seg or len(field.end) != n_seg:
            raise FieldMismatch(f"piecewise field does not have {n_seg} segments")
        return field
    f = np.asarray(field, dtype=float)
    if f.ndim == 0:
        f = np.full(n_seg, float(f))
    if f.shape[0] == n_seg + 1:
        return Piecewise(f[:-1], f[1:])
    if f.shape[0] == n_seg:
        return Piecewise(f, f)
    raise FieldMismatch(
        f"field of length {f.shape[0]} fits neither {n_seg + 1} nodes nor {n_seg} segments")


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1 and b.ndim == 1:
        return a * b
    if a.ndim == 1:
        return a[:, None] * b
    if b.ndim == 1:
        return a * b[:, None]
    return np.einsum("ij,ij->i", a, b)


def dot_fields(u, v, n_seg: int) -> Piecewise:
    """Pointwise product (dot product for vectors) of two fields, one-sided."""
    pu, pv = _one_sided(u, n_seg), _one_sided(v, n_seg)
    return Piecewise(_dot(pu.start, pv.start), _dot(pu.end, pv.end))


def mass_lumped_inner(u, v, curve: CurveLike) -> float:
    """Trapezoidal (mass-lumped) inner product of two fields on the curve.

    Fields may be nodal arrays (length ``N + 1``), per-segment constants
    (length ``N``), scalars, or :class:`Piecewise` values.
    """
    length = segment_lengths(curve)
    prod = dot_fields(u, v, len(length))
    if prod.start.ndim != 1:
        raise FieldMismatch("mass_lumped_inner needs fields whose product is scalar")
    return 0.5 * float(np.sum(length * (prod.end + prod.start)))


def stiffness_inner(u, v, curve: CurveLike) -> float:
    """``(d_s u, d_s v)`` for piecewise-linear nodal fields."""
    _, length = _checked_lengths(curve)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[0] != len(length) + 1 or v.shape[0] != len(length) + 1:
        raise FieldMismatch("stiffness_inner needs nodal fields")
    du, dv = np.diff(u, axis=0), np.diff(v, axis=0)
    return float(np.sum(_dot(du, dv) / length))


def _safe_arccos(c: float) -> float:
    global clamp_events
    if c > 1.0 or c < -1.0:
        clamp_events += 1
        logger.debug("clamped arccos argument %r", c)
        c = min(1.0, max(-1.0, c))
    return float(np.arccos(c))


def contact_angles(curve: CurveLike) -> tuple[float, float]:
    """Left and right contact angles from the first and last segments."""
    h = segment_vectors(curve)
    t_first = h[0, 0] / np.hypot(*h[0])
    t_last = h[-1, 0] / np.hypot(*h[-1])
    return _safe_arccos(t_first), _safe_arccos(t_last)


def mesh_ratio(curve: CurveLike) -> float:
    _, length = _checked_lengths(curve)
    return float(length.max() / length.min())


def curvature_variation(kappa, curve: CurveLike) -> float:
    return stiffness_inner(kappa, kappa, curve)


def equidistribution_residuals(curve: CurveLike) -> np.ndarray:
    """Per interior node: ``(|h_{j+1}| - |h_j|)(|h_j||h_{j+1}| - h_j . h_{j+1})``.

    Zero when neighbouring segments are equally long or collinear.
    """
    h = segment_vectors(curve)
    length = np.hypot(h[:, 0], h[:, 1])
    a, b = length[:-1], length[1:]
    return (b - a) * (a * b - np.einsum("ij,ij->i", h[:-1], h[1:]))


def write_curve_csv(path, curve: CurveLike) -> Path:
    path = Path(path)
    p = as_nodes(curve)
    with path.open("w", newline="") as fh:
        fh.write("x,y\n")
        for xv, yv in p:
            fh.write(f"{float(xv)!r},{float(yv)!r}\n")
    return path


def read_curve_nodes(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or reader.fieldnames[:2] != ["x", "y"]:
            raise CurveError(f"{path}: expected header 'x,y'")
        rows = [(float(r["x"]), float(r["y"])) for r in reader]
    return np.array(rows, dtype=float).reshape(-1, 2)


def read_curve_csv(path) -> OpenCurve:
    return OpenCurve(read_curve_nodes(path))

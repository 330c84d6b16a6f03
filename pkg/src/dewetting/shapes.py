"""Initial island shapes and the circular-arc equilibrium.

All generators place ``N + 1`` nodes at equal arclength along the analytic
boundary, left to right, with both endpoints exactly on the substrate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import OpenCurve, polygon_area

SHAPES = {
    "shape1": "6x1 rectangle (C0)",
    "shape2": "4x1 rectangle with quarter-circle ends of radius 1 (C1)",
    "shape3": "upper half ellipse, semi-axes ax=4, ay=1 (C-infinity)",
    "shape4": "polar flower r = 2 + cos(6 theta), theta in [0, pi] (non-convex)",
}

OVERSAMPLE = 64


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    N: int
    ax: float = 4.0
    ay: float = 1.0

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise ValueError(f"unknown shape {self.kind!r}; expected one of {sorted(SHAPES)}")
        if self.N < 8:
            raise ValueError(f"N must be >= 8, got {self.N}")
        if self.ax <= 0 or self.ay <= 0:
            raise ValueError("ellipse semi-axes must be positive")


def _rectangle(s):
    # arclength parameter on [0, 8]
    s = np.asarray(s, dtype=float)
    x = np.where(s <= 1.0, -3.0, np.where(s <= 7.0, s - 4.0, 3.0))
    y = np.where(s <= 1.0, s, np.where(s <= 7.0, 1.0, 8.0 - s))
    return np.column_stack([x, y])


def _rounded_rectangle(s):
    # arclength parameter on [0, pi + 4]
    s = np.asarray(s, dtype=float)
    q = 0.5 * np.pi
    phi_l = np.pi - s
    phi_r = q - (s - q - 4.0)
    x = np.where(s <= q, -2.0 + np.cos(phi_l),
                 np.where(s <= q + 4.0, s - q - 2.0, 2.0 + np.cos(phi_r)))
    y = np.where(s <= q, np.sin(phi_l),
                 np.where(s <= q + 4.0, 1.0, np.sin(phi_r)))
    return np.column_stack([x, y])


def _half_ellipse(ax, ay):
    def f(u):
        return np.column_stack([ax * np.cos(u), ay * np.sin(u)])
    return f


def _flower(theta):
    r = 2.0 + np.cos(6.0 * theta)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _place(fn: Callable, u0: float, u1: float, N: int, arclength: bool) -> np.ndarray:
    if arclength:
        u = np.linspace(u0, u1, N + 1)
    else:
        fine = np.linspace(u0, u1, OVERSAMPLE * N + 1)
        pts = fn(fine)
        s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
        u = np.interp(np.linspace(0.0, s[-1], N + 1), s, fine)
        u[0], u[-1] = u0, u1
    pts = fn(u)
    pts[0, 1] = 0.0
    pts[-1, 1] = 0.0
    return pts


def generate(spec: ShapeSpec) -> OpenCurve:
    N = spec.N
    if spec.kind == "shape1":
        pts = _place(_rectangle, 0.0, 8.0, N, arclength=True)
    elif spec.kind == "shape2":
        pts = _place(_rounded_rectangle, 0.0, np.pi + 4.0, N, arclength=True)
    elif spec.kind == "shape3":
        pts = _place(_half_ellipse(spec.ax, spec.ay), np.pi, 0.0, N, arclength=False)
        pts[0, 0], pts[-1, 0] = -spec.ax, spec.ax
    else:
        pts = _place(_flower, np.pi, 0.0, N, arclength=False)
        pts[0, 0], pts[-1, 0] = -3.0, 3.0
    return OpenCurve(pts)


def shape(kind: str, N: int, **kw) -> OpenCurve:
    return generate(ShapeSpec(kind, N, **kw))


def arc_radius(theta: float, area: float) -> float:
    """Radius of the circular cap with contact angle ``theta`` and given area."""
    return float(np.sqrt(area / (theta - np.sin(theta) * np.cos(theta))))


def _arc(theta: float, radius: float, center_x: float, N: int) -> np.ndarray:
    phi = np.linspace(0.5 * np.pi + theta, 0.5 * np.pi - theta, N + 1)
    cy = -radius * np.cos(theta)
    pts = np.column_stack([center_x + radius * np.cos(phi), cy + radius * np.sin(phi)])
    pts[0] = (center_x - radius * np.sin(theta), 0.0)
    pts[-1] = (center_x + radius * np.sin(theta), 0.0)
    return pts


def exact_equilibrium(theta_i: float, area: float, center_x: float, N: int) -> OpenCurve:
    """Circular arc meeting the substrate at ``theta_i`` and enclosing ``area``.

    Nodes are uniform in arc angle.  The enclosed area refers to the smooth
    arc; the inscribed polygon falls short by O(h^2).
    """
    if not 0.0 < theta_i < np.pi:
        raise ValueError("theta_i must lie in (0, pi)")
    if area <= 0:
        raise ValueError("area must be positive")
    return OpenCurve(_arc(theta_i, arc_radius(theta_i, area), center_x, N))


def polygon_matched_equilibrium(theta_i: float, polygon_area_target: float,
                                center_x: float, N: int) -> OpenCurve:
    """Inscribed ``N``-segment arc whose *polygon* area equals the target."""
    unit = polygon_area(_arc(theta_i, 1.0, 0.0, N))
    radius = float(np.sqrt(polygon_area_target / unit))
    return OpenCurve(_arc(theta_i, radius, center_x, N))

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from dewetting.geometry import contact_angles, polygon_area, segment_lengths
from dewetting.shapes import (SHAPES, ShapeSpec, arc_radius, exact_equilibrium, generate,
                              polygon_matched_equilibrium, shape)

EXACT_AREA = {
    "shape1": 6.0,
    "shape2": 4.0 + math.pi / 2,
    "shape3": 2.0 * math.pi,          # half of pi * 4 * 1
    "shape4": 9.0 * math.pi / 4,      # (1/2) int_0^pi (2 + cos 6t)^2 dt
}
EXACT_LENGTH = {"shape1": 8.0, "shape2": 4.0 + math.pi}


@pytest.mark.parametrize("kind", sorted(SHAPES))
@pytest.mark.parametrize("N", [8, 33, 128])
def test_generated_curves_are_valid(kind, N):
    c = shape(kind, N)
    assert c.N == N
    assert c.nodes[0, 1] == 0.0 and c.nodes[-1, 1] == 0.0
    assert c.x_left < c.x_right
    assert np.all(c.y[1:-1] > 0)


@pytest.mark.parametrize("kind,ends", [("shape1", 3.0), ("shape2", 3.0),
                                       ("shape3", 4.0), ("shape4", 3.0)])
def test_endpoints_exact(kind, ends):
    c = shape(kind, 64)
    assert c.x_left == -ends and c.x_right == ends


@pytest.mark.parametrize("kind", sorted(SHAPES))
def test_area_converges_to_analytic(kind):
    errs = [abs(polygon_area(shape(kind, N)) - EXACT_AREA[kind]) for N in (128, 256, 512)]
    if kind == "shape1":
        # corners land on nodes when 8 | N: the polygon is the rectangle itself
        assert max(errs) < 1e-12
        return
    # second order; the six-petal flower is still slightly pre-asymptotic here
    assert 3.5 < errs[0] / errs[1] < 5.0
    assert 3.5 < errs[1] / errs[2] < 5.0


def test_rectangle_nodes_on_exact_arclength():
    c = shape("shape1", 16)   # s_j = j / 2 along the 8-long path
    np.testing.assert_allclose(c.nodes[:3], [[-3, 0], [-3, 0.5], [-3, 1.0]])
    np.testing.assert_allclose(c.nodes[8], [0.0, 1.0])


def test_rounded_rectangle_arclength():
    N = 40
    c = shape("shape2", N)
    L = EXACT_LENGTH["shape2"]
    # node j sits at arclength jL/N; on the left quarter circle that is angle s
    for j in range(N + 1):
        s = j * L / N
        if s <= math.pi / 2:
            expect = (-2.0 + math.cos(math.pi - s), math.sin(math.pi - s))
            np.testing.assert_allclose(c.nodes[j], expect, atol=1e-14)


def _ellipse_arclength(u0, u1, ax=4.0, ay=1.0):
    return quad(lambda u: math.hypot(ax * math.sin(u), ay * math.cos(u)), u0, u1,
                epsabs=1e-13, epsrel=1e-13)[0]


def test_ellipse_nodes_equal_arclength():
    N = 32
    c = shape("shape3", N)
    u = np.arctan2(c.y / 1.0, c.x / 4.0)
    u[-1] = 0.0
    arcs = [_ellipse_arclength(u[j + 1], u[j]) for j in range(N)]
    total = _ellipse_arclength(0.0, math.pi)
    # placement interpolates a finely sampled chord-length table
    np.testing.assert_allclose(arcs, total / N, rtol=1e-5)
    # chords are not equal on a curved boundary
    assert np.ptp(segment_lengths(c)) > 1e-3


def test_flower_nodes_equal_arclength():
    N = 48
    c = shape("shape4", N)
    th = np.arctan2(c.y, c.x)
    th[-1] = 0.0

    def speed(t):
        r, dr = 2 + math.cos(6 * t), -6 * math.sin(6 * t)
        return math.hypot(r, dr)

    arcs = [quad(speed, th[j + 1], th[j], limit=200)[0] for j in range(N)]
    np.testing.assert_allclose(arcs, np.mean(arcs), rtol=1e-5)


def test_shape_spec_validation():
    with pytest.raises(ValueError):
        ShapeSpec("shape9", 32)
    with pytest.raises(ValueError):
        ShapeSpec("shape2", 4)
    with pytest.raises(ValueError):
        ShapeSpec("shape3", 32, ax=-1.0)


def test_ellipse_axes():
    c = generate(ShapeSpec("shape3", 64, ax=2.0, ay=1.0))
    assert c.x_right == 2.0
    assert polygon_area(c) == pytest.approx(math.pi, rel=1e-3)


def _cap_area(theta, R):
    # part of the disc centred at (0, -R cos theta) lying above y = 0, by vertical chords
    c = -R * math.cos(theta)

    def above(x):
        w = math.sqrt(max(R * R - x * x, 0.0))
        return max(0.0, (c + w) - max(0.0, c - w))

    kinks = [-R * math.sin(theta), R * math.sin(theta)]
    return quad(above, -R, R, points=kinks, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 4, math.pi / 2, 2.0, 5 * math.pi / 6])
@pytest.mark.parametrize("area", [0.5, 4 + math.pi / 2])
def test_arc_radius_against_quadrature(theta, area):
    R_oracle = brentq(lambda R: _cap_area(theta, R) - area, 1e-3, 1e3, xtol=1e-14)
    assert arc_radius(theta, area) == pytest.approx(R_oracle, rel=1e-10)


@pytest.mark.parametrize("theta", [0.7, math.pi / 2, 5 * math.pi / 6])
def test_exact_equilibrium_geometry(theta):
    area, N = 3.0, 200
    c = exact_equilibrium(theta, area, 0.5, N)
    R = arc_radius(theta, area)
    center = np.array([0.5, -R * math.cos(theta)])
    np.testing.assert_allclose(np.hypot(*(c.nodes - center).T), R, rtol=1e-13)
    assert c.x_left == pytest.approx(0.5 - R * math.sin(theta))
    # each chord cuts off a circular segment of angle 2 theta / N
    dphi = 2 * theta / N
    assert area - polygon_area(c) == pytest.approx(N * R * R * (dphi - math.sin(dphi)) / 2,
                                                   rel=1e-6)
    assert contact_angles(c)[0] == pytest.approx(theta * (1 - 1 / N), abs=1e-12)


def test_polygon_matched_equilibrium_area():
    c = polygon_matched_equilibrium(2.0, 5.25, -1.0, 64)
    assert polygon_area(c) == pytest.approx(5.25, rel=1e-14)
    assert 0.5 * (c.x_left + c.x_right) == pytest.approx(-1.0)


def test_exact_equilibrium_validation():
    with pytest.raises(ValueError):
        exact_equilibrium(0.0, 1.0, 0.0, 16)
    with pytest.raises(ValueError):
        exact_equilibrium(1.0, -1.0, 0.0, 16)

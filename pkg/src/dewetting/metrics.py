"""Manifold distance: area of the symmetric difference of two film regions.

The intersection area is computed from the boundary of the intersection by
Green's theorem.  The two polygons are first overlaid: vertices closer than
a relative tolerance are merged, and every contact point (crossing or vertex
touching an edge) is inserted into both polygons with identical coordinates.
An edge then counts when its midpoint lies inside the other polygon.  Edges
common to both polygons (for example the shared substrate segment) count
once, and only when both polygons traverse them in the same direction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NotSimple
from .geometry import OpenCurve

logger = logging.getLogger(__name__)

EPS_GEOM = 1e-12


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    return 0.5 * float(np.sum(_cross(v, np.roll(v, -1, axis=0))))


def _scale(*polys) -> float:
    pts = np.concatenate(polys)
    return max(float(np.ptp(pts, axis=0).max()), 1e-300)


def self_intersections(vertices: np.ndarray, closed: bool = True, block: int = 1024):
    """Index pairs of non-adjacent edges that touch, plus folded adjacent pairs."""
    v = np.asarray(vertices, dtype=float)
    a = v if closed else v[:-1]
    b = np.roll(v, -1, axis=0) if closed else v[1:]
    n = len(a)
    d = b - a
    tol = EPS_GEOM * _scale(v)
    bad = []

    # adjacent edges fold back onto each other
    nxt = np.arange(1, n + 1) % n if closed else np.arange(1, n)
    cur = np.arange(n) if closed else np.arange(n - 1)
    dc, dn = d[cur], d[nxt]
    ln = np.hypot(*dc.T) * np.hypot(*dn.T)
    fold = (np.abs(_cross(dc, dn)) <= EPS_GEOM * ln) & (np.einsum("ij,ij->i", dc, dn) < 0)
    bad.extend(zip(cur[fold].tolist(), nxt[fold].tolist()))

    emin = np.minimum(a, b) - tol
    emax = np.maximum(a, b) + tol
    for s in range(0, n, block):
        i = np.arange(s, min(n, s + block))[:, None]
        j = np.arange(n)[None, :]
        cand = j > i + 1
        if closed:
            cand &= ~((i == 0) & (j == n - 1))
        cand &= np.all(emin[i] <= emax[j], axis=-1) & np.all(emin[j] <= emax[i], axis=-1)
        ii, jj = np.nonzero(cand)
        if ii.size == 0:
            continue
        ii = ii + s
        p, r = a[ii], d[ii]
        q, e = a[jj], d[jj]
        lr = np.hypot(*r.T)
        le = np.hypot(*e.T)
        o1 = _cross(r, q - p) / lr
        o2 = _cross(r, q + e - p) / lr
        o3 = _cross(e, p - q) / le
        o4 = _cross(e, p + r - q) / le
        hit = (o1 * o2 <= 0) & (o3 * o4 <= 0) & ~((np.abs(o1) <= tol) & (np.abs(o2) <= tol))
        # near-collinear pairs: check overlap of projections
        col = (np.abs(o1) <= tol) & (np.abs(o2) <= tol)
        if np.any(col):
            rr = np.einsum("ij,ij->i", r, r)
            t0 = np.einsum("ij,ij->i", q - p, r) / rr
            t1 = np.einsum("ij,ij->i", q + e - p, r) / rr
            slack = tol / lr
            hit |= col & (np.maximum(t0, t1) >= -slack) & (np.minimum(t0, t1) <= 1 + slack)
        # endpoint touching within tolerance
        near = (np.minimum(np.abs(o1), np.abs(o2)) <= tol) | (np.minimum(np.abs(o3), np.abs(o4)) <= tol)
        if np.any(near & ~hit):
            k = np.flatnonzero(near & ~hit)
            hit[k] = [_segments_close(p[m], r[m], q[m], e[m], tol) for m in k]
        bad.extend(zip(ii[hit].tolist(), jj[hit].tolist()))
    return bad


def _point_segment_distance(pt, a, d):
    dd = float(d @ d)
    u = min(1.0, max(0.0, float((pt - a) @ d) / dd))
    return float(np.hypot(*(pt - a - u * d)))


def _segments_close(p, r, q, e, tol) -> bool:
    return min(_point_segment_distance(p, q, e), _point_segment_distance(p + r, q, e),
               _point_segment_distance(q, p, r), _point_segment_distance(q + e, p, r)) <= tol


def is_simple(vertices: np.ndarray) -> bool:
    return len(self_intersections(vertices)) == 0


@dataclass(frozen=True, eq=False)
class SimplePolygon:
    """Counterclockwise simple polygon, closed implicitly."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise NotSimple("a polygon needs at least three planar vertices")
        if not np.all(np.isfinite(v)):
            raise NotSimple("non-finite vertex coordinates")
        bad = self_intersections(v)
        if bad:
            raise NotSimple(f"edges {bad[0][0]} and {bad[0][1]} intersect")
        area = signed_area(v)
        if area < 0:
            raise NotSimple("vertices are not counterclockwise")
        if area == 0:
            logger.warning("polygon encloses zero area")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, points) -> "SimplePolygon":
        """Build from a closed chain in either orientation."""
        v = np.array(points, dtype=float)
        if len(v) > 1 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        if signed_area(v) < 0:
            v = v[::-1]
        return cls(v)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)


def close_on_substrate(curve: OpenCurve) -> SimplePolygon:
    """Close a film profile with the substrate segment from ``x_N`` back to ``x_0``."""
    nodes = curve.nodes if isinstance(curve, OpenCurve) else np.asarray(curve, float)
    return SimplePolygon.from_points(nodes)


def is_simple_open(curve: OpenCurve) -> bool:
    return is_simple(curve.nodes)


# ----------------------------------------------------------------------------
# intersection area


def _blocks(n: int, m: int, budget: int = 2_000_000):
    step = max(1, budget // max(m, 1))
    for lo in range(0, n, step):
        yield lo, min(n, lo + step)


def _snap_vertices(P, Q, tol):
    """Move every vertex of ``Q`` lying within ``tol`` of a vertex of ``P`` onto it."""
    Q = Q.copy()
    for lo, hi in _blocks(len(Q), len(P)):
        dist = np.hypot(*(Q[lo:hi, None, :] - P[None, :, :]).transpose(2, 0, 1))
        j = dist.argmin(axis=1)
        close = dist[np.arange(hi - lo), j] <= tol
        Q[lo:hi][close] = P[j[close]]
    return Q


def _vertices_on_edges(V, A, tol, shared):
    """Vertices of ``V`` within ``tol`` of the interior of edges of ``A``.

    Returns ``(edge, t, point)`` triples; vertices flagged in ``shared`` are
    already vertices of ``A`` and are skipped.
    """
    a, d = A, np.roll(A, -1, axis=0) - A
    dd = np.einsum("ij,ij->i", d, d)
    ld = np.sqrt(dd)
    out_e, out_t, out_p = [], [], []
    for lo, hi in _blocks(len(V), len(A)):
        rel = V[lo:hi, None, :] - a[None, :, :]
        t = np.einsum("kmj,mj->km", rel, d) / dd
        dist = np.abs(_cross(d[None, :, :], rel)) / ld
        hit = (t > 0) & (t < 1) & (dist <= tol) & ~shared[lo:hi, None]
        k, e = np.nonzero(hit)
        out_e.append(e)
        out_t.append(t[k, e])
        out_p.append(V[lo + k])
    return np.concatenate(out_e), np.concatenate(out_t), np.concatenate(out_p)


def _proper_crossings(P, Q, tol):
    """Transversal crossings whose four endpoints are all clear of the other edge."""
    a, d = P, np.roll(P, -1, axis=0) - P
    c, e = Q, np.roll(Q, -1, axis=0) - Q
    ld, le = np.hypot(*d.T), np.hypot(*e.T)
    pe, pt, qe, qs, pts = [], [], [], [], []
    for lo, hi in _blocks(len(P), len(Q)):
        ab, db = a[lo:hi, None, :], d[lo:hi, None, :]
        r = c[None, :, :] - ab
        sc = _cross(db, r) / ld[lo:hi, None]
        sf = _cross(db, r + e[None]) / ld[lo:hi, None]
        sa = _cross(e[None], -r) / le[None, :]
        sb = _cross(e[None], db - r) / le[None, :]
        hit = ((np.abs(sc) > tol) & (np.abs(sf) > tol) & (np.abs(sa) > tol)
               & (np.abs(sb) > tol) & ((sc > 0) != (sf > 0)) & ((sa > 0) != (sb > 0)))
        i, k = np.nonzero(hit)
        denom = _cross(d[lo + i], e[k])
        rr = c[k] - a[lo + i]
        t = _cross(rr, e[k]) / denom
        s = _cross(rr, d[lo + i]) / denom
        pe.append(lo + i)
        pt.append(t)
        qe.append(k)
        qs.append(s)
        pts.append(a[lo + i] + t[:, None] * d[lo + i])
    return (np.concatenate(pe), np.concatenate(pt), np.concatenate(qe),
            np.concatenate(qs), np.concatenate(pts).reshape(-1, 2))


def _refine(V, edges, params, points):
    """Insert ``points`` into the edges of ``V`` in order of edge parameter."""
    n = len(V)
    all_e = np.concatenate([np.arange(n), edges])
    all_t = np.concatenate([np.full(n, -1.0), params])
    all_p = np.concatenate([V, points.reshape(-1, 2)])
    order = np.lexsort((all_t, all_e))
    out = all_p[order]
    keep = np.any(out != np.roll(out, 1, axis=0), axis=1)
    return out[keep]


def _overlay(P, Q, tol):
    """Both polygons refined so that every contact point is a common vertex."""
    Q = _snap_vertices(P, Q, tol)
    shared_q = _is_vertex_of(Q, P)
    shared_p = _is_vertex_of(P, Q)
    qe_on_p = _vertices_on_edges(Q, P, tol, shared_q)
    pe_on_q = _vertices_on_edges(P, Q, tol, shared_p)
    pe, pt, qe, qs, x = _proper_crossings(P, Q, tol)
    P2 = _refine(P, np.concatenate([qe_on_p[0], pe]), np.concatenate([qe_on_p[1], pt]),
                 np.concatenate([qe_on_p[2], x]))
    Q2 = _refine(Q, np.concatenate([pe_on_q[0], qe]), np.concatenate([pe_on_q[1], qs]),
                 np.concatenate([pe_on_q[2], x]))
    return P2, Q2


def _is_vertex_of(V, A):
    keys = {tuple(p) for p in A.tolist()}
    return np.array([tuple(p) in keys for p in V.tolist()], dtype=bool)


def _inside(pts, V):
    """Crossing-number point-in-polygon test, half-open in ``y``."""
    c, f = V, np.roll(V, -1, axis=0)
    res = np.zeros(len(pts), dtype=bool)
    for lo, hi in _blocks(len(pts), len(V)):
        px, py = pts[lo:hi, 0][:, None], pts[lo:hi, 1][:, None]
        cy, fy = c[:, 1][None, :], f[:, 1][None, :]
        straddle = (cy > py) != (fy > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = c[:, 0][None, :] + (py - cy) * (f[:, 0] - c[:, 0])[None, :] / (fy - cy)
        res[lo:hi] = np.count_nonzero(straddle & (px < xint), axis=1) % 2 == 1
    return res


def _edge_keys(V):
    W = np.roll(V, -1, axis=0)
    return [(tuple(u), tuple(w)) for u, w in zip(V.tolist(), W.tolist())]


def _intersection_in_frame(P, Q) -> float:
    tol = EPS_GEOM * _scale(P, Q)
    P, Q = _overlay(P, Q, tol)
    kp, kq = _edge_keys(P), _edge_keys(Q)
    set_p, set_q = set(kp), set(kq)
    total = 0.0
    for V, keys, other, other_set, own_shared in ((P, kp, Q, set_q, True),
                                                   (Q, kq, P, set_p, False)):
        W = np.roll(V, -1, axis=0)
        same = np.array([k in other_set for k in keys], dtype=bool)
        flipped = np.array([(k[1], k[0]) in other_set for k in keys], dtype=bool)
        free = ~(same | flipped)
        take = np.zeros(len(V), dtype=bool)
        take[free] = _inside(0.5 * (V[free] + W[free]), other)
        if own_shared:
            take |= same
        total += 0.5 * float(np.sum(_cross(V[take], W[take])))
    return total


def _frame(*polys):
    pts = np.concatenate(polys)
    origin = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    return [np.asarray(v, float) - origin for v in polys]


def _area(v) -> float:
    return 0.5 * float(np.sum(_cross(v, np.roll(v, -1, axis=0))))


def intersection_area(p: SimplePolygon, q: SimplePolygon) -> float:
    P, Q = _frame(p.vertices, q.vertices)
    return max(0.0, _intersection_in_frame(P, Q))


Region = Union[OpenCurve, SimplePolygon]


def _as_polygon(region: Region) -> SimplePolygon:
    if isinstance(region, SimplePolygon):
        return region
    if isinstance(region, OpenCurve):
        return close_on_substrate(region)
    raise TypeError(f"cannot build a region from {type(region).__name__}")


def _canonical(p: SimplePolygon, q: SimplePolygon):
    key_p = (len(p.vertices), p.vertices.tobytes())
    key_q = (len(q.vertices), q.vertices.tobytes())
    return (p, q) if key_p <= key_q else (q, p)


def manifold_distance(a: Region, b: Region) -> float:
    """``|A| + |B| - 2 |A n B|`` for two regions (closed polygons or films)."""
    p, q = _canonical(_as_polygon(a), _as_polygon(b))
    P, Q = _frame(p.vertices, q.vertices)
    area_p, area_q = _area(P), _area(Q)
    if area_p == 0.0 or area_q == 0.0:
        logger.warning("manifold distance with a zero-area region")
    inter = _intersection_in_frame(P, Q)
    return max(0.0, (area_p + area_q) - 2.0 * inter)

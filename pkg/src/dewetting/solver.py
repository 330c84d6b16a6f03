"""Energy-stable semi-implicit time stepping for open curves on a substrate.

Each step solves one linear system for the new node positions and the new
nodal curvature.  All lengths, normals and lumping weights are frozen on the
current curve, which is what keeps the step linear.

Unknown layout (``3N + 1`` entries)::

    [x_0 .. x_N | y_1 .. y_{N-1} | kappa_0 .. kappa_N]

Row layout: ``N + 1`` curvature-test rows, ``N + 1`` rows testing the x
component, ``N - 1`` rows testing the y component (interior nodes only,
since ``y_0 = y_N = 0`` are eliminated).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Protocol

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssumptionViolated, ContactCrossing, SolveFailed
from .geometry import (OpenCurve, contact_angles, discrete_energy, mesh_ratio,
                       polygon_area, segment_frames, segment_lengths)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SimParams:
    sigma: float
    tau: float
    eta: float = 100.0
    method: str = "banded"

    def __post_init__(self):
        if not abs(self.sigma) < 1.0:
            raise ValueError(f"sigma must lie in (-1, 1), got {self.sigma}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.method not in ("banded", "splu", "gmres"):
            raise ValueError(f"unknown linear solver {self.method!r}")

    @classmethod
    def from_angle(cls, theta_i: float, tau: float, **kw) -> "SimParams":
        return cls(sigma=math.cos(theta_i), tau=tau, **kw)

    @property
    def theta_i(self) -> float:
        return math.acos(self.sigma)


def check_assumption(curve) -> tuple[bool, bool]:
    """``(endpoint_normals_ok, segments_ok)`` for the well-posedness conditions.

    The first flag requires that the first and last segments are not both
    parallel to the substrate; the second that no segment is degenerate.
    """
    nodes = curve.nodes if isinstance(curve, OpenCurve) else np.asarray(curve, float)
    h = np.diff(nodes, axis=0)
    length = np.hypot(h[:, 0], h[:, 1])
    segments_ok = bool(length.min() > 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        n1 = -h[0, 1] / length[0]
        nN = -h[-1, 1] / length[-1]
    normals_ok = bool(np.isfinite(n1) and np.isfinite(nN) and n1 * n1 + nN * nN > 0.0)
    return normals_ok, segments_ok


# ----------------------------------------------------------------------------
# sparsity pattern (fixed for a given N)


@dataclass(frozen=True)
class _Pattern:
    N: int
    rows: np.ndarray
    cols: np.ndarray
    stiff_y_mask: np.ndarray
    # banded storage of the interleaved (node-by-node) ordering
    lower: int
    upper: int
    band_flat: np.ndarray
    row_perm: np.ndarray  # new position of each original row
    col_perm: np.ndarray  # new position of each original column


def _index_maps(N: int):
    i = np.arange(N + 1)
    interior = np.arange(1, N)
    cx, cy, ck = i, N + 1 + (interior - 1), 2 * N + i
    ra, rb, rc = i, N + 1 + i, 2 * N + 2 + (interior - 1)
    return cx, cy, ck, ra, rb, rc


@lru_cache(maxsize=32)
def _pattern(N: int) -> _Pattern:
    cx, cy, ck, ra, rb, rc = _index_maps(N)
    k = np.arange(N)
    # 2x2 element stiffness entries for segment k (nodes k, k+1)
    ei = np.concatenate([k, k + 1, k, k + 1])
    ej = np.concatenate([k, k + 1, k + 1, k])
    ymask = (ei >= 1) & (ei <= N - 1) & (ej >= 1) & (ej <= N - 1)
    rows = np.concatenate([
        ra, ra[1:-1], ra[ei],
        rb, rb[ei], rb[[0, N]],
        rc, rc[ei[ymask] - 1],
    ])
    cols = np.concatenate([
        cx, cy, ck[ej],
        ck, cx[ej], cx[[0, N]],
        ck[1:-1], cy[ej[ymask] - 1],
    ])

    # interleave unknowns and equations node by node: (x_i, y_i, kappa_i)
    col_order, row_order = [], []
    for n in range(N + 1):
        col_order.append(cx[n])
        row_order.append(ra[n])
        if 0 < n < N:
            col_order.append(cy[n - 1])
            row_order.append(rc[n - 1])
        col_order.append(ck[n])
        row_order.append(rb[n])
    size = 3 * N + 1
    col_perm = np.empty(size, dtype=np.intp)
    col_perm[np.array(col_order)] = np.arange(size)
    row_perm = np.empty(size, dtype=np.intp)
    row_perm[np.array(row_order)] = np.arange(size)
    pr, pc = row_perm[rows], col_perm[cols]
    lower = int(np.max(pr - pc))
    upper = int(np.max(pc - pr))
    band_flat = (upper + pr - pc) * size + pc
    return _Pattern(N, rows, cols, ymask, lower, upper, band_flat, row_perm, col_perm)


@dataclass
class AssembledSystem:
    N: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    rhs: np.ndarray

    @property
    def size(self) -> int:
        return 3 * self.N + 1

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.rows, self.cols)), shape=(self.size, self.size))

    def residual(self, z: np.ndarray) -> np.ndarray:
        Az = np.bincount(self.rows, weights=self.values * z[self.cols], minlength=self.size)
        return Az - self.rhs


def assemble(curve_m: OpenCurve, params: SimParams) -> AssembledSystem:
    normals_ok, segments_ok = check_assumption(curve_m)
    if not (normals_ok and segments_ok):
        raise AssumptionViolated(
            f"well-posedness fails: endpoint normals ok={normals_ok}, segments ok={segments_ok}")
    N = curve_m.N
    pat = _pattern(N)
    fr = segment_frames(curve_m)
    tau, eta, sigma = params.tau, params.eta, params.sigma

    # lumped weights: node i collects half of each adjacent |h_j| n_j
    half = 0.5 * fr.length[:, None] * fr.normal
    w = np.zeros((N + 1, 2))
    w[1:] += half
    w[:-1] += half
    g = 1.0 / fr.length
    stiff = np.concatenate([g, g, -g, -g])
    robin = 1.0 / (eta * tau)

    values = np.concatenate([
        w[:, 0] / tau, w[1:-1, 1] / tau, stiff,
        w[:, 0], -stiff, [-robin, -robin],
        w[1:-1, 1], -stiff[pat.stiff_y_mask],
    ])

    x, y = curve_m.x, curve_m.y
    rhs = np.zeros(3 * N + 1)
    rhs[:N + 1] = (w[:, 0] * x + w[:, 1] * y) / tau
    rhs[N + 1] = sigma - robin * x[0]
    rhs[2 * N + 1] = -sigma - robin * x[N]
    return AssembledSystem(N, pat.rows, pat.cols, values, rhs)


def _solve_banded(system: AssembledSystem) -> np.ndarray:
    pat = _pattern(system.N)
    n = system.size
    kl, ku = pat.lower, pat.upper
    # gbsv wants kl extra rows above the band for fill-in
    ab = np.bincount(pat.band_flat + kl * n, weights=system.values,
                     minlength=(2 * kl + ku + 1) * n).reshape(2 * kl + ku + 1, n)
    b = np.empty(n)
    b[pat.row_perm] = system.rhs
    gbsv = scipy.linalg.get_lapack_funcs("gbsv", (ab,))
    _, _, zp, info = gbsv(kl, ku, ab, b, overwrite_ab=True, overwrite_b=True)
    if info != 0:
        raise SolveFailed(f"banded LU failed (info={info})")
    return zp[pat.col_perm]


def _solve_splu(system: AssembledSystem) -> np.ndarray:
    return spla.splu(system.matrix.tocsc()).solve(system.rhs)


def _solve_gmres(system: AssembledSystem) -> np.ndarray:
    A = system.matrix.tocsc()
    ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
    M = spla.LinearOperator(A.shape, ilu.solve)
    z, info = spla.gmres(A, system.rhs, M=M, rtol=1e-12, atol=0.0, restart=50, maxiter=200)
    if info != 0:
        raise SolveFailed(f"GMRES did not converge (info={info})")
    return z


SOLVERS: dict[str, Callable[[AssembledSystem], np.ndarray]] = {
    "banded": _solve_banded,
    "splu": _solve_splu,
    "gmres": _solve_gmres,
}


def solve_system(system: AssembledSystem, method: str = "banded") -> tuple[np.ndarray, float]:
    try:
        z = SOLVERS[method](system)
    except (np.linalg.LinAlgError, RuntimeError) as err:
        if isinstance(err, SolveFailed):
            raise
        raise SolveFailed(f"linear solve failed: {err}") from err
    if not np.all(np.isfinite(z)):
        raise SolveFailed("linear solve produced non-finite values")
    res = float(np.linalg.norm(system.residual(z)))
    if res > RESIDUAL_TOL * (1.0 + float(np.linalg.norm(system.rhs))):
        raise SolveFailed(f"residual {res:.3e} exceeds tolerance")
    return z, res


@dataclass(frozen=True)
class StepSolution:
    curve: OpenCurve
    kappa: np.ndarray
    residual_norm: float
    assumption_ok: tuple[bool, bool]
    D: float  # curvature variation of the new kappa on the old curve


def unpack(z: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    nodes = np.zeros((N + 1, 2))
    nodes[:, 0] = z[:N + 1]
    nodes[1:N, 1] = z[N + 1:2 * N]
    return nodes, z[2 * N:]


def solve_step(curve_m: OpenCurve, params: SimParams) -> StepSolution:
    system = assemble(curve_m, params)
    z, res = solve_system(system, params.method)
    nodes, kappa = unpack(z, curve_m.N)
    if nodes[0, 0] > nodes[-1, 0]:
        raise ContactCrossing(
            f"left contact point {nodes[0, 0]:.6g} passed right one {nodes[-1, 0]:.6g}")
    dk = np.diff(kappa)
    D = float(np.sum(dk * dk / segment_lengths(curve_m)))
    return StepSolution(OpenCurve(nodes), kappa, res, (True, True), D)


# ----------------------------------------------------------------------------
# time loop


@dataclass(frozen=True)
class StopRule:
    max_time: Optional[float] = None
    max_steps: Optional[int] = None
    energy_rate: Optional[float] = 1e-8


class DiagnosticsSink(Protocol):
    def emit(self, record) -> None: ...


@dataclass
class Trajectory:
    curve: OpenCurve
    kappa: Optional[np.ndarray]
    steps: int
    t: float
    stop_reason: str
    snapshots: dict = field(default_factory=dict)
    W0: float = float("nan")
    A0: float = float("nan")
    D: Optional[float] = None  # curvature variation of the last step


def evolve(curve_0: OpenCurve, params: SimParams, stop: StopRule = StopRule(),
           sink: Optional[DiagnosticsSink] = None,
           snapshot_times=(), on_step: Optional[Callable] = None) -> Trajectory:
    """Advance ``curve_0`` until a stop rule fires.

    ``snapshot_times`` are rounded to the nearest step.  When a sink is given
    it receives one :class:`~dewetting.diagnostics.DiagnosticsRecord` per
    step, starting with step 0.
    """
    from .diagnostics import make_record
    from .metrics import is_simple_open

    if stop.max_time is None and stop.max_steps is None and stop.energy_rate is None:
        raise ValueError("stop rule never fires")
    tau = params.tau
    snap_steps: dict[int, list] = {}
    for ts in snapshot_times:
        snap_steps.setdefault(int(round(ts / tau)), []).append(ts)
    max_steps = stop.max_steps
    if stop.max_time is not None:
        by_time = int(round(stop.max_time / tau))
        max_steps = by_time if max_steps is None else min(max_steps, by_time)

    curve = curve_0
    kappa = None
    A0 = polygon_area(curve)
    W = W0 = discrete_energy(curve, params.sigma)
    traj = Trajectory(curve, None, 0, 0.0, "", {}, W0, A0)
    if sink is not None:
        sink.emit(make_record(0, 0.0, curve, params.sigma, A0, W0, None))
    for ts in snap_steps.get(0, ()):
        traj.snapshots[ts] = curve

    m = 0
    reason = "max_steps"
    while max_steps is None or m < max_steps:
        try:
            sol = solve_step(curve, params)
        except (AssumptionViolated, SolveFailed, ContactCrossing) as err:
            raise type(err)(f"step {m + 1}: {err}") from err
        m += 1
        W_new = discrete_energy(sol.curve, params.sigma)
        if W_new > W + 1e-12 * (1.0 + abs(W)):
            logger.warning("energy increased at step %d: %.17g -> %.17g", m, W, W_new)
        rate = (W - W_new) / tau
        curve, kappa, W = sol.curve, sol.kappa, W_new
        traj.D = sol.D
        t = m * tau
        if sink is not None:
            sink.emit(make_record(m, t, curve, params.sigma, A0, W0, sol.D))
        if on_step is not None:
            on_step(m, sol)
        if m in snap_steps:
            for ts in snap_steps[m]:
                traj.snapshots[ts] = curve
            if not is_simple_open(curve):
                logger.warning("curve self-intersects at t=%g", t)
        if stop.energy_rate is not None and rate <= stop.energy_rate:
            reason = "equilibrium"
            break
    else:
        reason = "max_time" if stop.max_time is not None else "max_steps"

    traj.curve, traj.kappa, traj.steps, traj.t, traj.stop_reason = curve, kappa, m, m * tau, reason
    return traj


def summary(traj: Trajectory, sigma: float) -> dict:
    th_l, th_r = contact_angles(traj.curve)
    return {
        "stop_reason": traj.stop_reason,
        "steps": traj.steps,
        "t": traj.t,
        "W": discrete_energy(traj.curve, sigma),
        "dA_rel": (polygon_area(traj.curve) - traj.A0) / traj.A0,
        "theta_l": th_l,
        "theta_r": th_r,
        "Psi": mesh_ratio(traj.curve),
        "D": traj.D,
    }

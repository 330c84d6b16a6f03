"""Per-step observables, time-series CSV persistence and convergence orders."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import NonPositiveError
from .geometry import contact_angles, discrete_energy, mesh_ratio, polygon_area

COLUMNS = ("step", "t", "A", "dA_rel", "W", "W_norm", "Psi", "D",
           "theta_l", "theta_r", "x_l", "x_r")


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    A: float
    dA_rel: float
    W: float
    W_norm: float
    Psi: float
    D: Optional[float]  # undefined at step 0
    theta_l: float
    theta_r: float
    x_l: float
    x_r: float


def relative_area_loss(A_now: float, A_0: float) -> float:
    if not A_0 > 0:
        raise ValueError("initial area must be positive")
    return (A_now - A_0) / A_0


def make_record(step: int, t: float, curve, sigma: float, A0: float, W0: float,
                D: Optional[float]) -> DiagnosticsRecord:
    A = polygon_area(curve)
    W = discrete_energy(curve, sigma)
    th_l, th_r = contact_angles(curve)
    return DiagnosticsRecord(step, t, A, relative_area_loss(A, A0), W, W / W0,
                             mesh_ratio(curve), D, th_l, th_r,
                             float(curve.nodes[0, 0]), float(curve.nodes[-1, 0]))


record = make_record


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class ListSink:
    """Keeps every record in memory."""

    def __init__(self):
        self.records: list[DiagnosticsRecord] = []

    def emit(self, rec: DiagnosticsRecord) -> None:
        self.records.append(rec)


class CSVSink:
    """Append-only CSV writer, flushed every ``flush_every`` records."""

    def __init__(self, path, flush_every: int = 100, keep: bool = False):
        self.path = Path(path)
        self.flush_every = flush_every
        self.records: list[DiagnosticsRecord] = []
        self.keep = keep
        self._pending = 0
        try:
            self._fh = self.path.open("w", newline="")
        except OSError as err:
            raise OSError(f"cannot open diagnostics file {self.path}: {err}") from err
        self._fh.write(",".join(COLUMNS) + "\n")

    def emit(self, rec: DiagnosticsRecord) -> None:
        self._fh.write(",".join(_fmt(v) for v in astuple(rec)) + "\n")
        if self.keep:
            self.records.append(rec)
        self._pending += 1
        if self._pending >= self.flush_every:
            self._fh.flush()
            self._pending = 0

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_series(records: Iterable[DiagnosticsRecord], path) -> Path:
    with CSVSink(path, flush_every=10**9) as sink:
        for rec in records:
            sink.emit(rec)
    return Path(path)


def read_series(path) -> list[DiagnosticsRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            vals = {}
            for k in COLUMNS:
                raw = row[k]
                if k == "step":
                    vals[k] = int(raw)
                elif raw == "":
                    vals[k] = None
                else:
                    vals[k] = float(raw)
            out.append(DiagnosticsRecord(**vals))
    return out


def convergence_order(errors) -> list[float]:
    """Observed orders ``log2(e_i / e_{i+1})`` for successive mesh halvings."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two (h, e_h) entries")
    for h, e in errors:
        if not e > 0:
            raise NonPositiveError(f"error at h={h} is {e}")
    for (h0, _), (h1, _) in zip(errors, errors[1:]):
        if not math.isclose(h0 / h1, 2.0, rel_tol=1e-9):
            raise ValueError(f"mesh sizes must halve: {h0} -> {h1}")
    return [math.log2(e0 / e1) for (_, e0), (_, e1) in zip(errors, errors[1:])]


def dissipation_budget(records: list[DiagnosticsRecord], tau: float, eta: float):
    """Running check of the discrete dissipation inequality.

    Returns ``(lhs, rhs)`` arrays over steps 1..m where ``lhs`` is the running
    sum of curvature variation plus contact-line dissipation and ``rhs`` is
    ``(W^0 - W^m) / tau``.
    """
    W = np.array([r.W for r in records])
    xl = np.array([r.x_l for r in records])
    xr = np.array([r.x_r for r in records])
    D = np.array([r.D for r in records[1:]], dtype=float)
    terms = D + ((np.diff(xl) / tau) ** 2 + (np.diff(xr) / tau) ** 2) / eta
    return np.cumsum(terms), (W[0] - W[1:]) / tau


class RunMonitor:
    """Streaming sink that checks energy decay and the dissipation budget.

    Keeps O(1) state, so it can watch arbitrarily long runs.  ``budget_ratio``
    is the largest ``lhs / rhs`` seen, where ``lhs`` is the accumulated
    curvature-variation plus contact-line dissipation and ``rhs`` is
    ``(W^0 - W^{m+1}) / tau``.
    """

    def __init__(self, tau: float, eta: float, energy_tol: float = 1e-12,
                 budget_tol: float = 1e-10, small_D: float = 1e-10):
        self.tau, self.eta = tau, eta
        self.energy_tol, self.budget_tol, self.small_D = energy_tol, budget_tol, small_D
        self.first: Optional[DiagnosticsRecord] = None
        self.last: Optional[DiagnosticsRecord] = None
        self.steps = 0
        self.energy_violations = 0
        self.max_energy_increase = -math.inf  # relative to 1 + |W|
        self.budget_violations = 0
        self.budget_ratio = 0.0
        self.first_small_D_step: Optional[int] = None
        self.max_Psi = 0.0
        self._lhs = 0.0

    def emit(self, rec: DiagnosticsRecord) -> None:
        self.max_Psi = max(self.max_Psi, rec.Psi)
        prev = self.last
        self.last = rec
        if prev is None:
            self.first = rec
            return
        self.steps += 1
        inc = (rec.W - prev.W) / (1.0 + abs(prev.W))
        self.max_energy_increase = max(self.max_energy_increase, inc)
        if inc > self.energy_tol:
            self.energy_violations += 1
        vl = (rec.x_l - prev.x_l) / self.tau
        vr = (rec.x_r - prev.x_r) / self.tau
        self._lhs += rec.D + (vl * vl + vr * vr) / self.eta
        rhs = (self.first.W - rec.W) / self.tau
        if self._lhs > rhs * (1.0 + self.budget_tol):
            self.budget_violations += 1
        if rhs > 0:
            self.budget_ratio = max(self.budget_ratio, self._lhs / rhs)
        if self.first_small_D_step is None and rec.D < self.small_D:
            self.first_small_D_step = rec.step

    @property
    def energy_ok(self) -> bool:
        return self.energy_violations == 0

    @property
    def budget_ok(self) -> bool:
        return self.budget_violations == 0

"""Reproduction recipes shared by the scripts and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .cli import RunConfig, VerifyReport, convergence_study, verify
from .diagnostics import RunMonitor
from .geometry import contact_angles, mesh_ratio, polygon_area
from .shapes import ShapeSpec, generate
from .solver import SimParams, StopRule, Trajectory, evolve

THETA_BASE = 5.0 * math.pi / 6.0
EPS_EQ = 1e-8


def coupled_tau(N: int) -> float:
    """Time step tied to the mesh, ``tau = (2048/25) h^2`` with ``h = 1/N``."""
    return 2048.0 / 25.0 / N**2


@dataclass
class RunResult:
    traj: Trajectory
    monitor: RunMonitor
    A0: float
    theta_i: float = THETA_BASE

    @property
    def dA(self) -> float:
        return (polygon_area(self.traj.curve) - self.A0) / self.A0

    @property
    def theta_error(self) -> float:
        """Left contact-angle error at the end of the run."""
        return contact_angles(self.traj.curve)[0] - self.theta_i


def run(shape: str, N: int, tau: float, theta_i: float = THETA_BASE, eta: float = 100.0,
        max_time: Optional[float] = None, energy_rate: Optional[float] = EPS_EQ,
        on_step=None) -> RunResult:
    curve = generate(ShapeSpec(shape, N))
    params = SimParams.from_angle(theta_i, tau, eta=eta)
    mon = RunMonitor(tau, eta)
    traj = evolve(curve, params, StopRule(max_time=max_time, energy_rate=energy_rate), mon,
                  on_step=on_step)
    return RunResult(traj, mon, polygon_area(curve), theta_i)


def equilibrium_rates(meshes=(64, 128, 256, 512), shape: str = "shape2",
                      theta_i: float = THETA_BASE) -> list[dict]:
    """Area loss and contact-angle error at the first equilibrium, per mesh."""
    rows = []
    for N in meshes:
        res = run(shape, N, coupled_tau(N), theta_i)
        rows.append({"N": N, "tau": coupled_tau(N), "t_e": res.traj.t,
                     "stop": res.traj.stop_reason, "dA": res.dA,
                     "theta_err": res.theta_error, "result": res})
    return rows


def convergence(shape: str = "shape2", theta_i: float = THETA_BASE, tau: float = 1e-5,
                meshes=(32, 64, 128, 256), n_ref: int = 1024, times=(0.5,),
                cache_dir=None, monitors: Optional[list] = None):
    config = RunConfig(shape=shape, sigma=math.cos(theta_i), tau=tau, epsilon_eq=None,
                       t_max=max(times))
    return convergence_study(config, meshes, n_ref, times, cache_dir=cache_dir,
                             monitors=monitors)


@dataclass
class GeometryResult:
    shape: str
    theta_i: float
    N: int
    run: RunResult
    report: VerifyReport

    @property
    def h(self) -> float:
        return 1.0 / self.N


def equilibrium_geometry(shape: str, theta_i: float, N: int, tau: float) -> GeometryResult:
    res = run(shape, N, tau, theta_i)
    return GeometryResult(shape, theta_i, N, res, verify(res.traj.curve, theta_i))


def long_time_indicators(N: int = 128, tau: float = 0.01, shape: str = "shape2",
                         theta_i: float = THETA_BASE) -> dict:
    res = run(shape, N, tau, theta_i)
    mon = res.monitor
    return {"stop": res.traj.stop_reason, "t_stop": res.traj.t, "steps": res.traj.steps,
            "Psi_final": mesh_ratio(res.traj.curve), "Psi_max": mon.max_Psi,
            "first_small_D_step": mon.first_small_D_step, "D_final": res.traj.D,
            "result": res}

"""Experiment harness: ``dewetting run | converge | verify | distance | svg | shapes``.

Configuration is a flat ``key = value`` file whose entries are overridden by
command-line flags.  Every run writes its fully resolved configuration next
to its outputs, so ``dewetting run --config <out>/config.txt`` repeats it.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares

from . import __version__
from .diagnostics import CSVSink, RunMonitor, convergence_order
from .errors import AssumptionViolated, ContactCrossing, CurveError, NotSimple, SolveFailed
from .geometry import (OpenCurve, contact_angles, equidistribution_residuals, mesh_ratio,
                       polygon_area, read_curve_csv, read_curve_nodes, write_curve_csv)
from .metrics import SimplePolygon, manifold_distance
from .shapes import SHAPES, ShapeSpec, generate, polygon_matched_equilibrium
from .solver import SimParams, StopRule, evolve, summary

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "DEWETTING_OUTPUT_ROOT"

#: Named time-step rules, as functions of the segment count ``N`` (``h = 1/N``).
TAU_PRESETS = {"coupled": lambda N: 2048.0 / 25.0 / N**2}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _tau(text: str) -> Union[float, str]:
    text = text.strip()
    return text if text in TAU_PRESETS else float(text)


_PARSERS = {
    "shape": str, "N": int, "sigma": _optional_float, "theta": _optional_float,
    "eta": float, "tau": _tau, "t_max": _optional_float, "epsilon_eq": _optional_float,
    "snapshots": _float_list, "out": str, "seed": int, "method": str,
    "ax": float, "ay": float, "max_steps": lambda s: None if s.strip().lower() in ("", "none") else int(s),
}


@dataclass(frozen=True)
class RunConfig:
    """One simulation.  ``theta`` is in degrees; ``shape`` is a built-in name or a CSV path."""

    shape: str = "shape2"
    N: int = 128
    sigma: Optional[float] = None
    theta: Optional[float] = None
    eta: float = 100.0
    tau: Union[float, str] = 0.01
    t_max: Optional[float] = None
    epsilon_eq: Optional[float] = 1e-8
    snapshots: tuple[float, ...] = ()
    out: str = ""
    seed: int = 0
    method: str = "banded"
    ax: float = 4.0
    ay: float = 1.0
    max_steps: Optional[int] = None

    def __post_init__(self):
        if (self.sigma is None) == (self.theta is None):
            raise ConfigError("theta", "give exactly one of theta (degrees) and sigma")
        if self.sigma is not None and not abs(self.sigma) < 1:
            raise ConfigError("sigma", f"must lie in (-1, 1), got {self.sigma}")
        if self.theta is not None and not 0 < self.theta < 180:
            raise ConfigError("theta", f"must lie in (0, 180) degrees, got {self.theta}")
        for key in ("eta", "ax", "ay"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, f"must be positive, got {getattr(self, key)}")
        if isinstance(self.tau, str):
            if self.tau not in TAU_PRESETS:
                raise ConfigError("tau", f"unknown preset {self.tau!r}")
        elif not self.tau > 0:
            raise ConfigError("tau", f"must be positive, got {self.tau}")
        for key in ("t_max", "epsilon_eq"):
            v = getattr(self, key)
            if v is not None and not v > 0:
                raise ConfigError(key, f"must be positive, got {v}")
        if self.max_steps is not None and self.max_steps <= 0:
            raise ConfigError("max_steps", "must be positive")
        if any(not t >= 0 for t in self.snapshots):
            raise ConfigError("snapshots", "times must be non-negative")
        if self.shape not in SHAPES and not Path(self.shape).is_file():
            raise ConfigError("shape", f"neither a built-in shape nor a readable file: {self.shape}")
        if self.shape in SHAPES and self.N < 8:
            raise ConfigError("N", f"must be >= 8, got {self.N}")
        if self.method not in ("banded", "splu", "gmres"):
            raise ConfigError("method", f"unknown linear solver {self.method!r}")
        if self.t_max is None and self.epsilon_eq is None and self.max_steps is None:
            raise ConfigError("t_max", "no stop rule: set t_max, epsilon_eq or max_steps")

    @property
    def sigma_value(self) -> float:
        return self.sigma if self.sigma is not None else math.cos(math.radians(self.theta))

    @property
    def theta_i(self) -> float:
        """Young's angle in radians."""
        return math.acos(self.sigma_value)

    def initial_curve(self) -> OpenCurve:
        if self.shape in SHAPES:
            return generate(ShapeSpec(self.shape, self.N, self.ax, self.ay))
        return read_curve_csv(self.shape)

    @property
    def time_step(self) -> float:
        if isinstance(self.tau, str):
            return TAU_PRESETS[self.tau](self.initial_curve().N)
        return float(self.tau)

    def params(self) -> SimParams:
        return SimParams(self.sigma_value, self.time_step, self.eta, self.method)

    def stop_rule(self) -> StopRule:
        return StopRule(self.t_max, self.max_steps, self.epsilon_eq)

    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        name = Path(self.shape).stem if self.shape not in SHAPES else self.shape
        angle = f"theta{self.theta:g}" if self.theta is not None else f"sigma{self.sigma:g}"
        return output_root() / f"{name}_N{self.N}_{angle}_tau{self.tau}"

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        kw = {}
        for key, raw in values.items():
            if key not in _PARSERS:
                raise ConfigError(key, "unknown configuration key")
            try:
                kw[key] = _PARSERS[key](raw) if isinstance(raw, str) else raw
            except ValueError as err:
                raise ConfigError(key, f"cannot parse {raw!r}: {err}") from None
        return cls(**kw)

    def to_text(self) -> str:
        lines = [f"# dewetting {__version__} effective configuration"]
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "snapshots":
                text = ",".join(repr(float(t)) for t in v)
            elif v is None:
                text = "none"
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


def read_config_file(path) -> dict:
    values = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


# ---------------------------------------------------------------- run


def _snapshot_name(t: float) -> str:
    return f"snap_t{t:g}.csv"


def cmd_run(config: RunConfig, quiet: bool = False) -> int:
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(replace(config, out=str(out)).to_text())
    curve0 = config.initial_curve()
    params = config.params()
    try:
        with CSVSink(out / "series.csv") as sink:
            traj = evolve(curve0, params, config.stop_rule(), sink,
                          snapshot_times=config.snapshots)
    except (AssumptionViolated, SolveFailed, ContactCrossing) as err:
        print(f"solver aborted: {err}", file=sys.stderr)
        return 1
    for t, c in sorted(traj.snapshots.items()):
        write_curve_csv(out / _snapshot_name(t), c)
    write_curve_csv(out / "final.csv", traj.curve)
    s = summary(traj, params.sigma)
    D = "n/a" if s["D"] is None else f"{s['D']:.3e}"
    line = (f"stop={s['stop_reason']} t={s['t']:.6g} steps={s['steps']} W={s['W']:.12g} "
            f"dA={s['dA_rel']:.3e} theta_l={s['theta_l']:.6f} theta_r={s['theta_r']:.6f} "
            f"Psi={s['Psi']:.6f} D={D}")
    (out / "summary.txt").write_text(line + "\n")
    if not quiet:
        print(line)
    return 0


# ---------------------------------------------------------------- converge


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    h: float
    t: float
    error: float
    order: Optional[float]


def _shape_key(config: RunConfig) -> str:
    if config.shape in SHAPES:
        return f"{config.shape}:{config.ax!r}:{config.ay!r}"
    return "file:" + hashlib.sha256(Path(config.shape).read_bytes()).hexdigest()


def reference_key(config: RunConfig, n_ref: int, t: float) -> str:
    parts = (_shape_key(config), repr(config.sigma_value), repr(config.eta),
             repr(config.time_step), str(n_ref), repr(float(t)), __version__)
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:20]


def _curves_at(config: RunConfig, times: Sequence[float], monitor: bool = False):
    params = config.params()
    sink = RunMonitor(params.tau, params.eta) if monitor else None
    traj = evolve(config.initial_curve(), params,
                  StopRule(max_time=max(times), energy_rate=None), sink, snapshot_times=times)
    missing = [t for t in times if t not in traj.snapshots]
    if missing:
        raise RuntimeError(f"no snapshot at t={missing}")
    return traj.snapshots, sink


def reference_curves(config: RunConfig, n_ref: int, times: Sequence[float],
                     cache_dir: Optional[Path] = None, monitors: Optional[list] = None) -> dict:
    """Reference curves at ``times``, computed once and cached on disk."""
    cache_dir = Path(cache_dir) if cache_dir is not None else output_root() / "reference_cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    ref = replace(config, N=n_ref)
    paths = {t: cache_dir / f"ref_{reference_key(ref, n_ref, t)}.csv" for t in times}
    todo = [t for t, p in paths.items() if not p.is_file()]
    if todo:
        logger.info("computing reference N=%d up to t=%g", n_ref, max(todo))
        curves, mon = _curves_at(ref, todo, monitor=monitors is not None)
        if monitors is not None:
            monitors.append((f"{config.shape} N={n_ref} reference", mon))
        for t, c in curves.items():
            tmp = paths[t].with_suffix(".tmp")
            write_curve_csv(tmp, c)
            tmp.replace(paths[t])
    return {t: read_curve_csv(p) for t, p in paths.items()}


def _mesh_errors(args):
    config, N, times, refs, monitor = args
    curves, mon = _curves_at(replace(config, N=N), times, monitor)
    return [manifold_distance(curves[t], refs[t]) for t in times], mon


def convergence_study(config: RunConfig, meshes: Sequence[int], n_ref: int,
                      times: Sequence[float], cache_dir=None, jobs: int = 1,
                      monitors: Optional[list] = None) -> list:
    """Manifold-distance errors against a fine reference at each time.

    When ``monitors`` is a list, every run appends ``(label, RunMonitor)`` to it.
    """
    if isinstance(config.tau, str):
        raise ConfigError("tau", "convergence studies need one fixed time step for all meshes")
    if config.shape not in SHAPES:
        raise ConfigError("shape", "convergence studies need a built-in shape")
    meshes = sorted(meshes)
    if not meshes or meshes[-1] >= n_ref:
        raise ConfigError("N_ref", "every mesh must be coarser than the reference")
    times = tuple(float(t) for t in times)
    refs = reference_curves(config, n_ref, times, cache_dir, monitors)
    work = [(config, N, times, refs, monitors is not None) for N in meshes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_mesh_errors, work))
    else:
        results = [_mesh_errors(w) for w in work]
    errors = [r[0] for r in results]
    if monitors is not None:
        monitors.extend((f"{config.shape} N={N}", r[1]) for N, r in zip(meshes, results))
    rows = []
    for k, t in enumerate(times):
        pairs = [(1.0 / N, e[k]) for N, e in zip(meshes, errors)]
        orders = convergence_order(pairs) if len(pairs) > 1 else []
        for j, (N, (h, err)) in enumerate(zip(meshes, pairs)):
            rows.append(ConvergenceRow(N, h, t, err, orders[j - 1] if j > 0 else None))
    return rows


def write_convergence_csv(rows, path) -> Path:
    with Path(path).open("w") as fh:
        fh.write("N,h,t,error,order\n")
        for r in rows:
            order = "" if r.order is None else repr(r.order)
            fh.write(f"{r.N},{r.h!r},{r.t!r},{r.error!r},{order}\n")
    return Path(path)


def cmd_converge(config: RunConfig, meshes, n_ref: int, times, jobs: int = 1) -> int:
    rows = convergence_study(config, meshes, n_ref, times, jobs=jobs)
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.to_text())
    write_convergence_csv(rows, out / "convergence.csv")
    print(f"{'N':>6} {'h':>12} {'t':>8} {'e_h':>14} {'order':>7}")
    for r in rows:
        order = "" if r.order is None else f"{r.order:.3f}"
        print(f"{r.N:>6} {r.h:>12.6g} {r.t:>8g} {r.error:>14.6e} {order:>7}")
    return 0


# ---------------------------------------------------------------- verify


@dataclass(frozen=True)
class VerifyReport:
    center: tuple[float, float]
    radius: float
    fit_rms: float
    arc_distance: float
    area: float
    theta_l: float
    theta_r: float
    theta_err_l: float
    theta_err_r: float
    Psi: float
    equidistribution_max: float

    def lines(self) -> list[str]:
        return [f"{k} = {v!r}" for k, v in asdict(self).items()]


def fit_circle(points: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Least-squares circle: algebraic fit refined on geometric residuals."""
    x, y = points[:, 0], points[:, 1]
    M = np.column_stack([x, y, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(M, x**2 + y**2, rcond=None)
    c0 = 0.5 * sol[:2]
    r0 = math.sqrt(max(sol[2] + c0 @ c0, 1e-300))

    def resid(p):
        return np.hypot(x - p[0], y - p[1]) - p[2]

    res = least_squares(resid, [c0[0], c0[1], r0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    cx, cy, r = res.x
    return np.array([cx, cy]), float(abs(r)), float(np.sqrt(np.mean(res.fun**2)))


def verify(curve: OpenCurve, theta_i: float) -> VerifyReport:
    center, radius, rms = fit_circle(curve.nodes)
    area = polygon_area(curve)
    arc = polygon_matched_equilibrium(theta_i, area, float(center[0]), curve.N)
    th_l, th_r = contact_angles(curve)
    return VerifyReport(
        center=(float(center[0]), float(center[1])), radius=radius, fit_rms=rms,
        arc_distance=manifold_distance(curve, arc), area=area,
        theta_l=th_l, theta_r=th_r,
        theta_err_l=abs(th_l - theta_i), theta_err_r=abs(th_r - theta_i),
        Psi=mesh_ratio(curve),
        equidistribution_max=float(np.max(np.abs(equidistribution_residuals(curve)))))


def cmd_verify(curve: OpenCurve, theta_i: float) -> VerifyReport:
    report = verify(curve, theta_i)
    print("\n".join(report.lines()))
    return report


# ---------------------------------------------------------------- svg


def render_svg(curves: Sequence[np.ndarray], width: float = 800.0) -> str:
    """SVG with the substrate, the first curve, dashed intermediates and the last curve."""
    if not curves:
        raise ValueError("no curves to render")
    pts = np.concatenate(curves)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    lo[1] = min(lo[1], 0.0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * span.max()
    x0, x1 = lo[0] - pad, hi[0] + pad
    y0, y1 = -(hi[1] + pad), -(lo[1] - pad)  # SVG y grows downwards
    height = width * (y1 - y0) / (x1 - x0)

    def poly(p, style):
        coords = " ".join(f"{x:.6g},{-y:.6g}" for x, y in p)
        return f'  <polyline points="{coords}" {style}/>'

    stroke = 0.004 * (x1 - x0)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
           f'viewBox="{x0:.6g} {y0:.6g} {x1 - x0:.6g} {y1 - y0:.6g}">',
           poly([(x0, 0.0), (x1, 0.0)], f'fill="none" stroke="black" stroke-width="{stroke:.4g}"')]
    for k, c in enumerate(curves):
        if k == len(curves) - 1:
            style = f'fill="none" stroke="blue" stroke-width="{stroke:.4g}"'
        elif k == 0:
            style = f'fill="none" stroke="red" stroke-width="{stroke:.4g}"'
        else:
            style = (f'fill="none" stroke="red" stroke-width="{stroke:.4g}" '
                     f'stroke-dasharray="{4 * stroke:.4g} {2 * stroke:.4g}"')
        out.append(poly(c, style))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_svg(paths: Sequence, out) -> int:
    if not paths:
        print("svg: no snapshots given", file=sys.stderr)
        return 2
    curves = [read_curve_nodes(p) for p in paths]
    Path(out).write_text(render_svg(curves))
    return 0


# ---------------------------------------------------------------- argparse


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--shape", help="built-in shape name or initial-curve CSV")
    p.add_argument("--N", type=str)
    angle = p.add_mutually_exclusive_group()
    angle.add_argument("--theta", help="Young's angle in degrees")
    angle.add_argument("--sigma")
    p.add_argument("--eta")
    p.add_argument("--tau", help="time step, or 'coupled' for tau = (2048/25) h^2")
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--epsilon-eq", dest="epsilon_eq", help="energy-rate stop; 'none' disables")
    p.add_argument("--snapshots", help="comma-separated output times")
    p.add_argument("--out")
    p.add_argument("--seed")
    p.add_argument("--method", choices=("banded", "splu", "gmres"))
    p.add_argument("--max-steps", dest="max_steps")
    p.add_argument("--ax")
    p.add_argument("--ay")


def _config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in _PARSERS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.theta is not None:
        values.pop("sigma", None)
    if args.sigma is not None:
        values.pop("theta", None)
    return RunConfig.from_mapping(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dewetting", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve one island")
    _add_run_flags(p)

    p = sub.add_parser("converge", help="spatial convergence study against a fine reference")
    _add_run_flags(p)
    p.add_argument("--meshes", required=True, help="comma-separated segment counts")
    p.add_argument("--n-ref", type=int, default=1024)
    p.add_argument("--times", required=True, help="comma-separated evaluation times")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("verify", help="compare a final curve with the equilibrium arc")
    p.add_argument("curve")
    angle = p.add_mutually_exclusive_group(required=True)
    angle.add_argument("--theta", type=float, help="Young's angle in degrees")
    angle.add_argument("--sigma", type=float)

    p = sub.add_parser("distance", help="manifold distance between two curves")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--closed", action="store_true",
                   help="read both files as closed polygons instead of open films")

    p = sub.add_parser("svg", help="render snapshot CSVs")
    p.add_argument("snapshots", nargs="*")
    p.add_argument("-o", "--output", default="snapshots.svg")

    sub.add_parser("shapes", help="list built-in initial shapes")
    return parser


def _region(path, closed: bool):
    if closed:
        return SimplePolygon.from_points(read_curve_nodes(path))
    return read_curve_csv(path)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(_config_from_args(args))
        if args.command == "converge":
            config = _config_from_args(args)
            return cmd_converge(config, [int(v) for v in _float_list(args.meshes)],
                                args.n_ref, _float_list(args.times), args.jobs)
        if args.command == "verify":
            theta = (math.radians(args.theta) if args.theta is not None
                     else math.acos(args.sigma))
            cmd_verify(read_curve_csv(args.curve), theta)
            return 0
        if args.command == "distance":
            try:
                d = manifold_distance(_region(args.a, args.closed), _region(args.b, args.closed))
            except NotSimple as err:
                print(f"distance: {err}", file=sys.stderr)
                return 2
            print(f"{d:.12g}")
            return 0
        if args.command == "svg":
            return cmd_svg(args.snapshots, args.output)
        for name, desc in SHAPES.items():
            print(f"{name}: {desc}")
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (CurveError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (AssumptionViolated, SolveFailed, ContactCrossing) as err:
        print(f"solver aborted: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

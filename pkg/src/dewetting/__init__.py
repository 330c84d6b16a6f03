"""Energy-stable parametric finite elements for solid-state dewetting in 2D."""

from .geometry import (OpenCurve, contact_angles, curvature_variation, discrete_energy,
                       mass_lumped_inner, mesh_ratio, polygon_area, segment_frames,
                       stiffness_inner)
from .metrics import SimplePolygon, close_on_substrate, intersection_area, manifold_distance
from .shapes import ShapeSpec, exact_equilibrium, generate
from .solver import SimParams, StopRule, assemble, check_assumption, evolve, solve_step

__version__ = "0.1.0"

__all__ = [
    "OpenCurve", "SimParams", "ShapeSpec", "SimplePolygon", "StopRule",
    "assemble", "check_assumption", "close_on_substrate", "contact_angles",
    "curvature_variation", "discrete_energy", "evolve", "exact_equilibrium",
    "generate", "intersection_area", "manifold_distance", "mass_lumped_inner",
    "mesh_ratio", "polygon_area", "segment_frames", "solve_step", "stiffness_inner",
]

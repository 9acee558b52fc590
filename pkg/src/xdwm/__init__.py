"""Micromagnetic and circuit workbench for 2D cross-point domain-wall memory."""

from .material import CONSTANTS, MaterialParams, PhysicalConstants
from .geometry import GeometrySpec, Mesh, build_mesh
from .llg import LLGSolver, SimState, SolverConfig

__version__ = "0.1.0"

__all__ = ["CONSTANTS", "MaterialParams", "PhysicalConstants", "GeometrySpec", "Mesh",
           "build_mesh", "LLGSolver", "SimState", "SolverConfig"]

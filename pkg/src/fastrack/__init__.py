"""Tracking error bounds for a near-hover quadrotor following a simple 3D planner, and the online loop that uses them."""

from .dynamics import ModelParams, SubsystemId
from .grid import GridSpec, ValueTable, GradientTable, load_table, save_table
from .solver import SolverConfig, solve, solve_decomposed
from .teb import TebBox, teb_box

__all__ = [
    "ModelParams",
    "SubsystemId",
    "GridSpec",
    "ValueTable",
    "GradientTable",
    "load_table",
    "save_table",
    "SolverConfig",
    "solve",
    "solve_decomposed",
    "TebBox",
    "teb_box",
]

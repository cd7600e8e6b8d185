"""Polyhedron-gravity landing simulation for a dumbbell spacecraft near a small body."""
from .controller import ControlGains, select_gains
from .gravity import GravityModel
from .guidance import GuidanceConfig, command_at
from .rigid_body import AsteroidModel, DumbbellParams, SpacecraftState
from .scenario import ScenarioConfig, TrajectoryLog, load_config, run_scenario
from .shape_model import TriangleMesh, load_mesh

__version__ = "0.1.0"

__all__ = [
    "AsteroidModel", "ControlGains", "DumbbellParams", "GravityModel", "GuidanceConfig",
    "ScenarioConfig", "SpacecraftState", "TrajectoryLog", "TriangleMesh", "command_at",
    "load_config", "load_mesh", "run_scenario", "select_gains",
]

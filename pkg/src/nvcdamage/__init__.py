"""Porous plasticity with hydrogen softening and nucleation, coupled to trap-mediated transport."""
from .driver import ScenarioConfig, TensileRecord, run_tensile, sweep
from .gurson import GursonParams, PointState, stress_update
from .oracle import oracle_integrate
from .tensor import ElasticConstants, invariants
from .traps import TrapParams

__version__ = "0.1.0"

__all__ = [
    "ElasticConstants", "GursonParams", "PointState", "ScenarioConfig", "TensileRecord",
    "TrapParams", "invariants", "oracle_integrate", "run_tensile", "stress_update", "sweep",
]

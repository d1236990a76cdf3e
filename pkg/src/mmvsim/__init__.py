"""Edge-network simulator for ML model version updates."""

from mmvsim.config import SimulationConfig, load_config
from mmvsim.engine import RunResult, run

__all__ = ["SimulationConfig", "load_config", "run", "RunResult"]
__version__ = "0.1.0"

"""System-level design space exploration under end-to-end latency constraints."""

__version__ = "0.1.0"

from .configuration import Chromosome, EvaluatedChromosome, ParetoFront
from .model import SystemModel, load_system, save_system
from .pathfind import build_graph, count_paths, find_paths

__all__ = [
    "Chromosome",
    "EvaluatedChromosome",
    "ParetoFront",
    "SystemModel",
    "build_graph",
    "count_paths",
    "find_paths",
    "load_system",
    "save_system",
    "__version__",
]

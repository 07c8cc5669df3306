"""Embed graphs as unit-disk graphs on neutral-atom registers."""

from .graph import Graph, decompose, load_graph, stats
from .hardware import get_profile, profile_aquila, profile_orion_alpha
from .feasibility import check, precheck
from .den import TrainConfig, initial_solution, train
from .lattice import generate_orion_lattice, remap
from .pipeline import PipelineConfig, embed_graph, run_pipeline

__version__ = "0.1.0"

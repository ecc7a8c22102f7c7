"""Self-triggered consensus simulation lab.

Single-integrator agents on a weighted digraph agree up to quantization,
triggered by per-agent random clocks whose intervals depend only on
in-degrees. The package covers graph/Laplacian validation, stochastic
matrix analysis, uniform quantizers, the four trigger/input rule
combinations, a deterministic event-driven engine, and CSV experiment
runners.
"""

from .engine import (
    SimConfig,
    SimTrace,
    advance,
    conservation_residual,
    run,
    tail_spread,
    verify_interleaving,
    verify_trace,
)
from .errors import InvariantViolation, ModeMismatch, StconError, ValidationError
from .experiments import DEMO_LAPLACIAN, RULES, ExperimentSpec, analyze_graph
from .graph import (
    Digraph,
    from_laplacian,
    has_delta_spanning_tree,
    has_spanning_tree,
    load_laplacian,
    threshold_matrix,
)
from .protocol import (
    InputMode,
    TriggerMode,
    TriggerPlan,
    centralized_bounds,
    centralized_plan,
    distributed_bounds,
    distributed_plan,
    draw_next_trigger,
    input_qcomm,
    input_qsens,
    interleaving_bounds,
    spread_bound_constant,
)
from .quantize import UniformQuantizer
from .stochmat import (
    LiftedStep,
    ergodicity_coefficient,
    hajnal_diameter,
    is_scrambling,
    is_sia,
    left_null_vector,
    lifted_transition,
    same_sign_pattern,
    spread,
    window_scrambling_coefficient,
)

__version__ = "0.1.0"

__all__ = [
    "DEMO_LAPLACIAN",
    "Digraph",
    "ExperimentSpec",
    "InputMode",
    "InvariantViolation",
    "LiftedStep",
    "ModeMismatch",
    "RULES",
    "SimConfig",
    "SimTrace",
    "StconError",
    "TriggerMode",
    "TriggerPlan",
    "UniformQuantizer",
    "ValidationError",
    "advance",
    "analyze_graph",
    "centralized_bounds",
    "centralized_plan",
    "conservation_residual",
    "distributed_bounds",
    "distributed_plan",
    "draw_next_trigger",
    "ergodicity_coefficient",
    "from_laplacian",
    "hajnal_diameter",
    "has_delta_spanning_tree",
    "has_spanning_tree",
    "input_qcomm",
    "input_qsens",
    "interleaving_bounds",
    "is_scrambling",
    "is_sia",
    "left_null_vector",
    "lifted_transition",
    "load_laplacian",
    "run",
    "same_sign_pattern",
    "spread",
    "spread_bound_constant",
    "tail_spread",
    "threshold_matrix",
    "verify_interleaving",
    "verify_trace",
    "window_scrambling_coefficient",
]

"""Time-optimal bang-bang frictionless expansion of a harmonic trap."""
from .phase import (
    BangControl,
    ControlBounds,
    DomainError,
    NoSwitchingError,
    PhaseState,
    first_integral,
    inter_switching_time,
    propagate_constant,
    vector_field,
)
from .synthesis import (
    Schedule,
    Segment,
    SynthesisSolution,
    build_schedule,
    max_turns,
    solve_ratio,
    synthesize,
    time_n_turns,
    time_zero_turns,
)

__all__ = [
    "BangControl",
    "ControlBounds",
    "DomainError",
    "NoSwitchingError",
    "PhaseState",
    "Schedule",
    "Segment",
    "SynthesisSolution",
    "build_schedule",
    "first_integral",
    "inter_switching_time",
    "max_turns",
    "propagate_constant",
    "solve_ratio",
    "synthesize",
    "time_n_turns",
    "time_zero_turns",
    "vector_field",
]
__version__ = "0.1.0"

"""Constant-envelope multi-user precoding for large antenna arrays."""

from .channel import ChannelDiagnostics, diagnostics, load_channel, sample_rayleigh, save_channel
from .core import (
    Alphabet,
    ChannelMatrix,
    LinkBudget,
    PhaseVector,
    ScaledSymbolVector,
    make_qam_alphabet,
    scale_symbols,
    wrap_angle,
)
from .precoder import (
    CEPrecoder,
    SolveReport,
    SolverConfig,
    coordinate_update,
    objective,
    received,
    residuals,
    solve,
    solve_batch,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "CEPrecoder",
    "ChannelDiagnostics",
    "ChannelMatrix",
    "LinkBudget",
    "PhaseVector",
    "ScaledSymbolVector",
    "SolveReport",
    "SolverConfig",
    "coordinate_update",
    "diagnostics",
    "load_channel",
    "make_qam_alphabet",
    "objective",
    "received",
    "residuals",
    "sample_rayleigh",
    "save_channel",
    "scale_symbols",
    "solve",
    "solve_batch",
    "wrap_angle",
]

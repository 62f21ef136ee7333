"""Four-dimensional geometric shell shaping for unamplified coherent links."""
from .constellation import (
    Constellation,
    ShapingConfig,
    build_gss,
    export_constellation,
    load_constellation_file,
    pm16qam,
    validate_gss,
)
from .metrics import MIEstimate, estimate_mi, mi_monte_carlo, papr_symbols, papr_waveform
from .system import SystemConfig, evaluate_constellation, simulate_link

__version__ = "0.1.0"

__all__ = [
    "Constellation",
    "MIEstimate",
    "ShapingConfig",
    "SystemConfig",
    "build_gss",
    "estimate_mi",
    "evaluate_constellation",
    "export_constellation",
    "load_constellation_file",
    "mi_monte_carlo",
    "papr_symbols",
    "papr_waveform",
    "pm16qam",
    "simulate_link",
    "validate_gss",
]

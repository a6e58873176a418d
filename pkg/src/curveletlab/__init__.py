"""Curvelet tight frame plus an empirical lab for edge-coefficient decay
and M-term nonlinear approximation rates of cartoon-class functions."""

from .numerics import (
    GridSpec,
    SampledField,
    LogLogFit,
    fft2,
    ifft2,
    integrate,
    fit_loglog,
    read_cvgrid,
    write_cvgrid,
)
from .frame import (
    CurveletParams,
    CurveletIndex,
    FrameSpec,
    CoefficientTable,
    synthesize_atom,
    coefficient,
    coefficient_map,
    forward,
    inverse,
    directional_moment,
)

__all__ = [
    "GridSpec",
    "SampledField",
    "LogLogFit",
    "fft2",
    "ifft2",
    "integrate",
    "fit_loglog",
    "read_cvgrid",
    "write_cvgrid",
    "CurveletParams",
    "CurveletIndex",
    "FrameSpec",
    "CoefficientTable",
    "synthesize_atom",
    "coefficient",
    "coefficient_map",
    "forward",
    "inverse",
    "directional_moment",
]

__version__ = "0.1.0"

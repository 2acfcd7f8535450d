"""Trace-driven branch prediction simulator with context-switch aware PHT resets."""

from csafsim.errors import (
    BoundsError,
    ConfigError,
    CsafsimError,
    ShapeError,
    TraceParseError,
    TraceStructureError,
)
from csafsim.predictors import (
    DirectionMap,
    PredictorConfig,
    SaturatingCounter,
    counter_invert,
    counter_update,
    make_predictor,
)
from csafsim.csaf import CsafState, SwitchReport, TransitionTable
from csafsim.trace import Branch, Switch, parse_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "BoundsError",
    "ConfigError",
    "CsafState",
    "CsafsimError",
    "DirectionMap",
    "PredictorConfig",
    "SaturatingCounter",
    "ShapeError",
    "Switch",
    "SwitchReport",
    "TraceParseError",
    "TraceStructureError",
    "TransitionTable",
    "counter_invert",
    "counter_update",
    "make_predictor",
    "parse_trace",
    "write_trace",
]

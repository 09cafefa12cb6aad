"""Taint engine: backward/forward tracing with three-level confidence."""

from .backward import BackTracer, backtrace
from .engine import analyze_app, find_seeds
from .forward import ForwardTracer, forward_trace
from .lenient import lenient_scan
from .model import (
    BudgetStop,
    Confidence,
    Diagnostics,
    Direction,
    Hit,
    Origin,
    TaintSeed,
    TaintVerdict,
    TraceBudget,
    TraceFrame,
    TraceState,
)

__all__ = [
    "BackTracer",
    "BudgetStop",
    "Confidence",
    "Diagnostics",
    "Direction",
    "ForwardTracer",
    "Hit",
    "Origin",
    "TaintSeed",
    "TaintVerdict",
    "TraceBudget",
    "TraceFrame",
    "TraceState",
    "analyze_app",
    "backtrace",
    "find_seeds",
    "forward_trace",
    "lenient_scan",
]

"""gattrace: static analysis of BLE GATT data handling in smali disassembly.

Decides whether data written to or read from GATT characteristics is
cryptographically processed, with a High/Medium/Low confidence verdict,
crypto-misuse lints, a labeled benchmark corpus with confusion-matrix
scoring, and corpus-level aggregation.
"""

from .rules import (
    Eligibility,
    MethodMatcher,
    RuleSet,
    SchemaError,
    default_ruleset,
    find_invocations,
    is_eligible,
    load_ruleset,
)
from .smali import EmptyInputError, SmaliProgram, parse_program, program_from_texts
from .tracing import (
    Confidence,
    Direction,
    TaintSeed,
    TaintVerdict,
    TraceBudget,
    analyze_app,
    backtrace,
    forward_trace,
)

__version__ = "0.1.0"

__all__ = [
    "Confidence",
    "Direction",
    "Eligibility",
    "EmptyInputError",
    "MethodMatcher",
    "RuleSet",
    "SchemaError",
    "SmaliProgram",
    "TaintSeed",
    "TaintVerdict",
    "TraceBudget",
    "analyze_app",
    "backtrace",
    "default_ruleset",
    "find_invocations",
    "forward_trace",
    "is_eligible",
    "load_ruleset",
    "parse_program",
    "program_from_texts",
    "__version__",
]

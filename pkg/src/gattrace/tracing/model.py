"""Value objects and shared trace state for the taint engine."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional

from ..smali.types import MethodSignature, Register, SmaliMethod


class Direction(enum.Enum):
    READS = "reads"
    WRITES = "writes"


class Confidence(enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"
    NONE = "None"


class Origin(enum.Enum):
    SEED_SITE = "SeedSite"
    CALLER_ARGUMENT = "CallerArgument"
    CALLEE_RETURN = "CalleeReturn"
    FIELD_ASSIGNMENT = "FieldAssignment"
    INTENT_EXTRA = "IntentExtra"
    THREAD_HANDOFF = "ThreadHandoff"
    INTERFACE_DISPATCH = "InterfaceDispatch"


@dataclass(frozen=True)
class TaintSeed:
    direction: Direction
    method: SmaliMethod
    offset: int
    seed_register: Register

    @property
    def sort_key(self):
        return (self.method.signature.sort_key, self.offset)


@dataclass(frozen=True)
class TraceFrame:
    """One hop of the witness. Frames form a parent chain from the seed site
    to the hit; ``chain()`` lists them seed-first."""

    method: MethodSignature
    tracked: tuple[Register, ...]
    origin: Origin
    parent: Optional["TraceFrame"] = field(default=None, compare=False, repr=False)

    def chain(self) -> tuple["TraceFrame", ...]:
        out: list[TraceFrame] = []
        node: Optional[TraceFrame] = self
        while node is not None:
            out.append(node)
            node = node.parent
        return tuple(reversed(out))


@dataclass(frozen=True)
class Hit:
    """A crypto reference reached by a trace."""

    frame: TraceFrame
    site: MethodSignature
    site_offset: int
    crypto_ref: MethodSignature

    def witness(self) -> tuple[TraceFrame, ...]:
        return self.frame.chain()


@dataclass(frozen=True)
class Diagnostics:
    looper_msgs_seen: int = 0
    unresolved_extras: int = 0

    def as_dict(self) -> dict:
        return {
            "looper_msgs_seen": self.looper_msgs_seen,
            "unresolved_extras": self.unresolved_extras,
        }


@dataclass(frozen=True)
class TaintVerdict:
    crypto_found: bool
    confidence: Confidence
    witness: tuple[TraceFrame, ...]
    seeds_examined: int
    budget_exhausted: bool
    diagnostics: Diagnostics = Diagnostics()

    def as_dict(self) -> dict:
        return {
            "crypto_found": self.crypto_found,
            "confidence": self.confidence.value,
            "witness": [
                {
                    "method": f.method.render(),
                    "registers": [r.render() for r in f.tracked],
                    "origin": f.origin.value,
                }
                for f in self.witness
            ],
            "seeds_examined": self.seeds_examined,
            "budget_exhausted": self.budget_exhausted,
            "diagnostics": self.diagnostics.as_dict(),
        }


@dataclass
class TraceBudget:
    max_depth: int = 64
    max_visited: int = 200_000
    wall_clock_limit: float = 300.0  # seconds, per app per direction

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_visited <= 0 or self.wall_clock_limit <= 0:
            raise ValueError("budget fields must be positive")


class BudgetStop(Exception):
    """Internal signal: global visit or wall-clock cap reached."""


class TraceState:
    """Mutable bookkeeping shared across the passes of one app analysis.

    Visit keys are (method, register, direction); a key is never re-entered
    within one seed's trace, which bounds every trace by methods x registers.
    The key count and wall clock are budgeted globally.
    """

    def __init__(self, budget: TraceBudget):
        self.budget = budget
        self.started = time.monotonic()
        self.keys_used = 0
        self.seed_keys: set[tuple[MethodSignature, Register, str]] = set()
        self.visited_methods: set[MethodSignature] = set()
        self.looper_sites: set[tuple[MethodSignature, int]] = set()
        self.unresolved_extras = 0
        self.exhausted = False

    def begin_seed(self) -> None:
        self.seed_keys.clear()

    def enter_key(self, method: MethodSignature, reg: Register, tag: str) -> bool:
        key = (method, reg, tag)
        if key in self.seed_keys:
            return False
        self.seed_keys.add(key)
        self.keys_used += 1
        if self.keys_used > self.budget.max_visited:
            self.exhausted = True
            raise BudgetStop()
        if time.monotonic() - self.started > self.budget.wall_clock_limit:
            self.exhausted = True
            raise BudgetStop()
        return True

    def depth_pruned(self) -> None:
        # A pruned path may hide evidence; surface it as budget exhaustion.
        self.exhausted = True

    def note_method(self, sig: MethodSignature) -> None:
        self.visited_methods.add(sig)

    def diagnostics(self) -> Diagnostics:
        return Diagnostics(
            looper_msgs_seen=len(self.looper_sites),
            unresolved_extras=self.unresolved_extras,
        )

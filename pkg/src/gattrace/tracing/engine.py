"""Per-app analysis driver: seed discovery and the three sequential passes.

Pass 1 traces every seed with the direct rules (High). Only if every seed
comes back negative does pass 2 re-trace with the widened rules (Medium),
and only then does the lenient sweep over all visited methods run (Low).
The first hit wins and exactly one confidence level is ever reported.
"""

from __future__ import annotations

from typing import Optional

from ..rules import RuleSet, default_ruleset, find_invocations
from ..smali.opcodes import Kind
from ..smali.types import SmaliProgram
from .backward import BackTracer
from .forward import ForwardTracer
from .lenient import lenient_scan
from .model import (
    BudgetStop,
    Confidence,
    Direction,
    Hit,
    TaintSeed,
    TaintVerdict,
    TraceBudget,
    TraceState,
)


def find_seeds(program: SmaliProgram, rules: RuleSet, direction: Direction) -> list[TaintSeed]:
    """Seeds in deterministic (class, method, offset) order.

    Writes: the value argument of each matched setValue call (the register
    after the receiver). Reads: the register defined by the move-result
    following each matched getValue call; calls whose result is discarded
    yield no seed.
    """
    matchers = rules.write_sinks if direction is Direction.WRITES else rules.read_sources
    seeds: list[TaintSeed] = []
    for method, offset in find_invocations(program, matchers):
        ins = method.instructions[offset]
        if direction is Direction.WRITES:
            if len(ins.operands) >= 2:
                seeds.append(TaintSeed(direction, method, offset, ins.operands[1]))
        else:
            nxt = offset + 1
            if nxt < len(method.instructions) and method.instructions[nxt].opcode is Kind.MOVE_RESULT:
                seeds.append(TaintSeed(direction, method, offset, method.instructions[nxt].operands[0]))
    return seeds


def _verdict(state: TraceState, found: bool, conf: Confidence, witness, n_seeds: int) -> TaintVerdict:
    return TaintVerdict(
        crypto_found=found,
        confidence=conf,
        witness=witness,
        seeds_examined=n_seeds,
        budget_exhausted=state.exhausted,
        diagnostics=state.diagnostics(),
    )


def analyze_app(
    program: SmaliProgram,
    rules: Optional[RuleSet] = None,
    direction: Direction = Direction.WRITES,
    budget: Optional[TraceBudget] = None,
) -> TaintVerdict:
    rules = rules or default_ruleset()
    budget = budget or TraceBudget()
    seeds = find_seeds(program, rules, direction)
    state = TraceState(budget)
    tracer_cls = BackTracer if direction is Direction.WRITES else ForwardTracer

    try:
        for widen, conf in ((False, Confidence.HIGH), (True, Confidence.MEDIUM)):
            tracer = tracer_cls(program, rules, state, widen)
            for seed in seeds:
                state.begin_seed()
                hit: Optional[Hit] = tracer.trace(seed)
                if hit is not None:
                    return _verdict(state, True, conf, hit.witness(), len(seeds))
    except BudgetStop:
        return _verdict(state, False, Confidence.NONE, (), len(seeds))

    hit = lenient_scan(state.visited_methods, program, rules)
    if hit is not None:
        return _verdict(state, True, Confidence.LOW, hit.witness(), len(seeds))
    return _verdict(state, False, Confidence.NONE, (), len(seeds))

"""Final, least-stringent pass: search every previously visited method for
any crypto-library invoke, regardless of dataflow."""

from __future__ import annotations

from typing import Iterable, Optional

from ..rules import RuleSet
from ..smali.opcodes import Kind
from ..smali.types import MethodSignature, SmaliProgram
from .model import Hit, Origin, TraceFrame


def lenient_scan(
    visited: Iterable[MethodSignature], program: SmaliProgram, rules: RuleSet
) -> Optional[Hit]:
    for sig in sorted(visited, key=lambda s: s.sort_key):
        method = program.method(sig)
        if method is None:
            continue
        for ins in method.instructions:
            if ins.opcode is Kind.INVOKE and rules.is_crypto(ins.method_ref):
                frame = TraceFrame(sig, ins.operands, Origin.SEED_SITE)
                return Hit(frame, sig, ins.offset, ins.method_ref)
    return None

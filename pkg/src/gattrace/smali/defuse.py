"""Per-instruction def/use sets.

Wide (J/D) values occupy two registers; both halves appear in the def/use
sets so that taint on either half covers the pair. ``/range`` invokes were
expanded at parse time, so invoke operand lists are always explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .opcodes import Kind, is_wide_value, unop_dst_wide, unop_src_wide
from .types import Instruction, Register, SmaliMethod


@dataclass(frozen=True)
class DefUse:
    defs: tuple[Register, ...]
    uses: tuple[Register, ...]
    invoke_link: int | None = None  # move-result -> offset of the producing invoke


def _wide(reg: Register) -> tuple[Register, Register]:
    return (reg, reg.pair())


def _entry(ins: Instruction, prev: Instruction | None) -> DefUse:
    ops = ins.operands
    k = ins.opcode
    name = ins.name

    if k is Kind.MOVE:
        if is_wide_value(name):
            return DefUse(_wide(ops[0]), _wide(ops[1]))
        return DefUse((ops[0],), (ops[1],))
    if k is Kind.MOVE_RESULT:
        defs = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        link = None
        if prev is not None and prev.opcode in (Kind.INVOKE, Kind.FILLED_NEW_ARRAY):
            link = prev.offset
        return DefUse(defs, (), invoke_link=link)
    if k is Kind.CONST:
        defs = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse(defs, ())
    if k in (Kind.NEW_ARRAY,):
        return DefUse((ops[0],), (ops[1],))
    if k is Kind.NEW_INSTANCE:
        return DefUse((ops[0],), ())
    if k is Kind.AGET:
        defs = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse(defs, (ops[1], ops[2]))
    if k is Kind.APUT:
        uses = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse((), uses + (ops[1], ops[2]))
    if k is Kind.IGET:
        defs = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse(defs, (ops[1],))
    if k is Kind.SGET:
        defs = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse(defs, ())
    if k is Kind.IPUT:
        uses = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse((), uses + (ops[1],))
    if k is Kind.SPUT:
        uses = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse((), uses)
    if k in (Kind.INVOKE, Kind.FILLED_NEW_ARRAY):
        return DefUse((), ops)
    if k is Kind.FILL_ARRAY_DATA:
        return DefUse((), ops)
    if k is Kind.RETURN:
        uses = _wide(ops[0]) if is_wide_value(name) else (ops[0],)
        return DefUse((), uses)
    if k in (Kind.RETURN_VOID, Kind.GOTO):
        return DefUse((), ())
    if k is Kind.IF:
        return DefUse((), ops)
    if k is Kind.CMP:
        wide_src = is_wide_value(name)
        uses: tuple[Register, ...] = ()
        for src in ops[1:]:
            uses += _wide(src) if wide_src else (src,)
        return DefUse((ops[0],), uses)
    if k is Kind.UNOP:
        defs = _wide(ops[0]) if unop_dst_wide(name) else (ops[0],)
        uses = _wide(ops[1]) if unop_src_wide(name) else (ops[1],)
        return DefUse(defs, uses)
    if k is Kind.BINOP:
        wide = is_wide_value(name)
        defs = _wide(ops[0]) if wide else (ops[0],)
        uses = ()
        for src in ops[1:]:
            uses += _wide(src) if wide else (src,)
        return DefUse(defs, uses)
    # Opaque: evident registers are recorded as uses only; no defs, so these
    # instructions neither taint nor sanitize.
    return DefUse((), ops)


def def_use(method: SmaliMethod) -> tuple[DefUse, ...]:
    """Def/use table aligned with ``method.instructions``."""
    out: list[DefUse] = []
    prev: Instruction | None = None
    for ins in method.instructions:
        out.append(_entry(ins, prev))
        prev = ins
    return tuple(out)

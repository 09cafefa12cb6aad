"""Cross-component transfer points: intent extras and thread handoffs.

Intent links pair ``putExtra`` and ``get*Extra`` call sites whose key
argument resolves to the same string constant within the calling method.
Thread links pair an ``execute``-style dispatch with the ``doInBackground``
method of the dispatched class, connecting the argument array to the
background method's parameter.

Looper/Messenger/Handler message traffic is deliberately not modeled; call
sites are only counted for diagnostics.
"""

from __future__ import annotations

from typing import Optional

from ..smali.defuse import DefUse
from ..smali.opcodes import Kind
from ..smali.types import Instruction, MethodSignature, Register, SmaliMethod, SmaliProgram

INTENT_CLASS = "Landroid/content/Intent;"

# dispatch method name -> operand index of the argument array
THREAD_DISPATCH_ARG = {"execute": 1, "executeOnExecutor": 2}
BACKGROUND_METHOD = "doInBackground"

LOOPER_CLASSES = ("Landroid/os/Looper;", "Landroid/os/Messenger;", "Landroid/os/Handler;")


def is_extra_put(sig: Optional[MethodSignature]) -> bool:
    return sig is not None and sig.class_descriptor == INTENT_CLASS and sig.name == "putExtra"


def is_extra_get(sig: Optional[MethodSignature]) -> bool:
    return (
        sig is not None
        and sig.class_descriptor == INTENT_CLASS
        and sig.name.startswith("get")
        and sig.name.endswith("Extra")
    )


def is_looper_ref(sig: Optional[MethodSignature]) -> bool:
    return sig is not None and sig.class_descriptor in LOOPER_CLASSES


def resolve_string_const(
    method: SmaliMethod, table: tuple[DefUse, ...], reg: Register, before: int
) -> Optional[str]:
    """The string constant held by ``reg`` at ``before``, or None when the
    last reaching definition is not a const-string."""
    for i in range(before - 1, -1, -1):
        if reg in table[i].defs:
            ins = method.instructions[i]
            if ins.opcode is Kind.CONST and ins.name.startswith("const-string"):
                return str(ins.literal)
            return None
    return None


def _extra_key_at(method: SmaliMethod, table, ins: Instruction) -> Optional[str]:
    if len(ins.operands) < 2:
        return None
    return resolve_string_const(method, table, ins.operands[1], ins.offset)


def put_extra_sites(program: SmaliProgram, tables, key: str) -> list[tuple[SmaliMethod, Instruction]]:
    """All putExtra call sites whose key constant equals ``key``."""
    out = []
    for method, ins in program.iter_invocations():
        if is_extra_put(ins.method_ref) and len(ins.operands) >= 3:
            if _extra_key_at(method, tables(method), ins) == key:
                out.append((method, ins))
    return out


def get_extra_sites(program: SmaliProgram, tables, key: str) -> list[tuple[SmaliMethod, Instruction]]:
    """All get*Extra call sites whose key constant equals ``key``."""
    out = []
    for method, ins in program.iter_invocations():
        if is_extra_get(ins.method_ref):
            if _extra_key_at(method, tables(method), ins) == key:
                out.append((method, ins))
    return out


def extra_key_of(method: SmaliMethod, tables, ins: Instruction) -> Optional[str]:
    return _extra_key_at(method, tables(method), ins)


def dispatch_array_operand(ins: Instruction) -> Optional[Register]:
    if ins.method_ref is None:
        return None
    idx = THREAD_DISPATCH_ARG.get(ins.method_ref.name)
    if idx is None or idx >= len(ins.operands):
        return None
    return ins.operands[idx]


def background_method(program: SmaliProgram, class_descriptor: str) -> Optional[SmaliMethod]:
    cls = program.classes.get(class_descriptor)
    if cls is None:
        return None
    for m in cls.methods:
        if m.signature.name == BACKGROUND_METHOD and not m.is_abstract:
            return m
    return None


def dispatch_sites_for(program: SmaliProgram, class_descriptor: str) -> list[tuple[SmaliMethod, Instruction]]:
    """Dispatch invokes (execute/executeOnExecutor) on ``class_descriptor``."""
    out = []
    for method, ins in program.iter_invocations():
        ref = ins.method_ref
        if ref is None or ref.class_descriptor != class_descriptor:
            continue
        if ref.name in THREAD_DISPATCH_ARG and dispatch_array_operand(ins) is not None:
            out.append((method, ins))
    return out


def cross_component_hop(program: SmaliProgram, method: SmaliMethod, ins: Instruction):
    """Far ends of the cross-component boundary at ``ins``.

    For a get*Extra invoke: frames at the putExtra sites sharing its key
    constant (tracking the stored value register). For a putExtra invoke:
    frames at the matching get sites (tracking the received result). For a
    thread dispatch: a frame at the background method's parameter register.
    Unresolvable (non-constant) keys link nothing.
    """
    from ..smali.defuse import def_use
    from ..smali.types import RegKind
    from .model import Origin, TraceFrame

    tables: dict = {}

    def table(m: SmaliMethod):
        t = tables.get(m.signature)
        if t is None:
            t = def_use(m)
            tables[m.signature] = t
        return t

    frames = []
    ref = ins.method_ref
    if is_extra_get(ref):
        key = _extra_key_at(method, table(method), ins)
        if key is not None:
            for m2, put in put_extra_sites(program, table, key):
                if len(put.operands) >= 3:
                    frames.append(TraceFrame(m2.signature, (put.operands[2],), Origin.INTENT_EXTRA))
    elif is_extra_put(ref):
        key = _extra_key_at(method, table(method), ins)
        if key is not None:
            for m2, get in get_extra_sites(program, table, key):
                nxt = get.offset + 1
                if nxt < len(m2.instructions) and m2.instructions[nxt].opcode is Kind.MOVE_RESULT:
                    frames.append(TraceFrame(
                        m2.signature, (m2.instructions[nxt].operands[0],), Origin.INTENT_EXTRA
                    ))
    elif ref is not None and ref.name in THREAD_DISPATCH_ARG:
        bg = background_method(program, ref.class_descriptor)
        if bg is not None and dispatch_array_operand(ins) is not None:
            frames.append(TraceFrame(bg.signature, (Register(RegKind.PARAM, 1),), Origin.THREAD_HANDOFF))
    return frames

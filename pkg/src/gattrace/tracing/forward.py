"""Forward taint propagation from read-source results.

The register holding the read value taints whatever its uses produce:
move/arith/compare results, array contents through aput, invoke results,
fields through iput (with every read site of the field picked up
program-wide), intent extras and thread handoffs. Taint dies when a
register is redefined by a const, a fresh allocation, or the result of an
operation with no tainted input. Internal callees that receive tainted
arguments are scanned with the matching parameter registers tainted, which
yields the tree of traces.

The widened pass also resolves interface-dispatched callees and taints
sibling arguments of calls that consume a tainted register.
"""

from __future__ import annotations

from typing import Optional

from ..rules import RuleSet
from ..smali.defuse import def_use
from ..smali.opcodes import Kind, is_wide_value
from ..smali.types import FieldId, MethodSignature, Register, RegKind, SmaliMethod, SmaliProgram
from . import hops
from .model import Hit, Origin, TaintSeed, TraceFrame, TraceState


class ForwardTracer:
    def __init__(self, program: SmaliProgram, rules: RuleSet, state: TraceState, widen: bool):
        self.program = program
        self.rules = rules
        self.state = state
        self.widen = widen
        self.tainted_fields: set[FieldId] = set()
        self._tables: dict[MethodSignature, tuple] = {}

    def table(self, method: SmaliMethod):
        t = self._tables.get(method.signature)
        if t is None:
            t = def_use(method)
            self._tables[method.signature] = t
        return t

    def trace(self, seed: TaintSeed) -> Optional[Hit]:
        self.tainted_fields.clear()
        frame = TraceFrame(seed.method.signature, (seed.seed_register,), Origin.SEED_SITE)
        return self._scan(seed.method, seed.offset + 2, {seed.seed_register}, frame, 0, via_call=False)

    # -- internals ---------------------------------------------------------

    def _enqueue_field_reads(self, field: FieldId, frame: TraceFrame, depth: int) -> Optional[Hit]:
        for m2, off2 in self.program.field_reads_index.get(field, ()):
            dest = set(self.table(m2)[off2].defs)
            if not dest:
                continue
            f2 = TraceFrame(m2.signature, tuple(sorted(dest, key=lambda r: r.sort_key)),
                            Origin.FIELD_ASSIGNMENT, parent=frame)
            hit = self._scan(m2, off2 + 1, dest, f2, depth + 1, via_call=False)
            if hit:
                return hit
        return None

    def _intent_hop(self, method: SmaliMethod, ins, frame: TraceFrame, depth: int) -> Optional[Hit]:
        key = hops.extra_key_of(method, self.table, ins)
        if key is None:
            self.state.unresolved_extras += 1
            return None
        for m2, get in hops.get_extra_sites(self.program, self.table, key):
            nxt = get.offset + 1
            if nxt >= len(m2.instructions) or m2.instructions[nxt].opcode is not Kind.MOVE_RESULT:
                continue
            dest = set(self.table(m2)[nxt].defs)
            f2 = TraceFrame(m2.signature, tuple(sorted(dest, key=lambda r: r.sort_key)),
                            Origin.INTENT_EXTRA, parent=frame)
            hit = self._scan(m2, nxt + 1, dest, f2, depth + 1, via_call=False)
            if hit:
                return hit
        return None

    def _descend(self, ins, tainted: set[Register], frame: TraceFrame, depth: int) -> Optional[Hit]:
        ref = ins.method_ref
        targets: list[tuple[SmaliMethod, Origin]] = []
        direct = self.program.method(ref)
        if direct is not None and not direct.is_abstract:
            targets.append((direct, Origin.CALLER_ARGUMENT))
        elif self.widen:
            for impl in self.program.interface_impl_index.get(ref.class_descriptor, ()):
                sig = MethodSignature(impl, ref.name, ref.param_descriptors, ref.return_descriptor)
                m = self.program.method(sig)
                if m is not None and not m.is_abstract:
                    targets.append((m, Origin.INTERFACE_DISPATCH))
        for callee, origin in targets:
            params = {
                Register(RegKind.PARAM, k)
                for k, op in enumerate(ins.operands)
                if op in tainted and k < callee.param_slot_count()
            }
            if not params:
                continue
            f2 = TraceFrame(callee.signature, tuple(sorted(params, key=lambda r: r.sort_key)),
                            origin, parent=frame)
            hit = self._scan(callee, 0, params, f2, depth + 1, via_call=True)
            if hit:
                return hit
        return None

    def _return_fanout(self, method: SmaliMethod, frame: TraceFrame, depth: int) -> Optional[Hit]:
        sigs = [method.signature]
        if self.widen:
            cls = self.program.classes.get(method.signature.class_descriptor)
            if cls is not None:
                for iface in cls.interfaces:
                    sigs.append(MethodSignature(
                        iface, method.signature.name,
                        method.signature.param_descriptors, method.signature.return_descriptor,
                    ))
        for sig in sigs:
            for caller, off in self.program.callers_index.get(sig, ()):
                nxt = off + 1
                if nxt >= len(caller.instructions) or caller.instructions[nxt].opcode is not Kind.MOVE_RESULT:
                    continue
                dest = set(self.table(caller)[nxt].defs)
                f2 = TraceFrame(caller.signature, tuple(sorted(dest, key=lambda r: r.sort_key)),
                                Origin.CALLEE_RETURN, parent=frame)
                hit = self._scan(caller, nxt + 1, dest, f2, depth + 1, via_call=False)
                if hit:
                    return hit
        return None

    def _scan(self, method: SmaliMethod, start: int, entry_tainted: set[Register],
              frame: TraceFrame, depth: int, via_call: bool) -> Optional[Hit]:
        if depth > self.state.budget.max_depth:
            self.state.depth_pruned()
            return None
        fresh = False
        for reg in sorted(entry_tainted, key=lambda r: r.sort_key):
            if self.state.enter_key(method.signature, reg, "f"):
                fresh = True
        if not fresh:
            return None
        self.state.note_method(method.signature)

        tainted = set(entry_tainted)
        table = self.table(method)
        instrs = method.instructions
        returned_tainted = False

        for i in range(start, len(instrs)):
            ins = instrs[i]
            du = table[i]
            k = ins.opcode

            if k in (Kind.INVOKE, Kind.FILLED_NEW_ARRAY):
                if k is Kind.INVOKE and hops.is_looper_ref(ins.method_ref):
                    self.state.looper_sites.add((method.signature, i))
                nxt_defs: tuple[Register, ...] = ()
                if i + 1 < len(instrs) and instrs[i + 1].opcode is Kind.MOVE_RESULT:
                    nxt_defs = table[i + 1].defs
                has_taint = any(op in tainted for op in ins.operands)
                if has_taint and k is Kind.INVOKE:
                    ref = ins.method_ref
                    if self.rules.is_crypto(ref):
                        return Hit(frame, method.signature, i, ref)
                    if hops.is_extra_put(ref) and len(ins.operands) >= 3 \
                            and any(op in tainted for op in ins.operands[2:]):
                        hit = self._intent_hop(method, ins, frame, depth)
                        if hit:
                            return hit
                    arr = hops.dispatch_array_operand(ins)
                    if arr is not None and arr in tainted:
                        bg = hops.background_method(self.program, ref.class_descriptor)
                        if bg is not None:
                            p1 = Register(RegKind.PARAM, 1)
                            f2 = TraceFrame(bg.signature, (p1,), Origin.THREAD_HANDOFF, parent=frame)
                            hit = self._scan(bg, 0, {p1}, f2, depth + 1, via_call=False)
                            if hit:
                                return hit
                    hit = self._descend(ins, tainted, frame, depth)
                    if hit:
                        return hit
                if has_taint:
                    tainted |= set(nxt_defs)
                    if self.widen:
                        tainted |= set(ins.operands)
                else:
                    tainted -= set(nxt_defs)
                continue

            if k is Kind.MOVE_RESULT:
                continue  # handled with its producing invoke

            if k in (Kind.CONST, Kind.NEW_INSTANCE, Kind.NEW_ARRAY):
                tainted -= set(du.defs)
                continue

            if k is Kind.FILL_ARRAY_DATA:
                tainted.discard(ins.operands[0])
                continue

            if k is Kind.MOVE or k in (Kind.UNOP, Kind.CMP, Kind.BINOP):
                if any(u in tainted for u in du.uses):
                    tainted |= set(du.defs)
                else:
                    tainted -= set(du.defs)
                continue

            if k is Kind.AGET:
                if ins.operands[1] in tainted:
                    tainted |= set(du.defs)
                else:
                    tainted -= set(du.defs)
                continue

            if k is Kind.APUT:
                if any(u in tainted for u in du.uses[:-2]):
                    tainted.add(ins.operands[1])
                continue

            if k in (Kind.IPUT, Kind.SPUT):
                value_regs = {ins.operands[0]}
                if is_wide_value(ins.name):
                    value_regs.add(ins.operands[0].pair())
                if value_regs & tainted:
                    field = ins.field_ref
                    if field is not None and field not in self.tainted_fields:
                        self.tainted_fields.add(field)
                        hit = self._enqueue_field_reads(field, frame, depth)
                        if hit:
                            return hit
                continue

            if k in (Kind.IGET, Kind.SGET):
                if ins.field_ref in self.tainted_fields:
                    tainted |= set(du.defs)
                else:
                    tainted -= set(du.defs)
                continue

            if k is Kind.RETURN:
                if any(u in tainted for u in du.uses) and not via_call and not returned_tainted:
                    returned_tainted = True
                    hit = self._return_fanout(method, frame, depth)
                    if hit:
                        return hit
                continue

            # IF/GOTO/RETURN_VOID/OPAQUE: no transfer, no kill.

        return None


def forward_trace(seed: TaintSeed, program: SmaliProgram, rules: RuleSet,
                  budget=None) -> Optional[tuple]:
    """Single-seed convenience wrapper mirroring ``backtrace``."""
    from .model import BudgetStop, Confidence, TraceBudget

    budget = budget or TraceBudget()
    state = TraceState(budget)
    for widen, conf in ((False, Confidence.HIGH), (True, Confidence.MEDIUM)):
        state.begin_seed()
        try:
            hit = ForwardTracer(program, rules, state, widen).trace(seed)
        except BudgetStop:
            return None
        if hit:
            return conf, hit.witness()
    return None

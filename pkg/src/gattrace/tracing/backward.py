"""Backward slicing from write-sink arguments.

Walks reaching definitions inside a method, descends into the return slice
of internal callees, ascends to callers when a parameter register is
reached, fans out over every assignment of a field (order-insensitive), and
follows intent-extra and thread-handoff links. A path terminates at a
const/new-array/new-instance definition.

The widened pass additionally continues through the arguments of invokes
(internal and unresolvable), treats any crypto call that *uses* a traced
register as evidence, pulls in sibling arguments of such calls, and
resolves interface-dispatched targets.
"""

from __future__ import annotations

from typing import Optional

from ..rules import RuleSet
from ..smali.defuse import def_use
from ..smali.opcodes import Kind
from ..smali.types import MethodSignature, Register, RegKind, SmaliMethod, SmaliProgram
from . import hops
from .model import Hit, Origin, TaintSeed, TraceFrame, TraceState


class BackTracer:
    def __init__(self, program: SmaliProgram, rules: RuleSet, state: TraceState, widen: bool,
                 collector=None):
        self.program = program
        self.rules = rules
        self.state = state
        self.widen = widen
        # When a collector is attached the walker records the origins it
        # terminates at instead of returning crypto hits (misuse lints reuse
        # the direct pass this way).
        self.collector = collector
        self._tables: dict[MethodSignature, tuple] = {}

    def table(self, method: SmaliMethod):
        t = self._tables.get(method.signature)
        if t is None:
            t = def_use(method)
            self._tables[method.signature] = t
        return t

    def trace(self, seed: TaintSeed) -> Optional[Hit]:
        frame = TraceFrame(seed.method.signature, (seed.seed_register,), Origin.SEED_SITE)
        return self._trace(seed.method, seed.seed_register, seed.offset, frame, 0)

    def trace_register(self, method: SmaliMethod, reg: Register, before: int) -> Optional[Hit]:
        """Walk one register without a seed, e.g. for origin collection."""
        return self._trace(method, reg, before, frame=None, depth=0)

    # -- internals ---------------------------------------------------------

    def _resolved_callees(self, ref: MethodSignature) -> list[tuple[SmaliMethod, bool]]:
        """Concrete in-program targets for an invoke. The bool marks targets
        found via interface resolution (widened pass only)."""
        out: list[tuple[SmaliMethod, bool]] = []
        direct = self.program.method(ref)
        if direct is not None and not direct.is_abstract:
            out.append((direct, False))
            return out
        if self.widen:
            for impl in self.program.interface_impl_index.get(ref.class_descriptor, ()):
                sig = MethodSignature(impl, ref.name, ref.param_descriptors, ref.return_descriptor)
                m = self.program.method(sig)
                if m is not None and not m.is_abstract:
                    out.append((m, True))
        return out

    def _descend_returns(self, callee: SmaliMethod, frame: TraceFrame, depth: int,
                         via_iface: bool) -> Optional[Hit]:
        for j, ins in enumerate(callee.instructions):
            if ins.opcode is Kind.RETURN:
                ret_reg = ins.operands[0]
                origin = Origin.INTERFACE_DISPATCH if via_iface else Origin.CALLEE_RETURN
                f2 = TraceFrame(callee.signature, (ret_reg,), origin, parent=frame)
                hit = self._trace(callee, ret_reg, j, f2, depth + 1)
                if hit:
                    return hit
        return None

    def _intent_hop(self, method: SmaliMethod, ins, frame: TraceFrame, depth: int) -> Optional[Hit]:
        key = hops.extra_key_of(method, self.table, ins)
        if key is None:
            self.state.unresolved_extras += 1
            return None
        for m2, put in hops.put_extra_sites(self.program, self.table, key):
            if len(put.operands) < 3:
                continue
            value_reg = put.operands[2]
            f2 = TraceFrame(m2.signature, (value_reg,), Origin.INTENT_EXTRA, parent=frame)
            hit = self._trace(m2, value_reg, put.offset, f2, depth + 1)
            if hit:
                return hit
        return None

    def _move_result_def(self, method: SmaliMethod, inv_offset: int, frame: TraceFrame,
                         depth: int) -> Optional[Hit]:
        inv = method.instructions[inv_offset]
        if inv.opcode is Kind.FILLED_NEW_ARRAY:
            for arg in inv.operands:
                hit = self._trace(method, arg, inv_offset, frame, depth)
                if hit:
                    return hit
            return None
        ref = inv.method_ref
        if ref is None:
            return None
        if hops.is_looper_ref(ref):
            self.state.looper_sites.add((method.signature, inv_offset))
        if self.rules.is_crypto(ref):
            if self.collector is not None:
                self.collector.on_invoke_origin(ref)
                return None
            return Hit(frame, method.signature, inv_offset, ref)
        if hops.is_extra_get(ref):
            return self._intent_hop(method, inv, frame, depth)
        callees = self._resolved_callees(ref)
        if not callees and self.collector is not None:
            self.collector.on_invoke_origin(ref)
        for callee, via_iface in callees:
            hit = self._descend_returns(callee, frame, depth, via_iface)
            if hit:
                return hit
        if self.widen or (self.collector is not None and not callees):
            # Associated-entity widening: the value may have been produced
            # from any input of the call, opaque callees included. Origin
            # collection keeps this continuation so constants behind simple
            # conversion calls (String.getBytes and the like) are still seen.
            for arg in inv.operands:
                hit = self._trace(method, arg, inv_offset, frame, depth)
                if hit:
                    return hit
        return None

    def _param_ascent(self, method: SmaliMethod, reg: Register, frame: TraceFrame,
                      depth: int) -> Optional[Hit]:
        if method.signature.name == hops.BACKGROUND_METHOD and reg == Register(RegKind.PARAM, 1):
            for m2, dispatch in hops.dispatch_sites_for(self.program, method.signature.class_descriptor):
                arr = hops.dispatch_array_operand(dispatch)
                f2 = TraceFrame(m2.signature, (arr,), Origin.THREAD_HANDOFF, parent=frame)
                hit = self._trace(m2, arr, dispatch.offset, f2, depth + 1)
                if hit:
                    return hit

        targets = [(method.signature, Origin.CALLER_ARGUMENT)]
        if self.widen:
            cls = self.program.classes.get(method.signature.class_descriptor)
            if cls is not None:
                for iface in cls.interfaces:
                    sig2 = MethodSignature(
                        iface, method.signature.name,
                        method.signature.param_descriptors, method.signature.return_descriptor,
                    )
                    targets.append((sig2, Origin.INTERFACE_DISPATCH))
        for sig, origin in targets:
            for caller, off in self.program.callers_index.get(sig, ()):
                call = caller.instructions[off]
                if reg.index >= len(call.operands):
                    continue
                arg = call.operands[reg.index]
                f2 = TraceFrame(caller.signature, (arg,), origin, parent=frame)
                hit = self._trace(caller, arg, off, f2, depth + 1)
                if hit:
                    return hit
        return None

    def _trace(self, method: SmaliMethod, reg: Register, before: int,
               frame: TraceFrame, depth: int) -> Optional[Hit]:
        if depth > self.state.budget.max_depth:
            self.state.depth_pruned()
            return None
        while True:
            if not self.state.enter_key(method.signature, reg, "b"):
                return None
            self.state.note_method(method.signature)
            table = self.table(method)
            instrs = method.instructions
            i = before - 1
            switched = False
            while i >= 0:
                ins = instrs[i]
                du = table[i]
                if reg in du.defs:
                    k = ins.opcode
                    if k in (Kind.CONST, Kind.NEW_ARRAY, Kind.NEW_INSTANCE):
                        if self.collector is not None:
                            self.collector.on_terminal(ins)
                        return None
                    if k is Kind.MOVE or k is Kind.AGET:
                        # aget transfers from the array register
                        reg = ins.operands[1]
                        before = i
                        switched = True
                        break
                    if k in (Kind.UNOP, Kind.CMP, Kind.BINOP):
                        seen: list[Register] = []
                        for u in du.uses:
                            if u not in seen:
                                seen.append(u)
                                hit = self._trace(method, u, i, frame, depth)
                                if hit:
                                    return hit
                        return None
                    if k in (Kind.IGET, Kind.SGET):
                        for m2, off2 in self.program.field_writes_index.get(ins.field_ref, ()):
                            src = m2.instructions[off2].operands[0]
                            f2 = TraceFrame(m2.signature, (src,), Origin.FIELD_ASSIGNMENT, parent=frame)
                            hit = self._trace(m2, src, off2, f2, depth + 1)
                            if hit:
                                return hit
                        return None
                    if k is Kind.MOVE_RESULT:
                        if du.invoke_link is None:
                            return None
                        return self._move_result_def(method, du.invoke_link, frame, depth)
                    return None  # defensive: no other kind defines registers
                # Non-defining instructions that still transfer or use data.
                k = ins.opcode
                if k is Kind.APUT and len(ins.operands) >= 2 and reg == ins.operands[1]:
                    hit = self._trace(method, ins.operands[0], i, frame, depth)
                    if hit:
                        return hit
                elif k is Kind.FILL_ARRAY_DATA and ins.operands and reg == ins.operands[0]:
                    if self.collector is not None:
                        self.collector.on_terminal(ins)
                    return None  # constant payload overwrote the array content
                elif k is Kind.INVOKE:
                    if hops.is_looper_ref(ins.method_ref):
                        self.state.looper_sites.add((method.signature, i))
                    if reg in ins.operands:
                        ref = ins.method_ref
                        is_ctor = ins.name.startswith("invoke-direct") and ref is not None \
                            and ref.name == "<init>" and reg == ins.operands[0]
                        if is_ctor and self.rules.is_crypto(ref):
                            if self.collector is not None:
                                self.collector.on_invoke_origin(ref)
                            else:
                                return Hit(frame, method.signature, i, ref)
                        if self.widen and not is_ctor:
                            if self.rules.is_crypto(ref):
                                return Hit(frame, method.signature, i, ref)
                            for other in ins.operands:
                                if other != reg:
                                    hit = self._trace(method, other, i, frame, depth)
                                    if hit:
                                        return hit
                i -= 1
            if switched:
                continue
            if reg.kind is RegKind.PARAM:
                return self._param_ascent(method, reg, frame, depth)
            return None


def backtrace(seed: TaintSeed, program: SmaliProgram, rules: RuleSet,
              budget=None) -> Optional[tuple]:
    """Single-seed convenience wrapper: run the direct pass, then the
    widened pass. Returns (confidence, witness frames) or None."""
    from .model import BudgetStop, Confidence, TraceBudget

    budget = budget or TraceBudget()
    state = TraceState(budget)
    for widen, conf in ((False, Confidence.HIGH), (True, Confidence.MEDIUM)):
        state.begin_seed()
        try:
            hit = BackTracer(program, rules, state, widen).trace(seed)
        except BudgetStop:
            return None
        if hit:
            return conf, hit.witness()
    return None

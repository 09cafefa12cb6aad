"""Crypto-misuse lints over the methods implicated by a positive verdict.

Detects insecure cipher modes (explicit ECB and bare algorithm names whose
mode defaults provider-side), hardcoded/non-random key and IV material
flowing into key-spec or IV-spec constructors, and cipher instances that
are created but never finalized. Lints examine only the witness methods and
their direct callees; keys fetched from files, servers or device
identifiers are out of scope by design.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .rules import RuleSet, default_ruleset
from .smali.defuse import def_use
from .smali.opcodes import Kind
from .smali.types import Instruction, MethodSignature, Register, SmaliMethod, SmaliProgram
from .tracing.backward import BackTracer
from .tracing.hops import resolve_string_const
from .tracing.model import BudgetStop, TraceBudget, TraceState

CIPHER_CLASS = "Ljavax/crypto/Cipher;"
KEY_SPEC_CLASSES = ("Ljavax/crypto/spec/SecretKeySpec;",)
IV_SPEC_CLASSES = ("Ljavax/crypto/spec/IvParameterSpec;", "Ljavax/crypto/spec/GCMParameterSpec;")
RANDOM_SOURCE_CLASSES = {
    "Ljava/security/SecureRandom;",
    "Ljavax/crypto/KeyGenerator;",
    "Ljava/security/KeyPairGenerator;",
    "Ljavax/crypto/KeyAgreement;",
}
FINALIZING_NAMES = {"doFinal", "update", "wrap", "unwrap"}


class MisuseKind(enum.Enum):
    BAD_CIPHER_MODE = "BadCipherMode"
    DEFAULT_MODE_AES = "DefaultModeAES"
    NON_RANDOM_KEY = "NonRandomKey"
    NON_RANDOM_IV = "NonRandomIV"
    HARDCODED_KEY_BYTES = "HardcodedKeyBytes"
    HARDCODED_IV_BYTES = "HardcodedIVBytes"
    DEAD_CRYPTO_CODE = "DeadCryptoCode"


@dataclass(frozen=True)
class MisuseFinding:
    kind: MisuseKind
    site: tuple[MethodSignature, int]
    detail: str

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "method": self.site[0].render(),
            "offset": self.site[1],
            "detail": self.detail,
        }


class _OriginCollector:
    """Receives the terminal origins the direct backtrace pass reaches."""

    def __init__(self):
        self.const_bytes = False
        self.const_string = False
        self.const_scalar = False
        self.allocation = False
        self.random_source = False
        self.opaque = False

    def on_terminal(self, ins: Instruction) -> None:
        if ins.opcode is Kind.FILL_ARRAY_DATA:
            self.const_bytes = True
        elif ins.opcode is Kind.CONST and ins.name.startswith("const-string"):
            self.const_string = True
        elif ins.opcode is Kind.CONST:
            self.const_scalar = True
        else:
            self.allocation = True

    def on_invoke_origin(self, ref: MethodSignature) -> None:
        if ref.class_descriptor in RANDOM_SOURCE_CLASSES:
            self.random_source = True
        else:
            self.opaque = True

    @property
    def constant_material(self) -> bool:
        return self.const_bytes or self.const_string


def _collect_origins(program: SmaliProgram, method: SmaliMethod, reg: Register,
                     before: int) -> _OriginCollector:
    collector = _OriginCollector()
    state = TraceState(TraceBudget())
    state.begin_seed()
    tracer = BackTracer(program, default_ruleset(), state, widen=False, collector=collector)
    try:
        tracer.trace_register(method, reg, before)
    except BudgetStop:
        pass
    return collector


def _scope_methods(program: SmaliProgram, witness: set[MethodSignature]) -> list[SmaliMethod]:
    """Witness methods plus their direct in-program callees."""
    sigs = set(witness)
    for sig in witness:
        m = program.method(sig)
        if m is None:
            continue
        for ins in m.instructions:
            if ins.opcode is Kind.INVOKE and ins.method_ref is not None:
                if program.method(ins.method_ref) is not None:
                    sigs.add(ins.method_ref)
    out = [program.method(s) for s in sorted(sigs, key=lambda s: s.sort_key)]
    return [m for m in out if m is not None and not m.is_abstract]


def _transformation_findings(method: SmaliMethod, table, diagnostics: Optional[dict]) -> list[MisuseFinding]:
    out = []
    for ins in method.instructions:
        ref = ins.method_ref
        if ins.opcode is not Kind.INVOKE or ref is None:
            continue
        if ref.class_descriptor != CIPHER_CLASS or ref.name != "getInstance" or not ins.operands:
            continue
        transformation = resolve_string_const(method, table, ins.operands[0], ins.offset)
        if transformation is None:
            if diagnostics is not None:
                diagnostics["unresolved_transformations"] = diagnostics.get("unresolved_transformations", 0) + 1
            continue
        site = (method.signature, ins.offset)
        if "/ECB/" in transformation or transformation.endswith("/ECB"):
            out.append(MisuseFinding(MisuseKind.BAD_CIPHER_MODE, site, transformation))
        elif "/" not in transformation:
            out.append(MisuseFinding(MisuseKind.DEFAULT_MODE_AES, site, transformation))
    return out


def _spec_ctor_findings(program: SmaliProgram, method: SmaliMethod) -> list[MisuseFinding]:
    out = []
    for ins in method.instructions:
        ref = ins.method_ref
        if ins.opcode is not Kind.INVOKE or ref is None or ref.name != "<init>":
            continue
        is_key = ref.class_descriptor in KEY_SPEC_CLASSES
        is_iv = ref.class_descriptor in IV_SPEC_CLASSES
        if not (is_key or is_iv):
            continue
        # the byte[] material is the first [B parameter after the receiver
        material_idx = None
        for k, d in enumerate(ref.param_descriptors):
            if d == "[B":
                material_idx = k + 1  # +1 for the receiver operand
                break
        if material_idx is None or material_idx >= len(ins.operands):
            continue
        origins = _collect_origins(program, method, ins.operands[material_idx], ins.offset)
        site = (method.signature, ins.offset)
        label = "key" if is_key else "IV"
        hardcoded = MisuseKind.HARDCODED_KEY_BYTES if is_key else MisuseKind.HARDCODED_IV_BYTES
        nonrandom = MisuseKind.NON_RANDOM_KEY if is_key else MisuseKind.NON_RANDOM_IV
        if origins.constant_material:
            detail = f"constant {label} material reaches {ref.class_descriptor}"
            out.append(MisuseFinding(hardcoded, site, detail))
            if not origins.random_source:
                out.append(MisuseFinding(nonrandom, site, f"no randomness source behind {label}"))
    return out


def _dead_cipher_findings(program: SmaliProgram, method: SmaliMethod,
                          scope: set[MethodSignature]) -> list[MisuseFinding]:
    out = []
    table = def_use(method)
    instrs = method.instructions
    for i, ins in enumerate(instrs):
        ref = ins.method_ref
        if ins.opcode is not Kind.INVOKE or ref is None:
            continue
        if ref.class_descriptor != CIPHER_CLASS or ref.name != "getInstance":
            continue
        if i + 1 >= len(instrs) or instrs[i + 1].opcode is not Kind.MOVE_RESULT:
            continue
        aliases = {instrs[i + 1].operands[0]}
        alive = False
        for j in range(i + 2, len(instrs)):
            other = instrs[j]
            du = table[j]
            if other.opcode is Kind.MOVE and du.uses and du.uses[0] in aliases:
                aliases.add(du.defs[0])
                continue
            if other.opcode is Kind.INVOKE and other.method_ref is not None:
                if not any(op in aliases for op in other.operands):
                    continue
                oref = other.method_ref
                if oref.class_descriptor == CIPHER_CLASS:
                    if oref.name in FINALIZING_NAMES:
                        alive = True
                        break
                    continue  # init/updateAAD etc. keep the instance local
                callee = program.method(oref)
                if callee is None:
                    alive = True  # escaped into opaque code; cannot prove dead
                    break
                if _calls_finalizer(callee):
                    alive = True
                    break
                continue
            if other.opcode in (Kind.IPUT, Kind.SPUT, Kind.RETURN) and any(
                op in aliases for op in other.operands
            ):
                alive = _scope_has_finalizer(program, scope)
                break
        if not alive:
            out.append(MisuseFinding(
                MisuseKind.DEAD_CRYPTO_CODE,
                (method.signature, ins.offset),
                "cipher instance never reaches doFinal/update",
            ))
    return out


def _calls_finalizer(method: SmaliMethod) -> bool:
    for ins in method.instructions:
        ref = ins.method_ref
        if ins.opcode is Kind.INVOKE and ref is not None \
                and ref.class_descriptor == CIPHER_CLASS and ref.name in FINALIZING_NAMES:
            return True
    return False


def _scope_has_finalizer(program: SmaliProgram, scope: set[MethodSignature]) -> bool:
    for sig in scope:
        m = program.method(sig)
        if m is not None and _calls_finalizer(m):
            return True
    return False


def lint_crypto(
    program: SmaliProgram,
    witness_methods: set[MethodSignature],
    diagnostics: Optional[dict] = None,
) -> list[MisuseFinding]:
    """Misuse findings within the witness methods and their direct callees.

    ``witness_methods`` must be non-empty: lints run only on apps whose
    taint verdict was positive. One finding per (kind, site); a site with
    several issues yields several kinds.
    """
    if not witness_methods:
        raise ValueError("lint_crypto requires a non-empty witness method set")
    methods = _scope_methods(program, set(witness_methods))
    scope_sigs = {m.signature for m in methods}
    findings: set[MisuseFinding] = set()
    for method in methods:
        table = def_use(method)
        findings.update(_transformation_findings(method, table, diagnostics))
        findings.update(_spec_ctor_findings(program, method))
        findings.update(_dead_cipher_findings(program, method, scope_sigs))
    return sorted(findings, key=lambda f: (f.kind.value, f.site[0].sort_key, f.site[1]))

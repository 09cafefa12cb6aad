"""Data model for parsed smali disassembly: registers, signatures, instructions,
methods, classes and the whole-program view with its lookup indexes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .opcodes import Kind

PRIMITIVE_DESCRIPTORS = set("VZBSCIJFD")
WIDE_DESCRIPTORS = {"J", "D"}


class RegKind(enum.Enum):
    LOCAL = "v"
    PARAM = "p"


@dataclass(frozen=True)
class Register:
    """A Dalvik virtual register: vN (local) or pN (parameter slot)."""

    kind: RegKind
    index: int

    def render(self) -> str:
        return f"{self.kind.value}{self.index}"

    def pair(self) -> "Register":
        """The second half of a wide (J/D) value held in this register."""
        return Register(self.kind, self.index + 1)

    @property
    def sort_key(self) -> tuple[str, int]:
        return (self.kind.value, self.index)

    @classmethod
    def parse(cls, text: str) -> "Register":
        text = text.strip()
        if len(text) < 2 or text[0] not in "vp" or not text[1:].isdigit():
            raise ValueError(f"not a register: {text!r}")
        kind = RegKind.LOCAL if text[0] == "v" else RegKind.PARAM
        return cls(kind, int(text[1:]))


def split_type_descriptors(text: str) -> tuple[str, ...]:
    """Split a smali parameter-list body like ``I[BLjava/lang/String;`` into
    individual type descriptors."""
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        start = i
        while i < n and text[i] == "[":
            i += 1
        if i >= n:
            raise ValueError(f"dangling array marker in {text!r}")
        if text[i] == "L":
            end = text.index(";", i)
            out.append(text[start : end + 1])
            i = end + 1
        elif text[i] in PRIMITIVE_DESCRIPTORS:
            out.append(text[start : i + 1])
            i += 1
        else:
            raise ValueError(f"bad type descriptor at {text[i:]!r}")
    return tuple(out)


@dataclass(frozen=True)
class MethodSignature:
    """Fully qualified method identity in canonical smali form."""

    class_descriptor: str
    name: str
    param_descriptors: tuple[str, ...]
    return_descriptor: str

    def render(self) -> str:
        params = "".join(self.param_descriptors)
        return f"{self.class_descriptor}->{self.name}({params}){self.return_descriptor}"

    @property
    def sort_key(self) -> str:
        return self.render()

    @classmethod
    def parse(cls, text: str) -> "MethodSignature":
        """Parse ``Lcls;->name(params)ret`` back into a signature."""
        cls_desc, _, rest = text.partition("->")
        if not rest:
            raise ValueError(f"not a method reference: {text!r}")
        name, _, proto = rest.partition("(")
        params_text, _, ret = proto.partition(")")
        if not ret:
            raise ValueError(f"missing return type in {text!r}")
        return cls(cls_desc, name, split_type_descriptors(params_text), ret)


@dataclass(frozen=True)
class FieldId:
    """Fully qualified field identity (``Lcls;->name:type``)."""

    class_descriptor: str
    name: str
    type_descriptor: str

    def render(self) -> str:
        return f"{self.class_descriptor}->{self.name}:{self.type_descriptor}"

    @property
    def sort_key(self) -> str:
        return self.render()

    @classmethod
    def parse(cls, text: str) -> "FieldId":
        cls_desc, _, rest = text.partition("->")
        name, _, type_desc = rest.partition(":")
        if not cls_desc or not name or not type_desc:
            raise ValueError(f"not a field reference: {text!r}")
        return cls(cls_desc, name, type_desc)


@dataclass(frozen=True)
class Instruction:
    """One parsed instruction. ``opcode`` is the coarse family used by the
    analysis; ``name`` keeps the exact mnemonic for rendering."""

    opcode: Kind
    name: str
    operands: tuple[Register, ...]
    offset: int
    literal: object = None
    method_ref: Optional[MethodSignature] = None
    field_ref: Optional[FieldId] = None
    raw: str = field(default="", compare=False)

    def render(self) -> str:
        """Reconstruct canonical smali text. Opaque instructions render as
        their original source line."""
        if self.opcode is Kind.OPAQUE:
            return self.raw
        regs = ", ".join(r.render() for r in self.operands)
        if self.opcode in (Kind.INVOKE, Kind.FILLED_NEW_ARRAY):
            if self.name.endswith("/range") and self.operands:
                braced = f"{{{self.operands[0].render()} .. {self.operands[-1].render()}}}"
            else:
                braced = "{" + regs + "}"
            ref = self.method_ref.render() if self.method_ref else str(self.literal)
            return f"{self.name} {braced}, {ref}"
        if self.opcode in (Kind.IGET, Kind.IPUT, Kind.SGET, Kind.SPUT):
            assert self.field_ref is not None
            return f"{self.name} {regs}, {self.field_ref.render()}"
        if self.name.startswith("const-string"):
            escaped = str(self.literal).replace("\\", "\\\\").replace('"', '\\"')
            return f'{self.name} {regs}, "{escaped}"'
        if self.opcode in (Kind.GOTO, Kind.IF, Kind.FILL_ARRAY_DATA):
            target = f":{self.literal}"
            return f"{self.name} {regs}, {target}".replace(" ,", "") if not regs else f"{self.name} {regs}, {target}"
        if self.literal is not None:
            return f"{self.name} {regs}, {self.literal}"
        return f"{self.name} {regs}".rstrip()


@dataclass(frozen=True)
class SmaliMethod:
    """A parsed method body plus enough signature context to map parameter
    registers to call-site arguments."""

    signature: MethodSignature
    access_flags: frozenset[str]
    registers_declared: int
    instructions: tuple[Instruction, ...]

    @property
    def is_static(self) -> bool:
        return "static" in self.access_flags

    @property
    def is_abstract(self) -> bool:
        return "abstract" in self.access_flags or "native" in self.access_flags

    def param_slot_count(self) -> int:
        slots = 0 if self.is_static else 1
        for d in self.signature.param_descriptors:
            slots += 2 if d in WIDE_DESCRIPTORS else 1
        return slots

    def param_registers(self) -> tuple[Register, ...]:
        return tuple(Register(RegKind.PARAM, i) for i in range(self.param_slot_count()))


@dataclass(frozen=True)
class SmaliClass:
    descriptor: str
    super_descriptor: str
    interfaces: tuple[str, ...]
    methods: tuple[SmaliMethod, ...]
    fields: tuple[FieldId, ...]


@dataclass(frozen=True)
class ParseError:
    file: str
    line: int
    reason: str


# (method, instruction offset) pairs used by every program-level index.
Site = tuple[SmaliMethod, int]


@dataclass
class SmaliProgram:
    """Immutable whole-app view. All indexes are complete over the parsed
    instruction stream and iteration order is deterministic."""

    classes: dict[str, SmaliClass]
    callers_index: dict[MethodSignature, tuple[Site, ...]]
    field_writes_index: dict[FieldId, tuple[Site, ...]]
    field_reads_index: dict[FieldId, tuple[Site, ...]]
    interface_impl_index: dict[str, tuple[str, ...]]
    method_index: dict[MethodSignature, SmaliMethod]
    errors: tuple[ParseError, ...] = ()
    skipped_directives: int = 0

    def method(self, sig: MethodSignature) -> Optional[SmaliMethod]:
        return self.method_index.get(sig)

    def iter_methods(self) -> Iterator[SmaliMethod]:
        for desc in sorted(self.classes):
            for m in self.classes[desc].methods:
                yield m

    def iter_invocations(self) -> Iterator[tuple[SmaliMethod, Instruction]]:
        for m in self.iter_methods():
            for ins in m.instructions:
                if ins.opcode is Kind.INVOKE and ins.method_ref is not None:
                    yield m, ins

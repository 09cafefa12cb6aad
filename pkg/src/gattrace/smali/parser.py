"""Parser for baksmali-style .smali text.

Handles the directive subset ``.class .super .implements .field .method
.registers/.locals .end method`` plus labels and the analyzed opcode
families. Anything else inside a method body becomes an opaque instruction
with syntactically evident registers recorded. Annotation blocks, debug
directives, ``.catch`` tables and switch/array payload blocks are skipped
and only counted.
"""

from __future__ import annotations

import logging
import re
import zipfile
from pathlib import Path

from .opcodes import Kind, classify
from .types import (
    FieldId,
    Instruction,
    MethodSignature,
    ParseError,
    Register,
    SmaliClass,
    SmaliMethod,
    SmaliProgram,
    split_type_descriptors,
)

logger = logging.getLogger(__name__)


class EmptyInputError(Exception):
    """Raised when the input tree or archive holds no .smali files."""


_CLASS_RE = re.compile(r"^\.class(?:\s+([\w \-]+?))?\s+(L\S+;)$")
_SUPER_RE = re.compile(r"^\.super\s+(\S+)$")
_IMPL_RE = re.compile(r"^\.implements\s+(\S+)$")
_FIELD_RE = re.compile(r"^\.field(?:\s+([\w \-]+?))?\s+([^\s:]+):(\S+)")
_METHOD_RE = re.compile(r"^\.method(?:\s+([\w \-]+?))?\s+([^\s(]+)\(([^)]*)\)(\S+)$")
_INVOKE_RE = re.compile(r"^(invoke-[\w/]+|filled-new-array(?:/range)?)\s+\{([^}]*)\}\s*,\s*(\S.*)$")
_STRING_RE = re.compile(r'^(const-string(?:/jumbo)?)\s+([vp]\d+),\s*"((?:[^"\\]|\\.)*)"$')
_REG_RE = re.compile(r"\b[vp]\d+\b")
_NUMBER_RE = re.compile(r"^(-?0x[0-9a-fA-F]+|-?\d+)")

# Block directives whose entire body is skipped (counted, no taint semantics).
_SKIP_BLOCKS = {
    ".annotation": ".end annotation",
    ".subannotation": ".end subannotation",
    ".packed-switch": ".end packed-switch",
    ".sparse-switch": ".end sparse-switch",
    ".array-data": ".end array-data",
    ".param": ".end param",  # only when the .param line opens a block; see below
}
_SKIP_LINES = (".line", ".prologue", ".epilogue", ".source", ".local ",
               ".end local", ".restart local", ".catch", ".catchall", ".param")


def _unescape(text: str) -> str:
    return (
        text.replace("\\\\", "\x00")
        .replace('\\"', '"')
        .replace("\\n", "\n")
        .replace("\\t", "\t")
        .replace("\x00", "\\")
    )


def _parse_registers(text: str) -> tuple[Register, ...]:
    text = text.strip()
    if not text:
        return ()
    if ".." in text:
        lo, hi = (Register.parse(p) for p in text.split("..", 1))
        if lo.kind is not hi.kind or hi.index < lo.index:
            raise ValueError(f"bad register range: {text!r}")
        return tuple(Register(lo.kind, i) for i in range(lo.index, hi.index + 1))
    return tuple(Register.parse(p) for p in text.split(","))


def parse_instruction(line: str, offset: int) -> Instruction:
    """Parse one instruction line. Unknown mnemonics come back opaque rather
    than raising; structural errors in known mnemonics raise ValueError."""
    mnemonic = line.split(None, 1)[0]
    kind = classify(mnemonic)
    rest = line[len(mnemonic):].strip()

    if kind is Kind.OPAQUE:
        regs = tuple(Register.parse(m) for m in _REG_RE.findall(rest))
        return Instruction(kind, mnemonic, regs, offset, raw=line)

    if kind in (Kind.INVOKE, Kind.FILLED_NEW_ARRAY):
        m = _INVOKE_RE.match(line)
        if not m:
            raise ValueError("malformed invoke")
        regs = _parse_registers(m.group(2))
        ref_text = m.group(3).strip()
        if kind is Kind.INVOKE:
            return Instruction(kind, mnemonic, regs, offset,
                               method_ref=MethodSignature.parse(ref_text), raw=line)
        return Instruction(kind, mnemonic, regs, offset, literal=ref_text, raw=line)

    if mnemonic.startswith("const-string"):
        m = _STRING_RE.match(line)
        if not m:
            raise ValueError("malformed string constant")
        return Instruction(kind, mnemonic, (Register.parse(m.group(2)),), offset,
                           literal=_unescape(m.group(3)), raw=line)

    parts = [p.strip() for p in rest.split(",")] if rest else []

    if kind in (Kind.IGET, Kind.IPUT, Kind.SGET, Kind.SPUT):
        field_ref = FieldId.parse(parts[-1])
        regs = tuple(Register.parse(p) for p in parts[:-1])
        return Instruction(kind, mnemonic, regs, offset, field_ref=field_ref, raw=line)

    if kind in (Kind.GOTO, Kind.IF, Kind.FILL_ARRAY_DATA):
        label = parts[-1].lstrip(":")
        regs = tuple(Register.parse(p) for p in parts[:-1])
        return Instruction(kind, mnemonic, regs, offset, literal=label, raw=line)

    if kind in (Kind.NEW_ARRAY, Kind.NEW_INSTANCE) or mnemonic == "const-class" \
            or mnemonic == "instance-of":
        type_desc = parts[-1]
        regs = tuple(Register.parse(p) for p in parts[:-1])
        return Instruction(kind, mnemonic, regs, offset, literal=type_desc, raw=line)

    if kind is Kind.CONST:
        value_text = parts[-1]
        m = _NUMBER_RE.match(value_text)
        if not m:
            raise ValueError(f"bad constant {value_text!r}")
        regs = tuple(Register.parse(p) for p in parts[:-1])
        return Instruction(kind, mnemonic, regs, offset, literal=int(m.group(1), 0), raw=line)

    # Remaining families: plain register lists with an optional trailing
    # integer literal (binop /lit variants).
    literal = None
    regs_parts = parts
    if parts and not _REG_RE.fullmatch(parts[-1]):
        m = _NUMBER_RE.match(parts[-1])
        if not m:
            raise ValueError(f"unexpected operand {parts[-1]!r}")
        literal = int(m.group(1), 0)
        regs_parts = parts[:-1]
    regs = tuple(Register.parse(p) for p in regs_parts)
    return Instruction(kind, mnemonic, regs, offset, literal=literal, raw=line)


class _ClassBuilder:
    def __init__(self, source: str):
        self.source = source
        self.descriptor: str | None = None
        self.super_descriptor = "Ljava/lang/Object;"
        self.interfaces: list[str] = []
        self.methods: list[SmaliMethod] = []
        self.fields: list[FieldId] = []
        self.errors: list[ParseError] = []
        self.skipped = 0


def parse_class_text(text: str, source: str = "<memory>") -> tuple[SmaliClass | None, list[ParseError], int]:
    """Parse one .smali file's text.

    Returns (class or None, parse errors, skipped directive count). A file
    with no usable ``.class`` header yields None plus an error record.
    """
    b = _ClassBuilder(source)
    method_sig: MethodSignature | None = None
    method_flags: frozenset[str] = frozenset()
    method_registers: int | None = None
    method_locals: int | None = None
    instructions: list[Instruction] = []
    skip_until: str | None = None

    def finish_method(line_no: int) -> None:
        nonlocal method_sig
        if method_sig is None:
            return
        is_static = "static" in method_flags
        slots = (0 if is_static else 1) + sum(
            2 if d in ("J", "D") else 1 for d in method_sig.param_descriptors
        )
        if method_registers is not None:
            declared = method_registers
        elif method_locals is not None:
            declared = method_locals + slots
        else:
            declared = slots
        if slots > declared:
            b.errors.append(ParseError(source, line_no, f"parameter slots exceed .registers in {method_sig.render()}"))
            declared = slots
        b.methods.append(SmaliMethod(method_sig, method_flags, declared, tuple(instructions)))
        method_sig = None

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if skip_until is not None:
            b.skipped += 1
            if line.startswith(skip_until):
                skip_until = None
            continue
        try:
            if line.startswith("."):
                if line.startswith(".class"):
                    m = _CLASS_RE.match(line)
                    if not m:
                        b.errors.append(ParseError(source, line_no, "malformed .class"))
                        continue
                    b.descriptor = m.group(2)
                elif line.startswith(".super"):
                    m = _SUPER_RE.match(line)
                    if m:
                        b.super_descriptor = m.group(1)
                elif line.startswith(".implements"):
                    m = _IMPL_RE.match(line)
                    if m:
                        b.interfaces.append(m.group(1))
                elif line.startswith(".field"):
                    m = _FIELD_RE.match(line)
                    if not m:
                        b.errors.append(ParseError(source, line_no, "malformed .field"))
                    elif b.descriptor:
                        b.fields.append(FieldId(b.descriptor, m.group(2), m.group(3)))
                elif line.startswith(".method"):
                    m = _METHOD_RE.match(line)
                    if not m:
                        b.errors.append(ParseError(source, line_no, "malformed .method"))
                        continue
                    if b.descriptor is None:
                        b.errors.append(ParseError(source, line_no, ".method before .class"))
                        continue
                    flags = frozenset((m.group(1) or "").split())
                    method_sig = MethodSignature(
                        b.descriptor, m.group(2), split_type_descriptors(m.group(3)), m.group(4)
                    )
                    method_flags = flags
                    method_registers = None
                    method_locals = None
                    instructions = []
                elif line.startswith(".registers"):
                    method_registers = int(line.split()[1])
                elif line.startswith(".locals"):
                    method_locals = int(line.split()[1])
                elif line.startswith(".end method"):
                    finish_method(line_no)
                elif any(line.startswith(k) for k in _SKIP_BLOCKS) and not line.endswith(
                    tuple(_SKIP_BLOCKS.values())
                ):
                    opener = next(k for k in _SKIP_BLOCKS if line.startswith(k))
                    # single-line .param has no block body
                    if opener == ".param" and "annotation" not in line:
                        b.skipped += 1
                        continue
                    skip_until = _SKIP_BLOCKS[opener]
                    b.skipped += 1
                elif line.startswith(_SKIP_LINES):
                    b.skipped += 1
                else:
                    b.skipped += 1
            elif line.startswith(":"):
                continue  # labels carry no taint semantics; branch targets unused
            elif method_sig is not None:
                try:
                    instructions.append(parse_instruction(line, len(instructions)))
                except ValueError as exc:
                    b.errors.append(ParseError(source, line_no, str(exc)))
                    regs = tuple(Register.parse(m) for m in _REG_RE.findall(line))
                    instructions.append(Instruction(Kind.OPAQUE, line.split()[0], regs,
                                                    len(instructions), raw=line))
        except Exception as exc:  # defensive: a bad line never kills the class
            b.errors.append(ParseError(source, line_no, f"{type(exc).__name__}: {exc}"))

    if method_sig is not None:
        b.errors.append(ParseError(source, 0, "unterminated .method"))
        finish_method(0)

    if b.descriptor is None:
        b.errors.append(ParseError(source, 0, "no .class directive"))
        return None, b.errors, b.skipped

    cls = SmaliClass(
        b.descriptor,
        b.super_descriptor,
        tuple(b.interfaces),
        tuple(b.methods),
        tuple(b.fields),
    )
    return cls, b.errors, b.skipped


def _iter_sources(root: Path):
    if root.is_file() and root.suffix == ".zip":
        with zipfile.ZipFile(root) as zf:
            for name in sorted(zf.namelist()):
                if name.endswith(".smali"):
                    yield name, zf.read(name).decode("utf-8", errors="replace")
        return
    if not root.is_dir():
        raise EmptyInputError(f"{root} is neither a directory nor a .zip archive")
    for path in sorted(root.rglob("*.smali")):
        yield str(path.relative_to(root)), path.read_text(encoding="utf-8", errors="replace")


def build_program(classes: list[SmaliClass], errors: list[ParseError] = (),
                  skipped: int = 0) -> SmaliProgram:
    """Assemble classes into a program and build the lookup indexes."""
    class_map: dict[str, SmaliClass] = {}
    for cls in classes:
        class_map[cls.descriptor] = cls

    method_index: dict[MethodSignature, SmaliMethod] = {}
    callers: dict[MethodSignature, list] = {}
    field_writes: dict[FieldId, list] = {}
    field_reads: dict[FieldId, list] = {}
    iface_impls: dict[str, list[str]] = {}

    for desc in sorted(class_map):
        cls = class_map[desc]
        for iface in cls.interfaces:
            iface_impls.setdefault(iface, []).append(desc)
        for m in cls.methods:
            method_index[m.signature] = m
            for ins in m.instructions:
                if ins.opcode is Kind.INVOKE and ins.method_ref is not None:
                    callers.setdefault(ins.method_ref, []).append((m, ins.offset))
                elif ins.opcode in (Kind.IPUT, Kind.SPUT) and ins.field_ref is not None:
                    field_writes.setdefault(ins.field_ref, []).append((m, ins.offset))
                elif ins.opcode in (Kind.IGET, Kind.SGET) and ins.field_ref is not None:
                    field_reads.setdefault(ins.field_ref, []).append((m, ins.offset))

    return SmaliProgram(
        classes=class_map,
        callers_index={k: tuple(v) for k, v in callers.items()},
        field_writes_index={k: tuple(v) for k, v in field_writes.items()},
        field_reads_index={k: tuple(v) for k, v in field_reads.items()},
        interface_impl_index={k: tuple(sorted(v)) for k, v in iface_impls.items()},
        method_index=method_index,
        errors=tuple(errors),
        skipped_directives=skipped,
    )


def parse_program(root) -> SmaliProgram:
    """Parse every .smali file under ``root`` (directory tree or .zip).

    Malformed files are reported in ``program.errors`` rather than aborting
    the parse. Raises EmptyInputError when no .smali files are found.
    """
    root = Path(root)
    classes: list[SmaliClass] = []
    errors: list[ParseError] = []
    skipped = 0
    seen = 0
    for name, text in _iter_sources(root):
        seen += 1
        cls, errs, sk = parse_class_text(text, source=name)
        errors.extend(errs)
        skipped += sk
        if cls is not None:
            classes.append(cls)
    if seen == 0:
        raise EmptyInputError(f"no .smali files under {root}")
    if errors:
        logger.debug("parsed %s with %d error records", root, len(errors))
    return build_program(classes, errors, skipped)


def program_from_texts(texts: list[str]) -> SmaliProgram:
    """Build a program straight from in-memory class texts (test support)."""
    classes: list[SmaliClass] = []
    errors: list[ParseError] = []
    skipped = 0
    for i, text in enumerate(texts):
        cls, errs, sk = parse_class_text(text, source=f"<text-{i}>")
        errors.extend(errs)
        skipped += sk
        if cls is not None:
            classes.append(cls)
    return build_program(classes, errors, skipped)

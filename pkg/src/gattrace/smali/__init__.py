"""Smali text parsing and the program-level intermediate representation."""

from .defuse import DefUse, def_use
from .opcodes import Kind
from .parser import (
    EmptyInputError,
    build_program,
    parse_class_text,
    parse_instruction,
    parse_program,
    program_from_texts,
)
from .types import (
    FieldId,
    Instruction,
    MethodSignature,
    ParseError,
    RegKind,
    Register,
    SmaliClass,
    SmaliMethod,
    SmaliProgram,
    split_type_descriptors,
)

__all__ = [
    "DefUse",
    "EmptyInputError",
    "FieldId",
    "Instruction",
    "Kind",
    "MethodSignature",
    "ParseError",
    "RegKind",
    "Register",
    "SmaliClass",
    "SmaliMethod",
    "SmaliProgram",
    "build_program",
    "def_use",
    "parse_class_text",
    "parse_instruction",
    "parse_program",
    "program_from_texts",
    "split_type_descriptors",
]

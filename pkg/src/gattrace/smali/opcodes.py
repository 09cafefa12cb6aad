"""Opcode classification for the analyzed Dalvik subset.

Every mnemonic outside the table degrades to ``Kind.OPAQUE``: it is parsed
with whatever registers are syntactically evident but carries no transfer
semantics (it neither taints nor sanitizes).
"""

from __future__ import annotations

import enum


class Kind(enum.Enum):
    MOVE = "move"
    MOVE_RESULT = "move-result"
    CONST = "const"
    NEW_ARRAY = "new-array"
    NEW_INSTANCE = "new-instance"
    AGET = "aget"
    APUT = "aput"
    IGET = "iget"
    IPUT = "iput"
    SGET = "sget"
    SPUT = "sput"
    INVOKE = "invoke"
    FILLED_NEW_ARRAY = "filled-new-array"
    FILL_ARRAY_DATA = "fill-array-data"
    RETURN = "return"
    RETURN_VOID = "return-void"
    GOTO = "goto"
    IF = "if"
    CMP = "cmp"
    UNOP = "unop"
    BINOP = "binop"
    OPAQUE = "opaque"


_MOVE = [
    "move", "move/from16", "move/16",
    "move-wide", "move-wide/from16", "move-wide/16",
    "move-object", "move-object/from16", "move-object/16",
]
_MOVE_RESULT = ["move-result", "move-result-wide", "move-result-object"]
_CONST = [
    "const/4", "const/16", "const", "const/high16",
    "const-wide/16", "const-wide/32", "const-wide", "const-wide/high16",
    "const-string", "const-string/jumbo", "const-class",
]
_AGET = ["aget", "aget-wide", "aget-object", "aget-boolean", "aget-byte", "aget-char", "aget-short"]
_APUT = ["aput", "aput-wide", "aput-object", "aput-boolean", "aput-byte", "aput-char", "aput-short"]
_IGET = ["iget", "iget-wide", "iget-object", "iget-boolean", "iget-byte", "iget-char", "iget-short"]
_IPUT = ["iput", "iput-wide", "iput-object", "iput-boolean", "iput-byte", "iput-char", "iput-short"]
_SGET = ["sget", "sget-wide", "sget-object", "sget-boolean", "sget-byte", "sget-char", "sget-short"]
_SPUT = ["sput", "sput-wide", "sput-object", "sput-boolean", "sput-byte", "sput-char", "sput-short"]
_INVOKE = [
    base + suffix
    for base in ("invoke-virtual", "invoke-super", "invoke-direct", "invoke-static", "invoke-interface")
    for suffix in ("", "/range")
]
_RETURN = ["return", "return-wide", "return-object"]
_GOTO = ["goto", "goto/16", "goto/32"]
_IF = [
    "if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le",
    "if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez",
]
_CMP = ["cmpl-float", "cmpg-float", "cmpl-double", "cmpg-double", "cmp-long"]

_UNOP = ["array-length", "instance-of", "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double"]
_UNOP += [
    f"{src}-to-{dst}"
    for src, dst in (
        ("int", "long"), ("int", "float"), ("int", "double"),
        ("long", "int"), ("long", "float"), ("long", "double"),
        ("float", "int"), ("float", "long"), ("float", "double"),
        ("double", "int"), ("double", "long"), ("double", "float"),
        ("int", "byte"), ("int", "char"), ("int", "short"),
    )
]

_BINOP: list[str] = []
for _op in ("add", "sub", "mul", "div", "rem", "and", "or", "xor", "shl", "shr", "ushr"):
    for _ty in ("int", "long"):
        _BINOP += [f"{_op}-{_ty}", f"{_op}-{_ty}/2addr"]
for _op in ("add", "sub", "mul", "div", "rem"):
    for _ty in ("float", "double"):
        _BINOP += [f"{_op}-{_ty}", f"{_op}-{_ty}/2addr"]
for _op in ("add", "rsub", "mul", "div", "rem", "and", "or", "xor"):
    _BINOP += [f"{_op}-int/lit16", f"{_op}-int/lit8"]
_BINOP += ["rsub-int", "shl-int/lit8", "shr-int/lit8", "ushr-int/lit8"]

KIND_BY_NAME: dict[str, Kind] = {}
for _names, _kind in (
    (_MOVE, Kind.MOVE),
    (_MOVE_RESULT, Kind.MOVE_RESULT),
    (_CONST, Kind.CONST),
    (["new-array"], Kind.NEW_ARRAY),
    (["new-instance"], Kind.NEW_INSTANCE),
    (_AGET, Kind.AGET),
    (_APUT, Kind.APUT),
    (_IGET, Kind.IGET),
    (_IPUT, Kind.IPUT),
    (_SGET, Kind.SGET),
    (_SPUT, Kind.SPUT),
    (_INVOKE, Kind.INVOKE),
    (["filled-new-array", "filled-new-array/range"], Kind.FILLED_NEW_ARRAY),
    (["fill-array-data"], Kind.FILL_ARRAY_DATA),
    (_RETURN, Kind.RETURN),
    (["return-void"], Kind.RETURN_VOID),
    (_GOTO, Kind.GOTO),
    (_IF, Kind.IF),
    (_CMP, Kind.CMP),
    (_UNOP, Kind.UNOP),
    (_BINOP, Kind.BINOP),
):
    for _n in _names:
        KIND_BY_NAME[_n] = _kind


def classify(mnemonic: str) -> Kind:
    return KIND_BY_NAME.get(mnemonic, Kind.OPAQUE)


def is_wide_value(mnemonic: str) -> bool:
    """True when the instruction's data value occupies a register pair."""
    if "-wide" in mnemonic:
        return True
    base = mnemonic.split("/", 1)[0]
    return base.endswith("-long") or base.endswith("-double") or base.startswith("cmp-long") \
        or base in ("cmpl-double", "cmpg-double")


def unop_src_wide(mnemonic: str) -> bool:
    base = mnemonic.split("/", 1)[0]
    return base.startswith(("long-to", "double-to", "neg-long", "not-long", "neg-double"))


def unop_dst_wide(mnemonic: str) -> bool:
    base = mnemonic.split("/", 1)[0]
    return base.endswith(("-to-long", "-to-double")) or base in ("neg-long", "not-long", "neg-double")

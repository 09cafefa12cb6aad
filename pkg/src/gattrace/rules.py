"""Declarative matchers for BLE data-access sources/sinks, crypto-evidence
package prefixes, and the connectGatt eligibility marker.

The default set covers the four ``getValue`` overloads (read sources), the
four ``setValue`` overloads (write sinks), the two Java crypto package
prefixes accepted as evidence of application-layer security, and
``connectGatt`` as the eligibility marker. A JSON document can extend or
replace it (see README for the schema).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .smali.types import MethodSignature, SmaliMethod, SmaliProgram

BLE_CHARACTERISTIC = "Landroid/bluetooth/BluetoothGattCharacteristic;"
BLE_DEVICE = "Landroid/bluetooth/BluetoothDevice;"
DEFAULT_CRYPTO_PREFIXES = ("Ljavax/crypto/", "Ljava/security/")
BLUETOOTH_PERMISSION = "android.permission.BLUETOOTH"


class SchemaError(Exception):
    """Ruleset document rejected; ``path`` names the offending entry."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class MethodMatcher:
    """Matches invoke targets. ``class_pattern`` is an exact descriptor when
    it ends with ';', otherwise a descriptor prefix. Absent params/return
    match any overload of (class, name)."""

    class_pattern: str
    name: str
    param_descriptors: Optional[tuple[str, ...]] = None
    return_descriptor: Optional[str] = None

    def matches(self, sig: MethodSignature) -> bool:
        if self.class_pattern.endswith(";"):
            if sig.class_descriptor != self.class_pattern:
                return False
        elif not sig.class_descriptor.startswith(self.class_pattern):
            return False
        if sig.name != self.name:
            return False
        if self.param_descriptors is not None and sig.param_descriptors != self.param_descriptors:
            return False
        if self.return_descriptor is not None and sig.return_descriptor != self.return_descriptor:
            return False
        return True

    def render(self) -> str:
        params = "".join(self.param_descriptors) if self.param_descriptors is not None else "*"
        ret = self.return_descriptor if self.return_descriptor is not None else "*"
        return f"{self.class_pattern}->{self.name}({params}){ret}"


@dataclass(frozen=True)
class RuleSet:
    write_sinks: tuple[MethodMatcher, ...]
    read_sources: tuple[MethodMatcher, ...]
    crypto_prefixes: tuple[str, ...]
    eligibility_markers: tuple[MethodMatcher, ...]

    def is_crypto(self, sig: Optional[MethodSignature]) -> bool:
        if sig is None:
            return False
        return any(sig.class_descriptor.startswith(p) for p in self.crypto_prefixes)

    def matches_sink(self, sig: MethodSignature) -> bool:
        return any(m.matches(sig) for m in self.write_sinks)

    def matches_source(self, sig: MethodSignature) -> bool:
        return any(m.matches(sig) for m in self.read_sources)


def _matcher(cls: str, name: str, params: str, ret: str) -> MethodMatcher:
    from .smali.types import split_type_descriptors

    return MethodMatcher(cls, name, split_type_descriptors(params), ret)


def default_ruleset() -> RuleSet:
    """The built-in BLE data-access method set."""
    c = BLE_CHARACTERISTIC
    return RuleSet(
        write_sinks=(
            _matcher(c, "setValue", "[B", "Z"),
            _matcher(c, "setValue", "III", "Z"),
            _matcher(c, "setValue", "Ljava/lang/String;", "Z"),
            _matcher(c, "setValue", "IIII", "Z"),
        ),
        read_sources=(
            _matcher(c, "getValue", "", "[B"),
            _matcher(c, "getIntValue", "II", "Ljava/lang/Integer;"),
            _matcher(c, "getStringValue", "I", "Ljava/lang/String;"),
            _matcher(c, "getFloatValue", "II", "Ljava/lang/Float;"),
        ),
        crypto_prefixes=DEFAULT_CRYPTO_PREFIXES,
        eligibility_markers=(MethodMatcher(BLE_DEVICE, "connectGatt"),),
    )


def _parse_matcher_entry(entry: object, path: str) -> MethodMatcher:
    if not isinstance(entry, dict):
        raise SchemaError(path, "matcher entry must be an object")
    cls = entry.get("class")
    name = entry.get("name")
    if not isinstance(cls, str) or not cls:
        raise SchemaError(f"{path}.class", "missing or non-string class descriptor")
    if not isinstance(name, str) or not name:
        raise SchemaError(f"{path}.name", "missing or non-string method name")
    params = entry.get("params")
    if params is not None:
        if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
            raise SchemaError(f"{path}.params", "params must be a list of descriptor strings")
        params = tuple(params)
    ret = entry.get("return")
    if ret is not None and not isinstance(ret, str):
        raise SchemaError(f"{path}.return", "return must be a descriptor string")
    unknown = set(entry) - {"class", "name", "params", "return"}
    if unknown:
        raise SchemaError(f"{path}.{sorted(unknown)[0]}", "unknown matcher key")
    return MethodMatcher(cls, name, params, ret)


def _merge_section(
    defaults: tuple, section: object, path: str, parse_item
) -> tuple:
    """Plain list = additions to the defaults; {"replace": [...]} swaps the
    whole section; {"add": [...]} is the explicit form of addition."""
    if section is None:
        return defaults
    if isinstance(section, list):
        return defaults + tuple(parse_item(e, f"{path}[{i}]") for i, e in enumerate(section))
    if isinstance(section, dict):
        unknown = set(section) - {"add", "replace"}
        if unknown:
            raise SchemaError(f"{path}.{sorted(unknown)[0]}", "expected 'add' or 'replace'")
        out = defaults
        if "replace" in section:
            repl = section["replace"]
            if not isinstance(repl, list):
                raise SchemaError(f"{path}.replace", "must be a list")
            out = tuple(parse_item(e, f"{path}.replace[{i}]") for i, e in enumerate(repl))
        if "add" in section:
            add = section["add"]
            if not isinstance(add, list):
                raise SchemaError(f"{path}.add", "must be a list")
            out = out + tuple(parse_item(e, f"{path}.add[{i}]") for i, e in enumerate(add))
        return out
    raise SchemaError(path, "section must be a list or an object")


def _parse_prefix(entry: object, path: str) -> str:
    if not isinstance(entry, str) or not entry.startswith("L"):
        raise SchemaError(path, "crypto prefix must be an 'L...' descriptor prefix string")
    return entry


def load_ruleset(source) -> RuleSet:
    """Load a ruleset document (path, JSON text, or dict) merged over the
    defaults. Rejects documents that leave sinks or sources empty."""
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise SchemaError("$", "ruleset document must be an object")
    unknown = set(doc) - {"write_sinks", "read_sources", "crypto_prefixes", "eligibility"}
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown section")

    base = default_ruleset()
    sinks = _merge_section(base.write_sinks, doc.get("write_sinks"), "write_sinks", _parse_matcher_entry)
    sources = _merge_section(base.read_sources, doc.get("read_sources"), "read_sources", _parse_matcher_entry)
    prefixes = _merge_section(base.crypto_prefixes, doc.get("crypto_prefixes"), "crypto_prefixes", _parse_prefix)
    markers = _merge_section(base.eligibility_markers, doc.get("eligibility"), "eligibility", _parse_matcher_entry)

    if not sinks:
        raise SchemaError("write_sinks", "ruleset must keep at least one write sink")
    if not sources:
        raise SchemaError("read_sources", "ruleset must keep at least one read source")
    sink_set = {m.render() for m in sinks}
    if sink_set & {m.render() for m in sources}:
        raise SchemaError("read_sources", "sinks and sources must be disjoint")
    return RuleSet(tuple(sinks), tuple(sources), tuple(prefixes), tuple(markers))


def find_invocations(
    program: SmaliProgram, matchers: Iterable[MethodMatcher] | MethodMatcher
) -> list[tuple[SmaliMethod, int]]:
    """Every call site whose target satisfies any matcher, in deterministic
    (class descriptor, method, offset) order."""
    if isinstance(matchers, MethodMatcher):
        matchers = (matchers,)
    matchers = tuple(matchers)
    out: list[tuple[SmaliMethod, int]] = []
    for method, ins in program.iter_invocations():
        if any(m.matches(ins.method_ref) for m in matchers):
            out.append((method, ins.offset))
    return out


@dataclass(frozen=True)
class Eligibility:
    eligible: bool
    reason: str


def is_eligible(
    program: SmaliProgram, rules: RuleSet, permissions: Optional[Sequence[str]] = None
) -> Eligibility:
    """An app is in scope when it invokes connectGatt. When a manifest
    permission list is supplied it must also declare BLUETOOTH; without one
    the check fails open and says so."""
    if permissions is not None:
        normalized = {p.strip() for p in permissions}
        if not (normalized & {"BLUETOOTH", BLUETOOTH_PERMISSION}):
            return Eligibility(False, "permission absent")
    has_marker = bool(find_invocations(program, rules.eligibility_markers))
    if not has_marker:
        return Eligibility(False, "no connectGatt")
    if permissions is None:
        return Eligibility(True, "ok (permissions not checked)")
    return Eligibility(True, "ok")

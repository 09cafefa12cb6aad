from __future__ import annotations

import pytest

from gattrace import (
    MethodMatcher,
    SchemaError,
    default_ruleset,
    find_invocations,
    is_eligible,
    load_ruleset,
)
from gattrace.smali import MethodSignature

from conftest import make_program

# Canonical rendering of the built-in BLE data-access method set.
GOLDEN_DEFAULTS = {
    "read_sources": [
        "Landroid/bluetooth/BluetoothGattCharacteristic;->getValue()[B",
        "Landroid/bluetooth/BluetoothGattCharacteristic;->getIntValue(II)Ljava/lang/Integer;",
        "Landroid/bluetooth/BluetoothGattCharacteristic;->getStringValue(I)Ljava/lang/String;",
        "Landroid/bluetooth/BluetoothGattCharacteristic;->getFloatValue(II)Ljava/lang/Float;",
    ],
    "write_sinks": [
        "Landroid/bluetooth/BluetoothGattCharacteristic;->setValue([B)Z",
        "Landroid/bluetooth/BluetoothGattCharacteristic;->setValue(III)Z",
        "Landroid/bluetooth/BluetoothGattCharacteristic;->setValue(Ljava/lang/String;)Z",
        "Landroid/bluetooth/BluetoothGattCharacteristic;->setValue(IIII)Z",
    ],
    "crypto_prefixes": ["Ljavax/crypto/", "Ljava/security/"],
    "eligibility": ["Landroid/bluetooth/BluetoothDevice;->connectGatt(*)*"],
}


def test_default_ruleset_golden():
    rs = default_ruleset()
    assert [m.render() for m in rs.read_sources] == GOLDEN_DEFAULTS["read_sources"]
    assert [m.render() for m in rs.write_sinks] == GOLDEN_DEFAULTS["write_sinks"]
    assert list(rs.crypto_prefixes) == GOLDEN_DEFAULTS["crypto_prefixes"]
    assert [m.render() for m in rs.eligibility_markers] == GOLDEN_DEFAULTS["eligibility"]


def test_matcher_exact_and_prefix():
    sig = MethodSignature.parse("Ljavax/crypto/Cipher;->doFinal([B)[B")
    assert MethodMatcher("Ljavax/crypto/", "doFinal").matches(sig)
    assert MethodMatcher("Ljavax/crypto/Cipher;", "doFinal").matches(sig)
    assert not MethodMatcher("Ljavax/crypto/Mac;", "doFinal").matches(sig)
    assert not MethodMatcher("Ljavax/crypto/", "update").matches(sig)
    # absent params/return match any overload
    assert MethodMatcher("Ljavax/crypto/Cipher;", "doFinal", ("[B",), "[B").matches(sig)
    assert not MethodMatcher("Ljavax/crypto/Cipher;", "doFinal", (), None).matches(sig)


def test_crypto_prefix_rule():
    rs = default_ruleset()
    assert rs.is_crypto(MethodSignature.parse("Ljavax/crypto/Cipher;->doFinal([B)[B"))
    assert rs.is_crypto(MethodSignature.parse("Ljava/security/MessageDigest;->digest([B)[B"))
    assert not rs.is_crypto(MethodSignature.parse("Ljava/util/Arrays;->toString([B)Ljava/lang/String;"))


def test_load_ruleset_empty_override_is_default():
    assert load_ruleset({}) == default_ruleset()
    assert load_ruleset(None) == default_ruleset()


def test_load_ruleset_addition():
    rs = load_ruleset(
        {"read_sources": [{"class": "Lcom/vendor/Ble;", "name": "getValue", "params": [], "return": "[B"}]}
    )
    assert len(rs.read_sources) == 5
    assert rs.read_sources[-1].render() == "Lcom/vendor/Ble;->getValue()[B"


def test_load_ruleset_replace_empty_sinks_rejected():
    with pytest.raises(SchemaError) as exc:
        load_ruleset({"write_sinks": {"replace": []}})
    assert "write_sinks" in str(exc.value)


def test_load_ruleset_schema_error_paths():
    with pytest.raises(SchemaError) as exc:
        load_ruleset({"write_sinks": [{"name": "setValue"}]})
    assert exc.value.path == "write_sinks[0].class"
    with pytest.raises(SchemaError):
        load_ruleset({"bogus_section": []})
    with pytest.raises(SchemaError):
        load_ruleset({"crypto_prefixes": ["javax.crypto"]})


def test_find_invocations_matcher_never_matching(fig9_write_class):
    program = make_program(fig9_write_class)
    assert find_invocations(program, MethodMatcher("Lno/Such;", "m")) == []


def test_find_invocations_counts_all_getvalue_variants():
    program = make_program(
        """
        .class public Lr/R;
        .super Ljava/lang/Object;
        .method public m(Landroid/bluetooth/BluetoothGattCharacteristic;)V
            .locals 4
            invoke-virtual {p1}, Landroid/bluetooth/BluetoothGattCharacteristic;->getValue()[B
            move-result-object v0
            const/4 v1, 0x0
            const/4 v2, 0x0
            invoke-virtual {p1, v1, v2}, Landroid/bluetooth/BluetoothGattCharacteristic;->getIntValue(II)Ljava/lang/Integer;
            move-result-object v3
            return-void
        .end method
        """
    )
    sites = find_invocations(program, default_ruleset().read_sources)
    assert len(sites) == 2


ELIGIBLE_CLASS = """
.class public Le/Main;
.super Ljava/lang/Object;
.method public connect(Landroid/bluetooth/BluetoothDevice;)V
    .locals 3
    const/4 v0, 0x0
    invoke-virtual {p1, v0, v1, v2}, Landroid/bluetooth/BluetoothDevice;->connectGatt(Landroid/content/Context;ZLandroid/bluetooth/BluetoothGattCallback;)Landroid/bluetooth/BluetoothGatt;
    return-void
.end method
"""


def test_eligibility_connectgatt(fig9_write_class):
    rs = default_ruleset()
    program = make_program(ELIGIBLE_CLASS, fig9_write_class)
    v = is_eligible(program, rs)
    assert v.eligible and "permissions not checked" in v.reason

    no_marker = make_program(fig9_write_class)
    v2 = is_eligible(no_marker, rs)
    assert not v2.eligible and v2.reason == "no connectGatt"


def test_eligibility_permission_list(fig9_write_class):
    rs = default_ruleset()
    program = make_program(ELIGIBLE_CLASS, fig9_write_class)
    assert is_eligible(program, rs, ["android.permission.BLUETOOTH"]).eligible
    assert is_eligible(program, rs, ["BLUETOOTH", "INTERNET"]).eligible
    denied = is_eligible(program, rs, ["android.permission.INTERNET"])
    assert not denied.eligible and denied.reason == "permission absent"


def test_matching_is_pure(fig9_write_class):
    program = make_program(fig9_write_class)
    rs = default_ruleset()
    first = find_invocations(program, rs.write_sinks)
    for _ in range(3):
        assert find_invocations(program, rs.write_sinks) == first

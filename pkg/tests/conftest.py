from __future__ import annotations

import textwrap

import pytest

from gattrace.smali import SmaliProgram, program_from_texts


def make_program(*class_texts: str) -> SmaliProgram:
    return program_from_texts([textwrap.dedent(t) for t in class_texts])


@pytest.fixture
def fig9_write_class() -> str:
    # helper method writes its second argument; caller feeds it cipher output
    return """
    .class public La/b/C;
    .super Ljava/lang/Object;

    .method private a(Landroid/bluetooth/BluetoothGatt;[B)V
        .locals 4
        invoke-virtual {v0, v3}, Landroid/bluetooth/BluetoothGattService;->getCharacteristic(Ljava/util/UUID;)Landroid/bluetooth/BluetoothGattCharacteristic;
        move-result-object v3
        invoke-virtual {v3, p2}, Landroid/bluetooth/BluetoothGattCharacteristic;->setValue([B)Z
        return-void
    .end method

    .method public b()V
        .locals 3
        invoke-virtual {v0, v1}, Ljavax/crypto/Cipher;->doFinal([B)[B
        move-result-object v2
        invoke-direct {p0, v1, v2}, La/b/C;->a(Landroid/bluetooth/BluetoothGatt;[B)V
        return-void
    .end method
    """

from __future__ import annotations

import textwrap
import zipfile

import pytest

from gattrace.smali import (
    EmptyInputError,
    Kind,
    MethodSignature,
    Register,
    parse_class_text,
    parse_instruction,
    parse_program,
    program_from_texts,
    split_type_descriptors,
)

from conftest import make_program


def test_split_type_descriptors():
    assert split_type_descriptors("") == ()
    assert split_type_descriptors("II") == ("I", "I")
    assert split_type_descriptors("[BLjava/lang/String;J") == ("[B", "Ljava/lang/String;", "J")
    assert split_type_descriptors("[[I") == ("[[I",)
    with pytest.raises(ValueError):
        split_type_descriptors("Q")


def test_method_signature_roundtrip():
    text = "Landroid/bluetooth/BluetoothGattCharacteristic;->getIntValue(II)Ljava/lang/Integer;"
    sig = MethodSignature.parse(text)
    assert sig.class_descriptor == "Landroid/bluetooth/BluetoothGattCharacteristic;"
    assert sig.name == "getIntValue"
    assert sig.param_descriptors == ("I", "I")
    assert sig.render() == text


def test_register_rendering():
    assert Register.parse("v3").render() == "v3"
    assert Register.parse("p2").render() == "p2"
    with pytest.raises(ValueError):
        Register.parse("x1")


def test_fig9_shape_parses_with_sink_at_recorded_offset(fig9_write_class):
    program = make_program(fig9_write_class)
    cls = program.classes["La/b/C;"]
    method_a = [m for m in cls.methods if m.signature.name == "a"][0]
    sink = method_a.instructions[2]
    assert sink.opcode is Kind.INVOKE
    assert sink.method_ref.name == "setValue"
    assert sink.offset == 2
    assert sink.operands == (Register.parse("v3"), Register.parse("p2"))


def test_empty_directory_raises(tmp_path):
    with pytest.raises(EmptyInputError):
        parse_program(tmp_path)


def test_zip_archive_input(tmp_path, fig9_write_class):
    archive = tmp_path / "app.zip"
    with zipfile.ZipFile(archive, "w") as zf:
        zf.writestr("a/b/C.smali", textwrap.dedent(fig9_write_class))
    program = parse_program(archive)
    assert "La/b/C;" in program.classes


def test_malformed_file_reported_not_fatal(tmp_path, fig9_write_class):
    (tmp_path / "good.smali").write_text(textwrap.dedent(fig9_write_class))
    (tmp_path / "bad.smali").write_text("this is not smali at all\n")
    program = parse_program(tmp_path)
    assert "La/b/C;" in program.classes
    assert any(e.file == "bad.smali" for e in program.errors)


def test_unknown_opcode_degrades_to_opaque():
    cls, errors, _ = parse_class_text(
        textwrap.dedent(
            """
            .class public Lt/T;
            .super Ljava/lang/Object;
            .method public m()V
                .locals 2
                frob-twiddle v0, v1
                const/4 v0, 0x0
                return-void
            .end method
            """
        )
    )
    assert not errors
    ins = cls.methods[0].instructions[0]
    assert ins.opcode is Kind.OPAQUE
    assert ins.operands == (Register.parse("v0"), Register.parse("v1"))
    # the rest of the method still parsed
    assert cls.methods[0].instructions[1].opcode is Kind.CONST


def test_range_invoke_expansion():
    ins = parse_instruction("invoke-virtual/range {v0 .. v5}, La/B;->m(IIIII)V", 0)
    assert [r.render() for r in ins.operands] == ["v0", "v1", "v2", "v3", "v4", "v5"]
    assert ins.name == "invoke-virtual/range"


def test_const_string_with_escapes_and_commas():
    ins = parse_instruction('const-string v0, "a, \\"b\\", c"', 0)
    assert ins.literal == 'a, "b", c'


def test_annotations_and_debug_directives_skipped_counted():
    cls, errors, skipped = parse_class_text(
        textwrap.dedent(
            """
            .class public Lt/T;
            .super Ljava/lang/Object;

            .annotation system Ldalvik/annotation/MemberClasses;
                value = something
            .end annotation

            .method public m()V
                .locals 1
                .prologue
                .line 12
                const/4 v0, 0x0
                :try_start_0
                return-void
                :try_end_0
                .catch Ljava/lang/Exception; {:try_start_0 .. :try_end_0} :catch_0
                :catch_0
                return-void
            .end method
            """
        )
    )
    assert not errors
    assert skipped >= 4
    assert len(cls.methods[0].instructions) == 3


def test_abstract_method_has_no_body():
    cls, errors, _ = parse_class_text(
        textwrap.dedent(
            """
            .class public interface abstract Lt/I;
            .super Ljava/lang/Object;
            .method public abstract run([B)[B
            .end method
            """
        )
    )
    assert not errors
    assert cls.methods[0].is_abstract
    assert cls.methods[0].instructions == ()


def test_parse_print_roundtrip_over_opcode_subset():
    body = [
        "move v0, v1",
        "move-object/from16 v0, v21",
        "move-wide v2, v4",
        "move-result-object v0",
        "const/4 v0, 7",
        "const-wide/16 v2, 10",
        'const-string v1, "hey there"',
        "const-class v1, Ljava/util/List;",
        "new-array v0, v1, [B",
        "new-instance v0, Ljava/lang/StringBuilder;",
        "aget-object v0, v1, v2",
        "aput-byte v0, v1, v2",
        "iget-object v0, v1, La/B;->f:[B",
        "iput-wide v2, v1, La/B;->g:J",
        "sget-object v0, La/B;->h:[B",
        "sput v0, La/B;->i:I",
        "invoke-virtual {v0, v1}, La/B;->m([B)Z",
        "invoke-static {}, La/B;->s()V",
        "invoke-virtual/range {v0 .. v3}, La/B;->r(III)V",
        "filled-new-array {v0, v1}, [I",
        "fill-array-data v0, :array_0",
        "return-object v0",
        "return-void",
        "goto :goto_1",
        "if-eq v0, v1, :cond_0",
        "if-eqz v0, :cond_1",
        "cmp-long v0, v2, v4",
        "neg-int v0, v1",
        "int-to-long v2, v0",
        "array-length v0, v1",
        "add-int v0, v1, v2",
        "add-int/2addr v0, v1",
        "add-int/lit8 v0, v1, 5",
        "mul-double v0, v2, v4",
    ]
    first = [parse_instruction(line, i) for i, line in enumerate(body)]
    second = [parse_instruction(ins.render(), i) for i, ins in enumerate(first)]
    assert first == second


def test_two_parses_identical(tmp_path, fig9_write_class):
    (tmp_path / "C.smali").write_text(textwrap.dedent(fig9_write_class))
    p1 = parse_program(tmp_path)
    p2 = parse_program(tmp_path)
    assert p1.classes == p2.classes
    assert p1.callers_index == p2.callers_index


def test_callers_index_complete(fig9_write_class):
    program = make_program(fig9_write_class)
    for method in program.iter_methods():
        for ins in method.instructions:
            if ins.opcode is Kind.INVOKE:
                sites = program.callers_index[ins.method_ref]
                assert any(m is method and off == ins.offset for m, off in sites)


def test_interface_impl_index():
    program = program_from_texts(
        [
            ".class public interface abstract Lt/I;\n.super Ljava/lang/Object;",
            ".class public Lt/A;\n.super Ljava/lang/Object;\n.implements Lt/I;",
            ".class public Lt/B;\n.super Ljava/lang/Object;\n.implements Lt/I;",
        ]
    )
    assert program.interface_impl_index["Lt/I;"] == ("Lt/A;", "Lt/B;")


def test_param_slots_respect_static_and_wide():
    cls, _, _ = parse_class_text(
        textwrap.dedent(
            """
            .class public Lt/T;
            .super Ljava/lang/Object;
            .method public static m(IJ[B)V
                .locals 1
                return-void
            .end method
            .method public n(I)V
                .locals 1
                return-void
            .end method
            """
        )
    )
    static_m, inst_n = cls.methods
    assert static_m.param_slot_count() == 4  # I + J(2) + [B
    assert inst_n.param_slot_count() == 2  # receiver + I

from __future__ import annotations

import textwrap

from gattrace.smali import Register, def_use, parse_class_text


def _method(body: str):
    cls, errors, _ = parse_class_text(
        textwrap.dedent(
            f"""
            .class public Lt/T;
            .super Ljava/lang/Object;
            .method public m([B)V
                .registers 16
            {body}
            .end method
            """
        )
    )
    assert not errors
    return cls.methods[0]


def r(text: str) -> Register:
    return Register.parse(text)


def test_move_result_links_to_invoke():
    m = _method(
        """
        invoke-static {v0}, Ljava/util/Arrays;->toString([B)Ljava/lang/String;
        move-result-object v3
        """
    )
    table = def_use(m)
    assert table[0].uses == (r("v0"),)
    assert table[1].defs == (r("v3"),)
    assert table[1].invoke_link == 0


def test_move_result_without_invoke_has_no_link():
    m = _method(
        """
        const/4 v0, 0x0
        move-result-object v3
        """
    )
    assert def_use(m)[1].invoke_link is None


def test_range_invoke_uses_all_registers():
    m = _method("invoke-virtual/range {v0 .. v5}, La/B;->m(IIIII)V")
    assert def_use(m)[0].uses == tuple(r(f"v{i}") for i in range(6))


def test_wide_values_cover_register_pairs():
    m = _method(
        """
        const-wide/16 v2, 10
        move-wide v4, v2
        """
    )
    table = def_use(m)
    assert table[0].defs == (r("v2"), r("v3"))
    assert table[1].defs == (r("v4"), r("v5"))
    assert table[1].uses == (r("v2"), r("v3"))


def test_aget_aput_roles():
    m = _method(
        """
        aget-byte v0, v1, v2
        aput-byte v0, v1, v2
        """
    )
    table = def_use(m)
    assert table[0].defs == (r("v0"),)
    assert table[0].uses == (r("v1"), r("v2"))
    assert table[1].defs == ()
    assert table[1].uses == (r("v0"), r("v1"), r("v2"))


def test_field_ops():
    m = _method(
        """
        iget-object v0, p0, Lt/T;->buf:[B
        iput-object v0, p0, Lt/T;->buf:[B
        sget-object v1, Lt/T;->S:[B
        sput-object v1, Lt/T;->S:[B
        """
    )
    table = def_use(m)
    assert table[0].defs == (r("v0"),) and table[0].uses == (r("p0"),)
    assert table[1].defs == () and table[1].uses == (r("v0"), r("p0"))
    assert table[2].defs == (r("v1"),) and table[2].uses == ()
    assert table[3].defs == () and table[3].uses == (r("v1"),)


def test_opaque_records_uses_but_defines_nothing():
    m = _method("frobnicate v0, v1")
    table = def_use(m)
    assert table[0].defs == ()
    assert table[0].uses == (r("v0"), r("v1"))

import pytest
from hypothesis import given, strategies as st

from adtlayout.syntax import (
    AdtDecl,
    Apply,
    BitLayout,
    Concat,
    Empty,
    FieldRef,
    PackingDecl,
    PackingSyntaxError,
    parse_packing_expr,
    parse_program,
    print_decl,
    print_expr,
)

FLOAT16 = "packing Float16(sign:1, exp:5, frac:10): 16 = 0b_seeeeeff_ffffffff;"


def test_parse_float16_decl():
    decls = parse_program(FLOAT16)
    assert len(decls) == 1
    d = decls[0]
    assert isinstance(d, PackingDecl)
    assert d.name == "Float16"
    assert d.params == (("sign", 1), ("exp", 5), ("frac", 10))
    assert d.width == 16
    assert isinstance(d.body, BitLayout)
    assert d.body.width == 16
    assert "".join(d.body.bits) == "seeeeeffffffffff"


def test_parse_adt_two_variants():
    decls = parse_program("type T { case A(x: int); case B(y: float); }")
    assert len(decls) == 1
    d = decls[0]
    assert isinstance(d, AdtDecl)
    assert [v.name for v in d.variants] == ["A", "B"]
    assert d.variants[0].fields[0][0] == "x"


def test_parse_empty_source():
    assert parse_program("") == []


def test_parse_layout_with_fields():
    e = parse_packing_expr("0b_00aa_bb11")
    assert isinstance(e, BitLayout)
    assert "".join(e.bits) == "00aabb11"


def test_parse_concat_of_applies():
    e = parse_packing_expr("#concat(Float16(s1,e1,f1), Float16(s2,e2,f2))")
    assert isinstance(e, Concat)
    assert len(e.parts) == 2
    assert all(isinstance(p, Apply) for p in e.parts)
    assert e.parts[0].args == (FieldRef("s1"), FieldRef("e1"), FieldRef("f1"))


def test_empty_bit_layout_is_empty():
    assert parse_packing_expr("0b") == Empty()
    assert parse_packing_expr("") == Empty()


def test_underscores_do_not_matter():
    a = parse_packing_expr("0b_00aa_bb11")
    b = parse_packing_expr("0b00aabb11")
    c = parse_packing_expr("0b0_0_a_a_b_b_1_1")
    assert a == b == c


def test_bad_literal_character():
    with pytest.raises(PackingSyntaxError):
        parse_program("packing P(a:1): 2 = 0b!?;")


def test_unbalanced_parens():
    with pytest.raises(PackingSyntaxError):
        parse_packing_expr("#concat(a, b")


def test_unknown_annotation():
    with pytest.raises(PackingSyntaxError) as exc:
        parse_program("type T #frob { case A; }")
    assert exc.value.code == "E002"


def test_packed_is_alias_for_packing():
    d = parse_program("type T #packed(0b_aaaa) { case A(alpha: u4); }")[0]
    assert d.packing is not None


def test_case_level_packing():
    d = parse_program("type T { case A(a: u2, b: u2) #packing 0b_00aabb11; case B; }")[0]
    assert d.variants[0].packing is not None
    assert d.packing is None
    assert d.packing_for_variant(0) is not None
    assert d.packing_for_variant(1) is None


def test_adt_level_packing_arity_checked():
    with pytest.raises(PackingSyntaxError):
        parse_program("type T #packing(0b_aa) { case A(a: u2); case B; }")


def test_mixing_packing_levels_rejected():
    with pytest.raises(PackingSyntaxError):
        parse_program(
            "type T #packing(0b_aa, 0b_bb) { case A(a: u2) #packing(a); case B(b: u2); }"
        )


def test_duplicate_param_rejected():
    with pytest.raises(PackingSyntaxError):
        parse_program("packing P(a:1, a:2): 4 = 0b_0000;")


def test_roundtrip_float_suite():
    src = """
packing Float16(sign: 1, exp: 5, frac: 10): 16 = 0b_seeeeeff_ffffffff;
packing Float32(sign: 1, exp: 8, frac: 23): 32 = 0b_seeeeeee_efffffff_ffffffff_ffffffff;
packing TwoFloat16s(s1: 1, e1: 5, f1: 10, s2: 1, e2: 5, f2: 10): 32
    = #concat(Float16(s1, e1, f1), Float16(s2, e2, f2));
type Opt<T> #unboxed { case None; case Some(val: T); }
type Pair { case P(left: u8, right: (u4, bool)); }
type Packed { case C(a: u2, b: u2) #packing(#solve(a, b)); }
"""
    decls = parse_program(src)
    for d in decls:
        again = parse_program(print_decl(d))
        assert again == [d]


@st.composite
def packing_exprs(draw, depth=2):
    kind = draw(st.sampled_from(["layout", "field", "apply", "concat", "empty"]))
    if depth == 0 and kind in ("apply", "concat"):
        kind = "layout"
    if kind == "empty":
        return Empty()
    if kind == "field":
        return FieldRef(draw(st.sampled_from(["alpha", "beta", "g1", "delta.0"])))
    if kind == "layout":
        bits = draw(st.lists(st.sampled_from("01?abc"), min_size=1, max_size=12))
        return BitLayout(tuple(bits))
    parts = draw(st.lists(packing_exprs(depth=depth - 1), min_size=0, max_size=3))
    if kind == "concat":
        return Concat(tuple(parts))
    return Apply(draw(st.sampled_from(["P", "Float16"])), tuple(parts))


@given(packing_exprs(depth=3))
def test_print_parse_roundtrip(expr):
    assert parse_packing_expr(print_expr(expr)) == expr


@given(st.lists(st.sampled_from("01?ab"), min_size=0, max_size=16), st.data())
def test_underscore_placement_irrelevant(bits, data):
    text = "".join(bits)
    n_cuts = data.draw(st.integers(min_value=0, max_value=4))
    cuts = sorted(data.draw(st.lists(st.integers(0, len(text)), min_size=n_cuts, max_size=n_cuts)))
    pieces = []
    prev = 0
    for c in cuts:
        pieces.append(text[prev:c])
        prev = c
    pieces.append(text[prev:])
    with_underscores = "0b" + "_".join(pieces)
    assert parse_packing_expr(with_underscores) == parse_packing_expr("0b" + text)


def test_duplicate_packing_annotation_rejected():
    with pytest.raises(PackingSyntaxError):
        parse_program("type T #packing(0b_aa) #packing(0b_aa) { case A(a: u2); }")

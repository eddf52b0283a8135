import json

import pytest

from adtlayout.pipeline import process_adts
from adtlayout.syntax import parse_program, parse_type
from adtlayout.targets import (
    BUILTIN_TARGETS,
    JVM,
    X64,
    X86_32,
    AdtEnv,
    ScalarKind,
    UnboxOptions,
    get_scalar_kinds,
    load_target,
    monomorphize_adt,
    unboxing_eligibility,
)


def ks(*names):
    return frozenset(ScalarKind(n) for n in names)


def test_u2_on_x64():
    assert get_scalar_kinds(parse_type("u2"), X64) == ks("B64", "F64", "R64")


def test_array_byte_on_jvm_is_ref_only():
    assert get_scalar_kinds(parse_type("Array<byte>"), JVM) == ks("Ref")


def test_int_float_intersection_on_x86_32():
    ints = get_scalar_kinds(parse_type("int"), X86_32)
    floats = get_scalar_kinds(parse_type("float"), X86_32)
    assert ints == ks("B32")
    assert floats == ks("B32", "F32")
    assert ints & floats == ks("B32")


def test_every_builtin_target_total():
    types = ["bool", "u1", "u8", "i32", "u33", "i64", "f32", "f64", "Array<byte>", "string"]
    for target in BUILTIN_TARGETS.values():
        for t in types:
            kinds = get_scalar_kinds(parse_type(t), target)
            assert kinds, f"{t} empty on {target.name}"


def test_load_target_roundtrip(tmp_path):
    spec = {
        "name": "custom32",
        "word_width": 32,
        "kinds": {
            "int32": ["B32"],
            "int64": ["B64"],
            "float32": ["F32"],
            "float64": ["F64"],
            "ref": ["R32"],
        },
        "ref_tagging": None,
    }
    p = tmp_path / "target.json"
    p.write_text(json.dumps(spec))
    t = load_target(str(p))
    assert t.word_width == 32
    assert get_scalar_kinds(parse_type("u7"), t) == ks("B32")


def env_for(src: str, target=X64) -> AdtEnv:
    decls = parse_program(src)
    return AdtEnv(decls={d.name: d for d in decls}, target=target)


def test_monomorphize_option_u32():
    env = env_for("type Option<T> { case None; case Some(val: T); }")
    mono = monomorphize_adt(env.decls["Option"], (parse_type("u32"),), env)
    assert mono.name == "Option<u32>"
    assert [v.name for v in mono.variants] == ["None", "Some"]
    some = mono.variants[1]
    assert len(some.fields) == 1
    assert some.fields[0].width == 32


def test_monomorphize_flattens_tuples():
    env = env_for("type T { case A(p: (u8, u8)); }")
    mono = monomorphize_adt(env.decls["T"], (), env)
    fields = mono.variants[0].fields
    assert [f.name for f in fields] == ["p.0", "p.1"]
    assert all(f.width == 8 for f in fields)


def test_recursive_flag_via_pipeline():
    decls = parse_program(
        "type List<T> { case Nil; case Cons(head: T, tail: List<T>); }"
    )
    out = process_adts(decls, X64, requests=[parse_type("List<u32>")])
    r = out.resolved["List<u32>"]
    assert r.mono.recursive
    assert r.disposition.boxed and r.disposition.reason == "recursive"


def test_mutual_recursion_detected():
    decls = parse_program(
        "type Even { case Zero; case SuccE(p: Odd); }"
        "type Odd { case SuccO(p: Even); }"
    )
    out = process_adts(decls, X64)
    assert out.resolved["Even"].disposition.reason == "recursive"
    assert out.resolved["Odd"].disposition.reason == "recursive"


def test_monomorphize_idempotent_on_concrete():
    env = env_for("type T { case A(x: u8, y: f32); }")
    m1 = monomorphize_adt(env.decls["T"], (), env)
    m2 = monomorphize_adt(env.decls["T"], (), env)
    assert m1.variants == m2.variants


def test_eligibility_recursive_beats_unboxed_annotation():
    decls = parse_program(
        "type List<T> #unboxed { case Nil; case Cons(head: T, tail: List<T>); }"
    )
    out = process_adts(decls, X64, requests=[parse_type("List<u8>")])
    d = out.resolved["List<u8>"].disposition
    assert d.boxed and d.reason == "recursive"


def test_eligibility_captured():
    decls = parse_program("type F #captured #unboxed { case A(x: u8); case B; }")
    out = process_adts(decls, X64)
    d = out.resolved["F"].disposition
    assert d.boxed and d.reason == "captured"


def test_eligibility_all_nullary_always_unboxed():
    decls = parse_program("type Color { case Red; case Green; case Blue; }")
    out = process_adts(decls, X64)
    d = out.resolved["Color"].disposition
    assert not d.boxed and d.reason == "all-nullary"


def test_eligibility_single_variant_auto_limit():
    decls = parse_program(
        "type S2 { case C(a: u8, b: u8); }"
        "type S3 { case C(a: u8, b: u8, c: u8); }"
    )
    out = process_adts(decls, X64, options=UnboxOptions(auto_unbox_limit=2))
    assert not out.resolved["S2"].disposition.boxed
    assert out.resolved["S2"].disposition.reason == "auto"
    assert out.resolved["S3"].disposition.boxed
    assert out.resolved["S3"].disposition.reason == "default"


def test_eligibility_default_boxed():
    decls = parse_program("type T { case A(x: int); case B(y: float); }")
    out = process_adts(decls, X64)
    assert out.resolved["T"].disposition.boxed


def test_unboxed_field_embeds_inner_scalars():
    decls = parse_program(
        "type Inner #unboxed { case N; case S(v: u8); }"
        "type Outer { case C(o: Inner, extra: u4); }"
    )
    out = process_adts(decls, X64)
    outer = out.resolved["Outer"].mono
    fields = outer.variants[0].fields
    assert [f.name for f in fields] == ["o.0", "extra"]
    assert fields[0].embedded and fields[0].adt_ref == "Inner"
    # the embedded scalar only needs the inner layout's used bits
    assert fields[0].width == out.resolved["Inner"].layout.used_width(0)


def test_boxed_field_is_reference():
    decls = parse_program(
        "type Big { case A(x: u64, y: u64, z: u64); }"
        "type Holder { case H(b: Big); }"
    )
    out = process_adts(decls, X64)
    f = out.resolved["Holder"].mono.variants[0].fields[0]
    assert f.is_ref
    assert f.adt_ref == "Big"
    assert f.width == 64


def test_monomorphize_wrong_arity():
    from adtlayout.targets import MonoError

    env = env_for("type Option<T> { case None; case Some(val: T); }")
    with pytest.raises(MonoError):
        monomorphize_adt(env.decls["Option"], (), env)


def test_infinite_instantiation_chain_rejected():
    from adtlayout.targets import MonoError

    decls = parse_program("type Nest<T> { case C(inner: Nest<(T, T)>); }")
    with pytest.raises(MonoError):
        process_adts(decls, X64, requests=[parse_type("Nest<u8>")])


def test_get_scalar_kinds_unknown_type():
    with pytest.raises(KeyError):
        get_scalar_kinds(parse_type("(u8, u8)"), X64)


def test_recursion_check_order_independent():
    a = parse_program("type L { case Nil; case Cons(head: u8, tail: L); }")
    b = parse_program("type L { case Nil; case Cons(tail: L, head: u8); }")
    for decls in (a, b):
        out = process_adts(decls, X64)
        assert out.resolved["L"].disposition.reason == "recursive"

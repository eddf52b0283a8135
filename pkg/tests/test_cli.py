import io
import json

import pytest

from adtlayout.cli import cmd_check, cmd_equiv, cmd_layout, main, run_equivalence
from adtlayout.ir import Const

from corpus import CORPUS_SRC

FLOAT_SUITE = """
packing Float16(sign: 1, exp: 5, frac: 10): 16 = 0b_seeeeeff_ffffffff;
packing Float32(sign: 1, exp: 8, frac: 23): 32 = 0b_seeeeeee_efffffff_ffffffff_ffffffff;
packing TwoFloat16s(s1: 1, e1: 5, f1: 10, s2: 1, e2: 5, f2: 10): 32
    = #concat(Float16(s1, e1, f1), Float16(s2, e2, f2));
"""


@pytest.fixture
def float_file(tmp_path):
    p = tmp_path / "floats.pk"
    p.write_text(FLOAT_SUITE)
    return str(p)


@pytest.fixture
def corpus_file(tmp_path):
    p = tmp_path / "corpus.pk"
    p.write_text(CORPUS_SRC)
    return str(p)


def test_check_float_suite_ok(float_file):
    assert cmd_check([float_file], out=io.StringIO()) == 0


def test_check_solve_in_decl_fails(tmp_path):
    p = tmp_path / "bad.pk"
    p.write_text("packing P(a:4): 8 = #solve(a);")
    err = io.StringIO()
    assert cmd_check([str(p)], out=err) == 1
    assert "E011" in err.getvalue()


def test_check_missing_file_exit_2():
    assert cmd_check(["/nonexistent/file.pk"], out=io.StringIO()) == 2


def test_layout_option_report(tmp_path):
    p = tmp_path / "opt.pk"
    p.write_text("type Option<T> #unboxed { case None; case Some(val: T); }")
    out = io.StringIO()
    status = cmd_layout([str(p)], as_json=True, instantiate=["Option<u32>"], out=out)
    assert status == 0
    report = json.loads(out.getvalue())
    assert report["v"] == 1
    entry = report["adts"][0]
    assert entry["adt"] == "Option<u32>"
    assert not entry["boxed"]
    assert len(entry["scalars"]) == 1
    assert entry["tag_scheme"] == {
        "kind": "explicit-tag",
        "scalar": 0,
        "width": 1,
        "offset": 32,
    }


def test_layout_recursive_reported_boxed(tmp_path):
    p = tmp_path / "list.pk"
    p.write_text("type List<T> { case Nil; case Cons(head: T, tail: List<T>); }")
    out = io.StringIO()
    status = cmd_layout([str(p)], as_json=True, instantiate=["List<u32>"], out=out)
    assert status == 0
    entry = json.loads(out.getvalue())["adts"][0]
    assert entry["boxed"] and entry["reason"] == "recursive"


def test_layout_nullary_enum_tag_scalar(tmp_path):
    p = tmp_path / "enum.pk"
    p.write_text("type Color { case Red; case Green; case Blue; }")
    out = io.StringIO()
    assert cmd_layout([str(p)], as_json=True, out=out) == 0
    entry = json.loads(out.getvalue())["adts"][0]
    assert entry["scalars"] == [{"kind": "B64", "width": 2, "ref": False}]
    assert entry["tag_scheme"]["kind"] == "bare-tag"


def test_layout_text_output_stable(corpus_file):
    outs = []
    for _ in range(2):
        out = io.StringIO()
        assert cmd_layout([corpus_file], out=out) == 0
        outs.append(out.getvalue())
    assert outs[0] == outs[1]
    assert "adt C05" in outs[0]


def test_layout_json_deterministic(corpus_file):
    blobs = []
    for _ in range(2):
        out = io.StringIO()
        assert cmd_layout([corpus_file], as_json=True, out=out) == 0
        blobs.append(out.getvalue())
    assert blobs[0] == blobs[1]


def test_layout_annotation_infeasible_exit_1(tmp_path):
    p = tmp_path / "bad.pk"
    p.write_text("type P #unboxed { case C(x: u8, y: f32) #packing #solve(x, y); }")
    err = io.StringIO()
    status = cmd_layout([str(p)], target="jvm", out=io.StringIO(), err=err)
    assert status == 1
    assert "x" in err.getvalue() or "y" in err.getvalue()


def test_layout_env_var_target(tmp_path, monkeypatch):
    p = tmp_path / "t.pk"
    p.write_text("type T { case A(x: u8); }")
    monkeypatch.setenv("ADTLAYOUT_TARGET", "x86-32")
    out = io.StringIO()
    assert cmd_layout([str(p)], as_json=True, out=out) == 0
    entry = json.loads(out.getvalue())["adts"][0]
    assert entry["scalars"][0]["kind"] == "B32"


def test_equiv_small_run_exit_0(corpus_file):
    out = io.StringIO()
    assert cmd_equiv([corpus_file], seed=7, programs=12, out=out) == 0
    assert "12/12" in out.getvalue()


def test_equiv_zero_programs_vacuous():
    out = io.StringIO()
    assert cmd_equiv([], seed=7, programs=0, out=out) == 0


def test_equiv_injected_fault_detected():
    """Harness self-test: corrupting one constant in the normalized program
    must surface as a disagreement with a reproducer."""

    def sabotage(post):
        for fn in post.functions.values():
            for blk in fn.blocks.values():
                for i, ins in enumerate(blk.instrs):
                    if isinstance(ins, Const) and isinstance(ins.value, int):
                        blk.instrs[i] = Const(ins.dst, ins.type, ins.value ^ 1)
                        return

    result = run_equivalence(seed=3, count=40, mutate_normalized=sabotage)
    assert not result.ok
    assert "boxed=" in result.failures[0]


def test_main_argparse_roundtrip(float_file, capsys):
    assert main(["check", float_file]) == 0
    assert main(["layout", float_file, "--json"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["v"] == 1


def test_unbox_limit_flag(tmp_path):
    p = tmp_path / "s3.pk"
    p.write_text("type S3 { case C(a: u8, b: u8, c: u8); }")
    out = io.StringIO()
    assert cmd_layout([str(p)], as_json=True, out=out) == 0
    assert json.loads(out.getvalue())["adts"][0]["boxed"]
    out = io.StringIO()
    assert cmd_layout([str(p)], as_json=True, unbox_limit=3, out=out) == 0
    entry = json.loads(out.getvalue())["adts"][0]
    assert not entry["boxed"] and entry["reason"] == "auto"


def test_custom_target_file(tmp_path):
    spec = {
        "name": "w32",
        "word_width": 32,
        "kinds": {
            "int32": ["B32"],
            "int64": ["B64"],
            "float32": ["F32"],
            "float64": ["F64"],
            "ref": ["R32"],
        },
    }
    tfile = tmp_path / "w32.json"
    tfile.write_text(json.dumps(spec))
    p = tmp_path / "t.pk"
    p.write_text("type T { case A(x: u8); }")
    out = io.StringIO()
    assert cmd_layout([str(p)], target=str(tfile), as_json=True, out=out) == 0
    assert json.loads(out.getvalue())["adts"][0]["scalars"][0]["kind"] == "B32"

"""Textual form for source-level programs: one instruction per line,
`%name = op<type>(args)`. A bundle file carries the target, the type
declarations and the functions, which is enough to rebuild and re-run a
program; the equivalence driver prints failing programs in this form."""

from __future__ import annotations

import re
from typing import Optional

from .ir import (
    Alloc,
    Block,
    Branch,
    Call,
    Const,
    Eq,
    Function,
    GetContents,
    GetField,
    GetTag,
    IrType,
    Jump,
    Program,
    ReplaceNull,
    Return,
    Switch,
    TAdt,
    TFloat,
    TInt,
    Trap,
    TTuple,
    print_ir_type,
)
from .pipeline import process_adts
from .syntax import parse_program, parse_type, print_program
from .targets import BUILTIN_TARGETS, Target, UnboxOptions


# ---------------------------------------------------------------------------
# Printing


def _print_type(t: IrType) -> str:
    return print_ir_type(t)


def print_instr(ins) -> str:
    if isinstance(ins, Const):
        v = "null" if ins.value is None else str(ins.value)
        return f"%{ins.dst} = const<{_print_type(ins.type)}> {v}"
    if isinstance(ins, Alloc):
        args = ", ".join(f"%{a}" for a in ins.args)
        return f"%{ins.dst} = alloc<{ins.adt}#{ins.case}>({args})"
    if isinstance(ins, GetField):
        return f"%{ins.dst} = getfield<{ins.adt}#{ins.case}.{ins.field}>(%{ins.src})"
    if isinstance(ins, GetContents):
        return f"%{ins.dst} = contents<{ins.adt}#{ins.case}>(%{ins.src})"
    if isinstance(ins, GetTag):
        return f"%{ins.dst} = gettag<{ins.adt}>(%{ins.src})"
    if isinstance(ins, ReplaceNull):
        return f"%{ins.dst} = replacenull<{ins.adt}>(%{ins.src})"
    if isinstance(ins, Eq):
        return f"%{ins.dst} = eq<{_print_type(ins.type)}>(%{ins.a}, %{ins.b})"
    if isinstance(ins, Call):
        args = ", ".join(f"%{a}" for a in ins.args)
        return f"%{ins.dst} = call {ins.fn}({args})"
    raise TypeError(f"unprintable instruction {ins!r}")


def print_term(term) -> str:
    if isinstance(term, Jump):
        return f"jmp {term.label}"
    if isinstance(term, Branch):
        return f"br %{term.cond}, {term.then_label}, {term.else_label}"
    if isinstance(term, Switch):
        cases = ", ".join(f"{k}: {lbl}" for k, lbl in term.cases)
        return f"switch %{term.value}, [{cases}], {term.default}"
    if isinstance(term, Return):
        return f"ret %{term.value}"
    if isinstance(term, Trap):
        return f"trap {term.kind}"
    raise TypeError(f"unprintable terminator {term!r}")


def print_function(fn: Function) -> str:
    params = ", ".join(f"%{n}: {_print_type(t)}" for n, t in fn.params)
    lines = [f"fn {fn.name}({params}) -> {_print_type(fn.ret)} {{"]
    for label in fn.block_order():
        blk = fn.blocks[label]
        lines.append(f"{label}:")
        for ins in blk.instrs:
            lines.append(f"  {print_instr(ins)}")
        lines.append(f"  {print_term(blk.term)}")
    lines.append("}")
    return "\n".join(lines)


def print_bundle(program: Program, decls, extra: str = "") -> str:
    parts = [f"target {program.target.name}"]
    if extra:
        parts.append(f"# {extra}")
    parts.append(print_program(decls).rstrip())
    for name in sorted(program.functions):
        parts.append(print_function(program.functions[name]))
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Parsing


class ProgTextError(Exception):
    pass


_INSTR_RE = re.compile(r"%(\S+)\s*=\s*(\w+)(.*)$")


def _split_args(text: str) -> list[str]:
    text = text.strip()
    if not text:
        return []
    return [a.strip() for a in text.split(",")]


def _take_brackets(text: str) -> tuple[str, str]:
    """Split 'xxx<...>rest' at the matching close bracket."""
    assert text.startswith("<")
    depth = 0
    for i, ch in enumerate(text):
        if ch == "<":
            depth += 1
        elif ch == ">":
            depth -= 1
            if depth == 0:
                return text[1:i], text[i + 1 :]
    raise ProgTextError(f"unbalanced type brackets in {text!r}")


def _parse_ir_type(text: str) -> IrType:
    text = text.strip()
    if text.startswith("("):
        inner = text[1:-1]
        parts = []
        depth = 0
        start = 0
        for i, ch in enumerate(inner):
            if ch in "(<":
                depth += 1
            elif ch in ")>":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(inner[start:i])
                start = i + 1
        parts.append(inner[start:])
        return TTuple(tuple(_parse_ir_type(p) for p in parts))
    m = re.fullmatch(r"([ui])(\d+)", text)
    if m:
        return TInt(int(m.group(2)), m.group(1) == "i")
    if text == "bool":
        return TInt(1, False)
    m = re.fullmatch(r"f(\d+)", text)
    if m:
        return TFloat(int(m.group(1)))
    return TAdt(text)


def _parse_case_ref(text: str) -> tuple[str, int, Optional[int]]:
    """Key#case or Key#case.field."""
    if "#" not in text:
        raise ProgTextError(f"expected Key#case in {text!r}")
    key, rest = text.rsplit("#", 1)
    if "." in rest:
        c, f = rest.split(".", 1)
        return key, int(c), int(f)
    return key, int(rest), None


def _strip_pct(tok: str) -> str:
    tok = tok.strip()
    if not tok.startswith("%"):
        raise ProgTextError(f"expected %name, found {tok!r}")
    return tok[1:]


def parse_function_text(text: str) -> Function:
    lines = [ln.rstrip() for ln in text.strip().splitlines()]
    header = lines[0]
    m = re.match(r"fn\s+(\S+)\((.*)\)\s*->\s*(.+)\s*\{$", header)
    if not m:
        raise ProgTextError(f"bad function header: {header!r}")
    name, params_text, ret_text = m.group(1), m.group(2), m.group(3)
    params = []
    if params_text.strip():
        depth = 0
        start = 0
        parts = []
        for i, ch in enumerate(params_text):
            if ch in "(<":
                depth += 1
            elif ch in ")>":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(params_text[start:i])
                start = i + 1
        parts.append(params_text[start:])
        for p in parts:
            pname, ptype = p.split(":", 1)
            params.append((_strip_pct(pname), _parse_ir_type(ptype)))
    fn = Function(name, tuple(params), _parse_ir_type(ret_text), "", {})
    current: Optional[Block] = None
    for ln in lines[1:]:
        s = ln.strip()
        if not s or s.startswith("#"):
            continue
        if s == "}":
            break
        if s.endswith(":") and not s.startswith("%"):
            label = s[:-1]
            current = Block(label)
            fn.blocks[label] = current
            if not fn.entry:
                fn.entry = label
            continue
        if current is None:
            raise ProgTextError(f"instruction outside a block: {s!r}")
        if s.startswith("%"):
            current.instrs.append(_parse_instr(s))
        else:
            current.term = _parse_term(s)
    return fn


def _parse_instr(s: str):
    m = _INSTR_RE.match(s)
    if not m:
        raise ProgTextError(f"bad instruction {s!r}")
    dst, op, rest = m.group(1), m.group(2), m.group(3).strip()
    if op == "const":
        tt, tail = _take_brackets(rest)
        v = tail.strip()
        return Const(dst, _parse_ir_type(tt), None if v == "null" else int(v))
    if op == "alloc":
        tt, tail = _take_brackets(rest)
        key, case, _ = _parse_case_ref(tt)
        args = tuple(_strip_pct(a) for a in _split_args(tail.strip()[1:-1]))
        return Alloc(dst, key, case, args)
    if op == "getfield":
        tt, tail = _take_brackets(rest)
        key, case, fidx = _parse_case_ref(tt)
        if fidx is None:
            raise ProgTextError(f"getfield needs Key#case.field in {s!r}")
        return GetField(dst, key, case, fidx, _strip_pct(tail.strip()[1:-1]))
    if op == "contents":
        tt, tail = _take_brackets(rest)
        key, case, _ = _parse_case_ref(tt)
        return GetContents(dst, key, case, _strip_pct(tail.strip()[1:-1]))
    if op == "gettag":
        tt, tail = _take_brackets(rest)
        return GetTag(dst, tt, _strip_pct(tail.strip()[1:-1]))
    if op == "replacenull":
        tt, tail = _take_brackets(rest)
        return ReplaceNull(dst, tt, _strip_pct(tail.strip()[1:-1]))
    if op == "eq":
        tt, tail = _take_brackets(rest)
        a, b = _split_args(tail.strip()[1:-1])
        return Eq(dst, _parse_ir_type(tt), _strip_pct(a), _strip_pct(b))
    if op == "call":
        m2 = re.match(r"(\S+)\((.*)\)$", rest)
        if not m2:
            raise ProgTextError(f"bad call {s!r}")
        args = tuple(_strip_pct(a) for a in _split_args(m2.group(2)))
        return Call(dst, m2.group(1), args)
    raise ProgTextError(f"unknown op {op!r}")


def _parse_term(s: str):
    if s.startswith("jmp "):
        return Jump(s[4:].strip())
    if s.startswith("br "):
        cond, t, e = [p.strip() for p in s[3:].split(",")]
        return Branch(_strip_pct(cond), t, e)
    if s.startswith("switch "):
        m = re.match(r"switch\s+(\S+),\s*\[(.*)\],\s*(\S+)$", s)
        if not m:
            raise ProgTextError(f"bad switch {s!r}")
        cases = []
        if m.group(2).strip():
            for part in m.group(2).split(","):
                k, lbl = part.split(":")
                cases.append((int(k.strip()), lbl.strip()))
        return Switch(_strip_pct(m.group(1)), tuple(cases), m.group(3))
    if s.startswith("ret "):
        return Return(_strip_pct(s[4:]))
    if s.startswith("trap"):
        kind = s[4:].strip() or "explicit"
        return Trap(kind)
    raise ProgTextError(f"bad terminator {s!r}")


def parse_bundle(
    text: str, options: UnboxOptions = UnboxOptions()
) -> tuple[Program, list]:
    """Rebuild a program from bundle text: target line, type declarations,
    then functions. Layouts are re-derived, so a bundle is self-contained."""
    lines = text.splitlines()
    target: Optional[Target] = None
    decl_lines: list[str] = []
    fn_chunks: list[list[str]] = []
    current_fn: Optional[list[str]] = None
    for ln in lines:
        s = ln.strip()
        if current_fn is not None:
            current_fn.append(ln)
            if s == "}":
                fn_chunks.append(current_fn)
                current_fn = None
            continue
        if s.startswith("target "):
            target = BUILTIN_TARGETS[s.split()[1]]
            continue
        if s.startswith("fn "):
            current_fn = [ln]
            continue
        if s.startswith("#") or not s:
            continue
        decl_lines.append(ln)
    if target is None:
        raise ProgTextError("bundle lacks a target line")
    decls = parse_program("\n".join(decl_lines))
    from .syntax import AdtDecl

    requests = [parse_type(d.name) for d in decls if isinstance(d, AdtDecl) and not d.type_params]
    layouts = process_adts(decls, target, requests=requests, options=options)
    program = Program(
        adts=layouts.monos(),
        dispositions={k: r.disposition for k, r in layouts.resolved.items()},
        layouts=layouts.layouts(),
        functions={},
        target=target,
    )
    for chunk in fn_chunks:
        fn = parse_function_text("\n".join(chunk))
        program.functions[fn.name] = fn
    return program, decls

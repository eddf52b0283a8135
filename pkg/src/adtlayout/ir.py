"""A small typed SSA used to exercise layouts end to end.

Functions are CFGs of basic blocks without phis: the generator and the
normalizer only build DAG-shaped control flow where every merge point is a
return, so single assignment plus dominance gives well-defined values.

Source programs (before normalization) operate on ADT values through
alloc/getfield/gettag/contents/replacenull/eq; normalized programs add
tuple construction, projection, bitwise operations and record reads over
the flattened representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Optional, Union

from .solver import LayoutSolution
from .syntax import (
    BoolType,
    FloatType,
    IntType,
    NamedType,
    TupleType,
    TypeExpr,
)
from .targets import Disposition, MonoAdt, Target

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TInt:
    width: int
    signed: bool = False


@dataclass(frozen=True)
class TFloat:
    width: int


@dataclass(frozen=True)
class TTuple:
    elems: tuple["IrType", ...]


@dataclass(frozen=True)
class TAdt:
    key: str


@dataclass(frozen=True)
class TCase:
    key: str
    index: int


@dataclass(frozen=True)
class TIntRep:
    """Packed bits backed by an integer of a known scalar kind; the kind
    tells later phases which values may carry references."""

    width: int
    kind: str


IrType = Union[TInt, TFloat, TTuple, TAdt, TCase, TIntRep]

BOOL = TInt(1, False)


def type_of_expr(t: TypeExpr, adts: dict[str, MonoAdt]) -> IrType:
    """IR type of a source-level field type."""
    if isinstance(t, IntType):
        return TInt(t.width, t.signed)
    if isinstance(t, BoolType):
        return BOOL
    if isinstance(t, FloatType):
        return TFloat(t.width)
    if isinstance(t, TupleType):
        return TTuple(tuple(type_of_expr(e, adts) for e in t.elems))
    if isinstance(t, NamedType):
        from .syntax import print_type

        key = print_type(t)
        if key in adts:
            return TAdt(key)
        raise TypeError(f"opaque reference type {key} has no IR value form")
    raise TypeError(f"no IR type for {t!r}")


def print_ir_type(t: IrType) -> str:
    if isinstance(t, TInt):
        return f"{'i' if t.signed else 'u'}{t.width}"
    if isinstance(t, TFloat):
        return f"f{t.width}"
    if isinstance(t, TTuple):
        return "(" + ", ".join(print_ir_type(e) for e in t.elems) + ")"
    if isinstance(t, TAdt):
        return t.key
    if isinstance(t, TCase):
        return f"{t.key}#{t.index}"
    if isinstance(t, TIntRep):
        return f"bits{t.width}:{t.kind}"
    raise TypeError(f"not an IR type: {t!r}")


# ---------------------------------------------------------------------------
# Instructions


@dataclass(frozen=True)
class Const:
    dst: str
    type: IrType
    value: Optional[int]  # None encodes a null reference


@dataclass(frozen=True)
class Alloc:
    dst: str
    adt: str
    case: int
    args: tuple[str, ...]


@dataclass(frozen=True)
class GetField:
    dst: str
    adt: str
    case: int
    field: int  # source field index
    src: str


@dataclass(frozen=True)
class GetContents:
    dst: str
    adt: str
    case: int
    src: str


@dataclass(frozen=True)
class GetTag:
    dst: str
    adt: str
    src: str


@dataclass(frozen=True)
class ReplaceNull:
    dst: str
    adt: str
    src: str


@dataclass(frozen=True)
class Eq:
    dst: str
    type: IrType
    a: str
    b: str


@dataclass(frozen=True)
class Call:
    dst: str
    fn: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class TupleMake:
    dst: str
    elems: tuple[str, ...]


@dataclass(frozen=True)
class Project:
    dst: str
    src: str
    index: int


@dataclass(frozen=True)
class BinOp:
    dst: str
    op: str  # and | or | xor
    a: str
    b: str


@dataclass(frozen=True)
class ShiftOp:
    dst: str
    op: str  # shl | shr
    src: str
    amount: int


@dataclass(frozen=True)
class SExt:
    dst: str
    src: str
    from_width: int


@dataclass(frozen=True)
class Bitcast:
    dst: str
    src: str
    type: IrType


@dataclass(frozen=True)
class RecordGet:
    """Read one normalized field scalar from a boxed record; traps on null
    or on a record of a different case."""

    dst: str
    adt: str
    case: int
    index: int  # index into the variant's normalized field list
    src: str


@dataclass(frozen=True)
class RecordTag:
    dst: str
    adt: str
    src: str


@dataclass(frozen=True)
class IsNull:
    dst: str
    src: str


Instr = Union[
    Const,
    Alloc,
    GetField,
    GetContents,
    GetTag,
    ReplaceNull,
    Eq,
    Call,
    TupleMake,
    Project,
    BinOp,
    ShiftOp,
    SExt,
    Bitcast,
    RecordGet,
    RecordTag,
    IsNull,
]


@dataclass(frozen=True)
class Jump:
    label: str


@dataclass(frozen=True)
class Branch:
    cond: str
    then_label: str
    else_label: str


@dataclass(frozen=True)
class Switch:
    value: str
    cases: tuple[tuple[int, str], ...]
    default: str


@dataclass(frozen=True)
class Return:
    value: str


@dataclass(frozen=True)
class Trap:
    kind: str  # null-access | bad-case | explicit


Terminator = Union[Jump, Branch, Switch, Return, Trap]


@dataclass
class Block:
    label: str
    instrs: list[Instr] = dfield(default_factory=list)
    term: Optional[Terminator] = None


@dataclass
class Function:
    name: str
    params: tuple[tuple[str, IrType], ...]
    ret: IrType
    entry: str
    blocks: dict[str, Block] = dfield(default_factory=dict)
    # the source-level return type, kept through normalization so observable
    # outputs stay comparable across the rewrite
    semantic_ret: Optional[IrType] = None

    def block_order(self) -> list[str]:
        seen: list[str] = []
        work = [self.entry]
        while work:
            label = work.pop(0)
            if label in seen:
                continue
            seen.append(label)
            term = self.blocks[label].term
            work.extend(_successors(term))
        return seen


def _successors(term: Optional[Terminator]) -> list[str]:
    if isinstance(term, Jump):
        return [term.label]
    if isinstance(term, Branch):
        return [term.then_label, term.else_label]
    if isinstance(term, Switch):
        return [lbl for _, lbl in term.cases] + [term.default]
    return []


@dataclass
class Program:
    adts: dict[str, MonoAdt]
    dispositions: dict[str, Disposition]
    layouts: dict[str, LayoutSolution]
    functions: dict[str, Function]
    target: Target
    normalized: bool = False

    def adt_source_field_type(self, key: str, case: int, index: int) -> IrType:
        _, t = self.adts[key].variants[case].source_fields[index]
        return type_of_expr(t, self.adts)

    def contents_type(self, key: str, case: int) -> IrType:
        fields = self.adts[key].variants[case].source_fields
        types = tuple(type_of_expr(t, self.adts) for _, t in fields)
        if len(types) == 1:
            return types[0]
        return TTuple(types)


# ---------------------------------------------------------------------------
# Type checking

TAG_TYPE = TInt(32, False)


class IrTypeError(Exception):
    pass


def _dominators(fn: Function) -> dict[str, set[str]]:
    order = fn.block_order()
    preds: dict[str, list[str]] = {b: [] for b in order}
    for b in order:
        for s in _successors(fn.blocks[b].term):
            preds[s].append(b)
    dom: dict[str, set[str]] = {b: set(order) for b in order}
    dom[fn.entry] = {fn.entry}
    changed = True
    while changed:
        changed = False
        for b in order:
            if b == fn.entry:
                continue
            new = set(order)
            for p in preds[b]:
                new &= dom[p]
            new |= {b}
            if new != dom[b]:
                dom[b] = new
                changed = True
    return dom


def check_function(program: Program, fn: Function) -> None:
    """Single assignment, dominance-based definite assignment, operand
    typing, and grammar restrictions for the program's phase."""
    post = program.normalized
    types: dict[str, IrType] = {}
    def_block: dict[str, str] = {}
    params_set = {name for name, _ in fn.params}
    for name, t in fn.params:
        if name in types:
            raise IrTypeError(f"duplicate parameter {name}")
        types[name] = t
        def_block[name] = fn.entry
    order = fn.block_order()
    for label in order:
        blk = fn.blocks[label]
        if blk.term is None:
            raise IrTypeError(f"block {label} lacks a terminator")
        for ins in blk.instrs:
            dst = getattr(ins, "dst", None)
            if dst is not None:
                if dst in types:
                    raise IrTypeError(f"name {dst} assigned twice")
                types[dst] = _infer(program, fn, ins, types)
                def_block[dst] = label
    dom = _dominators(fn)

    def check_use(name: str, label: str) -> IrType:
        if name not in types:
            raise IrTypeError(f"use of undefined name {name}")
        if name not in params_set and def_block[name] not in dom[label]:
            raise IrTypeError(f"{name} used in {label} without dominating definition")
        return types[name]

    for label in order:
        blk = fn.blocks[label]
        seen_here: set[str] = set()
        for ins in blk.instrs:
            for use in _uses(ins):
                t = check_use(use, label)
                if (
                    use not in params_set
                    and def_block[use] == label
                    and use not in seen_here
                ):
                    raise IrTypeError(f"{use} used before its definition in {label}")
            _check_instr(program, fn, ins, types, post)
            dst = getattr(ins, "dst", None)
            if dst is not None:
                seen_here.add(dst)
        term = blk.term
        for use in _term_uses(term):
            check_use(use, label)
            if (
                use not in params_set
                and def_block[use] == label
                and use not in seen_here
            ):
                raise IrTypeError(f"{use} used before its definition in {label}")
        if isinstance(term, Return):
            have = types[term.value]
            if have != fn.ret:
                raise IrTypeError(
                    f"{fn.name} returns {print_ir_type(have)}, expected {print_ir_type(fn.ret)}"
                )
        if isinstance(term, Branch) and types[term.cond] != BOOL:
            raise IrTypeError("branch condition must be u1")
        for s in _successors(term):
            if s not in fn.blocks:
                raise IrTypeError(f"jump to unknown block {s}")

    if not post:
        # a null ADT constant may only flow into replace-null
        nulls = set()
        for label in order:
            for ins in fn.blocks[label].instrs:
                if isinstance(ins, Const) and isinstance(ins.type, TAdt) and ins.value is None:
                    nulls.add(ins.dst)
        for label in order:
            blk = fn.blocks[label]
            for ins in blk.instrs:
                if isinstance(ins, ReplaceNull):
                    continue
                for use in _uses(ins):
                    if use in nulls:
                        raise IrTypeError("null ADT constant used outside replace-null")
            for use in _term_uses(blk.term):
                if use in nulls:
                    raise IrTypeError("null ADT constant used outside replace-null")


def _uses(ins: Instr) -> list[str]:
    if isinstance(ins, Const):
        return []
    if isinstance(ins, Alloc):
        return list(ins.args)
    if isinstance(ins, (GetField, GetContents, GetTag, ReplaceNull, RecordGet, RecordTag)):
        return [ins.src]
    if isinstance(ins, Eq):
        return [ins.a, ins.b]
    if isinstance(ins, Call):
        return list(ins.args)
    if isinstance(ins, TupleMake):
        return list(ins.elems)
    if isinstance(ins, Project):
        return [ins.src]
    if isinstance(ins, BinOp):
        return [ins.a, ins.b]
    if isinstance(ins, (ShiftOp, SExt, Bitcast, IsNull)):
        return [ins.src]
    raise TypeError(f"unknown instruction {ins!r}")


def _term_uses(term: Terminator) -> list[str]:
    if isinstance(term, Branch):
        return [term.cond]
    if isinstance(term, Switch):
        return [term.value]
    if isinstance(term, Return):
        return [term.value]
    return []


def _case_field_types(program: Program, key: str, case: int) -> list[IrType]:
    variant = program.adts[key].variants[case]
    return [type_of_expr(t, program.adts) for _, t in variant.source_fields]


def _infer(program: Program, fn: Function, ins: Instr, types: dict[str, IrType]) -> IrType:
    if isinstance(ins, Const):
        return ins.type
    if isinstance(ins, Alloc):
        return TAdt(ins.adt)
    if isinstance(ins, GetField):
        return program.adt_source_field_type(ins.adt, ins.case, ins.field)
    if isinstance(ins, GetContents):
        return program.contents_type(ins.adt, ins.case)
    if isinstance(ins, (GetTag, RecordTag)):
        return TAG_TYPE
    if isinstance(ins, ReplaceNull):
        return TAdt(ins.adt)
    if isinstance(ins, Eq):
        return BOOL
    if isinstance(ins, Call):
        callee = program.functions[ins.fn]
        return callee.ret
    if isinstance(ins, TupleMake):
        return TTuple(tuple(types[e] for e in ins.elems))
    if isinstance(ins, Project):
        src = types[ins.src]
        if not isinstance(src, TTuple):
            raise IrTypeError("project from a non-tuple")
        return src.elems[ins.index]
    if isinstance(ins, BinOp):
        return types[ins.a]
    if isinstance(ins, ShiftOp):
        return types[ins.src]
    if isinstance(ins, SExt):
        return types[ins.src]
    if isinstance(ins, Bitcast):
        return ins.type
    if isinstance(ins, RecordGet):
        f = program.adts[ins.adt].variants[ins.case].fields[ins.index]
        return normalized_field_type(program, f)
    if isinstance(ins, IsNull):
        return BOOL
    raise TypeError(f"unknown instruction {ins!r}")


def normalized_field_type(program: Program, f) -> IrType:
    """Post-grammar type of one normalized field scalar."""
    from .targets import REF_NONE

    if f.embedded:
        layout = program.layouts[f.adt_ref]
        slot = layout.slots[f.scalar_index]
        return TIntRep(slot.width, slot.kind.value)
    if f.ref_mode != REF_NONE:
        if f.adt_ref is not None and f.adt_ref in program.adts:
            return TAdt(f.adt_ref)
        return TIntRep(f.width, sorted(k.value for k in f.kinds)[0])
    if f.is_float:
        return TFloat(f.width)
    return TInt(f.width, f.signed)


def _check_instr(
    program: Program, fn: Function, ins: Instr, types: dict[str, IrType], post: bool
) -> None:
    pre_only = (GetField, GetContents, GetTag, ReplaceNull)
    post_only = (TupleMake, Project, BinOp, ShiftOp, SExt, Bitcast, RecordGet, RecordTag, IsNull)
    if post and isinstance(ins, pre_only):
        raise IrTypeError(f"{type(ins).__name__} is not a normalized instruction")
    if not post and isinstance(ins, post_only):
        raise IrTypeError(f"{type(ins).__name__} only exists after normalization")
    if isinstance(ins, Const):
        if isinstance(ins.type, TAdt):
            if ins.value is not None:
                raise IrTypeError("ADT constants can only be null")
        elif ins.value is None:
            raise IrTypeError("null constant of a non-reference type")
        if post and isinstance(ins.type, TAdt):
            disp = program.dispositions.get(ins.type.key)
            if disp is not None and not disp.boxed:
                raise IrTypeError("null constant of an unboxed ADT after normalization")
        return
    if isinstance(ins, Alloc):
        if post:
            disp = program.dispositions.get(ins.adt)
            if disp is not None and not disp.boxed:
                raise IrTypeError("normalized code cannot allocate an unboxed ADT")
            want = [
                normalized_field_type(program, f)
                for f in program.adts[ins.adt].variants[ins.case].fields
            ]
        else:
            want = _case_field_types(program, ins.adt, ins.case)
        have = [types[a] for a in ins.args]
        if have != want:
            raise IrTypeError(f"alloc {ins.adt}#{ins.case}: argument types mismatch")
        return
    if isinstance(ins, (GetField, GetContents)):
        if types[ins.src] != TAdt(ins.adt):
            raise IrTypeError("field access on a value of the wrong type")
        return
    if isinstance(ins, (GetTag, ReplaceNull)):
        if types[ins.src] != TAdt(ins.adt):
            raise IrTypeError("tag/replace-null on a value of the wrong type")
        return
    if isinstance(ins, Eq):
        ta, tb = types[ins.a], types[ins.b]
        int_backed = lambda t: isinstance(t, (TInt, TIntRep))
        if int_backed(ins.type):
            if not (int_backed(ta) and int_backed(tb)):
                raise IrTypeError("eq on integer bits needs integer-backed operands")
        elif ta != ins.type or tb != ins.type:
            raise IrTypeError("eq operands must both have the annotated type")
        if post and isinstance(ins.type, TAdt):
            disp = program.dispositions.get(ins.type.key)
            if disp is not None and not disp.boxed:
                raise IrTypeError("normalized eq on an unboxed ADT must be a call")
        return
    if isinstance(ins, Call):
        callee = program.functions.get(ins.fn)
        if callee is None:
            raise IrTypeError(f"call to unknown function {ins.fn}")
        want = [t for _, t in callee.params]
        have = [types[a] for a in ins.args]
        if want != have:
            raise IrTypeError(f"call {ins.fn}: argument types mismatch")
        return
    if isinstance(ins, BinOp):
        if types[ins.a] != types[ins.b] and not (
            isinstance(types[ins.a], (TInt, TIntRep)) and isinstance(types[ins.b], (TInt, TIntRep))
        ):
            raise IrTypeError("bitwise operands must be integer-backed")
        return
    if isinstance(ins, RecordGet):
        if types[ins.src] != TAdt(ins.adt):
            raise IrTypeError("record read on a value of the wrong type")
        return
    if isinstance(ins, RecordTag):
        if types[ins.src] != TAdt(ins.adt):
            raise IrTypeError("record tag on a value of the wrong type")
        return


def check_program(program: Program) -> None:
    for fn in program.functions.values():
        check_function(program, fn)

"""Deterministic evaluation for both IR phases, plus the structural
observation that makes boxed and normalized runs comparable.

Observables are plain trees: ints for integer values, ('f', bits) for
floats, tuples for tuples, ('adt', key, case, fields...) for ADT values
and ('null',) for a null reference. Heap identity is never observable.

Records live in a heap addressed by 8-aligned integers; null is 0. Before
normalization record fields hold source-shaped values; after, they hold
the flattened scalars."""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Optional

from . import codec
from .ir import (
    Alloc,
    BinOp,
    Bitcast,
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
    IsNull,
    Jump,
    Program,
    Project,
    RecordGet,
    RecordTag,
    ReplaceNull,
    Return,
    SExt,
    ShiftOp,
    Switch,
    TAdt,
    TCase,
    TFloat,
    TInt,
    TIntRep,
    Trap,
    TTuple,
    TupleMake,
    type_of_expr,
)


_ALIGN = 8
_MAX_STEPS = 200_000
_MAX_CALL_DEPTH = 64


@dataclass(frozen=True)
class Ref:
    addr: int


@dataclass
class Record:
    adt: str
    case: int
    fields: list  # source values before normalization; scalars after


@dataclass
class Heap:
    cells: dict[int, Record] = dfield(default_factory=dict)
    next_addr: int = _ALIGN

    def alloc(self, rec: Record) -> int:
        addr = self.next_addr
        self.next_addr += _ALIGN
        self.cells[addr] = rec
        return addr

    def read(self, addr: int) -> Record:
        return self.cells[addr]


class TrapSignal(Exception):
    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind


@dataclass(frozen=True)
class Outcome:
    trap: Optional[str]
    value: object  # observable tree, None when trapped

    def __str__(self) -> str:
        return f"trap:{self.trap}" if self.trap else f"value:{self.value!r}"


# ---------------------------------------------------------------------------
# Observation


def observe(program: Program, heap: Heap, value, t: IrType):
    """Canonical structural rendering of a runtime value at a type."""
    if isinstance(t, TInt):
        return value
    if isinstance(t, TFloat):
        return ("f", value)
    if isinstance(t, TTuple):
        return tuple(observe(program, heap, v, e) for v, e in zip(value, t.elems))
    if isinstance(t, TIntRep):
        return ("bits", value)
    if isinstance(t, (TAdt, TCase)):
        key = t.key
        if not program.normalized:
            if value is None:
                return ("null",)
            assert isinstance(value, Ref), f"expected record for {key}, got {value!r}"
            rec = heap.read(value.addr)
            mono = program.adts[rec.adt]
            variant = mono.variants[rec.case]
            fields = tuple(
                observe(program, heap, v, type_of_expr(ft, program.adts))
                for v, (_, ft) in zip(rec.fields, variant.source_fields)
            )
            return ("adt", rec.adt, rec.case, fields)
        disp = program.dispositions.get(key)
        if disp is not None and not disp.boxed:
            # the scalars of this unboxed ADT (bare when there is just one)
            scalars = list(value) if isinstance(value, tuple) else [value]
            return observe_scalars(program, heap, key, scalars)
        if value == 0 or value is None:
            return ("null",)
        rec = heap.read(value)
        return _observe_post_record(program, heap, rec)
    raise TypeError(f"cannot observe at {t!r}")


def observe_scalars(program: Program, heap: Heap, key: str, scalars: list[int]):
    """Decode an unboxed ADT value from its scalars into the observable form."""
    layout = program.layouts[key]
    case = codec.variant_of(layout, scalars)
    mono = program.adts[key]
    variant = mono.variants[case]
    flat = [codec.decode_field(layout, case, f.name, scalars) for f in variant.fields]
    fields = _rebuild_source_fields(program, heap, variant, flat)
    return ("adt", key, case, tuple(fields))


def _observe_post_record(program: Program, heap: Heap, rec: Record):
    mono = program.adts[rec.adt]
    variant = mono.variants[rec.case]
    fields = _rebuild_source_fields(program, heap, variant, list(rec.fields))
    return ("adt", rec.adt, rec.case, tuple(fields))


def _rebuild_source_fields(program: Program, heap: Heap, variant, flat: list):
    """Reassemble source-shaped observables from flattened scalar values."""
    groups: dict[int, list[tuple]] = {}
    for f, v in zip(variant.fields, flat):
        groups.setdefault(f.source[0], []).append((f, v))
    out = []
    for j, (fname, ftype) in enumerate(variant.source_fields):
        items = groups.get(j, [])
        out.append(_rebuild_value(program, heap, ftype, (j,), items))
    return out


def _rebuild_value(program: Program, heap: Heap, ftype, path: tuple, items: list):
    from .syntax import FloatType, NamedType, TupleType

    if isinstance(ftype, TupleType):
        return tuple(
            _rebuild_value(
                program,
                heap,
                elem,
                path + (i,),
                [(f, v) for f, v in items if f.source[: len(path) + 1] == path + (i,)],
            )
            for i, elem in enumerate(ftype.elems)
        )
    if isinstance(ftype, NamedType) and not items:
        # an embedded unboxed ADT that needs zero scalars (single nullary case)
        from .syntax import print_type

        return ("adt", print_type(ftype), 0, ())
    assert items, f"no scalars at {path} for {ftype!r}"
    if isinstance(ftype, NamedType):
        key_items = sorted(items, key=lambda fv: fv[0].scalar_index)
        first = key_items[0][0]
        if not first.embedded:
            addr = key_items[0][1]
            if addr in (0, None):
                return ("null",)
            if isinstance(addr, Ref):
                addr = addr.addr
            rec = heap.read(addr)
            if program.normalized:
                return _observe_post_record(program, heap, rec)
            mono = program.adts[rec.adt]
            variant = mono.variants[rec.case]
            fields = tuple(
                observe(program, heap, v, type_of_expr(ft, program.adts))
                for v, (_, ft) in zip(rec.fields, variant.source_fields)
            )
            return ("adt", rec.adt, rec.case, fields)
        # an embedded unboxed ADT: one scalar per layout slot
        return observe_scalars(
            program, heap, first.adt_ref, [v for _, v in key_items]
        )
    f, v = items[0]
    if isinstance(ftype, FloatType):
        return ("f", v)
    return v


# ---------------------------------------------------------------------------
# Live records: translate source-shaped values to their flattened form


def flatten_live_record(program: Program, heap: Heap, value, t: IrType):
    """Rewrite a (possibly nested) value so unboxed ADT records become their
    encoded scalars and boxed records store flattened fields. The heap is
    rewritten in place; returns the new value."""
    if isinstance(t, TInt):
        return value
    if isinstance(t, TFloat):
        return value
    if isinstance(t, TTuple):
        return tuple(
            flatten_live_record(program, heap, v, e) for v, e in zip(value, t.elems)
        )
    if isinstance(t, (TAdt, TCase)):
        if value is None:
            return 0
        assert isinstance(value, Ref)
        rec = heap.read(value.addr)
        mono = program.adts[rec.adt]
        variant = mono.variants[rec.case]
        flat = _flatten_fields(program, heap, variant, rec.fields)
        disp = program.dispositions.get(rec.adt)
        if disp is not None and not disp.boxed:
            layout = program.layouts[rec.adt]
            values = {f.name: v for f, v in zip(variant.fields, flat)}
            return codec.encode_variant(layout, rec.case, values)
        rec.fields = flat
        return value.addr
    raise TypeError(f"cannot flatten at {t!r}")


def _flatten_fields(program: Program, heap: Heap, variant, source_values: list) -> list:
    flat: list = []
    for (fname, ftype), v in zip(variant.source_fields, source_values):
        flat.extend(_flatten_one(program, heap, ftype, v))
    return flat


def _flatten_one(program: Program, heap: Heap, ftype, v) -> list:
    from .syntax import NamedType, TupleType

    if isinstance(ftype, TupleType):
        out: list = []
        for elem, ev in zip(ftype.elems, v):
            out.extend(_flatten_one(program, heap, elem, ev))
        return out
    if isinstance(ftype, NamedType):
        from .syntax import print_type

        key = print_type(ftype)
        if key not in program.adts:
            return [v if isinstance(v, int) else 0]
        result = flatten_live_record(program, heap, v, TAdt(key))
        if isinstance(result, list):
            return result  # scalars of an unboxed value
        return [result]  # address of a boxed record
    return [v]


# ---------------------------------------------------------------------------
# Evaluation


def _mask(width: int) -> int:
    return (1 << width) - 1


class _Machine:
    def __init__(self, program: Program):
        self.program = program
        self.heap = Heap()
        self.steps = 0

    def run(self, entry: str, inputs: list) -> Outcome:
        fn = self.program.functions[entry]
        try:
            value = self.call(fn, list(inputs), depth=0)
        except TrapSignal as t:
            return Outcome(t.kind, None)
        view = fn.semantic_ret or fn.ret
        return Outcome(None, observe(self.program, self.heap, value, view))

    def call(self, fn: Function, args: list, depth: int):
        if depth > _MAX_CALL_DEPTH:
            raise TrapSignal("call-depth")
        env: dict[str, object] = {name: v for (name, _), v in zip(fn.params, args)}
        label = fn.entry
        while True:
            blk = fn.blocks[label]
            for ins in blk.instrs:
                self.steps += 1
                if self.steps > _MAX_STEPS:
                    raise TrapSignal("fuel")
                self.exec(ins, env, depth)
            term = blk.term
            if isinstance(term, Jump):
                label = term.label
            elif isinstance(term, Branch):
                label = term.then_label if env[term.cond] else term.else_label
            elif isinstance(term, Switch):
                v = env[term.value]
                label = term.default
                for k, lbl in term.cases:
                    if v == k:
                        label = lbl
                        break
            elif isinstance(term, Return):
                return env[term.value]
            elif isinstance(term, Trap):
                raise TrapSignal(term.kind)
            else:
                raise AssertionError(f"bad terminator {term!r}")

    # -- single instruction --

    def exec(self, ins, env: dict, depth: int) -> None:
        program = self.program
        if isinstance(ins, Const):
            env[ins.dst] = None if ins.value is None else ins.value
            if ins.value is None and program.normalized:
                env[ins.dst] = 0
            return
        if isinstance(ins, Alloc):
            values = [env[a] for a in ins.args]
            addr = self.heap.alloc(Record(ins.adt, ins.case, values))
            env[ins.dst] = addr if program.normalized else Ref(addr)
            return
        if isinstance(ins, (GetField, GetContents)):
            rec = self._deref_case(env[ins.src], ins.adt, ins.case)
            if isinstance(ins, GetField):
                env[ins.dst] = rec.fields[ins.field]
            else:
                vals = tuple(rec.fields)
                env[ins.dst] = vals[0] if len(vals) == 1 else vals
            return
        if isinstance(ins, GetTag):
            v = env[ins.src]
            if v is None:
                raise TrapSignal("null-access")
            assert isinstance(v, Ref)
            env[ins.dst] = self.heap.read(v.addr).case
            return
        if isinstance(ins, ReplaceNull):
            v = env[ins.src]
            env[ins.dst] = self._default_value(ins.adt, depth) if v is None else v
            return
        if isinstance(ins, Eq):
            a = self._observe(env[ins.a], ins.type)
            b = self._observe(env[ins.b], ins.type)
            env[ins.dst] = 1 if a == b else 0
            return
        if isinstance(ins, Call):
            callee = program.functions[ins.fn]
            env[ins.dst] = self.call(callee, [env[a] for a in ins.args], depth + 1)
            return
        if isinstance(ins, TupleMake):
            env[ins.dst] = tuple(env[e] for e in ins.elems)
            return
        if isinstance(ins, Project):
            env[ins.dst] = env[ins.src][ins.index]
            return
        if isinstance(ins, BinOp):
            a, b = env[ins.a], env[ins.b]
            if ins.op == "and":
                env[ins.dst] = a & b
            elif ins.op == "or":
                env[ins.dst] = a | b
            else:
                env[ins.dst] = a ^ b
            return
        if isinstance(ins, ShiftOp):
            v = env[ins.src]
            env[ins.dst] = (v << ins.amount) if ins.op == "shl" else (v >> ins.amount)
            return
        if isinstance(ins, SExt):
            v = env[ins.src] & _mask(ins.from_width)
            if v & (1 << (ins.from_width - 1)):
                v -= 1 << ins.from_width
            env[ins.dst] = v
            return
        if isinstance(ins, Bitcast):
            env[ins.dst] = env[ins.src]
            return
        if isinstance(ins, RecordGet):
            rec = self._deref_case(env[ins.src], ins.adt, ins.case)
            env[ins.dst] = rec.fields[ins.index]
            return
        if isinstance(ins, RecordTag):
            v = env[ins.src]
            if v in (0, None):
                raise TrapSignal("null-access")
            env[ins.dst] = self.heap.read(v).case
            return
        if isinstance(ins, IsNull):
            v = env[ins.src]
            env[ins.dst] = 1 if v in (0, None) else 0
            return
        raise AssertionError(f"unknown instruction {ins!r}")

    def _observe(self, value, t: IrType):
        return observe(self.program, self.heap, value, t)

    def _deref_case(self, v, adt: str, case: int) -> Record:
        if v is None or v == 0:
            raise TrapSignal("null-access")
        addr = v.addr if isinstance(v, Ref) else v
        rec = self.heap.read(addr)
        if rec.adt != adt or rec.case != case:
            raise TrapSignal("bad-case")
        return rec

    def _default_value(self, key: str, depth: int):
        return default_value(self.program, self.heap, key, depth)


def default_value(program: Program, heap: Heap, key: str, depth: int = 0):
    """The ADT's default: an instance of the first declared variant with
    every field set to its own default."""
    if depth > _MAX_CALL_DEPTH:
        raise TrapSignal("call-depth")
    variant = program.adts[key].variants[0]
    values = [_default_for_type(program, heap, t, depth + 1) for _, t in variant.source_fields]
    return Ref(heap.alloc(Record(key, 0, values)))


def _default_for_type(program: Program, heap: Heap, ftype, depth: int):
    from .syntax import NamedType, TupleType, print_type

    if isinstance(ftype, TupleType):
        return tuple(_default_for_type(program, heap, e, depth) for e in ftype.elems)
    if isinstance(ftype, NamedType):
        key = print_type(ftype)
        if key in program.adts:
            return default_value(program, heap, key, depth)
        return None  # opaque reference defaults to null
    return 0


def replace_null(program: Program, heap: Heap, key: str, value):
    """Null becomes the ADT's default value; anything else passes through."""
    if value is None:
        return default_value(program, heap, key)
    return value


def eval_program(program: Program, entry: str = "main", inputs: Optional[list] = None) -> Outcome:
    """Run a program; the observable output is the entry function's return
    value (structurally rendered) or the trap kind."""
    return _Machine(program).run(entry, inputs or [])

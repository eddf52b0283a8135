"""SSA normalization: rewrites ADT operations over the boxed representation
into operations over the flattened scalar representation chosen by the
solver.

Multi-scalar values flow as separate names; only returns pack them into a
tuple, unpacked again at call sites. Allocation of an unboxed case becomes
bitwise assembly of its scalar words; field and tag reads become shifts
and masks; equality on unboxed values becomes a call to a generated
per-ADT equality function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import codec
from .distinguish import Leaf, Node
from .ir import (
    BOOL,
    TAG_TYPE,
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
    IrTypeError,
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
    normalized_field_type,
    type_of_expr,
)
from .solver import BareTag, ExplicitTag, SingleVariant, TreeTag
from .targets import REF_NONE, REF_PLAIN


@dataclass(frozen=True)
class _NullMarker:
    key: str


def _mask(width: int) -> int:
    return (1 << width) - 1


def _mangle(prefix: str, key: str) -> str:
    safe = "".join(ch if ch.isalnum() else "_" for ch in key)
    return f"{prefix}${safe}"


class Normalizer:
    def __init__(self, pre: Program):
        assert not pre.normalized
        self.pre = pre
        self.post = Program(
            adts=pre.adts,
            dispositions=pre.dispositions,
            layouts=pre.layouts,
            functions={},
            target=pre.target,
            normalized=True,
        )
        self._made_helpers: set[str] = set()

    # -- types ---------------------------------------------------------------

    def is_unboxed(self, key: str) -> bool:
        disp = self.pre.dispositions.get(key)
        return disp is not None and not disp.boxed

    def normalize_type(self, t: IrType) -> IrType:
        leaves = self.expand_type(t)
        if isinstance(t, TTuple) or (
            isinstance(t, (TAdt, TCase)) and self.is_unboxed(t.key)
        ):
            return TTuple(tuple(leaves))
        return leaves[0]

    def expand_type(self, t: IrType) -> list[IrType]:
        if isinstance(t, TTuple):
            out: list[IrType] = []
            for e in t.elems:
                out.extend(self.expand_type(e))
            return out
        if isinstance(t, (TAdt, TCase)) and self.is_unboxed(t.key):
            layout = self.pre.layouts[t.key]
            return [TIntRep(s.width, s.kind.value) for s in layout.slots]
        if isinstance(t, TCase):
            return [TAdt(t.key)]
        return [t]

    # -- program -------------------------------------------------------------

    def run(self) -> Program:
        for name in sorted(self.pre.functions):
            self.post.functions[name] = self.normalize_function(self.pre.functions[name])
        return self.post

    def normalize_function(self, fn: Function) -> Function:
        worker = _FunctionNormalizer(self, fn)
        out = worker.run()
        self.post.functions[out.name] = out
        return out

    # -- generated helpers -----------------------------------------------------

    def classify_fn(self, key: str) -> str:
        name = _mangle("classify", key)
        if name not in self._made_helpers:
            self._made_helpers.add(name)
            self.post.functions[name] = self._build_classify(name, key)
        return name

    def equality_fn(self, key: str) -> str:
        name = _mangle("eq", key)
        if name not in self._made_helpers:
            self._made_helpers.add(name)
            self.post.functions[name] = _build_equality(self, name, key)
        return name

    def replace_null_fn(self, key: str) -> str:
        name = _mangle("rn", key)
        if name not in self._made_helpers:
            self._made_helpers.add(name)
            self.post.functions[name] = self._build_replace_null(name, key)
        return name

    def _build_classify(self, name: str, key: str) -> Function:
        layout = self.pre.layouts[key]
        scheme = layout.tag_scheme
        assert isinstance(scheme, TreeTag)
        params = tuple(
            (f"s{i}", TIntRep(s.width, s.kind.value)) for i, s in enumerate(layout.slots)
        )
        fn = Function(name, params, TAG_TYPE, "entry", {})
        counter = [0]

        def emit_node(node, label: str) -> None:
            blk = Block(label)
            fn.blocks[label] = blk
            if isinstance(node, Leaf):
                c = f"_c{counter[0]}"
                counter[0] += 1
                blk.instrs.append(Const(c, TAG_TYPE, node.variant))
                blk.term = Return(c)
                return
            assert isinstance(node, Node)
            n = counter[0]
            counter[0] += 3
            sh = f"_sh{n}"
            bit = f"_b{n}"
            one = f"_k{n}"
            cmp = f"_c{n}"
            src = f"s{node.scalar}"
            if node.bit > 0:
                blk.instrs.append(ShiftOp(sh, "shr", src, node.bit))
            else:
                sh = src
            blk.instrs.append(Const(one, TIntRep(1, "B64"), 1))
            blk.instrs.append(BinOp(bit, "and", sh, one))
            blk.instrs.append(Eq(cmp, TIntRep(1, "B64"), bit, one))
            lz, lo = f"{label}z", f"{label}o"
            blk.term = Branch(cmp, lo, lz)
            emit_node(node.zero, lz)
            emit_node(node.one, lo)

        emit_node(scheme.tree, "entry")
        return fn

    def _build_replace_null(self, name: str, key: str) -> Function:
        fn = Function(name, (("x", TAdt(key)),), TAdt(key), "entry", {})
        w = _HelperBuilder(self, fn)
        w.types["x"] = TAdt(key)
        entry = w.start_block("entry")
        w.emit_typed(IsNull(w.fresh("n"), "x"), BOOL)
        cond = entry.instrs[-1].dst
        entry.term = Branch(cond, "build", "keep")
        fn.blocks["keep"] = Block("keep", [], Return("x"))
        w.start_block("build")
        variant = self.pre.adts[key].variants[0]
        args = w.default_flat_args(variant)
        rec = w.emit_typed(Alloc(w.fresh("r"), key, 0, tuple(args)), TAdt(key))
        w.current.term = Return(rec)
        return fn


# ---------------------------------------------------------------------------
# Per-function rewriting


class _FunctionNormalizer:
    def __init__(self, ctx: Normalizer, fn: Function):
        self.ctx = ctx
        self.pre_fn = fn
        self.env: dict[str, list[str] | _NullMarker] = {}
        self.types: dict[str, IrType] = {}  # post types of post names
        self.tmp = 0
        self.blocks: dict[str, Block] = {}
        self.current: Optional[Block] = None
        self.pre_types: dict[str, IrType] = {}

    def fresh(self, hint: str = "t") -> str:
        self.tmp += 1
        return f"_{hint}{self.tmp}"

    def emit(self, ins) -> None:
        assert self.current is not None
        self.current.instrs.append(ins)

    def emit_typed(self, ins, t: IrType) -> str:
        self.emit(ins)
        self.types[ins.dst] = t
        return ins.dst

    def const(self, t: IrType, value) -> str:
        return self.emit_typed(Const(self.fresh("k"), t, value), t)

    def start_block(self, label: str) -> Block:
        blk = Block(label)
        self.blocks[label] = blk
        self.current = blk
        return blk

    def split_for_check(self, cond: str, trap_kind: str) -> None:
        """End the current block with: if cond continue else trap."""
        assert self.current is not None
        cont = f"{self.current.label}.c{self.tmp}"
        trap = f"{self.current.label}.x{self.tmp}"
        self.tmp += 1
        self.current.term = Branch(cond, cont, trap)
        self.blocks[trap] = Block(trap, [], Trap(trap_kind))
        self.start_block(cont)

    # -- top level -----------------------------------------------------------

    def run(self) -> Function:
        pre = self.pre_fn
        ctx = self.ctx
        params: list[tuple[str, IrType]] = []
        for name, t in pre.params:
            leaves = ctx.expand_type(t)
            names = self.expanded_names(name, len(leaves))
            self.env[name] = names
            for n, lt in zip(names, leaves):
                params.append((n, lt))
                self.types[n] = lt
        ret_leaves = ctx.expand_type(pre.ret)
        if len(ret_leaves) == 1:
            post_ret = ret_leaves[0]
        else:
            post_ret = TTuple(tuple(ret_leaves))
        out = Function(
            pre.name, tuple(params), post_ret, pre.entry, {},
            semantic_ret=pre.semantic_ret or pre.ret,
        )

        self.pre_types = _pre_types(ctx.pre, pre)
        for label in pre.block_order():
            blk = pre.blocks[label]
            self.start_block(label)
            for ins in blk.instrs:
                self.instr(ins)
            self.finish(blk.term, post_ret)
        out.blocks = self.blocks
        return out

    def expanded_names(self, base: str, count: int) -> list[str]:
        if count == 1:
            return [base]
        return [f"{base}.{i}" for i in range(count)]

    def names_of(self, pre_name: str) -> list[str]:
        v = self.env[pre_name]
        if isinstance(v, _NullMarker):
            raise IrTypeError("null constant used outside replace-null")
        return v

    # -- terminators -----------------------------------------------------------

    def finish(self, term, post_ret: IrType) -> None:
        assert self.current is not None
        if isinstance(term, Return):
            leaves = self.names_of(term.value)
            if len(leaves) == 1:
                self.current.term = Return(leaves[0])
            else:
                t = self.fresh("ret")
                self.emit_typed(TupleMake(t, tuple(leaves)), post_ret)
                self.current.term = Return(t)
            return
        if isinstance(term, Branch):
            self.current.term = Branch(self.names_of(term.cond)[0], term.then_label, term.else_label)
            return
        if isinstance(term, Switch):
            self.current.term = Switch(self.names_of(term.value)[0], term.cases, term.default)
            return
        self.current.term = term  # Jump or Trap

    # -- instructions ------------------------------------------------------------

    def instr(self, ins) -> None:
        ctx = self.ctx
        if isinstance(ins, Const):
            if isinstance(ins.type, TAdt) and ins.value is None:
                if ctx.is_unboxed(ins.type.key):
                    self.env[ins.dst] = _NullMarker(ins.type.key)
                    return
                name = self.emit_typed(Const(ins.dst, ins.type, None), ins.type)
                self.env[ins.dst] = [name]
                return
            self.env[ins.dst] = [self.emit_typed(ins, ins.type)]
            return
        if isinstance(ins, Alloc):
            flat = [n for a in ins.args for n in self.names_of(a)]
            if ctx.is_unboxed(ins.adt):
                self.env[ins.dst] = self._assemble(ins.adt, ins.case, flat, ins.dst)
            else:
                t = TAdt(ins.adt)
                self.emit_typed(Alloc(ins.dst, ins.adt, ins.case, tuple(flat)), t)
                self.env[ins.dst] = [ins.dst]
            return
        if isinstance(ins, (GetField, GetContents)):
            self._get(ins)
            return
        if isinstance(ins, GetTag):
            if ctx.is_unboxed(ins.adt):
                scalars = self.names_of(ins.src)
                tag = self._extract_tag(ins.adt, scalars, ins.dst)
                self.env[ins.dst] = [tag]
            else:
                self.emit_typed(RecordTag(ins.dst, ins.adt, self.names_of(ins.src)[0]), TAG_TYPE)
                self.env[ins.dst] = [ins.dst]
            return
        if isinstance(ins, ReplaceNull):
            if ctx.is_unboxed(ins.adt):
                src = self.env[ins.src]
                if isinstance(src, _NullMarker):
                    self.env[ins.dst] = self.default_value_names(ins.adt)
                else:
                    self.env[ins.dst] = list(src)
            else:
                helper = ctx.replace_null_fn(ins.adt)
                src = self.names_of(ins.src)[0]
                self.emit_typed(Call(ins.dst, helper, (src,)), TAdt(ins.adt))
                self.env[ins.dst] = [ins.dst]
            return
        if isinstance(ins, Eq):
            result = self._equality(ins.type, self.names_of(ins.a), self.names_of(ins.b))
            self.env[ins.dst] = [result]
            return
        if isinstance(ins, Call):
            callee_pre = self.ctx.pre.functions[ins.fn]
            flat = [n for a in ins.args for n in self.names_of(a)]
            ret_leaves = ctx.expand_type(callee_pre.ret)
            if len(ret_leaves) == 1:
                self.emit_typed(Call(ins.dst, ins.fn, tuple(flat)), ret_leaves[0])
                self.env[ins.dst] = [ins.dst]
            else:
                t = TTuple(tuple(ret_leaves))
                packed = self.emit_typed(Call(self.fresh("call"), ins.fn, tuple(flat)), t)
                names = []
                for i, lt in enumerate(ret_leaves):
                    names.append(self.emit_typed(Project(self.fresh("p"), packed, i), lt))
                self.env[ins.dst] = names
            return
        raise IrTypeError(f"instruction {type(ins).__name__} is not part of the source grammar")

    # -- defaults ------------------------------------------------------------

    def default_value_names(self, key: str) -> list[str]:
        """Emit code building the default value (first variant, defaulted
        fields): scalar assembly for unboxed ADTs, a replace-null helper call
        for boxed ones. Returns the value's post names."""
        ctx = self.ctx
        if not ctx.is_unboxed(key):
            null = self.const(TAdt(key), None)
            helper = ctx.replace_null_fn(key)
            name = self.emit_typed(Call(self.fresh("d"), helper, (null,)), TAdt(key))
            return [name]
        variant = ctx.pre.adts[key].variants[0]
        args = self.default_flat_args(variant)
        return self._assemble(key, 0, args, "default")

    def default_flat_args(self, variant) -> list[str]:
        """Default value for every normalized field of a variant, in order:
        zeros and null-free defaults of referenced ADTs."""
        ctx = self.ctx
        args: list[str] = []
        k = 0
        while k < len(variant.fields):
            f = variant.fields[k]
            if f.embedded:
                group = [
                    g for g in variant.fields
                    if g.embedded and g.source == f.source and g.adt_ref == f.adt_ref
                ]
                args.extend(self.default_value_names(f.adt_ref))
                k += len(group)
                continue
            if f.ref_mode != REF_NONE and f.adt_ref is not None and f.adt_ref in ctx.pre.adts:
                args.extend(self.default_value_names(f.adt_ref))
            else:
                args.append(self.const(normalized_field_type(ctx.post, f), 0))
            k += 1
        return args

    # -- packing helpers ---------------------------------------------------------

    def _assemble(self, key: str, case: int, flat_args: list[str], dst: str) -> list[str]:
        """Bit-assembly of the scalars of one unboxed variant value."""
        layout = self.ctx.pre.layouts[key]
        mono = self.ctx.pre.adts[key]
        variant = mono.variants[case]
        base = codec.encode_variant(
            layout, case, {f.name: 0 for f in variant.fields}
        )
        out: list[str] = []
        for s, slot in enumerate(layout.slots):
            t = TIntRep(slot.width, slot.kind.value)
            acc = self.const(t, base[s])
            for k, f in enumerate(variant.fields):
                pl = layout.placements[(case, f.name)]
                if pl.slot != s:
                    continue
                bits = self._as_bits(flat_args[k], f, t)
                if f.signed:
                    m = self.const(t, _mask(pl.width))
                    bits = self.emit_typed(BinOp(self.fresh("m"), "and", bits, m), t)
                if pl.offset > 0 and f.ref_mode != REF_PLAIN:
                    bits = self.emit_typed(
                        ShiftOp(self.fresh("s"), "shl", bits, pl.offset), t
                    )
                acc = self.emit_typed(BinOp(self.fresh("w"), "or", acc, bits), t)
            out.append(acc)
        return out

    def _as_bits(self, name: str, f, t: IrType) -> str:
        have = self.types[name]
        if isinstance(have, (TInt, TIntRep)):
            return name
        return self.emit_typed(Bitcast(self.fresh("b"), name, TInt(f.width, False)), TInt(f.width, False))

    def _extract_tag(self, key: str, scalars: list[str], dst_hint: str) -> str:
        layout = self.ctx.pre.layouts[key]
        scheme = layout.tag_scheme
        if isinstance(scheme, SingleVariant):
            return self.const(TAG_TYPE, 0)
        if isinstance(scheme, (BareTag, ExplicitTag)):
            offset = scheme.offset if isinstance(scheme, ExplicitTag) else 0
            slot = layout.slots[scheme.slot]
            v = scalars[scheme.slot]
            t = TIntRep(slot.width, slot.kind.value)
            if offset > 0:
                v = self.emit_typed(ShiftOp(self.fresh("s"), "shr", v, offset), t)
            if scheme.width < slot.width:
                m = self.const(t, _mask(scheme.width))
                v = self.emit_typed(BinOp(self.fresh("m"), "and", v, m), t)
            return self.emit_typed(Bitcast(self.fresh("tag"), v, TAG_TYPE), TAG_TYPE)
        assert isinstance(scheme, TreeTag)
        fname = self.ctx.classify_fn(key)
        return self.emit_typed(Call(self.fresh("tag"), fname, tuple(scalars)), TAG_TYPE)

    def _decode_field(self, key: str, case: int, f, scalars: list[str]) -> str:
        """Bit extraction of one normalized field from the scalar words."""
        layout = self.ctx.pre.layouts[key]
        pl = layout.placements[(case, f.name)]
        slot = layout.slots[pl.slot]
        st = TIntRep(slot.width, slot.kind.value)
        v = scalars[pl.slot]
        want = normalized_field_type(self.ctx.post, f)
        if f.ref_mode == REF_PLAIN:
            if pl.offset > 0 or pl.width < slot.width:
                m = self.const(st, _mask(pl.width) << pl.offset)
                v = self.emit_typed(BinOp(self.fresh("m"), "and", v, m), st)
            return self.emit_typed(Bitcast(self.fresh("f"), v, want), want)
        if pl.offset > 0:
            v = self.emit_typed(ShiftOp(self.fresh("s"), "shr", v, pl.offset), st)
        if pl.width < slot.width:
            m = self.const(st, _mask(pl.width))
            v = self.emit_typed(BinOp(self.fresh("m"), "and", v, m), st)
        if f.signed:
            v = self.emit_typed(SExt(self.fresh("x"), v, pl.width), st)
        if self.types[v] != want:
            v = self.emit_typed(Bitcast(self.fresh("f"), v, want), want)
        return v

    def _get(self, ins) -> None:
        ctx = self.ctx
        mono = ctx.pre.adts[ins.adt]
        variant = mono.variants[ins.case]
        if isinstance(ins, GetField):
            indices = [
                k for k, f in enumerate(variant.fields) if f.source[0] == ins.field
            ]
        else:
            indices = list(range(len(variant.fields)))
        if ctx.is_unboxed(ins.adt):
            scalars = self.names_of(ins.src)
            tag = self._extract_tag(ins.adt, scalars, ins.dst)
            want = self.const(TAG_TYPE, ins.case)
            cond = self.emit_typed(Eq(self.fresh("c"), TAG_TYPE, tag, want), BOOL)
            self.split_for_check(cond, "bad-case")
            names = [
                self._decode_field(ins.adt, ins.case, variant.fields[k], scalars)
                for k in indices
            ]
        else:
            src = self.names_of(ins.src)[0]
            names = []
            if not indices:
                # the selected contents need no scalars (e.g. a unit-like
                # embedded ADT), but the null and case checks must survive
                tag = self.emit_typed(RecordTag(self.fresh("t"), ins.adt, src), TAG_TYPE)
                want = self.const(TAG_TYPE, ins.case)
                cond = self.emit_typed(Eq(self.fresh("c"), TAG_TYPE, tag, want), BOOL)
                self.split_for_check(cond, "bad-case")
            for k in indices:
                f = variant.fields[k]
                t = normalized_field_type(ctx.post, f)
                names.append(
                    self.emit_typed(RecordGet(self.fresh("g"), ins.adt, ins.case, k, src), t)
                )
        self.env[ins.dst] = names

    # -- equality ------------------------------------------------------------------

    def _equality(self, t: IrType, a: list[str], b: list[str]) -> str:
        ctx = self.ctx
        if isinstance(t, (TAdt, TCase)) and ctx.is_unboxed(t.key):
            fname = ctx.equality_fn(t.key)
            return self.emit_typed(
                Call(self.fresh("eq"), fname, tuple(a + b)), BOOL
            )
        if isinstance(t, TTuple):
            parts = []
            pos = 0
            for e in t.elems:
                n = len(ctx.expand_type(e))
                parts.append(self._equality(e, a[pos : pos + n], b[pos : pos + n]))
                pos += n
            acc = parts[0]
            for p in parts[1:]:
                acc = self.emit_typed(BinOp(self.fresh("a"), "and", acc, p), BOOL)
            return acc
        if isinstance(t, (TAdt, TCase)):
            return self.emit_typed(Eq(self.fresh("eq"), TAdt(t.key), a[0], b[0]), BOOL)
        return self.emit_typed(Eq(self.fresh("eq"), t, a[0], b[0]), BOOL)


def _pre_types(program: Program, fn: Function) -> dict[str, IrType]:
    from .ir import _infer

    types: dict[str, IrType] = dict(fn.params)
    for label in fn.block_order():
        for ins in fn.blocks[label].instrs:
            dst = getattr(ins, "dst", None)
            if dst is not None:
                types[dst] = _infer(program, fn, ins, types)
    return types


# ---------------------------------------------------------------------------
# Generated structural equality over packed values


def _build_equality(ctx: Normalizer, name: str, key: str) -> Function:
    layout = ctx.pre.layouts[key]
    mono = ctx.pre.adts[key]
    k = len(layout.slots)
    params = []
    for side in ("a", "b"):
        for i, s in enumerate(layout.slots):
            params.append((f"{side}{i}", TIntRep(s.width, s.kind.value)))
    fn = Function(name, tuple(params), BOOL, "entry", {})
    w = _HelperBuilder(ctx, fn)
    a_scalars = [f"a{i}" for i in range(k)]
    b_scalars = [f"b{i}" for i in range(k)]
    for p, t in params:
        w.types[p] = t

    w.start_block("entry")
    ta = w.extract_tag(key, a_scalars)
    tb = w.extract_tag(key, b_scalars)
    c = w.emit_typed(Eq(w.fresh("c"), TAG_TYPE, ta, tb), BOOL)
    w.current.term = Branch(c, "cases", "no")
    no = Block("no")
    fn.blocks["no"] = no
    w.current = no
    cf = w.const(BOOL, 0)
    no.term = Return(cf)

    cases_blk = w.start_block("cases")
    cases = tuple((i, f"case{i}") for i in range(len(mono.variants)))
    cases_blk.term = Switch(ta, cases, "no")
    for i, variant in enumerate(mono.variants):
        w.start_block(f"case{i}")
        groups = _field_groups(variant)
        for gi, group in enumerate(groups):
            first = variant.fields[group[0]]
            if first.embedded:
                av = [w.decode(key, i, variant.fields[g], a_scalars) for g in group]
                bv = [w.decode(key, i, variant.fields[g], b_scalars) for g in group]
                sub = ctx.equality_fn(first.adt_ref)
                c = w.emit_typed(Call(w.fresh("eq"), sub, tuple(av + bv)), BOOL)
            else:
                f = variant.fields[group[0]]
                av0 = w.decode(key, i, f, a_scalars)
                bv0 = w.decode(key, i, f, b_scalars)
                t = normalized_field_type(ctx.post, f)
                c = w.emit_typed(Eq(w.fresh("eq"), t, av0, bv0), BOOL)
            nxt = f"case{i}.g{gi}"
            w.current.term = Branch(c, nxt, "no")
            w.start_block(nxt)
        ct = w.const(BOOL, 1)
        w.current.term = Return(ct)
    return fn


def _field_groups(variant) -> list[list[int]]:
    """Indices of normalized fields grouped so an embedded unboxed value's
    scalars compare through its own equality function."""
    groups: list[list[int]] = []
    by_embed: dict[tuple, int] = {}
    for k, f in enumerate(variant.fields):
        if f.embedded:
            gk = (f.source, f.adt_ref)
            if gk in by_embed:
                groups[by_embed[gk]].append(k)
                continue
            by_embed[gk] = len(groups)
            groups.append([k])
        else:
            groups.append([k])
    return groups


class _HelperBuilder(_FunctionNormalizer):
    """Reuses the emission helpers to build generated functions directly."""

    def __init__(self, ctx: Normalizer, fn: Function):
        self.ctx = ctx
        self.pre_fn = fn
        self.env = {}
        self.types = {}
        self.tmp = 0
        self.blocks = fn.blocks
        self.current = None
        self.pre_types = {}

    def extract_tag(self, key: str, scalars: list[str]) -> str:
        return self._extract_tag(key, scalars, "tag")

    def decode(self, key: str, case: int, f, scalars: list[str]) -> str:
        return self._decode_field(key, case, f, scalars)


# ---------------------------------------------------------------------------
# Entry points


def normalize_program(pre: Program) -> Program:
    return Normalizer(pre).run()


def normalize_function(pre: Program, fn: Function) -> Function:
    return Normalizer(pre).normalize_function(fn)


def normalize_type(pre: Program, t: IrType) -> IrType:
    return Normalizer(pre).normalize_type(t)


def gen_equality_fn(pre: Program, key: str) -> Function:
    n = Normalizer(pre)
    fname = n.equality_fn(key)
    return n.post.functions[fname]

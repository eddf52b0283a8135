"""Compilation targets as scalar-kind tables, ADT monomorphization, and
unboxing eligibility.

A scalar kind classifies the machine location a scalar may occupy. The
target maps every concrete type to the non-empty set of kinds that can
physically hold it; reference types map to reference-capable kinds only.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .flatten import AnnotationEntry, flatten_annotation
from .syntax import (
    AdtDecl,
    BoolType,
    FloatType,
    IntType,
    NamedType,
    PackingDecl,
    TupleType,
    TypeExpr,
    print_type,
)
from .verify import SizeContext


class ScalarKind(enum.Enum):
    B32 = "B32"
    B64 = "B64"
    R32 = "R32"
    R64 = "R64"
    REF = "Ref"
    F32 = "F32"
    F64 = "F64"

    @property
    def ref_capable(self) -> bool:
        return self in (ScalarKind.R32, ScalarKind.R64, ScalarKind.REF)

    def width(self, word_width: int) -> int:
        if self is ScalarKind.REF:
            return word_width
        return 64 if self.value.endswith("64") else 32


KindSet = frozenset[ScalarKind]


@dataclass(frozen=True)
class RefTagging:
    """Low-bit discrimination between references and packed values in one
    reference-capable scalar. Patterns cover the free low bits, LSB first,
    over '0', '1' and 'u' (usable for packed data)."""

    free_low_bits: int
    ref_pattern: str
    value_pattern: str

    def __post_init__(self):
        assert len(self.ref_pattern) == self.free_low_bits
        assert len(self.value_pattern) == self.free_low_bits
        # the two patterns must disagree at some constant bit, otherwise the
        # collector cannot tell references from values
        assert any(
            a != b and a in "01" and b in "01"
            for a, b in zip(self.ref_pattern, self.value_pattern)
        )


@dataclass(frozen=True)
class Target:
    name: str
    word_width: int
    kind_table: dict[str, KindSet]  # classes: int32 int64 float32 float64 ref
    ref_tagging: Optional[RefTagging] = None

    def __post_init__(self):
        for cls in ("int32", "int64", "float32", "float64", "ref"):
            kinds = self.kind_table.get(cls)
            if not kinds:
                raise ValueError(f"target {self.name}: empty kind set for {cls}")
            widths = {k.width(self.word_width) for k in kinds}
            if len(widths) != 1:
                raise ValueError(f"target {self.name}: mixed-width kind set for {cls}")
        if not all(k.ref_capable for k in self.kind_table["ref"]):
            raise ValueError(f"target {self.name}: non-reference kind in ref set")

    def kinds_for_int(self, width: int) -> KindSet:
        return self.kind_table["int32" if width <= 32 else "int64"]

    def kinds_for_float(self, width: int) -> KindSet:
        return self.kind_table["float32" if width == 32 else "float64"]

    @property
    def ref_kinds(self) -> KindSet:
        return self.kind_table["ref"]

    def kind_width(self, kinds: KindSet) -> int:
        return next(iter(kinds)).width(self.word_width)


def _ks(*kinds: ScalarKind) -> KindSet:
    return frozenset(kinds)


X64 = Target(
    name="x64",
    word_width=64,
    kind_table={
        "int32": _ks(ScalarKind.B64, ScalarKind.F64, ScalarKind.R64),
        "int64": _ks(ScalarKind.B64, ScalarKind.F64, ScalarKind.R64),
        "float32": _ks(ScalarKind.B64, ScalarKind.F64, ScalarKind.R64),
        "float64": _ks(ScalarKind.B64, ScalarKind.F64, ScalarKind.R64),
        "ref": _ks(ScalarKind.R64),
    },
    ref_tagging=RefTagging(free_low_bits=2, ref_pattern="0u", value_pattern="1u"),
)

JVM = Target(
    name="jvm",
    word_width=64,
    kind_table={
        "int32": _ks(ScalarKind.B32),
        "int64": _ks(ScalarKind.B64),
        "float32": _ks(ScalarKind.F32, ScalarKind.B32),
        "float64": _ks(ScalarKind.F64, ScalarKind.B64),
        "ref": _ks(ScalarKind.REF),
    },
    ref_tagging=None,
)

# 64-bit integer fields occupy one logical B64 scalar here; splitting wide
# scalars into machine words happens in later phases, out of scope.
X86_32 = Target(
    name="x86-32",
    word_width=32,
    kind_table={
        "int32": _ks(ScalarKind.B32),
        "int64": _ks(ScalarKind.B64),
        "float32": _ks(ScalarKind.B32, ScalarKind.F32),
        "float64": _ks(ScalarKind.B64, ScalarKind.F64),
        "ref": _ks(ScalarKind.R32),
    },
    ref_tagging=None,
)

BUILTIN_TARGETS = {t.name: t for t in (X64, JVM, X86_32)}


def load_target(source: dict | str) -> Target:
    """Build a target from a JSON kind-table object (or a path to one)."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as f:
            source = json.load(f)
    table = {
        cls: frozenset(ScalarKind(k) for k in kinds)
        for cls, kinds in source["kinds"].items()
    }
    tagging = None
    if source.get("ref_tagging"):
        rt = source["ref_tagging"]
        tagging = RefTagging(rt["free_low_bits"], rt["ref_pattern"], rt["value_pattern"])
    return Target(
        name=source["name"],
        word_width=source["word_width"],
        kind_table=table,
        ref_tagging=tagging,
    )


def get_scalar_kinds(t: TypeExpr, target: Target) -> KindSet:
    """The kinds of scalars that can physically store a value of the type."""
    if isinstance(t, IntType):
        return target.kinds_for_int(t.width)
    if isinstance(t, BoolType):
        return target.kinds_for_int(1)
    if isinstance(t, FloatType):
        return target.kinds_for_float(t.width)
    if isinstance(t, NamedType):
        return target.ref_kinds
    raise KeyError(f"no scalar kind for type {print_type(t)}")


# ---------------------------------------------------------------------------
# Monomorphized ADTs


REF_NONE = "none"
REF_PLAIN = "ref"  # a reference; may share its scalar only under tagging
REF_TAGGED_WORD = "tagged_word"  # an embedded scalar that mixes refs and bits


@dataclass(frozen=True)
class FieldSlot:
    """One normalized field: a value that fits in a single scalar."""

    name: str
    width: int
    kinds: KindSet
    signed: bool = False
    is_float: bool = False
    ref_mode: str = REF_NONE
    adt_ref: Optional[str] = None  # instantiation key of a referenced ADT
    embedded: bool = False  # one scalar of an embedded unboxed ADT
    scalar_index: int = 0  # position within an embedded unboxed group
    source: tuple = ()  # (source field index, *tuple projections)
    type_str: str = ""

    @property
    def is_ref(self) -> bool:
        return self.ref_mode == REF_PLAIN


@dataclass(frozen=True)
class MonoVariant:
    name: str
    source_fields: tuple[tuple[str, TypeExpr], ...]
    fields: tuple[FieldSlot, ...]

    def field_named(self, name: str) -> FieldSlot:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)


@dataclass(frozen=True)
class MonoAdt:
    name: str  # canonical instantiation key, e.g. Option<u32>
    variants: tuple[MonoVariant, ...]
    recursive: bool = False
    captured: bool = False
    unboxed_annot: bool = False
    packing: Optional[tuple[Optional[tuple[AnnotationEntry, ...]], ...]] = None

    @property
    def all_nullary(self) -> bool:
        return all(not v.fields for v in self.variants)

    def variant_index(self, name: str) -> int:
        for i, v in enumerate(self.variants):
            if v.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class Disposition:
    boxed: bool
    reason: str  # recursive | captured | annotation | all-nullary | auto | default


@dataclass
class AdtEnv:
    """Resolution context for monomorphization: declared ADTs plus the
    dispositions and layouts of already-processed instantiations."""

    decls: dict[str, AdtDecl]
    target: Target
    packing_decls: dict[str, PackingDecl] = field(default_factory=dict)
    resolved: dict[str, "ResolvedAdt"] = field(default_factory=dict)
    recursive_keys: set[str] = field(default_factory=set)


@dataclass
class ResolvedAdt:
    key: str
    mono: MonoAdt
    disposition: Disposition
    layout: Optional[object] = None  # LayoutSolution once solved


def instantiation_key(name: str, args: tuple[TypeExpr, ...]) -> str:
    return print_type(NamedType(name, args))


def substitute(t: TypeExpr, bindings: dict[str, TypeExpr]) -> TypeExpr:
    if isinstance(t, TupleType):
        return TupleType(tuple(substitute(e, bindings) for e in t.elems))
    if isinstance(t, NamedType):
        if not t.args and t.name in bindings:
            return bindings[t.name]
        return NamedType(t.name, tuple(substitute(a, bindings) for a in t.args))
    return t


class MonoError(Exception):
    pass


def monomorphize_adt(
    decl: AdtDecl, type_args: tuple[TypeExpr, ...], env: AdtEnv
) -> MonoAdt:
    """Substitute type arguments and normalize every field to scalars:
    tuples flatten to one field per element, boxed ADT fields become
    references, unboxed ADT fields expand to their layout's scalars."""
    if len(type_args) != len(decl.type_params):
        raise MonoError(
            f"{decl.name} expects {len(decl.type_params)} type arguments, got {len(type_args)}"
        )
    bindings = dict(zip(decl.type_params, type_args))
    key = instantiation_key(decl.name, type_args)
    variants = []
    for v in decl.variants:
        source_fields = tuple((n, substitute(t, bindings)) for n, t in v.fields)
        fields: list[FieldSlot] = []
        for idx, (fname, ftype) in enumerate(source_fields):
            fields.extend(_normalize_field(fname, ftype, (idx,), env, key))
        variants.append(MonoVariant(v.name, source_fields, tuple(fields)))
    mono = MonoAdt(
        name=key,
        variants=tuple(variants),
        recursive=key in env.recursive_keys,
        captured=decl.captured,
        unboxed_annot=decl.unboxed,
    )
    packing = _flatten_adt_packing(decl, mono, env)
    return replace(mono, packing=packing)


def _normalize_field(
    name: str, t: TypeExpr, source: tuple, env: AdtEnv, owner_key: str
) -> list[FieldSlot]:
    target = env.target
    if isinstance(t, IntType):
        return [
            FieldSlot(name, t.width, target.kinds_for_int(t.width), signed=t.signed,
                      source=source, type_str=print_type(t))
        ]
    if isinstance(t, BoolType):
        return [
            FieldSlot(name, 1, target.kinds_for_int(1), source=source, type_str="bool")
        ]
    if isinstance(t, FloatType):
        return [
            FieldSlot(name, t.width, target.kinds_for_float(t.width), is_float=True,
                      source=source, type_str=print_type(t))
        ]
    if isinstance(t, TupleType):
        out: list[FieldSlot] = []
        for i, elem in enumerate(t.elems):
            out.extend(_normalize_field(f"{name}.{i}", elem, source + (i,), env, owner_key))
        return out
    if isinstance(t, NamedType):
        if t.name in env.decls:
            ref_key = instantiation_key(t.name, t.args)
            info = env.resolved.get(ref_key)
            if info is None or info.disposition.boxed:
                # boxed (or in-flight recursive, hence boxed) instantiation
                return [
                    FieldSlot(name, target.word_width, target.ref_kinds,
                              ref_mode=REF_PLAIN, adt_ref=ref_key,
                              source=source, type_str=ref_key)
                ]
            return _embed_unboxed(name, ref_key, info, source, env)
        if t.name in getattr(env, "type_params", ()):  # pragma: no cover - guarded earlier
            raise MonoError(f"unbound type parameter {t.name}")
        # opaque reference type such as Array<byte> or string
        return [
            FieldSlot(name, target.word_width, target.ref_kinds, ref_mode=REF_PLAIN,
                      source=source, type_str=print_type(t))
        ]
    raise MonoError(f"unsupported field type {t!r}")


def _embed_unboxed(
    name: str, ref_key: str, info: ResolvedAdt, source: tuple, env: AdtEnv
) -> list[FieldSlot]:
    layout = info.layout
    assert layout is not None, f"unboxed {ref_key} has no layout"
    out: list[FieldSlot] = []
    for i, slot in enumerate(layout.slots):
        if slot.ref_bearing:
            # under tagged pointers the slot's own low bits discriminate
            # references from packed values, so the word must embed opaquely;
            # without tagging a ref slot holds only plain references
            mode = REF_TAGGED_WORD if env.target.ref_tagging else REF_PLAIN
            width = slot.width
        else:
            mode = REF_NONE
            width = layout.used_width(i)
        out.append(
            FieldSlot(f"{name}.{i}", width, slot.kinds, ref_mode=mode,
                      adt_ref=ref_key, embedded=True, scalar_index=i,
                      source=source, type_str=ref_key)
        )
    return out


def _flatten_adt_packing(decl: AdtDecl, mono: MonoAdt, env: AdtEnv):
    if not decl.has_packing:
        return None
    delta = env.packing_decls
    per_variant: list[Optional[tuple[AnnotationEntry, ...]]] = []
    for i, variant in enumerate(mono.variants):
        exprs = decl.packing_for_variant(i)
        if exprs is None:
            per_variant.append(None)
            continue
        gamma = {f.name: f.width for f in variant.fields}
        ctx = SizeContext(gamma=gamma, delta=delta)
        per_variant.append(tuple(flatten_annotation(list(exprs), ctx)))
    return tuple(per_variant)


@dataclass(frozen=True)
class UnboxOptions:
    auto_unbox_limit: int = 2
    budget: int = 10_000


def unboxing_eligibility(adt: MonoAdt, options: UnboxOptions = UnboxOptions()) -> Disposition:
    if adt.recursive:
        return Disposition(boxed=True, reason="recursive")
    if adt.captured:
        return Disposition(boxed=True, reason="captured")
    if adt.unboxed_annot:
        return Disposition(boxed=False, reason="annotation")
    if len(adt.variants) == 1 and len(adt.variants[0].fields) <= options.auto_unbox_limit:
        return Disposition(boxed=False, reason="auto")
    if adt.all_nullary:
        return Disposition(boxed=False, reason="all-nullary")
    return Disposition(boxed=True, reason="default")

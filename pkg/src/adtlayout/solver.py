"""Joint scalar and interval assignment for unboxed ADTs.

The solver backtracks over assignments of normalized fields to scalar
slots; interval placement inside a slot is deterministic first-fit from
the least-significant bit, so fields never split across scalars. Scoring
is lexicographic: fewer scalars first, then summed access cost plus the
dedicated-tag penalty.

Pattern characters: '0'/'1' constants, 'x' field bits, 'u' unassigned
(solver's choice). Internally 'w' marks annotation wildcards, which may
hold tag bits or chosen constants but never field data.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from typing import Optional, Union

from . import distinguish
from .distinguish import DecisionTree, tag_width_for, tree_depth
from .flatten import AnnotationEntry, FlattenedPacking
from .targets import (
    REF_NONE,
    REF_PLAIN,
    REF_TAGGED_WORD,
    FieldSlot,
    KindSet,
    MonoAdt,
    MonoVariant,
    ScalarKind,
    Target,
)

_KIND_PREFERENCE = [
    ScalarKind.B32,
    ScalarKind.B64,
    ScalarKind.F32,
    ScalarKind.F64,
    ScalarKind.R32,
    ScalarKind.R64,
    ScalarKind.REF,
]


class AnnotationInfeasible(Exception):
    def __init__(self, adt_name: str, fields: list[str], detail: str = ""):
        msg = f"packing annotation on {adt_name} admits no layout"
        if fields:
            msg += ": conflicting fields " + ", ".join(sorted(set(fields)))
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.fields = sorted(set(fields))


# ---------------------------------------------------------------------------
# Solution model


@dataclass(frozen=True)
class Score:
    num_scalars: int
    access_cost: int
    explicit_tag_cost: int

    def key(self) -> tuple[int, int]:
        return (self.num_scalars, self.access_cost + self.explicit_tag_cost)


@dataclass(frozen=True)
class SingleVariant:
    kind_name = "single-variant"


@dataclass(frozen=True)
class BareTag:
    slot: int
    width: int
    kind_name = "bare-tag"


@dataclass(frozen=True)
class ExplicitTag:
    slot: int
    offset: int
    width: int
    dedicated: bool
    kind_name = "explicit-tag"


@dataclass(frozen=True)
class TreeTag:
    tree: DecisionTree
    kind_name = "decision-tree"


TagScheme = Union[SingleVariant, BareTag, ExplicitTag, TreeTag]


@dataclass(frozen=True)
class ScalarSlot:
    index: int
    kind: ScalarKind
    kinds: KindSet
    width: int
    ref_bearing: bool = False
    mixes_refs_and_bits: bool = False
    dedicated_tag: bool = False

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "width": self.width, "ref": self.ref_bearing}


@dataclass(frozen=True)
class Placement:
    slot: int
    offset: int
    width: int  # occupied interval width; a tagged reference spans word-free bits
    field: FieldSlot


@dataclass
class LayoutSolution:
    adt: MonoAdt
    target: Target
    slots: list[ScalarSlot]
    placements: dict[tuple[int, str], Placement]  # (variant, field name)
    patterns: list[list[list[str]]]  # [variant][slot], chars indexed from LSB
    tag_scheme: TagScheme
    score: Score
    steps_used: int = 0
    # patterns before tag placement and finalization, 'u' bits intact;
    # lets tagging be re-derived on a finished solution
    pretag_patterns: Optional[list[list[list[str]]]] = None

    def pattern_strings(self, variant: int) -> list[str]:
        return ["".join(reversed(p)) for p in self.patterns[variant]]

    def used_width(self, slot_index: int) -> int:
        hi = 1
        for row in self.patterns:
            pat = row[slot_index]
            for b in range(len(pat) - 1, -1, -1):
                if pat[b] != "0":
                    hi = max(hi, b + 1)
                    break
        return hi

    def placement_of(self, variant: int, name: str) -> Placement:
        return self.placements[(variant, name)]

    def to_json(self) -> dict:
        variants = []
        for i, v in enumerate(self.adt.variants):
            fields = {}
            for f in v.fields:
                pl = self.placements[(i, f.name)]
                fields[f.name] = {"scalar": pl.slot, "offset": pl.offset, "width": pl.width}
            variants.append(
                {"name": v.name, "patterns": self.pattern_strings(i), "fields": fields}
            )
        scheme: dict[str, object] = {"kind": self.tag_scheme.kind_name}
        if isinstance(self.tag_scheme, (ExplicitTag, BareTag)):
            scheme["scalar"] = self.tag_scheme.slot
            scheme["width"] = self.tag_scheme.width
            scheme["offset"] = (
                self.tag_scheme.offset if isinstance(self.tag_scheme, ExplicitTag) else 0
            )
        if isinstance(self.tag_scheme, TreeTag):
            scheme["tree"] = self.tag_scheme.tree.to_json()
        return {
            "adt": self.adt.name,
            "scalars": [s.to_json() for s in self.slots],
            "variants": variants,
            "tag_scheme": scheme,
            "score": {
                "scalars": self.score.num_scalars,
                "access_cost": self.score.access_cost,
                "explicit_tag_cost": self.score.explicit_tag_cost,
            },
            "steps": self.steps_used,
        }


# ---------------------------------------------------------------------------
# Mutable search state


class _Slot:
    def __init__(self, index: int, width: int, kinds: Optional[KindSet], n_variants: int):
        self.index = index
        self.width = width
        self.kinds = kinds  # None until the first field constrains it
        self.consts: list[dict[int, str]] = [dict() for _ in range(n_variants)]
        self.fields: list[list[Placement]] = [list() for _ in range(n_variants)]
        self.ref_variants: set[int] = set()
        self.tagged = False
        self.mixes = False

    def has_nonref_content(self) -> bool:
        if any(self.consts):
            return True
        return any(
            pl.field.ref_mode == REF_NONE for pls in self.fields for pl in pls
        )

    def reserved_positions(self, v: int, tagging) -> set[int]:
        out = set(self.consts[v])
        for pl in self.fields[v]:
            out.update(range(pl.offset, pl.offset + pl.width))
        if self.tagged and tagging is not None:
            pat = tagging.ref_pattern if v in self.ref_variants else tagging.value_pattern
            for i, ch in enumerate(pat):
                if ch in "01":
                    out.add(i)
        return out

    def field_at(self, v: int, pos: int) -> bool:
        return any(pl.offset <= pos < pl.offset + pl.width for pl in self.fields[v])

    def first_fit(self, v: int, width: int, tagging) -> Optional[int]:
        if width > self.width:
            return None
        reserved = self.reserved_positions(v, tagging)
        for off in range(0, self.width - width + 1):
            if all((off + k) not in reserved for k in range(width)):
                return off
        return None

    def fits_exact(self, v: int, offset: int, width: int, tagging) -> bool:
        if offset < 0 or offset + width > self.width:
            return False
        reserved = self.reserved_positions(v, tagging)
        return all((offset + k) not in reserved for k in range(width))


@dataclass
class _Undo:
    slot: _Slot
    variant: int
    prev_kinds: Optional[KindSet]
    placements: list[Placement] = dfield(default_factory=list)
    added_ref: bool = False
    set_tagged: bool = False
    set_mixes: bool = False
    consts: list[tuple[int, int, Optional[str]]] = dfield(default_factory=list)


@dataclass(frozen=True)
class _Unit:
    """One atomic block from a #solve item: sub-fields at fixed relative
    offsets plus constant and wildcard bits, placed contiguously."""

    fields: tuple[tuple[int, FieldSlot], ...]  # (relative offset, field)
    consts: tuple[tuple[int, str], ...]  # (relative position, '0'/'1'/'w')
    width: int
    kinds: KindSet

    def names(self) -> list[str]:
        return [f.name for _, f in self.fields]


class _State:
    def __init__(self, adt: MonoAdt, target: Target):
        self.adt = adt
        self.target = target
        self.n = len(adt.variants)
        self.slots: list[_Slot] = []
        self.placements: dict[tuple[int, str], Placement] = {}
        self.steps = 0
        self.shift_cost = 0  # 2 per shifted placement; a completion lower bound

    def new_slot(self, width: int, kinds: Optional[KindSet]) -> _Slot:
        s = _Slot(len(self.slots), width, kinds, self.n)
        self.slots.append(s)
        return s

    def pop_slot(self, s: _Slot) -> None:
        assert self.slots[-1] is s
        self.slots.pop()

    # -- single-field placement --

    def try_place(
        self, v: int, f: FieldSlot, slot: _Slot, pinned_offset: Optional[int] = None
    ) -> Optional[_Undo]:
        tagging = self.target.ref_tagging
        if slot.kinds is None:
            new_kinds = f.kinds
            if self.target.kind_width(new_kinds) != slot.width:
                return None
        else:
            new_kinds = slot.kinds & f.kinds
            if not new_kinds:
                return None
        undo = _Undo(slot, v, slot.kinds)

        if f.ref_mode == REF_NONE:
            if slot.ref_variants and tagging is None:
                return None
            if pinned_offset is None:
                offset = slot.first_fit(v, f.width, tagging)
            else:
                offset = (
                    pinned_offset
                    if slot.fits_exact(v, pinned_offset, f.width, tagging)
                    else None
                )
            if offset is None:
                return None
            width = f.width
        else:
            placed = self._place_ref(undo, slot, v, f, pinned_offset)
            if placed is None:
                return None
            offset, width = placed

        pl = Placement(slot.index, offset, width, f)
        slot.fields[v].append(pl)
        slot.kinds = new_kinds
        self.placements[(v, f.name)] = pl
        undo.placements.append(pl)
        if offset > 0:
            self.shift_cost += 2
        return undo

    def _place_ref(
        self, undo: _Undo, slot: _Slot, v: int, f: FieldSlot, pinned: Optional[int]
    ) -> Optional[tuple[int, int]]:
        tagging = self.target.ref_tagging
        if v in slot.ref_variants:
            return None
        if f.width != slot.width:
            return None
        if tagging is None:
            if f.ref_mode == REF_TAGGED_WORD:
                return None  # mixed words need tagged pointers
            if slot.has_nonref_content() or slot.fields[v]:
                return None
            if pinned not in (None, 0):
                return None
            slot.ref_variants.add(v)
            undo.added_ref = True
            return (0, slot.width)
        free = tagging.free_low_bits
        if f.ref_mode == REF_TAGGED_WORD:
            offset, width = 0, slot.width
        else:
            offset, width = free, slot.width - free
        if pinned not in (None, 0, offset):
            return None
        if not slot.fits_exact(v, offset, width, tagging):
            return None
        if f.ref_mode == REF_PLAIN:
            for i, ch in enumerate(tagging.ref_pattern):
                if ch not in "01":
                    continue
                if slot.consts[v].get(i) not in (None, ch, "w") or slot.field_at(v, i):
                    return None
        # other variants' content must stay value-tagged
        for w in range(self.n):
            if w == v or w in slot.ref_variants:
                continue
            for i, ch in enumerate(tagging.value_pattern):
                if ch not in "01":
                    continue
                if slot.consts[w].get(i) not in (None, ch, "w") or slot.field_at(w, i):
                    return None
        if not slot.tagged:
            slot.tagged = True
            undo.set_tagged = True
        if f.ref_mode == REF_TAGGED_WORD and not slot.mixes:
            slot.mixes = True
            undo.set_mixes = True
        slot.ref_variants.add(v)
        undo.added_ref = True
        if f.ref_mode == REF_PLAIN:
            for i, ch in enumerate(tagging.ref_pattern):
                if ch in "01" and slot.consts[v].get(i) != ch:
                    undo.consts.append((v, i, slot.consts[v].get(i)))
                    slot.consts[v][i] = ch
        return (offset, width)

    # -- unit placement (#solve blocks) --

    def try_place_unit(self, v: int, unit: _Unit, slot: _Slot) -> Optional[_Undo]:
        tagging = self.target.ref_tagging
        if slot.kinds is None:
            new_kinds = unit.kinds
            if self.target.kind_width(new_kinds) != slot.width:
                return None
        else:
            new_kinds = slot.kinds & unit.kinds
            if not new_kinds:
                return None
        if slot.ref_variants and tagging is None:
            return None
        base = None
        reserved = slot.reserved_positions(v, tagging)
        for off in range(0, slot.width - unit.width + 1):
            ok = True
            for rel, f in unit.fields:
                if any((off + rel + k) in reserved for k in range(f.width)):
                    ok = False
                    break
            if ok:
                for rel, ch in unit.consts:
                    pos = off + rel
                    if slot.field_at(v, pos):
                        ok = False
                        break
                    have = slot.consts[v].get(pos)
                    if ch in "01" and have not in (None, ch, "w"):
                        ok = False
                        break
            if ok:
                base = off
                break
        if base is None:
            return None
        undo = _Undo(slot, v, slot.kinds)
        for rel, ch in unit.consts:
            pos = base + rel
            prev = slot.consts[v].get(pos)
            if prev != ch and not (ch == "w" and prev in ("0", "1")):
                undo.consts.append((v, pos, prev))
                slot.consts[v][pos] = ch
        for rel, f in unit.fields:
            pl = Placement(slot.index, base + rel, f.width, f)
            slot.fields[v].append(pl)
            self.placements[(v, f.name)] = pl
            undo.placements.append(pl)
            if pl.offset > 0:
                self.shift_cost += 2
        slot.kinds = new_kinds
        return undo

    def unplace(self, undo: _Undo) -> None:
        slot = undo.slot
        v = undo.variant
        for pl in reversed(undo.placements):
            slot.fields[v].remove(pl)
            del self.placements[(v, pl.field.name)]
            if pl.offset > 0:
                self.shift_cost -= 2
        slot.kinds = undo.prev_kinds
        if undo.added_ref:
            slot.ref_variants.discard(v)
        if undo.set_tagged:
            slot.tagged = False
        if undo.set_mixes:
            slot.mixes = False
        for vv, i, prev in reversed(undo.consts):
            if prev is None:
                slot.consts[vv].pop(i, None)
            else:
                slot.consts[vv][i] = prev

    # -- pattern assembly --

    def build_patterns(self) -> list[list[list[str]]]:
        tagging = self.target.ref_tagging
        out: list[list[list[str]]] = []
        for v in range(self.n):
            row: list[list[str]] = []
            for slot in self.slots:
                if slot.ref_variants and tagging is None:
                    # reference-only scalar: opaque pointer or null
                    row.append(
                        ["x"] * slot.width if v in slot.ref_variants else ["0"] * slot.width
                    )
                    continue
                arr = ["u"] * slot.width
                for pos, ch in slot.consts[v].items():
                    arr[pos] = "u" if ch == "w" else ch
                if slot.tagged and tagging is not None and v not in slot.ref_variants:
                    holds_word = any(
                        pl.field.ref_mode == REF_TAGGED_WORD for pl in slot.fields[v]
                    )
                    if not holds_word:
                        for i, ch in enumerate(tagging.value_pattern):
                            if ch in "01":
                                arr[i] = ch
                for pl in slot.fields[v]:
                    for k in range(pl.offset, pl.offset + pl.width):
                        arr[k] = "x"
                row.append(arr)
            out.append(row)
        return out


# ---------------------------------------------------------------------------
# Completion and scoring


def _patterns_to_strings(patterns):
    return [["".join(reversed(p)) for p in row] for row in patterns]


def _strings_to_patterns(strings):
    return [[list(reversed(s)) for s in row] for row in strings]


def _finalize(patterns):
    return [[["0" if c == "u" else c for c in pat] for pat in row] for row in patterns]


def _pick_kind(kinds: Optional[KindSet], ref_bearing: bool, target: Target) -> ScalarKind:
    if kinds is None:
        kinds = target.kinds_for_int(32)
    order = [k for k in _KIND_PREFERENCE if k in kinds]
    if ref_bearing:
        refs = [k for k in order if k.ref_capable]
        if refs:
            return refs[0]
    return order[0]


def _freeze_slots(state: _State) -> list[ScalarSlot]:
    return [
        ScalarSlot(
            index=s.index,
            kind=_pick_kind(s.kinds, bool(s.ref_variants), state.target),
            kinds=s.kinds if s.kinds is not None else state.target.kinds_for_int(32),
            width=s.width,
            ref_bearing=bool(s.ref_variants),
            mixes_refs_and_bits=s.mixes,
        )
        for s in state.slots
    ]


def _access_cost(pattern: list[str], offset: int, width: int) -> int:
    if offset > 0:
        return 2
    for b, ch in enumerate(pattern):
        if b < width:
            continue
        if ch != "0":
            return 1
    return 0


def score_layout(sol: LayoutSolution, target: Target) -> Score:
    access = 0
    for i, variant in enumerate(sol.adt.variants):
        for f in variant.fields:
            pl = sol.placements[(i, f.name)]
            access += _access_cost(sol.patterns[i][pl.slot], pl.offset, pl.width)
    scheme = sol.tag_scheme
    if isinstance(scheme, (ExplicitTag, BareTag)):
        offset = scheme.offset if isinstance(scheme, ExplicitTag) else 0
        if offset > 0:
            access += 2
        else:
            access += max(
                _access_cost(sol.patterns[v][scheme.slot], 0, scheme.width)
                for v in range(len(sol.adt.variants))
            )
    elif isinstance(scheme, TreeTag):
        access += 2 * tree_depth(scheme.tree)
    explicit = 1 if any(s.dedicated_tag for s in sol.slots) else 0
    return Score(len(sol.slots), access, explicit)


def _set_tag_bits(patterns, slot: int, offset: int, width: int) -> None:
    for v, row in enumerate(patterns):
        for k in range(width):
            row[slot][offset + k] = str((v >> k) & 1)


def _lower_access_bound(state: _State) -> int:
    """Access cost every completion of this state must pay: shifted fields
    cost 2 regardless of tagging choices."""
    return state.shift_cost


def _complete(
    state: _State, best_key=None, appended_only: bool = False
) -> list[LayoutSolution]:
    """Tagging completions of a fully-assigned state, scored; ordered by
    preference: in-place explicit tag, decision tree, appended tag scalar.
    Candidates provably unable to beat `best_key` may be omitted;
    `appended_only` forces just the dedicated-tag completion (the trivial
    solution's shape)."""
    adt, target = state.adt, state.target
    n = state.n
    base = state.build_patterns()
    results: list[LayoutSolution] = []

    def make(slots, patterns, scheme) -> LayoutSolution:
        sol = LayoutSolution(
            adt=adt,
            target=target,
            slots=slots,
            placements=dict(state.placements),
            patterns=_finalize(patterns),
            tag_scheme=scheme,
            score=Score(0, 0, 0),
            steps_used=state.steps,
            pretag_patterns=[[list(p) for p in row] for row in base],
        )
        sol.score = score_layout(sol, target)
        return sol

    if n == 1:
        results.append(make(_freeze_slots(state), base, SingleVariant()))
        return results

    tw = tag_width_for(n)
    if not state.slots:
        # all variants nullary: a single bare tag integer
        slot = ScalarSlot(
            index=0,
            kind=_pick_kind(target.kinds_for_int(tw), False, target),
            kinds=target.kinds_for_int(tw),
            width=tw,
            dedicated_tag=True,
        )
        patterns = [[["u"] * tw] for _ in range(n)]
        _set_tag_bits(patterns, 0, 0, tw)
        results.append(make([slot], patterns, BareTag(0, tw)))
        return results

    for s in range(len(state.slots) if not appended_only else 0):
        width = state.slots[s].width
        shared = (1 << width) - 1
        for v in range(n):
            m = 0
            for b, ch in enumerate(base[v][s]):
                if ch == "u":
                    m |= 1 << b
            shared &= m
            if not shared:
                break
        runs = shared
        for _ in range(tw - 1):
            runs &= runs >> 1
        if not runs:
            continue
        found = (runs & -runs).bit_length() - 1
        patterns = [[list(p) for p in row] for row in base]
        _set_tag_bits(patterns, s, found, tw)
        results.append(make(_freeze_slots(state), patterns, ExplicitTag(s, found, tw, False)))

    # A classification tree costs at least 2 per level and needs ceil(log2 n)
    # levels. With two variants any shared free bit already admits an
    # in-place 1-bit tag at the same position with identical masking and
    # cost 2 <= 2*depth, so a tree is dominated whenever one was found.
    tree_bound = (len(state.slots), _lower_access_bound(state) + 2 * tw)
    have = min(
        [r.score.key() for r in results] + ([best_key] if best_key is not None else []),
        default=None,
    )
    dominated = appended_only or (n == 2 and results) or (
        have is not None and have <= tree_bound
    )
    if not dominated:
        derived = distinguish.derive_decision_tree(_patterns_to_strings(base))
        if derived is not None:
            tree, resolved = derived
            results.append(
                make(_freeze_slots(state), _strings_to_patterns(resolved), TreeTag(tree))
            )

    # an appended tag costs an extra scalar, so any same-slot-count candidate
    # beats it; build it only as the fallback
    appended_bound = (len(state.slots) + 1, _lower_access_bound(state) + 1)
    if appended_only or (
        not results and (best_key is None or best_key > appended_bound)
    ):
        tag_slot = ScalarSlot(
            index=len(state.slots),
            kind=_pick_kind(target.kinds_for_int(tw), False, target),
            kinds=target.kinds_for_int(tw),
            width=tw,
            dedicated_tag=True,
        )
        patterns = [[list(p) for p in row] + [["u"] * tw] for row in base]
        _set_tag_bits(patterns, len(state.slots), 0, tw)
        results.append(
            make(
                _freeze_slots(state) + [tag_slot],
                patterns,
                ExplicitTag(len(state.slots), 0, tw, True),
            )
        )
    return results


# ---------------------------------------------------------------------------
# Annotation preprocessing


def _annotation_width_class(target: Target, pattern_width: int) -> int:
    if pattern_width <= 32 and target.kind_width(target.kinds_for_int(32)) == 32:
        return 32
    return 64


@dataclass
class _Prepared:
    pins: dict[tuple[int, str], tuple[int, int]]  # field -> (slot, exact offset)
    units: list[tuple[int, int, _Unit]]  # (variant, slot index, unit)


def _apply_annotations(state: _State) -> _Prepared:
    adt = state.adt
    prepared = _Prepared(pins={}, units=[])
    if adt.packing is None:
        return prepared
    n_entries = max(
        (len(entries) for entries in adt.packing if entries is not None), default=0
    )
    widths = [32] * n_entries
    for entries in adt.packing:
        if entries is None:
            continue
        for j, e in enumerate(entries):
            w = e.width if isinstance(e, FlattenedPacking) else e.min_width
            widths[j] = max(widths[j], _annotation_width_class(state.target, w))
    for j in range(n_entries):
        state.new_slot(widths[j], None)
    for v, entries in enumerate(adt.packing):
        if entries is None:
            continue
        variant = adt.variants[v]
        for j, entry in enumerate(entries):
            slot = state.slots[j]
            if isinstance(entry, FlattenedPacking):
                if entry.width > slot.width:
                    raise AnnotationInfeasible(
                        adt.name, list(entry.assignments), "pattern wider than any scalar"
                    )
                for b, ch in enumerate(reversed(entry.pattern)):
                    if ch in "01":
                        slot.consts[v][b] = ch
                    elif ch == "u":
                        slot.consts[v][b] = "w"
                for fname, off in entry.assignments.items():
                    prepared.pins[(v, fname)] = (j, off)
            else:
                for item in entry.items:
                    fields = []
                    kinds: Optional[KindSet] = None
                    for fname in item.assignments:
                        f = variant.field_named(fname)
                        if f.ref_mode != REF_NONE:
                            raise AnnotationInfeasible(
                                adt.name, [fname], "reference fields cannot be packed by #solve"
                            )
                        kinds = f.kinds if kinds is None else (kinds & f.kinds)
                    if kinds is not None and not kinds:
                        raise AnnotationInfeasible(
                            adt.name, list(item.assignments), "no common scalar kind"
                        )
                    for fname, rel in item.assignments.items():
                        fields.append((rel, variant.field_named(fname)))
                    consts = []
                    for b, ch in enumerate(reversed(item.pattern)):
                        if ch in "01":
                            consts.append((b, ch))
                        elif ch == "u":
                            consts.append((b, "w"))
                    fields.sort(key=lambda rf: rf[0])
                    unit = _Unit(
                        fields=tuple(fields),
                        consts=tuple(consts),
                        width=item.width,
                        kinds=kinds if kinds is not None else state.target.kinds_for_int(32),
                    )
                    prepared.units.append((v, j, unit))
    return prepared


def _place_pinned(state: _State, prepared: _Prepared) -> None:
    for i, variant in enumerate(state.adt.variants):
        for f in variant.fields:
            pin = prepared.pins.get((i, f.name))
            if pin is None:
                continue
            slot_idx, off = pin
            if f.ref_mode != REF_NONE:
                undo = state.try_place(i, f, state.slots[slot_idx], pinned_offset=0)
            else:
                undo = state.try_place(i, f, state.slots[slot_idx], pinned_offset=off)
            if undo is None:
                raise AnnotationInfeasible(
                    state.adt.name, [f.name], f"pinned at scalar {slot_idx} bit {off}"
                )


# ---------------------------------------------------------------------------
# Entry points


def trivial_layout(adt: MonoAdt, target: Target) -> LayoutSolution:
    """One scalar per field per variant plus a dedicated tag scalar (for
    more than one variant). Fallback and score baseline; ignores packings."""
    bare = MonoAdt(
        name=adt.name,
        variants=adt.variants,
        recursive=adt.recursive,
        captured=adt.captured,
        unboxed_annot=adt.unboxed_annot,
        packing=None,
    )
    state = _State(bare, target)
    for i, variant in enumerate(bare.variants):
        for f in variant.fields:
            slot = state.new_slot(target.kind_width(f.kinds), None)
            undo = state.try_place(i, f, slot)
            assert undo is not None, f"trivial placement failed for {f.name}"
    sols = _complete(state, appended_only=len(bare.variants) > 1)
    if len(bare.variants) == 1:
        return sols[0]
    for s in sols:
        scheme = s.tag_scheme
        if isinstance(scheme, BareTag) or (
            isinstance(scheme, ExplicitTag) and scheme.dedicated
        ):
            return s
    raise AssertionError("trivial completion missing")


def solve_layout(adt: MonoAdt, target: Target, budget: int = 10_000) -> LayoutSolution:
    """Best-scoring layout found within the step budget.

    Deterministic in (adt, target, budget). Unannotated ADTs always have a
    solution (the trivial layout is admissible in any budget); an annotated
    ADT with no feasible completion raises AnnotationInfeasible.
    """
    state = _State(adt, target)
    prepared = _apply_annotations(state)
    _place_pinned(state, prepared)

    best: Optional[LayoutSolution] = None
    if adt.packing is None:
        best = trivial_layout(adt, target)

    # search items: #solve units first (they are slot-restricted), then the
    # free fields; variants in declaration order, widths descending
    unit_field_names = {
        (v, name) for v, _, unit in prepared.units for name in unit.names()
    }
    items: list[tuple[int, object, Optional[int]]] = []
    for i, variant in enumerate(adt.variants):
        per_variant: list[tuple[int, int, object, Optional[int]]] = []
        for v, j, unit in prepared.units:
            if v == i:
                per_variant.append((unit.width, len(per_variant), unit, j))
        for k, f in enumerate(variant.fields):
            if (i, f.name) in state.placements or (i, f.name) in unit_field_names:
                continue
            per_variant.append((f.width, 100 + k, f, None))
        per_variant.sort(key=lambda t: (-t[0], t[1]))
        items.extend((i, obj, restriction) for _, _, obj, restriction in per_variant)

    failures: list[str] = []

    def place(v: int, obj, slot: _Slot) -> Optional[_Undo]:
        if isinstance(obj, _Unit):
            return state.try_place_unit(v, obj, slot)
        return state.try_place(v, obj, slot)

    def descend(idx: int) -> None:
        nonlocal best
        if best is not None and (
            len(state.slots) > best.score.num_scalars
            or (len(state.slots), state.shift_cost) > best.score.key()
        ):
            return
        if best is not None and state.steps >= budget:
            return
        if idx == len(items):
            if best is not None and (
                (len(state.slots), _lower_access_bound(state)) >= best.score.key()
            ):
                return  # no completion of this assignment can beat the best
            key = best.score.key() if best is not None else None
            for sol in _complete(state, best_key=key):
                if best is None or sol.score.key() < best.score.key():
                    sol.steps_used = state.steps
                    best = sol
            return
        v, obj, restriction = items[idx]
        placed_any = False
        if restriction is not None:
            cands: list[Optional[_Slot]] = [state.slots[restriction]]
        else:
            cands = list(state.slots) + [None]
        for slot in cands:
            fresh = slot is None
            if fresh:
                slot = state.new_slot(state.target.kind_width(obj.kinds), None)
            undo = place(v, obj, slot)
            if undo is None:
                if fresh:
                    state.pop_slot(slot)
                continue
            state.steps += 1
            placed_any = True
            descend(idx + 1)
            state.unplace(undo)
            if fresh:
                state.pop_slot(slot)
            if state.steps >= budget and best is not None:
                break
        if not placed_any:
            names = obj.names() if isinstance(obj, _Unit) else [obj.name]
            failures.extend(names)

    descend(0)
    if best is None:
        raise AnnotationInfeasible(
            adt.name, failures or [n for (_, o, _) in items for n in
                                   (o.names() if isinstance(o, _Unit) else [o.name])]
        )
    return best


def assign_intervals(
    variant_fields: list[FieldSlot],
    target: Target,
    constraints: Optional[list[AnnotationEntry]] = None,
    name: str = "variant",
) -> Optional[dict[str, tuple[int, int]]]:
    """Deterministic interval assignment for one variant: pinned fields keep
    their flattened offsets, the rest first-fit from the LSB in descending
    width order. Returns field -> (scalar index, offset), or None when a
    field does not fit."""
    adt = MonoAdt(
        name=name,
        variants=(MonoVariant("v", (), tuple(variant_fields)),),
        packing=((tuple(constraints),) if constraints else None),
    )
    state = _State(adt, target)
    try:
        prepared = _apply_annotations(state)
        _place_pinned(state, prepared)
    except AnnotationInfeasible:
        return None
    for v, j, unit in prepared.units:
        if state.try_place_unit(v, unit, state.slots[j]) is None:
            return None
    ranked = sorted(enumerate(variant_fields), key=lambda kv: (-kv[1].width, kv[0]))
    for _, f in ranked:
        if (0, f.name) in state.placements:
            continue
        placed = False
        for slot in state.slots:
            if state.try_place(0, f, slot) is not None:
                placed = True
                break
        if not placed:
            slot = state.new_slot(target.kind_width(f.kinds), None)
            if state.try_place(0, f, slot) is None:
                return None
    return {
        name_: (pl.slot, pl.offset)
        for (_, name_), pl in sorted(state.placements.items(), key=lambda kv: kv[0][1])
    }

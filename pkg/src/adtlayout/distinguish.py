"""Runtime distinguishability of variants: checking, explicit tag placement,
and decision-tree derivation over per-variant bit patterns.

Patterns are given per variant as one string per scalar, MSB first, over
'0', '1', 'x' (field bits, never usable for discrimination) and 'u'
(unassigned, value chosen here). Bit positions in trees and tag intervals
count from the LSB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

Patterns = list[list[str]]  # [variant][scalar] -> MSB-first pattern string


@dataclass(frozen=True)
class Leaf:
    variant: int

    def to_json(self) -> dict:
        return {"variant": self.variant}


@dataclass(frozen=True)
class Node:
    scalar: int
    bit: int  # position from the LSB
    zero: "DecisionTree"
    one: "DecisionTree"

    def to_json(self) -> dict:
        return {
            "scalar": self.scalar,
            "bit": self.bit,
            "zero": self.zero.to_json(),
            "one": self.one.to_json(),
        }


DecisionTree = Union[Leaf, Node]


def tree_depth(tree: DecisionTree) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(tree_depth(tree.zero), tree_depth(tree.one))


def classify(tree: DecisionTree, scalars: list[int]) -> int:
    """Recover the variant index from encoded scalar values."""
    node = tree
    while isinstance(node, Node):
        bit = (scalars[node.scalar] >> node.bit) & 1
        node = node.one if bit else node.zero
    return node.variant


# ---------------------------------------------------------------------------
# Internal grid form: grid[v][s][b] with b indexed from the LSB


def _to_grid(patterns: Patterns) -> list[list[list[str]]]:
    if not patterns:
        return []
    shape = [len(s) for s in patterns[0]]
    for p in patterns:
        assert [len(s) for s in p] == shape, "patterns must share one shape"
    return [[list(reversed(s)) for s in p] for p in patterns]


def _from_grid(grid: list[list[list[str]]]) -> Patterns:
    return [["".join(reversed(s)) for s in p] for p in grid]


def _positions(grid) -> list[tuple[int, int]]:
    out = []
    for s, scalar in enumerate(grid[0]):
        for b in range(len(scalar)):
            out.append((s, b))
    return out


def _separated(grid, u: int, v: int) -> bool:
    for s in range(len(grid[u])):
        for b in range(len(grid[u][s])):
            a, c = grid[u][s][b], grid[v][s][b]
            if a in "01" and c in "01" and a != c:
                return True
    return False


def _resolve_free_bits(grid) -> Optional[list[list[list[str]]]]:
    """Complete search for an assignment of 'u' bits making every pair of
    variants differ at a position that is constant in both. Returns the
    (partially) resolved grid, or None when no assignment exists.

    Branches on the unseparated pair with the fewest viable positions;
    a pair with none is unsatisfiable outright, which keeps refutations
    from re-enumerating the other pairs' choices."""
    n = len(grid)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    positions = _positions(grid)

    def candidates(u: int, v: int) -> Optional[list[tuple[int, int]]]:
        """Viable separation positions, or None when already separated."""
        out = []
        for s, b in positions:
            a, c = grid[u][s][b], grid[v][s][b]
            if a == "x" or c == "x":
                continue
            if a in "01" and c in "01":
                if a != c:
                    return None
                continue  # equal constants cannot separate this pair
            out.append((s, b))
        return out

    def search() -> bool:
        tightest: Optional[tuple[int, tuple[int, int], list]] = None
        for u, v in pairs:
            cands = candidates(u, v)
            if cands is None:
                continue
            if not cands:
                return False
            if tightest is None or len(cands) < tightest[0]:
                tightest = (len(cands), (u, v), cands)
        if tightest is None:
            return True
        _, (u, v), cands = tightest
        for s, b in cands:
            a, c = grid[u][s][b], grid[v][s][b]
            for bit_u, bit_v in (("0", "1"), ("1", "0")):
                if a in "01" and a != bit_u:
                    continue
                if c in "01" and c != bit_v:
                    continue
                grid[u][s][b], grid[v][s][b] = bit_u, bit_v
                if search():
                    return True
                grid[u][s][b], grid[v][s][b] = a, c
        return False

    return grid if search() else None


def check_distinguishable(patterns: Patterns) -> bool:
    """True iff the unassigned bits can be chosen so that every pair of
    variants differs at a bit that is constant within each."""
    if len(patterns) <= 1:
        return True
    return _resolve_free_bits(_to_grid(patterns)) is not None


def derive_decision_tree(patterns: Patterns) -> Optional[tuple[DecisionTree, Patterns]]:
    """Choose values for unassigned bits and build a classifying tree.

    Returns (tree, patterns with the chosen bits made constant), or None
    exactly when check_distinguishable is false. Field ('x') bits route to
    both branches and are never tested while present in the live set.
    """
    if len(patterns) == 1:
        return Leaf(0), [list(p) for p in patterns]
    grid = _resolve_free_bits(_to_grid(patterns))
    if grid is None:
        return None
    positions = _positions(grid)

    def build(members: list[int], used: set[tuple[int, int]]) -> DecisionTree:
        if len(members) == 1:
            return Leaf(members[0])
        best: Optional[tuple[int, int, int]] = None  # (larger branch, s, b)
        for s, b in positions:
            if (s, b) in used:
                continue
            # valid split: some pair of members has differing constants here
            consts = [grid[m][s][b] for m in members]
            if not ("0" in consts and "1" in consts):
                continue
            lo = sum(1 for c in consts if c in ("0", "x", "u"))
            hi = sum(1 for c in consts if c in ("1", "x", "u"))
            larger = max(lo, hi)
            if best is None or larger < best[0]:
                best = (larger, s, b)
        assert best is not None, "unseparated members despite resolved free bits"
        _, s, b = best
        zeros: list[int] = []
        ones: list[int] = []
        for m in members:
            c = grid[m][s][b]
            if c == "0":
                zeros.append(m)
            elif c == "1":
                ones.append(m)
            elif c == "x":
                zeros.append(m)
                ones.append(m)
            else:  # free bit: route to the smaller side and fix the choice
                side = "0" if len(zeros) <= len(ones) else "1"
                grid[m][s][b] = side
                (zeros if side == "0" else ones).append(m)
        sub_used = used | {(s, b)}
        return Node(s, b, build(zeros, sub_used), build(ones, sub_used))

    tree = build(list(range(len(grid))), set())
    return tree, _from_grid(grid)


def find_tag_interval(patterns: Patterns, tag_width: int) -> Optional[tuple[int, int]]:
    """First (scalar, lsb offset) of `tag_width` contiguous bits unassigned
    in every variant at the same position, scanning scalars then offsets."""
    grid = _to_grid(patterns)
    if not grid:
        return None
    for s in range(len(grid[0])):
        width = len(grid[0][s])
        for off in range(0, width - tag_width + 1):
            if all(
                all(grid[v][s][off + k] == "u" for k in range(tag_width))
                for v in range(len(grid))
            ):
                return (s, off)
    return None


def tag_width_for(n_variants: int) -> int:
    if n_variants <= 1:
        return 0
    return max(1, math.ceil(math.log2(n_variants)))


def place_explicit_tag(sol):
    """Re-derive explicit tagging on a finished layout: the variant index is
    written into the first aligned run of bits unassigned in every variant,
    or into a fresh minimal-width integer scalar when no shared run exists.
    Single-variant solutions come back unchanged."""
    from .solver import (
        ExplicitTag,
        LayoutSolution,
        ScalarSlot,
        Score,
        SingleVariant,
        _finalize,
        _pick_kind,
        _set_tag_bits,
        score_layout,
    )

    n = len(sol.adt.variants)
    if n <= 1:
        assert isinstance(sol.tag_scheme, SingleVariant)
        return sol
    tw = tag_width_for(n)
    base = sol.pretag_patterns
    assert base is not None, "solution lacks pre-tag patterns"
    data_slots = [s for s in sol.slots if not s.dedicated_tag]
    strings = [["".join(reversed(p)) for p in row] for row in base]
    found = find_tag_interval(strings, tw)
    patterns = [[list(p) for p in row] for row in base]
    if found is not None:
        s, off = found
        slots = list(data_slots)
        scheme = ExplicitTag(s, off, tw, dedicated=False)
        _set_tag_bits(patterns, s, off, tw)
    else:
        target = sol.target
        tag_slot = ScalarSlot(
            index=len(data_slots),
            kind=_pick_kind(target.kinds_for_int(tw), False, target),
            kinds=target.kinds_for_int(tw),
            width=tw,
            dedicated_tag=True,
        )
        slots = list(data_slots) + [tag_slot]
        patterns = [row + [["u"] * tw] for row in patterns]
        scheme = ExplicitTag(len(data_slots), 0, tw, dedicated=True)
        _set_tag_bits(patterns, len(data_slots), 0, tw)
    new = LayoutSolution(
        adt=sol.adt,
        target=sol.target,
        slots=slots,
        placements=dict(sol.placements),
        patterns=_finalize(patterns),
        tag_scheme=scheme,
        score=Score(0, 0, 0),
        steps_used=sol.steps_used,
        pretag_patterns=base,
    )
    new.score = score_layout(new, sol.target)
    return new

"""Independent reference implementations used as oracles by the tests.

Each one deliberately re-derives its answer by a different route than the
library: flattening by textual inlining and a linear scan, distinguishability
by brute-force enumeration of every free-bit assignment, and layout scoring
by exhaustive enumeration over placement equivalence classes.
"""

from __future__ import annotations

import itertools
import math
import random
from typing import Optional

from adtlayout.syntax import (
    Apply,
    BitLayout,
    Concat,
    Empty,
    FieldRef,
    PackingDecl,
    PackingExpr,
)
from adtlayout.verify import SizeContext

# ---------------------------------------------------------------------------
# Reference flattening: inline applications textually, then scan the flat
# token string. Tokens: '0', '1', 'u', or (field, bit-index-from-msb).


def reference_flatten(expr: PackingExpr, ctx: SizeContext):
    tokens = _tokens(expr, ctx)
    width = len(tokens)
    assignments: dict[str, int] = {}
    pattern = []
    runs: dict[str, list[int]] = {}
    for pos, tok in enumerate(tokens):
        if isinstance(tok, tuple):
            runs.setdefault(tok[0], []).append(pos)
            pattern.append("x")
        else:
            pattern.append(tok)
    for name, positions in runs.items():
        assert positions == list(range(positions[0], positions[0] + len(positions))), (
            f"field {name} is not contiguous in the reference scan"
        )
        assignments[name] = width - positions[-1] - 1
    return assignments, "".join(pattern), width


def _resolve_letter(ch: str, gamma: dict[str, int]) -> str:
    matches = [f for f in gamma if f.startswith(ch)]
    assert len(matches) == 1, f"letter {ch} resolves to {matches}"
    return matches[0]


def _tokens(expr: PackingExpr, ctx: SizeContext):
    if isinstance(expr, Empty):
        return []
    if isinstance(expr, FieldRef):
        w = ctx.gamma[expr.name]
        return [(expr.name, i) for i in range(w)]
    if isinstance(expr, BitLayout):
        out = []
        k = 0
        bits = expr.bits
        while k < len(bits):
            ch = bits[k]
            if ch == "0" or ch == "1":
                out.append(ch)
                k += 1
            elif ch == "?":
                out.append("u")
                k += 1
            else:
                j = k
                while j < len(bits) and bits[j] == ch:
                    j += 1
                fname = _resolve_letter(ch, ctx.gamma)
                out.extend((fname, i) for i in range(j - k))
                k = j
        return out
    if isinstance(expr, Concat):
        out = []
        for p in expr.parts:
            out.extend(_tokens(p, ctx))
        return out
    if isinstance(expr, Apply):
        decl = ctx.delta[expr.name]
        body_ctx = ctx.with_gamma({n: w for n, w in decl.params})
        body = _tokens(decl.body, body_ctx)
        body = ["0"] * (decl.width - len(body)) + body
        for arg, (pname, pwidth) in zip(expr.args, decl.params):
            arg_tokens = _tokens(arg, ctx)
            arg_tokens = ["0"] * (pwidth - len(arg_tokens)) + arg_tokens
            replaced = []
            for tok in body:
                if isinstance(tok, tuple) and tok[0] == pname:
                    replaced.append(arg_tokens[tok[1]])
                else:
                    replaced.append(tok)
            body = replaced
        return body
    raise TypeError(f"unexpected expression {expr!r}")


# ---------------------------------------------------------------------------
# Random well-formed packing expressions (depth <= 4, width <= 64)

_LETTERS = "abcdefgh"


def random_context(rng: random.Random, delta: dict[str, PackingDecl]) -> SizeContext:
    n = rng.randint(1, 5)
    letters = rng.sample(_LETTERS, n)
    gamma = {ch + rng.choice(["lpha", "eta", "val", "x"]): rng.randint(1, 8) for ch in letters}
    return SizeContext(gamma=gamma, delta=delta)


def random_decls(rng: random.Random) -> dict[str, PackingDecl]:
    from adtlayout.syntax import parse_program

    decls = {}
    for i in range(rng.randint(0, 2)):
        widths = [rng.randint(1, 6) for _ in range(rng.randint(1, 2))]
        params = ", ".join(f"{_LETTERS[k]}: {w}" for k, w in enumerate(widths))
        body_bits = "".join(_LETTERS[k] * w for k, w in enumerate(widths))
        pad = rng.randint(0, 3)
        total = len(body_bits) + pad
        src = f"packing P{i}({params}): {total} = 0b_{'0' * pad}{body_bits};"
        d = parse_program(src)[0]
        decls[d.name] = d
    return decls


def random_expr(
    rng: random.Random, ctx: SizeContext, depth: int, used: set, max_width: int
) -> Optional[PackingExpr]:
    """A well-formed expression; every field is used at most once."""
    choices = ["literal", "field", "empty"]
    if depth > 0:
        choices += ["concat", "concat"]
        if ctx.delta:
            choices.append("apply")
    kind = rng.choice(choices)
    if kind == "empty":
        return Empty()
    if kind == "field":
        avail = [f for f, w in sorted(ctx.gamma.items()) if f not in used and w <= max_width]
        if not avail:
            return Empty()
        f = rng.choice(avail)
        used.add(f)
        return FieldRef(f)
    if kind == "literal":
        bits: list[str] = []
        for _ in range(rng.randint(1, 3)):
            r = rng.random()
            if r < 0.4:
                seg = [rng.choice("01?") for _ in range(rng.randint(1, 6))]
                if len(bits) + len(seg) <= max_width:
                    bits.extend(seg)
            else:
                avail = [
                    f
                    for f, w in sorted(ctx.gamma.items())
                    if f not in used and w + len(bits) <= max_width
                ]
                if avail:
                    f = rng.choice(avail)
                    used.add(f)
                    bits.extend(f[0] * ctx.gamma[f])
        if not bits:
            return Empty()
        return BitLayout(tuple(bits))
    if kind == "concat":
        parts = []
        width = 0
        for _ in range(rng.randint(1, 3)):
            p = random_expr(rng, ctx, depth - 1, used, max_width - width)
            if p is None:
                continue
            w = _width_of(p, ctx)
            if width + w > max_width:
                continue
            parts.append(p)
            width += w
        return Concat(tuple(parts))
    # apply
    name = rng.choice(sorted(ctx.delta))
    decl = ctx.delta[name]
    if decl.width > max_width:
        return Empty()
    args = []
    for pname, pwidth in decl.params:
        a = random_expr(rng, ctx, 0, used, pwidth)
        args.append(a if a is not None else Empty())
    return Apply(name, tuple(args))


def _width_of(e: PackingExpr, ctx: SizeContext) -> int:
    from adtlayout.verify import size_of

    return size_of(e, ctx)


# ---------------------------------------------------------------------------
# Brute-force distinguishability


def brute_force_distinguishable(patterns: list[list[str]]) -> bool:
    """Try every assignment of 'u' bits; true iff some assignment makes all
    pairs differ at a position that is constant in both."""
    grids = [[list(s) for s in p] for p in patterns]
    free = [
        (v, s, b)
        for v in range(len(grids))
        for s in range(len(grids[v]))
        for b in range(len(grids[v][s]))
        if grids[v][s][b] == "u"
    ]
    n = len(grids)

    def separated_all() -> bool:
        for u in range(n):
            for v in range(u + 1, n):
                if not any(
                    grids[u][s][b] in "01"
                    and grids[v][s][b] in "01"
                    and grids[u][s][b] != grids[v][s][b]
                    for s in range(len(grids[u]))
                    for b in range(len(grids[u][s]))
                ):
                    return False
        return True

    for combo in itertools.product("01", repeat=len(free)):
        for (v, s, b), bit in zip(free, combo):
            grids[v][s][b] = bit
        if separated_all():
            return True
        for v, s, b in free:
            grids[v][s][b] = "u"
    return separated_all() if not free else False


def enumerate_pattern_sets(max_total_bits: int = 6):
    """All pattern sets with <= 3 variants whose variant count times total
    pattern width stays within the bit budget; includes two-scalar shapes."""
    shapes = [[1], [2], [3], [1, 1], [1, 2], [2, 1]]
    for n in (1, 2, 3):
        for shape in shapes:
            width = sum(shape)
            if n * width > max_total_bits:
                continue
            cells = n * width
            for combo in itertools.product("01xu", repeat=cells):
                patterns = []
                pos = 0
                for _ in range(n):
                    row = []
                    for w in shape:
                        row.append("".join(combo[pos : pos + w]))
                        pos += w
                    patterns.append(row)
                yield patterns


# ---------------------------------------------------------------------------
# Exhaustive layout-score oracle (no annotations, no references, widths <= 8)
#
# Interval placements collapse into score-equivalence classes: a field's
# access cost depends only on (a) whether it sits at offset 0 and (b) whether
# any other bit of its variant's scalar word is nonzero (other fields are
# never guaranteed zero; tag bits are zero exactly for variants whose index
# is zero in the tested interval). Placing a field above offset 0 always
# costs 2 regardless of position, and stacking fields contiguously never
# fragments (sum of widths <= 64 here), so enumerating slot assignments plus
# the tag options covers every achievable score. A decision tree needs at
# least one masked-and-shifted test per level, so an in-slot explicit tag
# (cost <= 2, same masking effect, choosable per slot) always scores at
# least as well; trees are therefore omitted from the optimum search.


def oracle_best_score(widths_per_variant: list[list[int]]) -> tuple[int, int]:
    """Minimal (num_scalars, access + explicit-tag cost) over <= 2 data slots."""
    n = len(widths_per_variant)
    fields = [(v, w) for v, ws in enumerate(widths_per_variant) for w in ws]
    tagw = 0 if n <= 1 else max(1, math.ceil(math.log2(n)))
    best: Optional[tuple[int, int]] = None

    def consider(score: tuple[int, int]) -> None:
        nonlocal best
        if best is None or score < best:
            best = score

    if not fields:
        if n <= 1:
            return (0, 0)  # single nullary variant: no scalars at all
        return (1, 1)  # bare tag scalar: access 0, dedicated-tag cost 1

    for k in (1, 2):
        if k > len(fields):
            continue
        for assign in itertools.product(range(k), repeat=len(fields)):
            if set(assign) != set(range(k)):
                continue  # every slot used
            by_slot: dict[tuple[int, int], list[int]] = {}
            for (fv, fw), slot in zip(fields, assign):
                by_slot.setdefault((slot, fv), []).append(fw)
            if any(sum(ws) > 64 for ws in by_slot.values()):
                continue

            def field_cost(tag_slot: Optional[int], tag_at_zero: bool) -> int:
                total = 0
                for (slot, fv), ws in sorted(by_slot.items()):
                    co = len(ws)
                    tag_here = tag_slot == slot and n > 1
                    tag_bits_nonzero = tag_here and fv != 0
                    # one field can sit at offset 0 unless the tag does
                    for i, w in enumerate(sorted(ws, reverse=True)):
                        at_zero = (i == 0) and not (tag_here and tag_at_zero)
                        if not at_zero:
                            total += 2
                        elif co > 1 or tag_bits_nonzero:
                            total += 1
                return total

            if n == 1:
                consider((k, field_cost(None, False)))
                continue
            # tag inside slot s, above the fields
            for s in range(k):
                if any(sum(ws) + tagw > 64 for (slot, _), ws in by_slot.items() if slot == s):
                    continue
                cost = field_cost(s, False) + 2
                consider((k, cost))
                # tag at offset 0 of slot s (all fields there shifted up)
                cost0 = field_cost(s, True)
                tag_access = 1  # fields above are never guaranteed zero
                consider((k, cost0 + tag_access))
            # appended dedicated tag scalar
            consider((k + 1, field_cost(None, False) + 0 + 1))
    assert best is not None
    return best

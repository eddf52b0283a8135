"""Encoding and decoding of variant values under a solved layout.

Scalar values are plain integers. References are modeled as word-sized
addresses aligned to the target's free low bits; null is 0. Field values
round-trip exactly: decode_field(encode_variant(...)) is the identity.
"""

from __future__ import annotations

from typing import Mapping

from . import distinguish
from .solver import BareTag, ExplicitTag, LayoutSolution, SingleVariant, TreeTag
from .targets import REF_NONE, REF_PLAIN, REF_TAGGED_WORD, FieldSlot


class EncodeError(ValueError):
    pass


def _mask(width: int) -> int:
    return (1 << width) - 1


def _field_bits(f: FieldSlot, value: int, offset: int, width: int) -> int:
    if f.ref_mode == REF_PLAIN:
        if value < 0 or value & _mask(offset):
            raise EncodeError(f"reference {f.name} must be a {1 << offset}-aligned address")
        if (value >> offset) > _mask(width):
            raise EncodeError(f"reference {f.name} out of range")
        return value >> offset  # the shift in encode restores the address
    if f.ref_mode == REF_TAGGED_WORD:
        if not 0 <= value <= _mask(width):
            raise EncodeError(f"packed word {f.name} out of range")
        return value
    if f.signed:
        lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
        if not lo <= value <= hi:
            raise EncodeError(f"{f.name}={value} out of range for i{width}")
        return value & _mask(width)
    if not 0 <= value <= _mask(width):
        raise EncodeError(f"{f.name}={value} out of range for {width} bits")
    return value


def _base_words(layout: LayoutSolution, variant_index: int) -> list[int]:
    cache = getattr(layout, "_base_cache", None)
    if cache is None:
        cache = {}
        layout._base_cache = cache
    words = cache.get(variant_index)
    if words is None:
        words = []
        for pat in layout.patterns[variant_index]:
            word = 0
            for b, ch in enumerate(pat):
                if ch == "1":
                    word |= 1 << b
            words.append(word)
        cache[variant_index] = words
    return list(words)


def encode_variant(
    layout: LayoutSolution, variant_index: int, field_values: Mapping[str, int]
) -> list[int]:
    """Assemble the scalar words for one variant: pattern constants, the
    chosen bits, field bits at their intervals, and the tag."""
    adt = layout.adt
    variant = adt.variants[variant_index]
    scalars = _base_words(layout, variant_index)
    for f in variant.fields:
        pl = layout.placements[(variant_index, f.name)]
        if f.name not in field_values:
            raise EncodeError(f"missing value for field {f.name}")
        bits = _field_bits(f, field_values[f.name], pl.offset, pl.width)
        scalars[pl.slot] |= (bits & _mask(pl.width)) << pl.offset
    return scalars


def decode_field(
    layout: LayoutSolution, variant_index: int, field_name: str, scalars: list[int]
) -> int:
    """Extract one field: shift, mask, then sign-extend signed fields."""
    f = layout.adt.variants[variant_index].field_named(field_name)
    pl = layout.placements[(variant_index, field_name)]
    raw = (scalars[pl.slot] >> pl.offset) & _mask(pl.width)
    if f.ref_mode == REF_PLAIN:
        return raw << pl.offset  # restore the aligned address
    if f.ref_mode == REF_TAGGED_WORD:
        return raw
    if f.signed and raw & (1 << (pl.width - 1)):
        raw -= 1 << pl.width
    return raw


def variant_of(layout: LayoutSolution, scalars: list[int]) -> int:
    """Classify encoded scalars back to their variant index."""
    scheme = layout.tag_scheme
    if isinstance(scheme, SingleVariant):
        return 0
    if isinstance(scheme, BareTag):
        return scalars[scheme.slot] & _mask(scheme.width)
    if isinstance(scheme, ExplicitTag):
        return (scalars[scheme.slot] >> scheme.offset) & _mask(scheme.width)
    if isinstance(scheme, TreeTag):
        return distinguish.classify(scheme.tree, scalars)
    raise TypeError(f"unknown tag scheme {scheme!r}")


def default_scalars(layouts: Mapping[str, LayoutSolution], key: str) -> list[int]:
    """Encoded default value: first variant, every field at its default.

    Heap-free: reference fields encode null, so this is semantically exact
    only for reference-free ADTs. The normalizer emits allocation code for
    defaults that must materialize referenced records."""
    layout = layouts[key]
    return encode_variant(layout, 0, default_field_values(layouts, key, 0))


def default_field_values(
    layouts: Mapping[str, LayoutSolution], key: str, variant_index: int
) -> dict[str, int]:
    layout = layouts[key]
    values: dict[str, int] = {}
    for f in layout.adt.variants[variant_index].fields:
        if f.ref_mode == REF_NONE and f.adt_ref is not None and f.adt_ref in layouts:
            values[f.name] = default_scalars(layouts, f.adt_ref)[f.scalar_index]
        else:
            values[f.name] = 0  # zero bits, zero float, or null reference
    return values

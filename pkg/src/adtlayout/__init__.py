"""Bit-level layout DSL, scalar layout solver and SSA normalizer for
unboxed algebraic data types."""

from .codec import decode_field, default_scalars, encode_variant, variant_of
from .distinguish import (
    DecisionTree,
    Leaf,
    Node,
    check_distinguishable,
    classify,
    derive_decision_tree,
    place_explicit_tag,
)
from .flatten import FlattenedPacking, SolveRequest, flatten_annotation, flatten_expr
from .pipeline import ProgramLayouts, process_adts
from .solver import (
    AnnotationInfeasible,
    LayoutSolution,
    Score,
    assign_intervals,
    score_layout,
    solve_layout,
    trivial_layout,
)
from .syntax import (
    AdtDecl,
    PackingDecl,
    PackingSyntaxError,
    parse_packing_expr,
    parse_program,
    parse_type,
    print_decl,
    print_expr,
    print_program,
)
from .targets import (
    BUILTIN_TARGETS,
    JVM,
    X64,
    X86_32,
    MonoAdt,
    ScalarKind,
    Target,
    UnboxOptions,
    get_scalar_kinds,
    load_target,
    monomorphize_adt,
    unboxing_eligibility,
)
from .verify import (
    Diagnostic,
    SizeContext,
    VerifyError,
    check_packing_decl,
    resolve_layout_fields,
    size_of,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Back-and-forth games, Scott ranks, and infinitary formulas on finite rooted trees."""

from .bf import (
    BfEngine,
    BfVerdict,
    LevelResult,
    MethodDisagreement,
    ScottRankResult,
    atomic_type,
    bf_leq,
    bf_level,
    default_engine,
    normalize_marks,
    scott_rank,
)
from .charform import (
    LemmaPreconditionError,
    atomic_description,
    char_env,
    char_formula,
    char_vars,
    karp_witness,
    theta_sentences,
)
from .decomp import (
    DescendantView,
    decompose,
    descendant_tree,
    pattern_positions,
    reassemble,
)
from .encode import GadgetLayout, NotInImageError, decode, encode_colored
from .formulas import (
    And,
    CAnd,
    COr,
    Color,
    ComplexityTag,
    Equal,
    Eta,
    EvalError,
    Exists,
    Forall,
    Formula,
    FormulaSyntaxError,
    Neg,
    NotEta,
    Or,
    Parent,
    Root,
    classify,
    eval_formula,
    format_formula,
    free_vars,
    parse_formula,
)
from .restrict import eta_formula, relativize
from .trees import (
    ColoredFiniteTree,
    FiniteTree,
    TreeSyntaxError,
    all_trees,
    ancestor_closure,
    are_isomorphic,
    canonical_code,
    closed_tuples,
    is_ancestor_closed,
    is_rooted,
    orbit_partition,
    parse_tree,
    random_colored_tree,
    random_tree,
    serialize_tree,
    shuffled_copy,
    trees_up_to,
    tuple_pattern,
    tuple_tree_isomorphic,
)

__all__ = [name for name in dir() if not name.startswith("_")]

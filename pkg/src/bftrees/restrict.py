"""Relativization of formulas to descendant pieces via the Eta schema.

relativize(f, i, shape_vars, bound) rewrites a sentence about a tree into a
formula about the piece anchored at shape_vars[i]: each newly bound variable
of an existential is conjoined with piece membership, each universal is
guarded by the NNF dual, and Root atoms become equality with the anchor
(the anchor is the piece's root).  For every finite tree T and rooted
ancestor-closed tuple assigned to the shape variables, the relativized
formula holds in T exactly when the original holds in the piece, and the
E/A classification is unchanged.
"""
from __future__ import annotations

from typing import Sequence

from .formulas import (
    And,
    CAnd,
    COr,
    Color,
    Equal,
    Eta,
    Exists,
    Forall,
    Formula,
    Neg,
    NotEta,
    Or,
    Parent,
    Root,
    freshen_bound,
)


def eta_formula(
    index: int, shape_vars: Sequence[str], bound: int, target: str = "w"
) -> Eta:
    """Piece-membership schema for the anchor shape_vars[index].

    Satisfied by exactly the nodes of the descendant piece of the anchor:
    the anchor itself (length-0 disjunct) and nodes reached by descending
    paths whose first step avoids the other shape variables.
    """
    shape = tuple(shape_vars)
    if target in shape:
        raise ValueError("target must differ from the shape variables")
    return Eta(target, index, shape, bound)


def relativize(
    f: Formula, index: int, shape_vars: Sequence[str], bound: int
) -> Formula:
    """Restrict every quantifier of f to the piece anchored at shape_vars[index]."""
    shape = tuple(shape_vars)
    if not 0 <= index < len(shape):
        raise ValueError("anchor index out of range")
    anchor = shape[index]
    g = freshen_bound(f, frozenset(shape))

    def go(h: Formula) -> Formula:
        if isinstance(h, Root):
            return Equal(h.var, anchor)
        if isinstance(h, Neg):
            if isinstance(h.atom, Root):
                return Neg(Equal(h.atom.var, anchor))
            return h
        if isinstance(h, (Equal, Parent, Color)):
            return h
        if isinstance(h, (And, Or, CAnd, COr)):
            return type(h)(tuple(go(i) for i in h.items))
        if isinstance(h, Exists):
            guards = tuple(Eta(v, index, shape, bound) for v in h.vars)
            return Exists(h.vars, And(guards + (go(h.body),)))
        if isinstance(h, Forall):
            guards = tuple(NotEta(v, index, shape, bound) for v in h.vars)
            return Forall(h.vars, Or(guards + (go(h.body),)))
        if isinstance(h, (Eta, NotEta)):
            # Inner piece-membership schemas stay put: their paths never leave
            # an enclosing piece once their anchor lies inside it.
            return h
        raise TypeError(f"not a formula node: {h!r}")

    return go(g)

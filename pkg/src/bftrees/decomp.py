"""Descendant pieces: splitting a tree along a marked subtree.

For a rooted ancestor-closed tuple, every node of the tree has a unique
first marked node on its ancestor path (counting the node itself).  The
descendant piece of entry i consists of the anchor a_i together with the
nodes owned by it, rooted at a_i.  The pieces of all entries partition the
tree, and the tree is determined by the tuple pattern plus the piece
isomorphism types (testable through reassemble).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .trees import FiniteTree, MarkedTuple, is_ancestor_closed, is_rooted


@dataclass(frozen=True)
class DescendantView:
    """One piece of a decomposition: the piece tree, its origin map, its anchor.

    origin[j] is the ambient node id of piece node j; origin[0] is the anchor.
    """

    piece: FiniteTree
    origin: tuple[int, ...]
    anchor: int


def _validate(tree: FiniteTree, entries: Sequence[int]) -> None:
    for e in entries:
        if not 0 <= e < tree.size:
            raise ValueError(f"entry {e} is not a node id")
    if not is_ancestor_closed(tree, entries):
        raise ValueError("tuple must be ancestor-closed")
    if not is_rooted(entries):
        raise ValueError("tuple must contain the root")


def _owners(tree: FiniteTree, marks: set[int]) -> list[int]:
    owner = [0] * tree.size
    for v in range(tree.size):
        owner[v] = v if v in marks else owner[tree.parent[v]]
    return owner


def dedup_entries(entries: Sequence[int]) -> MarkedTuple:
    """First occurrences of the entries, in order."""
    return tuple(dict.fromkeys(entries))


def _extract(tree: FiniteTree, owner: list[int], anchor: int) -> DescendantView:
    nodes = [v for v in range(tree.size) if owner[v] == anchor]
    local = {v: j for j, v in enumerate(nodes)}
    parents = [-1] + [local[tree.parent[v]] for v in nodes[1:]]
    return DescendantView(FiniteTree(tuple(parents)), tuple(nodes), anchor)


def descendant_tree(tree: FiniteTree, entries: Sequence[int], i: int) -> DescendantView:
    """The descendant piece of entry i avoiding the rest of the tuple."""
    _validate(tree, entries)
    if not 0 <= i < len(entries):
        raise ValueError("index out of range")
    owner = _owners(tree, set(entries))
    return _extract(tree, owner, entries[i])


def decompose(tree: FiniteTree, entries: Sequence[int]) -> list[DescendantView]:
    """All descendant pieces, one per distinct entry (duplicates dropped first)."""
    _validate(tree, entries)
    distinct = dedup_entries(entries)
    owner = _owners(tree, set(distinct))
    return [_extract(tree, owner, a) for a in distinct]


def pattern_positions(tree: FiniteTree, entries: Sequence[int]) -> tuple[int, ...]:
    """Parent position per position of a rooted closed duplicate-free tuple.

    Result[j] is the position of entry j's parent, or -1 at the root entry.
    """
    _validate(tree, entries)
    pos = {e: j for j, e in enumerate(entries)}
    if len(pos) != len(entries):
        raise ValueError("entries must be duplicate-free")
    return tuple(
        -1 if e == 0 else pos[tree.parent[e]] for e in entries
    )


def reassemble(
    parent_pos: Sequence[int], pieces: Sequence[FiniteTree]
) -> tuple[FiniteTree, MarkedTuple]:
    """Rebuild a tree from a tuple pattern and one piece per position.

    Piece j is grafted with its root identified with pattern position j.
    Returns the tree and the node ids the pattern positions became; inverse
    of decompose up to isomorphism.
    """
    if len(parent_pos) != len(pieces):
        raise ValueError("need one piece per pattern position")
    root_positions = [j for j, p in enumerate(parent_pos) if p == -1]
    if len(root_positions) != 1:
        raise ValueError("pattern must have exactly one root position")

    children_of: dict[tuple, list[tuple]] = {}

    def add_edge(parent_key: tuple, child_key: tuple) -> None:
        children_of.setdefault(parent_key, []).append(child_key)

    # Node keys: ("anchor", j) for pattern position j, ("inner", j, v) for
    # non-root node v of piece j.
    for j, piece in enumerate(pieces):
        for v in range(1, piece.size):
            p = piece.parent[v]
            pk = ("anchor", j) if p == 0 else ("inner", j, p)
            add_edge(pk, ("inner", j, v))
    for j, p in enumerate(parent_pos):
        if p != -1:
            add_edge(("anchor", p), ("anchor", j))

    parents: list[int] = []
    index: dict[tuple, int] = {}

    def walk(key: tuple, parent: int) -> None:
        index[key] = len(parents)
        me = len(parents)
        parents.append(parent)
        for child in children_of.get(key, ()):
            walk(child, me)

    walk(("anchor", root_positions[0]), -1)
    anchors = tuple(index[("anchor", j)] for j in range(len(parent_pos)))
    return FiniteTree(tuple(parents)), anchors

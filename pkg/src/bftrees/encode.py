"""Encoding colored trees as plain trees, with a decoder.

Each node of a colored tree becomes a two-branch gadget.  The content branch
is a chain of three nodes hanging off the encoded root: u1 carries a single
marker leaf plus a unary node u2, whose child u3 carries the encoded child
subtrees.  The color branch is a bare chain of color+1 nodes ending in a
fork of exactly two leaves.  The two branch heads are structurally
distinguishable in every case (the content head has two children, one leaf
and one unary; a color head has either one child or two leaf children), so
decoding is unambiguous and rejects everything outside the image.
"""
from __future__ import annotations

from dataclasses import dataclass

from .trees import ColoredFiniteTree, FiniteTree, canonical_code


@dataclass(frozen=True)
class GadgetLayout:
    """Structural constants of the per-node gadget."""

    content_depth: int = 3  # chain edges from the encoded root to the carrier u3
    marker_arity: int = 1   # leaves marking the content head u1
    fork_arity: int = 2     # leaves terminating the color spine


LAYOUT = GadgetLayout()


class NotInImageError(ValueError):
    """Input tree is not an encoding of any colored tree."""

    def __init__(self, message: str, node: int):
        super().__init__(f"not in the image of the encoding: {message} (node {node})")
        self.node = node


def encode_colored(ct: ColoredFiniteTree) -> FiniteTree:
    """Encode a colored tree as a plain tree, one gadget per node."""
    tree = ct.tree
    colors = ct.colors
    kids = tree.children_lists()
    parents: list[int] = []

    def new_node(parent: int) -> int:
        parents.append(parent)
        return len(parents) - 1

    def build(v: int, parent: int) -> int:
        me = new_node(parent)
        # Content branch: u1 carries the marker leaf and the chain to u3.
        u1 = new_node(me)
        new_node(u1)  # marker leaf
        u2 = new_node(u1)
        u3 = new_node(u2)
        ordered = sorted(
            kids[v],
            key=lambda c: canonical_code(
                ColoredFiniteTree(_subtree(tree, c), _subcolors(tree, colors, c))
            ),
        )
        for c in ordered:
            build(c, u3)
        # Color branch: a spine of color+1 nodes, forked by two leaves.
        spine = new_node(me)
        for _ in range(colors[v]):
            spine = new_node(spine)
        new_node(spine)
        new_node(spine)
        return me

    build(0, -1)
    return FiniteTree(tuple(parents))


def _subtree(tree: FiniteTree, v: int) -> FiniteTree:
    nodes = [v]
    keep = {v}
    for u in range(v + 1, tree.size):
        if tree.parent[u] in keep:
            keep.add(u)
            nodes.append(u)
    local = {u: j for j, u in enumerate(nodes)}
    return FiniteTree((-1,) + tuple(local[tree.parent[u]] for u in nodes[1:]))


def _subcolors(
    tree: FiniteTree, colors: tuple[int, ...], v: int
) -> tuple[int, ...]:
    nodes = [v]
    keep = {v}
    for u in range(v + 1, tree.size):
        if tree.parent[u] in keep:
            keep.add(u)
            nodes.append(u)
    return tuple(colors[u] for u in nodes)


def decode(tree: FiniteTree) -> ColoredFiniteTree:
    """Invert encode_colored; raises NotInImageError off the image."""
    kids = tree.children_lists()

    parents: list[int] = []
    colors: list[int] = []

    def is_leaf(v: int) -> bool:
        return not kids[v]

    def classify_branch(v: int) -> str:
        cs = kids[v]
        if len(cs) == 1:
            return "color"
        if len(cs) == 2:
            if all(is_leaf(c) for c in cs):
                return "color"
            leaves = [c for c in cs if is_leaf(c)]
            unary = [c for c in cs if len(kids[c]) == 1]
            if len(leaves) == 1 and len(unary) == 1:
                return "content"
        return "bad"

    def read_spine(v: int) -> int:
        length = 0
        while len(kids[v]) == 1:
            length += 1
            v = kids[v][0]
        cs = kids[v]
        if len(cs) != 2 or not all(is_leaf(c) for c in cs):
            raise NotInImageError("color spine must end in a two-leaf fork", v)
        return length

    def walk(v: int, parent: int) -> None:
        cs = kids[v]
        if len(cs) != 2:
            raise NotInImageError("gadget root needs exactly two children", v)
        kinds = [classify_branch(c) for c in cs]
        if sorted(kinds) != ["color", "content"]:
            raise NotInImageError("cannot split into content and color branches", v)
        content = cs[kinds.index("content")]
        color = cs[kinds.index("color")]
        me = len(parents)
        parents.append(parent)
        colors.append(read_spine(color))
        u1 = content
        unary = [c for c in kids[u1] if len(kids[c]) == 1]
        u2 = unary[0]
        u3 = kids[u2][0]
        for sub in kids[u3]:
            walk(sub, me)

    walk(0, -1)
    return ColoredFiniteTree(FiniteTree(tuple(parents)), tuple(colors))

"""Finite rooted trees: parsing, canonical codes, orbits, random generation.

A tree is stored as a parent array over node ids 0..size-1.  Node 0 is the
root and parent(i) < i for every i >= 1, so the numbering is topological and
the structure is forced to be connected and acyclic.  The parent direction is
parent(child) = parent node.

Marked tuples are plain tuples of node ids (repeats allowed).  A tuple is
"ancestor-closed" when its entry set is closed under the parent function and
"rooted" when it contains node 0; both properties are recomputed on demand.

Canonical codes are AHU-style: the code of a subtree is the postorder
sequence of node labels with children visited in sorted code order.  A label
is (degree, color, mark positions), so codes coincide exactly for trees that
are isomorphic respecting colors and marked-tuple positions.  Serialization
emits children in canonical code order, which makes the output a function of
the isomorphism class.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement, permutations, product
from typing import Iterator, Sequence


class TreeSyntaxError(ValueError):
    """Malformed tree text; carries the failing character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


@dataclass(frozen=True)
class FiniteTree:
    """Rooted tree as a parent array; parent[0] == -1 marks the root."""

    parent: tuple[int, ...]

    def __post_init__(self):
        if not self.parent or self.parent[0] != -1:
            raise ValueError("node 0 must be the root (parent entry -1)")
        for i in range(1, len(self.parent)):
            p = self.parent[i]
            if not 0 <= p < i:
                raise ValueError(f"parent({i}) = {p} violates parent(i) < i")

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return 0

    def children_lists(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for i in range(1, self.size):
            out[self.parent[i]].append(i)
        return out

    def depths(self) -> tuple[int, ...]:
        d = [0] * self.size
        for i in range(1, self.size):
            d[i] = d[self.parent[i]] + 1
        return tuple(d)

    def ancestors(self, v: int) -> Iterator[int]:
        """Strict ancestors of v, from parent up to the root."""
        v = self.parent[v]
        while v != -1:
            yield v
            v = self.parent[v]


@dataclass(frozen=True)
class ColoredFiniteTree:
    """Finite rooted tree with one natural-number color per node."""

    tree: FiniteTree
    colors: tuple[int, ...]

    def __post_init__(self):
        if len(self.colors) != self.tree.size:
            raise ValueError("need exactly one color per node")
        if any(c < 0 for c in self.colors):
            raise ValueError("colors must be nonnegative")

    @property
    def size(self) -> int:
        return self.tree.size


MarkedTuple = tuple[int, ...]

_LEAF = FiniteTree((-1,))


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def parse_tree(text: str, colored: bool = False) -> FiniteTree | ColoredFiniteTree:
    """Parse "(...)" bracket trees, or "{color ...}" trees when colored.

    Nodes are numbered in depth-first preorder of the text, root = 0,
    children in textual order.
    """
    parents: list[int] = []
    colors: list[int] = []
    opener, closer = ("{", "}") if colored else ("(", ")")

    def parse_node(i: int, parent: int) -> int:
        me = len(parents)
        parents.append(parent)
        if text[i] != opener:
            raise TreeSyntaxError(f"expected '{opener}'", i)
        i = _skip_ws(text, i + 1)
        if colored:
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            if j == i:
                raise TreeSyntaxError("expected color literal", i)
            colors.append(int(text[i:j]))
            i = _skip_ws(text, j)
        while i < len(text) and text[i] == opener:
            i = parse_node(i, me)
            i = _skip_ws(text, i)
        if i >= len(text) or text[i] != closer:
            raise TreeSyntaxError(f"expected '{closer}'", i)
        return i + 1

    i = _skip_ws(text, 0)
    if i >= len(text):
        raise TreeSyntaxError("empty input", i)
    end = _skip_ws(text, parse_node(i, -1))
    if end != len(text):
        raise TreeSyntaxError("trailing input", end)
    tree = FiniteTree(tuple(parents))
    if colored:
        return ColoredFiniteTree(tree, tuple(colors))
    return tree


def _unpack(t: FiniteTree | ColoredFiniteTree) -> tuple[FiniteTree, tuple[int, ...] | None]:
    if isinstance(t, ColoredFiniteTree):
        return t.tree, t.colors
    return t, None


def _code_seq(
    tree: FiniteTree,
    colors: tuple[int, ...] | None,
    marks: Sequence[int] | None,
) -> tuple:
    """Flat postorder label sequence with children sorted by their sequences."""
    kids = tree.children_lists()
    mark_at: dict[int, tuple[int, ...]] = {}
    if marks:
        for pos, node in enumerate(marks):
            mark_at[node] = mark_at.get(node, ()) + (pos,)

    def seq(v: int) -> tuple:
        parts = sorted(seq(c) for c in kids[v])
        flat = [lab for part in parts for lab in part]
        color = -1 if colors is None else colors[v]
        flat.append((len(kids[v]), color, mark_at.get(v, ())))
        return tuple(flat)

    return seq(0)


def canonical_code(
    t: FiniteTree | ColoredFiniteTree, marks: Sequence[int] | None = None
) -> bytes:
    """Canonical byte code; equal codes exactly for (color, mark) isomorphic trees."""
    tree, colors = _unpack(t)
    if marks:
        for node in marks:
            if not 0 <= node < tree.size:
                raise ValueError(f"mark {node} is not a node id")
    seq = _code_seq(tree, colors, tuple(marks) if marks else None)
    chunks = []
    for deg, color, positions in seq:
        chunks.append(f"{deg},{color},{'.'.join(map(str, positions))}")
    return ";".join(chunks).encode()


def are_isomorphic(
    a: FiniteTree | ColoredFiniteTree,
    b: FiniteTree | ColoredFiniteTree,
    marks_a: Sequence[int] | None = None,
    marks_b: Sequence[int] | None = None,
) -> bool:
    return canonical_code(a, marks_a) == canonical_code(b, marks_b)


def serialize_tree(t: FiniteTree | ColoredFiniteTree) -> str:
    """Canonical text form: children emitted in canonical code order."""
    tree, colors = _unpack(t)
    kids = tree.children_lists()
    seqs: dict[int, tuple] = {}

    def seq(v: int) -> tuple:
        parts = sorted(seq(c) for c in kids[v])
        flat = [lab for part in parts for lab in part]
        color = -1 if colors is None else colors[v]
        flat.append((len(kids[v]), color, ()))
        out = tuple(flat)
        seqs[v] = out
        return out

    seq(0)

    def emit(v: int) -> str:
        ordered = sorted(kids[v], key=lambda c: seqs[c])
        if colors is None:
            return "(" + "".join(emit(c) for c in ordered) + ")"
        inner = "".join(" " + emit(c) for c in ordered)
        return "{" + str(colors[v]) + inner + "}"

    return emit(0)


def is_ancestor_closed(tree: FiniteTree, entries: Sequence[int]) -> bool:
    have = set(entries)
    return all(e == 0 or tree.parent[e] in have for e in have)


def is_rooted(entries: Sequence[int]) -> bool:
    return 0 in entries


def ancestor_closure(tree: FiniteTree, entries: Sequence[int]) -> MarkedTuple:
    """Entries followed by their missing ancestors.

    Appended nodes are ordered by ascending depth, ties broken by the index
    of the first entry owning the ancestor; duplicates are omitted and the
    original entries keep their positions.
    """
    have = set(entries)
    depths = tree.depths()
    missing: dict[int, tuple[int, int]] = {}
    for idx, e in enumerate(entries):
        v = tree.parent[e]
        while v != -1 and v not in have:
            if v in missing:
                break
            missing[v] = (depths[v], idx)
            v = tree.parent[v]
    appended = sorted(missing, key=lambda v: missing[v])
    return tuple(entries) + tuple(appended)


def tuple_pattern(tree: FiniteTree, entries: Sequence[int]) -> tuple:
    """Position-level pattern: equalities, parent links among entries, rootness."""
    first: dict[int, int] = {}
    for idx, e in enumerate(entries):
        first.setdefault(e, idx)
    pat = []
    for e in entries:
        p = tree.parent[e]
        pat.append((first[e], -1 if p == -1 else first.get(p, -1), e == 0))
    return tuple(pat)


def tuple_tree_isomorphic(
    a_tree: FiniteTree,
    a: Sequence[int],
    b_tree: FiniteTree,
    b: Sequence[int],
) -> bool:
    """Entrywise isomorphism of ancestor-closed tuples as marked patterns."""
    if not is_ancestor_closed(a_tree, a) or not is_ancestor_closed(b_tree, b):
        raise ValueError("tuples must be ancestor-closed")
    if len(a) != len(b):
        return False
    return tuple_pattern(a_tree, a) == tuple_pattern(b_tree, b)


def closed_sets(tree: FiniteTree) -> list[frozenset[int]]:
    """All subsets of nodes closed under the parent function (including empty)."""
    out = []
    for r in range(tree.size + 1):
        for nodes in _combinations_cached(tree.size, r):
            s = frozenset(nodes)
            if all(v == 0 or tree.parent[v] in s for v in s):
                out.append(s)
    return out


@lru_cache(maxsize=None)
def _combinations_cached(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    from itertools import combinations

    return tuple(combinations(range(n), r))


def closed_tuples(
    tree: FiniteTree,
    max_len: int | None = None,
    rooted: bool = False,
    max_nonroot: int | None = None,
) -> Iterator[MarkedTuple]:
    """Ancestor-closed tuples of distinct entries, in a deterministic order."""
    for s in closed_sets(tree):
        if rooted and 0 not in s:
            continue
        k = len(s)
        if max_len is not None and k > max_len:
            continue
        if max_nonroot is not None and k - (1 if 0 in s else 0) > max_nonroot:
            continue
        for perm in permutations(sorted(s)):
            yield perm


def orbit_partition(tree: FiniteTree, k: int) -> list[list[MarkedTuple]]:
    """Partition of all ancestor-closed k-tuples into automorphism orbits.

    Tuples may repeat entries; a tuple counts as ancestor-closed when its
    entry set is.  Two tuples share a block exactly when some automorphism
    maps one to the other entrywise (tested via marked canonical codes).
    """
    if k < 0:
        raise ValueError("tuple length must be nonnegative")
    if k > tree.size:
        raise ValueError("tuple length exceeds tree size")
    blocks: dict[bytes, list[MarkedTuple]] = {}
    for t in product(range(tree.size), repeat=k):
        s = set(t)
        if not all(v == 0 or tree.parent[v] in s for v in s):
            continue
        blocks.setdefault(canonical_code(tree, t), []).append(t)
    return [blocks[code] for code in sorted(blocks)]


def random_tree(n: int, seed: int) -> FiniteTree:
    """Uniform over parent assignments (not over isomorphism classes)."""
    if n < 1:
        raise ValueError("need at least one node")
    rng = random.Random(seed)
    return FiniteTree((-1,) + tuple(rng.randrange(i) for i in range(1, n)))


def random_colored_tree(n: int, seed: int, num_colors: int = 3) -> ColoredFiniteTree:
    if n < 1:
        raise ValueError("need at least one node")
    if num_colors < 1:
        raise ValueError("need at least one color")
    rng = random.Random(seed)
    parents = (-1,) + tuple(rng.randrange(i) for i in range(1, n))
    colors = tuple(rng.randrange(num_colors) for _ in range(n))
    return ColoredFiniteTree(FiniteTree(parents), colors)


def shuffled_copy(tree: FiniteTree, seed: int) -> FiniteTree:
    """Isomorphic copy with children visited in a seeded random order."""
    rng = random.Random(seed)
    kids = tree.children_lists()
    parents: list[int] = []

    def walk(v: int, parent: int) -> None:
        me = len(parents)
        parents.append(parent)
        order = list(kids[v])
        rng.shuffle(order)
        for c in order:
            walk(c, me)

    walk(0, -1)
    return FiniteTree(tuple(parents))


def _partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    if largest is None:
        largest = n
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def all_trees(n: int) -> tuple[FiniteTree, ...]:
    """All rooted trees with n nodes, one per isomorphism class."""
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return (_LEAF,)
    out: list[FiniteTree] = []
    for parts in _partitions(n - 1):
        sizes: dict[int, int] = {}
        for p in parts:
            sizes[p] = sizes.get(p, 0) + 1
        pools = [
            combinations_with_replacement(all_trees(sz), cnt)
            for sz, cnt in sorted(sizes.items())
        ]
        for pick in product(*pools):
            subtrees = [t for group in pick for t in group]
            parents = [-1]
            for sub in subtrees:
                offset = len(parents)
                parents.append(0)
                parents.extend(p + offset for p in sub.parent[1:])
            out.append(FiniteTree(tuple(parents)))
    return tuple(out)


def trees_up_to(n: int) -> list[FiniteTree]:
    """All rooted trees with at most n nodes, one per isomorphism class."""
    out: list[FiniteTree] = []
    for k in range(1, n + 1):
        out.extend(all_trees(k))
    return out

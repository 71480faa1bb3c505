"""Asymmetric back-and-forth relations on marked trees, and Scott ranks.

bf_leq(A, a, B, b, n) decides whether (A, a) <=_n (B, b): at level 0 the
tuples must satisfy the same atomic facts (the root constant is always
visible), and at level n >= 1 every extension of b in B must be answered by
an extension of a in A so that the swapped pair is related at level n - 1.

Two independent solvers are provided.  The "game" method searches the
definition directly; Spoiler's extensions range over distinct nodes not yet
marked (repeats and re-used nodes add nothing, since equality is atomic and
the responder can mirror them), and only level n - 1 is checked at a
successor (lower levels are implied; the property suite tests this
nestedness rather than assuming it silently).  The "decomp" method splits
each query along the marked subtree into independent root-marked piece
queries and recurses through decompositions of extensions; piece verdicts
are shared globally.  Both solvers memoize on canonical codes of the marked
inputs, so verdicts depend only on isomorphism classes.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

from .decomp import decompose, dedup_entries
from .trees import (
    FiniteTree,
    MarkedTuple,
    ancestor_closure,
    canonical_code,
    closed_tuples,
    is_ancestor_closed,
    tuple_pattern,
)


class MethodDisagreement(RuntimeError):
    """The game and decomposition solvers returned different verdicts (a bug)."""


@dataclass(frozen=True)
class TraceStep:
    """One unanswered extension along a failure path.

    side is "right" for a Spoiler extension of the then-right structure and
    "atomic" for a level-0 mismatch (extension empty).
    """

    level: int
    side: str
    extension: tuple[int, ...]


@dataclass(frozen=True)
class BfVerdict:
    holds: bool
    level: int
    trace: tuple[TraceStep, ...] = ()


@dataclass(frozen=True)
class LevelResult:
    """Largest level at which the relation holds; capped means ">= value"."""

    value: int
    capped: bool

    def __str__(self) -> str:
        return f">={self.value}" if self.capped else str(self.value)


@dataclass(frozen=True)
class ScottRankResult:
    rank: int
    capped: bool
    witness: tuple[MarkedTuple, MarkedTuple] | None

    def __str__(self) -> str:
        return f">={self.rank}" if self.capped else str(self.rank)


def atomic_type(tree: FiniteTree, entries: Sequence[int]) -> tuple:
    """Atomic facts of a tuple with the root constant appended as a virtual entry."""
    return tuple_pattern(tree, tuple(entries) + (0,))


def _response_candidates(
    A: FiniteTree,
    a: MarkedTuple,
    B: FiniteTree,
    b: MarkedTuple,
    d: tuple[int, ...],
) -> Iterator[tuple[int, ...]]:
    """Duplicator responses: distinct unmarked A-nodes whose atomic pattern
    relative to (a, earlier picks) matches d's pattern relative to (b, d)."""
    a_used = set(a)
    fresh = [v for v in range(A.size) if v not in a_used]
    base = list(zip(b, a))
    acc: list[int] = []
    taken: set[int] = set()

    def ok(dn: int, c: int) -> bool:
        if (dn == 0) != (c == 0):
            return False
        pd, pc = B.parent[dn], A.parent[c]
        for u, v in base:
            if (pd == u) != (pc == v):
                return False
            if (B.parent[u] == dn) != (A.parent[v] == c):
                return False
        for u, v in zip(d, acc):
            if (pd == u) != (pc == v):
                return False
            if (B.parent[u] == dn) != (A.parent[v] == c):
                return False
        return True

    def extend(t: int) -> Iterator[tuple[int, ...]]:
        if t == len(d):
            yield tuple(acc)
            return
        dn = d[t]
        for c in fresh:
            if c in taken or not ok(dn, c):
                continue
            taken.add(c)
            acc.append(c)
            yield from extend(t + 1)
            acc.pop()
            taken.discard(c)

    return extend(0)


class BfEngine:
    """Solver state: memo tables shared across queries.

    Cache contents never change a verdict, only speed, so an engine may be
    shared freely; per-task engines give isolation when wanted.
    """

    def __init__(self):
        self._codes: dict[tuple, bytes] = {}
        self._game: dict[tuple, bool] = {}
        self._decomp: dict[tuple, bool] = {}
        self._piece: dict[tuple, bool] = {}

    def clear(self) -> None:
        self._codes.clear()
        self._game.clear()
        self._decomp.clear()
        self._piece.clear()

    def _code(self, tree: FiniteTree, marks: MarkedTuple) -> bytes:
        key = (tree.parent, marks)
        code = self._codes.get(key)
        if code is None:
            code = canonical_code(tree, marks)
            self._codes[key] = code
        return code

    # ------------------------------------------------------------------ game

    def game_leq(
        self, A: FiniteTree, a: MarkedTuple, B: FiniteTree, b: MarkedTuple, n: int
    ) -> bool:
        if len(a) != len(b):
            return False
        if atomic_type(A, a) != atomic_type(B, b):
            return False
        if n == 0:
            return True
        fresh_b = [v for v in range(B.size) if v not in set(b)]
        if A.size - len(set(a)) < len(fresh_b):
            return False
        key = (self._code(A, a), self._code(B, b), n)
        hit = self._game.get(key)
        if hit is not None:
            return hit
        result = True
        for k in range(len(fresh_b) + 1):
            for d in combinations(fresh_b, k):
                if not any(
                    self.game_leq(B, b + d, A, a + c, n - 1)
                    for c in _response_candidates(A, a, B, b, d)
                ):
                    result = False
                    break
            if not result:
                break
        self._game[key] = result
        return result

    def failing_extension(
        self, A: FiniteTree, a: MarkedTuple, B: FiniteTree, b: MarkedTuple, n: int
    ) -> tuple[int, ...] | None:
        """First (length-lex least) unanswered Spoiler extension, or None."""
        fresh_b = [v for v in range(B.size) if v not in set(b)]
        for k in range(len(fresh_b) + 1):
            for d in combinations(fresh_b, k):
                if not any(
                    self.game_leq(B, b + d, A, a + c, n - 1)
                    for c in _response_candidates(A, a, B, b, d)
                ):
                    return d
        return None

    def failure_trace(
        self, A: FiniteTree, a: MarkedTuple, B: FiniteTree, b: MarkedTuple, n: int
    ) -> tuple[TraceStep, ...]:
        """One unanswered extension per level along a failing query."""
        if len(a) != len(b) or atomic_type(A, a) != atomic_type(B, b):
            return (TraceStep(0, "atomic", ()),)
        if n == 0 or self.game_leq(A, a, B, b, n):
            return ()
        d = self.failing_extension(A, a, B, b, n)
        if d is None:  # pragma: no cover - inconsistent with a false verdict
            return ()
        step = TraceStep(n, "right", d)
        for c in _response_candidates(A, a, B, b, d):
            return (step,) + self.failure_trace(B, b + d, A, a + c, n - 1)
        return (step,)

    # ---------------------------------------------------------------- decomp

    def decomp_leq(
        self, A: FiniteTree, a: MarkedTuple, B: FiniteTree, b: MarkedTuple, n: int
    ) -> bool:
        """Piece-wise solver; tuples must be rooted and ancestor-closed."""
        if len(a) != len(b):
            return False
        if atomic_type(A, a) != atomic_type(B, b):
            return False
        if n == 0:
            return True
        key = (self._code(A, a), self._code(B, b), n)
        hit = self._decomp.get(key)
        if hit is not None:
            return hit
        views_a = decompose(A, a)
        views_b = decompose(B, b)
        result = all(
            self.piece_leq(va.piece, vb.piece, n)
            for va, vb in zip(views_a, views_b)
        )
        self._decomp[key] = result
        return result

    def piece_leq(self, PA: FiniteTree, PB: FiniteTree, n: int) -> bool:
        """(PA, root) <=_n (PB, root) for standalone pieces."""
        if n == 0:
            return True
        if PA.size < PB.size:
            return False
        key = (self._code(PA, ()), self._code(PB, ()), n)
        hit = self._piece.get(key)
        if hit is not None:
            return hit
        result = True
        root: MarkedTuple = (0,)
        fresh_b = list(range(1, PB.size))
        for k in range(len(fresh_b) + 1):
            for d in combinations(fresh_b, k):
                if not any(
                    self._lower(PB, root + d, PA, root + c, n - 1)
                    for c in _response_candidates(PA, root, PB, root, d)
                ):
                    result = False
                    break
            if not result:
                break
        self._piece[key] = result
        return result

    def _lower(
        self, M: FiniteTree, m: MarkedTuple, N: FiniteTree, nn: MarkedTuple, beta: int
    ) -> bool:
        if beta == 0:
            return atomic_type(M, m) == atomic_type(N, nn)
        return self.decomp_leq(
            M, ancestor_closure(M, m), N, ancestor_closure(N, nn), beta
        )


_DEFAULT_ENGINE = BfEngine()


def default_engine() -> BfEngine:
    return _DEFAULT_ENGINE


def _validated(tree: FiniteTree, entries: Sequence[int]) -> MarkedTuple:
    t = tuple(entries)
    for e in t:
        if not 0 <= e < tree.size:
            raise ValueError(f"entry {e} is not a node id")
    return t


def normalize_marks(
    tree: FiniteTree, entries: Sequence[int], level: int
) -> MarkedTuple:
    """Root appended, then ancestor-closed at levels >= 1.

    Appending the root is harmless at every level (it is a constant of the
    language).  Closing is applied only at levels >= 1, where the ancestor
    lemma makes it verdict-preserving; at level 0 closure can change tuple
    lengths and with them the atomic comparison.
    """
    t = _validated(tree, entries) + (0,)
    if level >= 1:
        t = ancestor_closure(tree, t)
    return t


def bf_leq(
    A: FiniteTree,
    a: Sequence[int],
    B: FiniteTree,
    b: Sequence[int],
    n: int,
    method: str = "both",
    engine: BfEngine | None = None,
    normalize: bool = True,
    trace: bool = True,
) -> BfVerdict:
    """Decide (A, a) <=_n (B, b).

    method is "game", "decomp", or "both" (cross-checking; a disagreement
    raises MethodDisagreement).  normalize=False skips root-appending and
    ancestor closure, which the property suite uses to exercise the closure
    lemma; the decomp method then requires already-normalized tuples.
    """
    if n < 0:
        raise ValueError("level must be nonnegative")
    if method not in ("game", "decomp", "both"):
        raise ValueError(f"unknown method {method!r}")
    eng = engine or _DEFAULT_ENGINE
    if normalize:
        na = normalize_marks(A, a, n)
        nb = normalize_marks(B, b, n)
    else:
        na = _validated(A, a)
        nb = _validated(B, b)
    holds: bool | None = None
    if method in ("game", "both"):
        holds = eng.game_leq(A, na, B, nb, n)
    if method in ("decomp", "both"):
        if n >= 1 and not (
            is_ancestor_closed(A, na) and 0 in na and is_ancestor_closed(B, nb) and 0 in nb
        ):
            raise ValueError("decomp method needs rooted ancestor-closed tuples")
        d = eng.decomp_leq(A, na, B, nb, n) if n >= 1 else (
            len(na) == len(nb) and atomic_type(A, na) == atomic_type(B, nb)
        )
        if holds is None:
            holds = d
        elif holds != d:
            raise MethodDisagreement(
                f"game={holds} decomp={d} for levels n={n}: "
                f"left={A.parent}{na} right={B.parent}{nb}"
            )
    steps: tuple[TraceStep, ...] = ()
    if trace and not holds:
        steps = eng.failure_trace(A, na, B, nb, n)
    return BfVerdict(bool(holds), n, steps)


def bf_level(
    A: FiniteTree,
    a: Sequence[int],
    B: FiniteTree,
    b: Sequence[int],
    cap: int,
    method: str = "game",
    engine: BfEngine | None = None,
) -> LevelResult:
    """Largest n <= cap with (A, a) <=_n (B, b); value -1 if even level 0 fails."""
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    for n in range(cap + 1):
        v = bf_leq(A, a, B, b, n, method=method, engine=engine, trace=False)
        if not v.holds:
            return LevelResult(n - 1, False)
    return LevelResult(cap, True)


def _orbit_reps(tree: FiniteTree) -> list[tuple[MarkedTuple, bytes]]:
    """One representative per marked-code class of closed duplicate-free tuples."""
    reps: dict[bytes, MarkedTuple] = {}
    for t in closed_tuples(tree):
        code = canonical_code(tree, t)
        reps.setdefault(code, t)
    return sorted(
        ((t, code) for code, t in reps.items()),
        key=lambda tc: (len(tc[0]), tc[1]),
    )


def scott_rank(
    tree: FiniteTree,
    cap: int | None = None,
    method: str = "decomp",
    engine: BfEngine | None = None,
) -> ScottRankResult:
    """Scott rank of a finite tree via the orbit criterion.

    Rank 0 exactly for the single-node tree.  Otherwise the least n >= 1 such
    that any two ancestor-closed tuples related by <=_n lie in one
    automorphism orbit; "at least cap" when no such n <= cap exists.  The
    default cap is size + 1, which suffices on finite trees.
    """
    if cap is None:
        cap = tree.size + 1
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if tree.size == 1:
        return ScottRankResult(0, False, None)
    reps = _orbit_reps(tree)
    eng = engine or _DEFAULT_ENGINE

    def violation(n: int) -> tuple[MarkedTuple, MarkedTuple] | None:
        for t_a, code_a in reps:
            for t_b, code_b in reps:
                if len(t_a) != len(t_b) or code_a == code_b:
                    continue
                v = bf_leq(
                    tree, t_a, tree, t_b, n, method=method, engine=eng, trace=False
                )
                if v.holds:
                    return (t_a, t_b)
        return None

    def level_zero_witness() -> tuple[MarkedTuple, MarkedTuple] | None:
        for t_a, code_a in reps:
            for t_b, code_b in reps:
                if len(t_a) != len(t_b) or code_a == code_b:
                    continue
                if atomic_type(tree, t_a) == atomic_type(tree, t_b):
                    return (t_a, t_b)
        return None

    prev: tuple[MarkedTuple, MarkedTuple] | None = None
    for n in range(1, cap + 1):
        bad = violation(n)
        if bad is None:
            witness = prev if n > 1 else level_zero_witness()
            return ScottRankResult(n, False, witness)
        prev = bad
    return ScottRankResult(cap, True, prev)

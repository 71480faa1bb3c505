"""Characteristic formulas, Karp-style witnesses, and transfer sentences.

char_formula(A, a, n, K) builds the A-level-n formula that, evaluated at a
tuple b in a tree B with at most K nodes, holds exactly when (A, a) <=_n
(B, b).  The construction mirrors the relation: at a successor the formula
universally quantifies a Spoiler extension (guarded to distinct fresh
nodes), answers with a finite disjunction over extensions of a, and flips
direction one level down; at level 0 it is the atomic-type description.
Repeated subformulas are shared through a cache keyed by canonical code,
level, and direction.  Free variables are positional: v0, v1, ...

theta_sentences splits a true existential fact about a marked tree into one
sentence per descendant piece whose joint satisfaction transfers the fact to
any other tree carrying an isomorphic marked pattern.
"""
from __future__ import annotations

from itertools import permutations, product
from typing import Iterator, Sequence

from .bf import BfEngine, bf_leq, default_engine, normalize_marks
from .decomp import decompose, descendant_tree
from .formulas import (
    And,
    CAnd,
    COr,
    Equal,
    Eta,
    Exists,
    Forall,
    Formula,
    Neg,
    Or,
    Root,
    _levels,
    classify,
    eta_instances,
    eval_formula,
    free_vars,
)
from .formulas import Parent as FParent
from .restrict import relativize
from .trees import (
    FiniteTree,
    MarkedTuple,
    ancestor_closure,
    canonical_code,
    is_ancestor_closed,
)


class LemmaPreconditionError(ValueError):
    pass


class WitnessVerificationError(RuntimeError):
    """A constructed witness failed its evaluation check (a bug)."""


def char_vars(length: int) -> tuple[str, ...]:
    return tuple(f"v{i}" for i in range(length))


def char_env(marks: Sequence[int]) -> dict[str, int]:
    return {f"v{i}": node for i, node in enumerate(marks)}


def atomic_description(
    tree: FiniteTree, marks: Sequence[int], names: Sequence[str] | None = None
) -> Formula:
    """Complete quantifier-free description of a tuple's atomic facts."""
    names = tuple(names) if names is not None else char_vars(len(marks))
    if len(names) != len(marks):
        raise ValueError("need one variable per mark")
    items: list[Formula] = []
    for i, node in enumerate(marks):
        atom = Root(names[i])
        items.append(atom if node == 0 else Neg(atom))
    for i, a in enumerate(marks):
        for j, b in enumerate(marks):
            if i < j:
                eq = Equal(names[i], names[j])
                items.append(eq if a == b else Neg(eq))
            if i != j:
                par = FParent(names[i], names[j])
                items.append(par if tree.parent[b] == a else Neg(par))
    return And(tuple(items))


class _CharBuilder:
    def __init__(self, tree: FiniteTree, truncation: int):
        self.tree = tree
        self.K = truncation
        self._psi: dict[tuple, Formula] = {}
        self._theta: dict[tuple, Formula] = {}
        self._desc: dict[bytes, Formula] = {}

    def _code(self, marks: MarkedTuple) -> bytes:
        return canonical_code(self.tree, marks)

    def desc(self, marks: MarkedTuple) -> Formula:
        code = self._code(marks)
        got = self._desc.get(code)
        if got is None:
            got = atomic_description(self.tree, marks, char_vars(len(marks)))
            self._desc[code] = got
        return got

    def _fresh(self, marks: MarkedTuple) -> list[int]:
        used = set(marks)
        return [v for v in range(self.tree.size) if v not in used]

    def psi_geq(self, marks: MarkedTuple, n: int) -> Formula:
        """Holds at b in B iff (A, marks) <=_n (B, b); free vars positional."""
        if n == 0:
            return self.desc(marks)
        key = (self._code(marks), n)
        got = self._psi.get(key)
        if got is not None:
            return got
        L = len(marks)
        conjuncts: list[Formula] = [self.theta_leq(marks, n - 1)]
        fresh = self._fresh(marks)
        for k in range(1, self.K + 1):
            answers: dict[int, Formula] = {}
            if k <= len(fresh):
                for c in permutations(fresh, k):
                    sub = self.theta_leq(marks + c, n - 1)
                    answers.setdefault(id(sub), sub)
            inner: Formula = Or(tuple(answers.values()))
            for t in range(k - 1, -1, -1):
                var = f"v{L + t}"
                escapes = tuple(Equal(var, f"v{s}") for s in range(L + t))
                inner = Forall((var,), Or(escapes + (inner,)))
            conjuncts.append(inner)
        out = CAnd(tuple(conjuncts))
        self._psi[key] = out
        return out

    def theta_leq(self, marks: MarkedTuple, beta: int) -> Formula:
        """Holds at b in B iff (B, b) <=_beta (A, marks); free vars positional."""
        if beta == 0:
            return self.desc(marks)
        key = (self._code(marks), beta)
        got = self._theta.get(key)
        if got is not None:
            return got
        L = len(marks)
        fresh = self._fresh(marks)
        conjuncts: list[Formula] = []
        for gamma in range(beta):
            seen: set[bytes] = set()
            for k in range(len(fresh) + 1):
                for d in permutations(fresh, k):
                    code = self._code(marks + d)
                    if code in seen:
                        continue
                    seen.add(code)
                    inner: Formula = self.psi_geq(marks + d, gamma)
                    for t in range(k - 1, -1, -1):
                        var = f"v{L + t}"
                        guards = tuple(
                            Neg(Equal(var, f"v{s}")) for s in range(L + t)
                        )
                        inner = Exists((var,), And(guards + (inner,)))
                    conjuncts.append(inner)
        out = And(tuple(conjuncts))
        self._theta[key] = out
        return out


_BUILDERS: dict[tuple, _CharBuilder] = {}


def _builder(tree: FiniteTree, truncation: int) -> _CharBuilder:
    key = (tree.parent, truncation)
    got = _BUILDERS.get(key)
    if got is None:
        got = _CharBuilder(tree, truncation)
        _BUILDERS[key] = got
    return got


def char_formula(
    tree: FiniteTree, marks: Sequence[int], n: int, truncation: int
) -> Formula:
    """Characteristic formula of (tree, marks) at level n.

    For any tree B with at most `truncation` nodes and tuple b of matching
    length, evaluating at b (variables v0, v1, ...) agrees with the game
    verdict of (tree, marks) <=_n (B, b).  The marks must be rooted and
    ancestor-closed.
    """
    if n < 1:
        raise ValueError("level must be at least 1")
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    t = tuple(marks)
    if not t or not is_ancestor_closed(tree, t) or 0 not in t:
        raise ValueError("marks must be rooted and ancestor-closed")
    return _builder(tree, truncation).psi_geq(t, n)


def karp_witness(
    A: FiniteTree,
    a: Sequence[int],
    B: FiniteTree,
    b: Sequence[int],
    n: int,
    engine: BfEngine | None = None,
) -> Formula | None:
    """A-hierarchy level-n formula separating the marked pairs, if any.

    Returns None when (A, a) <=_n (B, b): no level-n formula of the
    universal hierarchy can then distinguish them.  Otherwise returns the
    characteristic formula of (A, a), verified true at a and false at b.
    """
    if n < 1:
        raise ValueError("level must be at least 1")
    na = normalize_marks(A, a, n)
    nb = normalize_marks(B, b, n)
    if len(na) != len(nb):
        raise ValueError("tuples normalize to different lengths; "
                         "pass pattern-compatible tuples")
    eng = engine or default_engine()
    if bf_leq(A, na, B, nb, n, method="game", engine=eng, trace=False).holds:
        return None
    psi = char_formula(A, na, n, truncation=B.size)
    if not eval_formula(A, psi, char_env(na)):
        raise WitnessVerificationError("witness is false at its own tuple")
    if eval_formula(B, psi, char_env(nb)):
        raise WitnessVerificationError("witness fails to separate the pair")
    return psi


def _disjuncts(
    f: Formula, model_size: int
) -> Iterator[tuple[tuple[str, ...], Formula]]:
    """Existential disjuncts (bound variables, core) of a formula's top layers."""
    if isinstance(f, (Or, COr)):
        for item in f.items:
            yield from _disjuncts(item, model_size)
    elif isinstance(f, Exists):
        for vars_inner, core in _disjuncts(f.body, model_size):
            yield (f.vars + vars_inner, core)
    elif isinstance(f, Eta):
        bound = max(f.bound, model_size)
        for inst in eta_instances(f.target, f.index, f.shape, bound):
            yield from _disjuncts(inst, model_size)
    else:
        yield ((), f)


def theta_sentences(
    tree: FiniteTree,
    marks: Sequence[int],
    f: Formula,
    shape_vars: Sequence[str],
    truncation: int = 8,
) -> list[Formula]:
    """Per-piece transfer sentences for a true existential fact.

    Requires a rooted ancestor-closed tuple and eval(tree, f, marks) true,
    with shape_vars naming the tuple positions.  Returns one sentence per
    distinct entry such that (1) the descendant piece of each entry satisfies
    its sentence, and (2) any tree S with a marked tuple of the same pattern
    whose pieces satisfy the sentences satisfies f.  Sound for trees whose
    double pieces stay within `truncation` nodes.
    """
    t = tuple(marks)
    shape = tuple(shape_vars)
    if len(shape) != len(t):
        raise ValueError("need one shape variable per mark")
    if not t or not is_ancestor_closed(tree, t) or 0 not in t:
        raise ValueError("marks must be rooted and ancestor-closed")
    env = {shape[i]: t[i] for i in range(len(t))}
    if not eval_formula(tree, f, env):
        raise LemmaPreconditionError("lemma precondition unmet: formula is false at the tuple")
    alpha = classify(f).e

    views = decompose(tree, t)
    owner_view: dict[int, int] = {}
    for i, view in enumerate(views):
        for node in view.origin:
            owner_view[node] = i

    chosen: tuple[dict[str, int], Formula] | None = None
    for vars_block, core in _disjuncts(f, tree.size):
        qf, _, _, _, _, _, abar = _levels(core, {})
        beta = 0 if qf else abar
        if beta >= alpha:
            raise LemmaPreconditionError(
                "lemma precondition unmet: expected an existential presentation "
                "with lower-level cores"
            )
        core_free = free_vars(core)
        for pick in product(range(tree.size), repeat=len(vars_block)):
            trial = dict(env)
            trial.update(zip(vars_block, pick))
            if eval_formula(tree, core, {v: trial[v] for v in core_free}):
                chosen = (trial, core)
                break
        if chosen:
            break
    if chosen is None:  # pragma: no cover - contradicts the eval precondition
        raise LemmaPreconditionError("lemma precondition unmet: no witnessed disjunct")
    trial, core = chosen
    qf, _, _, _, _, _, abar = _levels(core, {})
    beta = 0 if qf else abar
    witness_nodes = sorted({trial[v] for v in free_vars(core)})

    out: list[Formula] = []
    for i, view in enumerate(views):
        local = {node: j for j, node in enumerate(view.origin)}
        in_piece = sorted(
            local[v] for v in witness_nodes if owner_view.get(v) == i and local[v] != 0
        )
        chunk = ancestor_closure(view.piece, (0,) + tuple(in_piece))
        m = len(chunk)
        u_vars = tuple(f"u{j}" for j in range(m))
        parts: list[Formula] = [atomic_description(view.piece, chunk, u_vars)]
        for j in range(m):
            if beta == 0:
                chi: Formula = And(())
            else:
                dp = descendant_tree(view.piece, chunk, j).piece
                psi = char_formula(dp, (0,), beta, truncation)
                chi = Exists(("v0",), And((Root("v0"), psi)))
            parts.append(relativize(chi, j, u_vars, bound=truncation))
        out.append(Exists(u_vars, And(tuple(parts))))
    return out

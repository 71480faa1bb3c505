"""NNF infinitary formulas over trees, with truncated countable connectives.

Atoms are Equal(x, y), Parent(x, y) (x is the parent of y), Root(x) and, on
colored trees, Color(k, x); negation appears only on atoms.  And/Or carry
finite explicit lists and count as finitary connectives.  CAnd/COr denote
countable conjunctions/disjunctions truncated to the listed instances.  Eta
and NotEta are schema nodes for the path-membership family and its NNF dual;
they expand on demand, and evaluation always expands at least to the model's
node count, beyond which truncation cannot change the truth value.

classify computes minimal levels in six hierarchies.  Sigma/Pi follow the
standard closure rules with finitary quantifier-free formulas at the bottom
(reported levels are floored at 1).  The E/A hierarchies charge only genuine
quantifier alternations: A_1 is Pi_1, E_1 is Sigma_1, A_{n+1} is the closure
of Ebar_n under universals and countable conjunction, E_{n+1} dually, and
Ebar/Abar close E/A under both countable connectives.  All six classes are
closed under finite conjunction and disjunction (by the usual distribution),
which the level rules bake in.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .trees import ColoredFiniteTree, FiniteTree


class FormulaSyntaxError(ValueError):
    pass


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Equal:
    left: str
    right: str


@dataclass(frozen=True)
class Parent:
    parent: str
    child: str


@dataclass(frozen=True)
class Root:
    var: str


@dataclass(frozen=True)
class Color:
    color: int
    var: str


ATOM_TYPES = (Equal, Parent, Root, Color)


@dataclass(frozen=True)
class Neg:
    atom: Equal | Parent | Root | Color

    def __post_init__(self):
        if not isinstance(self.atom, ATOM_TYPES):
            raise ValueError("negation is permitted on atoms only (NNF)")


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class CAnd:
    """Countable conjunction, truncated to the listed instances."""

    items: tuple


@dataclass(frozen=True)
class COr:
    """Countable disjunction, truncated to the listed instances."""

    items: tuple


@dataclass(frozen=True)
class Exists:
    vars: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    vars: tuple[str, ...]
    body: "Formula"


@dataclass(frozen=True)
class Eta:
    """Membership in the descendant piece of anchor shape[index].

    Denotes the countable disjunction over path lengths 0..oo of "target is
    reached from the anchor by a parent-to-child path whose first step avoids
    the other shape variables", truncated at the declared bound.  Free
    variables: target and the shape variables.
    """

    target: str
    index: int
    shape: tuple[str, ...]
    bound: int

    def __post_init__(self):
        if not 0 <= self.index < len(self.shape):
            raise ValueError("anchor index out of range")
        if self.bound < 1:
            raise ValueError("bound must be at least 1")


@dataclass(frozen=True)
class NotEta:
    """NNF dual of Eta: the countable conjunction of negated path instances."""

    target: str
    index: int
    shape: tuple[str, ...]
    bound: int

    def __post_init__(self):
        if not 0 <= self.index < len(self.shape):
            raise ValueError("anchor index out of range")
        if self.bound < 1:
            raise ValueError("bound must be at least 1")


Formula = (
    Equal | Parent | Root | Color | Neg | And | Or | CAnd | COr
    | Exists | Forall | Eta | NotEta
)


@dataclass(frozen=True)
class ComplexityTag:
    """Minimal levels in the six hierarchies (Sigma/Pi floored at 1)."""

    sigma: int
    pi: int
    e: int
    a: int
    ebar: int
    abar: int

    def __str__(self) -> str:
        return (
            f"sigma={self.sigma} pi={self.pi} e={self.e} a={self.a} "
            f"ebar={self.ebar} abar={self.abar}"
        )


# Internal level vector: (qf, sigma, pi, e, a, ebar, abar) where sigma/pi are
# 0 for finitary quantifier-free formulas.
_QF = (True, 0, 0, 1, 1, 1, 1)


def _levels(f: Formula, memo: dict[int, tuple]) -> tuple:
    got = memo.get(id(f))
    if got is not None:
        return got
    if isinstance(f, ATOM_TYPES) or isinstance(f, Neg):
        out = _QF
    elif isinstance(f, (And, Or)):
        subs = [_levels(g, memo) for g in f.items]
        if all(s[0] for s in subs):
            out = _QF
        else:
            out = (
                False,
                max(1, *(s[1] for s in subs)),
                max(1, *(s[2] for s in subs)),
                max(1, *(s[3] for s in subs)),
                max(1, *(s[4] for s in subs)),
                max(1, *(s[5] for s in subs)),
                max(1, *(s[6] for s in subs)),
            )
    elif isinstance(f, (CAnd, COr)):
        subs = [_levels(g, memo) for g in f.items] or [_QF]
        sigma = max(1, *(s[1] for s in subs), 1)
        pi = max(1, *(s[2] for s in subs), 1)
        e = max(1, *(s[3] for s in subs), 1)
        a = max(1, *(s[4] for s in subs), 1)
        ebar = max(1, *(s[5] for s in subs), 1)
        abar = max(1, *(s[6] for s in subs), 1)
        if isinstance(f, CAnd):
            out = (False, pi + 1, pi, abar + 1, a, ebar, abar)
        else:
            out = (False, sigma, sigma + 1, e, ebar + 1, ebar, abar)
    elif isinstance(f, Exists):
        _, sigma, _, e, _, _, abar = _levels(f.body, memo)
        e = min(e, abar + 1)
        out = (False, max(1, sigma), max(1, sigma) + 1, e, e + 1, e, e + 1)
    elif isinstance(f, Forall):
        _, _, pi, _, a, ebar, _ = _levels(f.body, memo)
        a = min(a, ebar + 1)
        out = (False, max(1, pi) + 1, max(1, pi), a + 1, a, a + 1, a)
    elif isinstance(f, Eta):
        out = (False, 1, 2, 1, 2, 1, 2)
    elif isinstance(f, NotEta):
        out = (False, 2, 1, 2, 1, 2, 1)
    else:
        raise TypeError(f"not a formula node: {f!r}")
    memo[id(f)] = out
    return out


def classify(f: Formula) -> ComplexityTag:
    """Minimal hierarchy levels derivable under the closure rules."""
    _, sigma, pi, e, a, ebar, abar = _levels(f, {})
    return ComplexityTag(max(1, sigma), max(1, pi), e, a, ebar, abar)


def is_quantifier_free(f: Formula) -> bool:
    return _levels(f, {})[0]


def free_vars(f: Formula) -> frozenset[str]:
    memo: dict[int, frozenset[str]] = {}

    def go(g: Formula) -> frozenset[str]:
        got = memo.get(id(g))
        if got is not None:
            return got
        if isinstance(g, Equal):
            out = frozenset((g.left, g.right))
        elif isinstance(g, Parent):
            out = frozenset((g.parent, g.child))
        elif isinstance(g, Root):
            out = frozenset((g.var,))
        elif isinstance(g, Color):
            out = frozenset((g.var,))
        elif isinstance(g, Neg):
            out = go(g.atom)
        elif isinstance(g, (And, Or, CAnd, COr)):
            out = frozenset().union(*(go(i) for i in g.items)) if g.items else frozenset()
        elif isinstance(g, (Exists, Forall)):
            out = go(g.body) - frozenset(g.vars)
        elif isinstance(g, (Eta, NotEta)):
            out = frozenset((g.target,)) | frozenset(g.shape)
        else:
            raise TypeError(f"not a formula node: {g!r}")
        memo[id(g)] = out
        return out

    return go(f)


def substitute(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variable occurrences; bound variables shadow the mapping."""
    if not mapping:
        return f

    def sub(name: str, env: Mapping[str, str]) -> str:
        return env.get(name, name)

    def go(g: Formula, env: Mapping[str, str]) -> Formula:
        if isinstance(g, Equal):
            return Equal(sub(g.left, env), sub(g.right, env))
        if isinstance(g, Parent):
            return Parent(sub(g.parent, env), sub(g.child, env))
        if isinstance(g, Root):
            return Root(sub(g.var, env))
        if isinstance(g, Color):
            return Color(g.color, sub(g.var, env))
        if isinstance(g, Neg):
            return Neg(go(g.atom, env))
        if isinstance(g, (And, Or, CAnd, COr)):
            return type(g)(tuple(go(i, env) for i in g.items))
        if isinstance(g, (Exists, Forall)):
            inner = {k: v for k, v in env.items() if k not in g.vars}
            return type(g)(g.vars, go(g.body, inner))
        if isinstance(g, (Eta, NotEta)):
            return type(g)(
                sub(g.target, env), g.index,
                tuple(sub(s, env) for s in g.shape), g.bound,
            )
        raise TypeError(f"not a formula node: {g!r}")

    return go(f, dict(mapping))


def all_names(f: Formula) -> frozenset[str]:
    """Every variable name occurring in f, free or bound."""
    out: set[str] = set()

    def go(g: Formula) -> None:
        if isinstance(g, Equal):
            out.update((g.left, g.right))
        elif isinstance(g, Parent):
            out.update((g.parent, g.child))
        elif isinstance(g, (Root, Color)):
            out.add(g.var)
        elif isinstance(g, Neg):
            go(g.atom)
        elif isinstance(g, (And, Or, CAnd, COr)):
            for i in g.items:
                go(i)
        elif isinstance(g, (Exists, Forall)):
            out.update(g.vars)
            go(g.body)
        elif isinstance(g, (Eta, NotEta)):
            out.add(g.target)
            out.update(g.shape)
        else:
            raise TypeError(f"not a formula node: {g!r}")

    go(f)
    return frozenset(out)


def freshen_bound(f: Formula, reserved: frozenset[str]) -> Formula:
    """Rename bound variables that collide with the reserved names."""
    taken = set(all_names(f)) | set(reserved)

    def fresh(base: str) -> str:
        k = 2
        while f"{base}_{k}" in taken:
            k += 1
        name = f"{base}_{k}"
        taken.add(name)
        return name

    def go(g: Formula, env: dict[str, str]) -> Formula:
        if isinstance(g, (Exists, Forall)):
            inner = dict(env)
            new_vars = []
            for v in g.vars:
                if v in reserved:
                    nv = fresh(v)
                    inner[v] = nv
                    new_vars.append(nv)
                else:
                    inner.pop(v, None)
                    new_vars.append(v)
            return type(g)(tuple(new_vars), go(g.body, inner))
        if isinstance(g, (And, Or, CAnd, COr)):
            return type(g)(tuple(go(i, env) for i in g.items))
        if isinstance(g, Neg):
            return Neg(go(g.atom, env))
        return substitute(g, env) if env else g

    return go(f, {})


# --------------------------------------------------------------- evaluation

_SCHEMA_CACHE: dict[tuple, tuple[Formula, ...]] = {}


def _path_vars(n: int, avoid: frozenset[str]) -> list[str]:
    names = []
    suffix = ""
    while any(f"_p{t}{suffix}" in avoid for t in range(1, n + 1)):
        suffix += "_"
    for t in range(1, n + 1):
        names.append(f"_p{t}{suffix}")
    return names


def eta_instances(
    target: str, index: int, shape: tuple[str, ...], bound: int
) -> tuple[Formula, ...]:
    """Path disjuncts of Eta for lengths 0..bound, in nested one-variable form."""
    key = ("eta", target, index, shape, bound)
    got = _SCHEMA_CACHE.get(key)
    if got is not None:
        return got
    avoid = frozenset((target,)) | frozenset(shape)
    anchor = shape[index]
    others = [shape[j] for j in range(len(shape)) if j != index]
    out: list[Formula] = [Equal(anchor, target)]
    for length in range(1, bound + 1):
        pv = _path_vars(length, avoid)

        def chain(t: int) -> Formula:
            prev = anchor if t == 1 else pv[t - 2]
            parts: list[Formula] = [Parent(prev, pv[t - 1])]
            if t == 1:
                parts.extend(Neg(Equal(pv[0], o)) for o in others)
            if t == length:
                parts.append(Equal(pv[t - 1], target))
                return Exists((pv[t - 1],), And(tuple(parts)))
            parts.append(chain(t + 1))
            return Exists((pv[t - 1],), And(tuple(parts)))

        out.append(chain(1))
    result = tuple(out)
    _SCHEMA_CACHE[key] = result
    return result


def noteta_instances(
    target: str, index: int, shape: tuple[str, ...], bound: int
) -> tuple[Formula, ...]:
    """Negated path instances of the Eta family (all must hold)."""
    key = ("neta", target, index, shape, bound)
    got = _SCHEMA_CACHE.get(key)
    if got is not None:
        return got
    avoid = frozenset((target,)) | frozenset(shape)
    anchor = shape[index]
    others = [shape[j] for j in range(len(shape)) if j != index]
    out: list[Formula] = [Neg(Equal(anchor, target))]
    for length in range(1, bound + 1):
        pv = _path_vars(length, avoid)

        def chain(t: int) -> Formula:
            prev = anchor if t == 1 else pv[t - 2]
            parts: list[Formula] = [Neg(Parent(prev, pv[t - 1]))]
            if t == 1:
                parts.extend(Equal(pv[0], o) for o in others)
            if t == length:
                parts.append(Neg(Equal(pv[t - 1], target)))
                return Forall((pv[t - 1],), Or(tuple(parts)))
            parts.append(chain(t + 1))
            return Forall((pv[t - 1],), Or(tuple(parts)))

        out.append(chain(1))
    result = tuple(out)
    _SCHEMA_CACHE[key] = result
    return result


class _Evaluator:
    def __init__(self, tree: FiniteTree, colors: tuple[int, ...] | None):
        self.tree = tree
        self.colors = colors
        self.size = tree.size
        self._free: dict[int, frozenset[str]] = {}
        self._cache: dict[tuple, bool] = {}

    def free(self, f: Formula) -> frozenset[str]:
        got = self._free.get(id(f))
        if got is None:
            got = free_vars(f)
            self._free[id(f)] = got
        return got

    def run(self, f: Formula, env: dict[str, int]) -> bool:
        if isinstance(f, Equal):
            return self._node(f.left, env) == self._node(f.right, env)
        if isinstance(f, Parent):
            return self.tree.parent[self._node(f.child, env)] == self._node(f.parent, env)
        if isinstance(f, Root):
            return self._node(f.var, env) == 0
        if isinstance(f, Color):
            if self.colors is None:
                raise EvalError("color atom on an uncolored tree")
            return self.colors[self._node(f.var, env)] == f.color
        if isinstance(f, Neg):
            return not self.run(f.atom, env)
        if isinstance(f, (And, CAnd)):
            return all(self.run(g, env) for g in f.items)
        if isinstance(f, (Or, COr)):
            return any(self.run(g, env) for g in f.items)
        if isinstance(f, (Exists, Forall, Eta, NotEta)):
            key = (
                id(f),
                tuple(sorted((v, env[v]) for v in self.free(f) if v in env)),
            )
            got = self._cache.get(key)
            if got is None:
                got = self._run_quantified(f, env)
                self._cache[key] = got
            return got
        raise TypeError(f"not a formula node: {f!r}")

    def _run_quantified(self, f: Formula, env: dict[str, int]) -> bool:
        if isinstance(f, Exists):
            return self._block(f.vars, f.body, env, 0, want=True)
        if isinstance(f, Forall):
            return not self._block(f.vars, f.body, env, 0, want=False)
        bound = max(f.bound, self.size)
        if isinstance(f, Eta):
            insts = eta_instances(f.target, f.index, f.shape, bound)
            return any(self.run(g, env) for g in insts)
        insts = noteta_instances(f.target, f.index, f.shape, bound)
        return all(self.run(g, env) for g in insts)

    def _block(
        self, vars: tuple[str, ...], body: Formula, env: dict[str, int],
        i: int, want: bool,
    ) -> bool:
        """True when some assignment of vars[i:] makes body evaluate to want."""
        if i == len(vars):
            return self.run(body, env) == want
        v = vars[i]
        saved = env.get(v)
        for node in range(self.size):
            env[v] = node
            if self._block(vars, body, env, i + 1, want):
                if saved is None:
                    del env[v]
                else:
                    env[v] = saved
                return True
        if saved is None:
            del env[v]
        else:
            env[v] = saved
        return False

    def _node(self, var: str, env: dict[str, int]) -> int:
        try:
            return env[var]
        except KeyError:
            raise EvalError(f"unbound variable {var!r}") from None


def eval_formula(
    t: FiniteTree | ColoredFiniteTree,
    f: Formula,
    assignment: Mapping[str, int] | None = None,
) -> bool:
    """Standard satisfaction over a finite tree.

    Schema nodes expand to at least the model's node count, their exactness
    bound, so truncation never affects the result.
    """
    if isinstance(t, ColoredFiniteTree):
        tree, colors = t.tree, t.colors
    else:
        tree, colors = t, None
    env = dict(assignment) if assignment else {}
    for v, node in env.items():
        if not 0 <= node < tree.size:
            raise EvalError(f"assignment for {v!r} is not a node id")
    missing = free_vars(f) - env.keys()
    if missing:
        raise EvalError(f"unbound variables: {sorted(missing)}")
    return _Evaluator(tree, colors).run(f, env)


# ------------------------------------------------------------- text syntax

def format_formula(f: Formula) -> str:
    if isinstance(f, Equal):
        return f"(= {f.left} {f.right})"
    if isinstance(f, Parent):
        return f"(parent {f.parent} {f.child})"
    if isinstance(f, Root):
        return f"(root {f.var})"
    if isinstance(f, Color):
        return f"(color {f.color} {f.var})"
    if isinstance(f, Neg):
        return f"(not {format_formula(f.atom)})"
    if isinstance(f, (And, Or, CAnd, COr)):
        head = {And: "and", Or: "or", CAnd: "cand", COr: "cor"}[type(f)]
        inner = "".join(" " + format_formula(i) for i in f.items)
        return f"({head}{inner})"
    if isinstance(f, (Exists, Forall)):
        head = "ex" if isinstance(f, Exists) else "all"
        return f"({head} ({' '.join(f.vars)}) {format_formula(f.body)})"
    if isinstance(f, (Eta, NotEta)):
        head = "eta" if isinstance(f, Eta) else "neta"
        vars_part = " ".join((f.target,) + f.shape)
        return f"({head} {f.index} ({vars_part}) #{f.bound})"
    raise TypeError(f"not a formula node: {f!r}")


def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            yield (c, i)
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield (text[i:j], i)
            i = j


def _read_sexpr(tokens: list[tuple[str, int]], pos: int):
    if pos >= len(tokens):
        raise FormulaSyntaxError("unexpected end of input")
    tok, off = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos][0] != ")":
            item, pos = _read_sexpr(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise FormulaSyntaxError(f"unbalanced '(' at offset {off}")
        return items, pos + 1
    if tok == ")":
        raise FormulaSyntaxError(f"unexpected ')' at offset {off}")
    return tok, pos + 1


def _build(expr) -> Formula:
    if not isinstance(expr, list) or not expr or not isinstance(expr[0], str):
        raise FormulaSyntaxError(f"expected a formula form, got {expr!r}")
    head, *rest = expr

    def atom_args(n: int) -> list[str]:
        if len(rest) != n or not all(isinstance(r, str) for r in rest):
            raise FormulaSyntaxError(f"bad arguments for {head!r}")
        return rest

    if head == "=":
        x, y = atom_args(2)
        return Equal(x, y)
    if head == "parent":
        x, y = atom_args(2)
        return Parent(x, y)
    if head == "root":
        (x,) = atom_args(1)
        return Root(x)
    if head == "color":
        if len(rest) != 2 or not isinstance(rest[0], str) or not isinstance(rest[1], str):
            raise FormulaSyntaxError("bad arguments for color")
        try:
            k = int(rest[0])
        except ValueError:
            raise FormulaSyntaxError(f"bad color literal {rest[0]!r}") from None
        return Color(k, rest[1])
    if head == "not":
        if len(rest) != 1:
            raise FormulaSyntaxError("not takes one argument")
        inner = _build(rest[0])
        if not isinstance(inner, ATOM_TYPES):
            raise FormulaSyntaxError("negation is permitted on atoms only")
        return Neg(inner)
    if head in ("and", "or", "cand", "cor"):
        cls = {"and": And, "or": Or, "cand": CAnd, "cor": COr}[head]
        return cls(tuple(_build(r) for r in rest))
    if head in ("ex", "all"):
        if len(rest) != 2 or not isinstance(rest[0], list):
            raise FormulaSyntaxError(f"{head} takes a variable list and a body")
        vars = tuple(rest[0])
        if not vars or not all(isinstance(v, str) for v in vars):
            raise FormulaSyntaxError("bad variable list")
        cls = Exists if head == "ex" else Forall
        return cls(vars, _build(rest[1]))
    if head in ("eta", "neta"):
        if (
            len(rest) != 3
            or not isinstance(rest[0], str)
            or not isinstance(rest[1], list)
            or not isinstance(rest[2], str)
            or not rest[2].startswith("#")
        ):
            raise FormulaSyntaxError(f"{head} takes an index, a variable list, and #bound")
        try:
            index = int(rest[0])
            bound = int(rest[2][1:])
        except ValueError:
            raise FormulaSyntaxError(f"bad numbers in {head}") from None
        vars = rest[1]
        if len(vars) < 2 or not all(isinstance(v, str) for v in vars):
            raise FormulaSyntaxError(f"{head} needs a target and at least one shape variable")
        cls = Eta if head == "eta" else NotEta
        return cls(vars[0], index, tuple(vars[1:]), bound)
    raise FormulaSyntaxError(f"unknown form {head!r}")


def parse_formula(text: str) -> Formula:
    """Parse the s-expression formula syntax (inverse of format_formula)."""
    tokens = list(_tokenize(text))
    if not tokens:
        raise FormulaSyntaxError("empty input")
    expr, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise FormulaSyntaxError(f"trailing input at offset {tokens[pos][1]}")
    return _build(expr)

"""Property suites behind the `check` command; the acceptance harness.

Each suite runs a deterministic seeded experiment and renders a line-oriented
key=value report ending in status=pass or status=fail.  Reports contain no
timing or cache information, so repeated runs with one seed are
byte-identical.  Suites are named for the facts they exercise: lemma31 (the
piece-wise splitting of the relations), ancestor (closure invariance),
nested (monotonicity in the level), charform, karp, relativize (also houses
the classifier fixed point), theta, phi (the colored encoding), and rank.
"""
from __future__ import annotations

import random
from itertools import product
from typing import Callable, Sequence

from .bf import atomic_type, bf_leq, default_engine, normalize_marks, scott_rank
from .charform import char_env, char_formula, karp_witness, theta_sentences
from .decomp import decompose, dedup_entries, descendant_tree, pattern_positions, reassemble
from .encode import decode, encode_colored
from .formulas import (
    And,
    CAnd,
    COr,
    Equal,
    Exists,
    Forall,
    Formula,
    Neg,
    Or,
    Parent,
    Root,
    classify,
    eval_formula,
)
from .restrict import relativize
from .trees import (
    ColoredFiniteTree,
    FiniteTree,
    ancestor_closure,
    canonical_code,
    closed_tuples,
    parse_tree,
    random_colored_tree,
    random_tree,
    serialize_tree,
    shuffled_copy,
    trees_up_to,
)

# --------------------------------------------------------------- formula corpora

# Hand-classified formulas; expected tags are frozen from the closure rules.
CLASSIFY_CORPUS: list[tuple[str, Formula, tuple[int, int, int, int, int, int]]] = [
    ("atom", Parent("x", "y"), (1, 1, 1, 1, 1, 1)),
    ("neg-atom", Neg(Root("x")), (1, 1, 1, 1, 1, 1)),
    ("qf-mix", And((Equal("x", "y"), Neg(Parent("x", "y")))), (1, 1, 1, 1, 1, 1)),
    ("exists-qf", Exists(("z",), Parent("x", "z")), (1, 2, 1, 2, 1, 2)),
    ("forall-qf", Forall(("z",), Or((Equal("z", "x"), Parent("x", "z")))),
     (2, 1, 2, 1, 2, 1)),
    ("cand-qf", CAnd((Parent("x", "y"), Equal("x", "x"))), (2, 1, 2, 1, 1, 1)),
    ("cor-qf", COr((Parent("x", "y"), Equal("x", "x"))), (1, 2, 1, 2, 1, 1)),
    ("forall-exists", Forall(("z",), Exists(("w",), Parent("z", "w"))),
     (3, 2, 3, 2, 3, 2)),
    ("exists-forall", Exists(("z",), Forall(("w",), Neg(Parent("z", "w")))),
     (2, 3, 2, 3, 2, 3)),
]


def showcase_formula() -> Formula:
    """The forall-over-countable-or/and-of-exists shape: A-level 2, Pi-level 4."""
    body = COr(
        tuple(
            CAnd(
                tuple(
                    Exists(("y",), Parent("x", "y") if (k + j) % 2 == 0 else Equal("x", "y"))
                    for j in range(2)
                )
            )
            for k in range(3)
        )
    )
    return Forall(("x",), body)


CLASSIFY_CORPUS.append(("showcase", showcase_formula(), (5, 4, 3, 2, 3, 2)))

# Sentences about a single tree (used to test quantifier restriction).
SENTENCE_CORPUS: list[Formula] = [
    Exists(("s",), Equal("s", "s")),
    Forall(("s",), Root("s")),
    Exists(("s", "t"), And((Root("s"), Parent("s", "t")))),
    Forall(("s",), Or((Root("s"), Exists(("t",), Parent("t", "s"))))),
    Exists(("s",), And((Neg(Root("s")), Forall(("t",), Neg(Parent("s", "t")))))),
    Forall(("s",), Exists(("t",), Or((Parent("t", "s"), Equal("t", "s"))))),
    COr((
        Exists(("s",), And((Root("s"), Forall(("t",), Neg(Parent("s", "t")))))),
        Exists(("s", "t"), And((Parent("s", "t"), Neg(Root("t"))))),
    )),
    CAnd((
        Forall(("s",), Or((Root("s"), Exists(("t",), Parent("t", "s"))))),
        Forall(("s", "t"), Or((Neg(Parent("s", "t")), Neg(Equal("s", "t"))))),
    )),
    Exists(("s", "t"), And((Parent("s", "t"), Forall(("u",), Neg(Parent("t", "u")))))),
]


# ------------------------------------------------------------- random formulas

def _rand_atom(rng: random.Random, vars: Sequence[str]) -> Formula:
    kind = rng.randrange(3)
    if kind == 0:
        atom: Formula = Equal(rng.choice(vars), rng.choice(vars))
    elif kind == 1:
        atom = Parent(rng.choice(vars), rng.choice(vars))
    else:
        atom = Root(rng.choice(vars))
    return Neg(atom) if rng.random() < 0.5 else atom


def _rand_qf(rng: random.Random, vars: Sequence[str]) -> Formula:
    items = tuple(_rand_atom(rng, vars) for _ in range(rng.randrange(1, 4)))
    return And(items) if rng.random() < 0.5 else Or(items)


def _fresh_var(vars: Sequence[str]) -> str:
    return f"q{len(vars)}"


def random_a_formula(rng: random.Random, level: int, vars: Sequence[str]) -> Formula:
    """Random formula of A-level at most `level` over the given free variables."""

    def a_form(lv: int, vs: tuple[str, ...]) -> Formula:
        if lv == 1:
            pick = rng.randrange(3)
            if pick == 0:
                return _rand_qf(rng, vs)
            if pick == 1:
                v = _fresh_var(vs)
                return Forall((v,), _rand_qf(rng, vs + (v,)))
            return CAnd(tuple(_rand_qf(rng, vs) for _ in range(2)))
        if rng.random() < 0.6:
            v = _fresh_var(vs)
            return Forall((v,), ebar_form(lv - 1, vs + (v,)))
        return CAnd(tuple(ebar_form(lv - 1, vs) for _ in range(2)))

    def ebar_form(lv: int, vs: tuple[str, ...]) -> Formula:
        pick = rng.randrange(3)
        if pick == 0:
            return e_form(lv, vs)
        cls = CAnd if pick == 1 else COr
        return cls(tuple(e_form(lv, vs) for _ in range(2)))

    def e_form(lv: int, vs: tuple[str, ...]) -> Formula:
        if lv == 1:
            if rng.random() < 0.5:
                v = _fresh_var(vs)
                return Exists((v,), _rand_qf(rng, vs + (v,)))
            return _rand_qf(rng, vs)
        v = _fresh_var(vs)
        return Exists((v,), a_form(lv - 1, vs + (v,)))

    out = a_form(level, tuple(vars))
    if classify(out).a > level:  # pragma: no cover - generator invariant
        raise AssertionError("generator produced a formula above its level")
    return out


# ------------------------------------------------------------------ utilities

def _kv(key: str, value) -> str:
    return f"{key}={value}"


def _finish(lines: list[str], failures: int) -> tuple[bool, str]:
    lines.append(_kv("failures", failures))
    lines.append(_kv("status", "pass" if failures == 0 else "fail"))
    return failures == 0, "\n".join(lines) + "\n"


def _rooted_reps(tree: FiniteTree, max_nonroot: int) -> list[tuple[tuple[int, ...], bytes]]:
    reps: dict[bytes, tuple[int, ...]] = {}
    for t in closed_tuples(tree, rooted=True, max_nonroot=max_nonroot):
        code = canonical_code(tree, t)
        reps.setdefault(code, t)
    return sorted(((t, c) for c, t in reps.items()), key=lambda tc: (len(tc[0]), tc[1]))


def _random_marked(
    rng: random.Random, min_size: int = 2, max_size: int = 6, max_marks: int = 2
) -> tuple[FiniteTree, tuple[int, ...]]:
    tree = random_tree(rng.randrange(min_size, max_size + 1), rng.getrandbits(32))
    k = rng.randrange(0, max_marks + 1)
    raw = tuple(rng.randrange(tree.size) for _ in range(k))
    return tree, raw


# -------------------------------------------------------------------- suites

def suite_lemma31(seed: int = 0, max_size: int = 6, max_marks: int = 3,
                  max_level: int = 3) -> tuple[bool, str]:
    """Game and decomposition solvers agree on an exhaustive small corpus."""
    engine = default_engine()
    trees = trees_up_to(max_size)
    reps: list[tuple[FiniteTree, tuple[int, ...]]] = []
    for tree in trees:
        reps.extend((tree, t) for t, _ in _rooted_reps(tree, max_marks))
    by_len: dict[int, list[tuple[FiniteTree, tuple[int, ...]]]] = {}
    for tree, t in reps:
        by_len.setdefault(len(t), []).append((tree, t))
    queries = 0
    mismatches = 0
    for length in sorted(by_len):
        group = by_len[length]
        for A, a in group:
            for B, b in group:
                for n in range(max_level + 1):
                    queries += 1
                    game = engine.game_leq(A, a, B, b, n)
                    if n == 0:
                        dec = len(a) == len(b) and atomic_type(A, a) == atomic_type(B, b)
                    else:
                        dec = engine.decomp_leq(A, a, B, b, n)
                    if game != dec:
                        mismatches += 1
    lines = [
        _kv("suite", "lemma31"),
        _kv("max_size", max_size),
        _kv("max_marks", max_marks),
        _kv("max_level", max_level),
        _kv("trees", len(trees)),
        _kv("tuple_classes", len(reps)),
        _kv("queries", queries),
        _kv("mismatches", mismatches),
    ]
    return _finish(lines, mismatches)


def suite_ancestor(seed: int = 0, count: int = 500) -> tuple[bool, str]:
    """Verdicts are unchanged by ancestor closure at levels 1..3."""
    engine = default_engine()
    rng = random.Random(seed)
    failures = 0
    cases = 0
    while cases < count:
        A, a = _random_marked(rng)
        B, b = _random_marked(rng)
        if not a or not b:
            continue
        n = rng.randrange(1, 4)
        cases += 1
        raw = engine.game_leq(A, a, B, b, n)
        closed = engine.game_leq(A, ancestor_closure(A, a), B, ancestor_closure(B, b), n)
        if raw != closed:
            failures += 1
    lines = [_kv("suite", "ancestor"), _kv("seed", seed), _kv("cases", cases)]
    return _finish(lines, failures)


def suite_nested(seed: int = 0, count: int = 500) -> tuple[bool, str]:
    """Holding at a level implies holding at every smaller level."""
    engine = default_engine()
    rng = random.Random(seed)
    failures = 0
    cases = 0
    while cases < count:
        A, a = _random_marked(rng)
        B, b = _random_marked(rng)
        cases += 1
        verdicts = [
            bf_leq(A, a, B, b, n, method="game", engine=engine, trace=False).holds
            for n in range(4)
        ]
        for n in range(1, 4):
            if verdicts[n] and not verdicts[n - 1]:
                failures += 1
    lines = [_kv("suite", "nested"), _kv("seed", seed), _kv("cases", cases)]
    return _finish(lines, failures)


def suite_charform(seed: int = 0, count: int = 200, max_size: int = 6,
                   max_level: int = 3) -> tuple[bool, str]:
    """Characteristic-formula evaluation equals the game verdict."""
    engine = default_engine()
    rng = random.Random(seed)
    failures = 0
    cases = 0
    attempts = 0
    while cases < count and attempts < 50 * count:
        attempts += 1
        n = rng.randrange(1, max_level + 1)
        A, raw_a = _random_marked(rng, max_size=max_size, max_marks=1)
        B, raw_b = _random_marked(rng, max_size=max_size, max_marks=1)
        a = normalize_marks(A, raw_a, n)
        b = normalize_marks(B, raw_b, n)
        if len(a) != len(b):
            continue
        cases += 1
        psi = char_formula(A, a, n, truncation=B.size)
        got = eval_formula(B, psi, char_env(b))
        want = bf_leq(A, a, B, b, n, method="game", engine=engine, trace=False).holds
        if got != want:
            failures += 1
    lines = [_kv("suite", "charform"), _kv("seed", seed), _kv("cases", cases)]
    return _finish(lines, failures)


def suite_karp(seed: int = 0, pair_count: int = 30, formula_count: int = 200,
               max_size: int = 5, max_level: int = 2) -> tuple[bool, str]:
    """Level-n universal formulas transfer along the relation; witnesses split
    unrelated pairs."""
    engine = default_engine()
    rng = random.Random(seed)
    failures = 0
    related = 0
    unrelated = 0
    sampled = 0
    attempts = 0
    while sampled < pair_count and attempts < 200 * pair_count:
        attempts += 1
        n = rng.randrange(1, max_level + 1)
        A, raw_a = _random_marked(rng, max_size=max_size, max_marks=1)
        if rng.random() < 0.4:
            B = shuffled_copy(A, rng.getrandbits(32))
            raw_b = raw_a
        else:
            B, raw_b = _random_marked(rng, max_size=max_size, max_marks=1)
        a = normalize_marks(A, raw_a, n)
        b = normalize_marks(B, raw_b, n)
        if len(a) != len(b):
            continue
        sampled += 1
        holds = bf_leq(A, a, B, b, n, method="game", engine=engine, trace=False).holds
        if holds:
            related += 1
            env_a = {f"x{i}": a[i] for i in range(len(a))}
            env_b = {f"x{i}": b[i] for i in range(len(b))}
            vars = tuple(sorted(env_a))
            found = 0
            tries = 0
            while found < formula_count and tries < 60 * formula_count:
                tries += 1
                f = random_a_formula(rng, n, vars)
                if not eval_formula(A, f, env_a):
                    continue
                found += 1
                if not eval_formula(B, f, env_b):
                    failures += 1
            if found < formula_count:
                failures += 1
        else:
            unrelated += 1
            witness = karp_witness(A, a, B, b, n, engine=engine)
            if witness is None:
                failures += 1
    lines = [
        _kv("suite", "karp"),
        _kv("seed", seed),
        _kv("pairs", sampled),
        _kv("related", related),
        _kv("unrelated", unrelated),
    ]
    return _finish(lines, failures)


def suite_relativize(seed: int = 0, count: int = 200) -> tuple[bool, str]:
    """Quantifier restriction matches evaluation on the piece; levels are kept.

    Also pins the classifier on the showcase formula (A-level 2, Pi-level 4).
    """
    rng = random.Random(seed)
    failures = 0
    pin = classify(showcase_formula())
    if (pin.a, pin.pi) != (2, 4):
        failures += 1
    for name, f, expected in CLASSIFY_CORPUS:
        tag = classify(f)
        if (tag.sigma, tag.pi, tag.e, tag.a, tag.ebar, tag.abar) != expected:
            failures += 1
    cases = 0
    while cases < count:
        tree, raw = _random_marked(rng, min_size=2, max_size=7)
        marks = ancestor_closure(tree, (0,) + raw)
        i = rng.randrange(len(marks))
        f = SENTENCE_CORPUS[cases % len(SENTENCE_CORPUS)]
        cases += 1
        shape = tuple(f"x{k}" for k in range(len(marks)))
        rel = relativize(f, i, shape, bound=tree.size)
        lhs = eval_formula(tree, rel, {shape[k]: marks[k] for k in range(len(marks))})
        rhs = eval_formula(descendant_tree(tree, marks, i).piece, f)
        if lhs != rhs:
            failures += 1
        t0, t1 = classify(f), classify(rel)
        if (t0.e, t0.a) != (t1.e, t1.a):
            failures += 1
    lines = [
        _kv("suite", "relativize"),
        _kv("seed", seed),
        _kv("classifier_pin", f"a={pin.a} pi={pin.pi}"),
        _kv("corpus", len(CLASSIFY_CORPUS)),
        _kv("cases", cases),
    ]
    return _finish(lines, failures)


def _theta_formula_pool() -> list[tuple[Formula, int]]:
    """Existential facts with one shape variable count each; (formula, arity)."""
    pool: list[tuple[Formula, int]] = []
    pool.append((Exists(("y",), Equal("y", "y")), 1))
    pool.append((Exists(("y",), Parent("x0", "y")), 1))
    pool.append((Exists(("y", "z"), And((Parent("y", "z"), Neg(Root("y"))))), 1))
    pool.append((COr((
        Exists(("y",), Parent("x0", "y")),
        Exists(("y",), And((Neg(Root("y")), Neg(Equal("y", "x0"))))),
    )), 1))
    pool.append((Exists(("y",), And((Parent("x0", "y"),
                                     Forall(("z",), Neg(Parent("y", "z")))))), 1))
    pool.append((Exists(("y",), And((Neg(Equal("y", "x1")),
                                     Forall(("z",), Neg(Parent("z", "y")))))), 2))
    pool.append((Exists(("y", "z"), And((Parent("x1", "y"), Parent("y", "z")))), 2))
    return pool


def suite_theta(seed: int = 0, count: int = 100, max_size: int = 6) -> tuple[bool, str]:
    """Per-piece sentences hold on the pieces and transfer the original fact."""
    rng = random.Random(seed)
    pool = _theta_formula_pool()
    failures = 0
    cases = 0
    attempts = 0
    while cases < count and attempts < 60 * count:
        attempts += 1
        tree, raw = _random_marked(rng, min_size=2, max_size=max_size, max_marks=1)
        marks = dedup_entries(ancestor_closure(tree, (0,) + raw))
        f, arity = pool[attempts % len(pool)]
        if arity > len(marks):
            continue
        shape = tuple(f"x{k}" for k in range(len(marks)))
        env = {shape[k]: marks[k] for k in range(len(marks))}
        if not eval_formula(tree, f, {v: env[v] for v in sorted(env)}):
            continue
        cases += 1
        thetas = theta_sentences(tree, marks, f, shape)
        views = decompose(tree, marks)
        for theta, view in zip(thetas, views):
            if not eval_formula(view.piece, theta):
                failures += 1
        # Transfer: replace each piece by some tree satisfying its sentence.
        replacements = []
        for theta, view in zip(thetas, views):
            chosen = view.piece
            for _ in range(6):
                cand = random_tree(rng.randrange(1, view.piece.size + 3),
                                   rng.getrandbits(32))
                if eval_formula(cand, theta):
                    chosen = cand
                    break
            replacements.append(chosen)
        grafted, anchors = reassemble(pattern_positions(tree, marks), replacements)
        env_s = {shape[k]: anchors[k] for k in range(len(marks))}
        if not eval_formula(grafted, f, env_s):
            failures += 1
    lines = [_kv("suite", "theta"), _kv("seed", seed), _kv("cases", cases)]
    return _finish(lines, failures)


def suite_phi(seed: int = 0, count: int = 500, exhaustive_size: int = 4,
              exhaustive_colors: int = 3) -> tuple[bool, str]:
    """Round trip, isomorphism preservation and reflection, pinned output."""
    rng = random.Random(seed)
    failures = 0
    pinned = serialize_tree(encode_colored(ColoredFiniteTree(FiniteTree((-1,)), (0,))))
    if pinned != "((()(()))(()()))":
        failures += 1
    for _ in range(count):
        ct = random_colored_tree(rng.randrange(1, 9), rng.getrandbits(32), num_colors=4)
        back = decode(encode_colored(ct))
        if canonical_code(back) != canonical_code(ct):
            failures += 1
    # Exhaustive: encoding codes coincide exactly when colored codes do.
    encode_by_class: dict[bytes, set[bytes]] = {}
    total = 0
    for shape in trees_up_to(exhaustive_size):
        for colors in product(range(exhaustive_colors), repeat=shape.size):
            ct = ColoredFiniteTree(shape, colors)
            total += 1
            encode_by_class.setdefault(canonical_code(ct), set()).add(
                canonical_code(encode_colored(ct))
            )
    image_codes: list[bytes] = []
    for codes in encode_by_class.values():
        if len(codes) != 1:
            failures += 1
        image_codes.extend(codes)
    if len(set(image_codes)) != len(encode_by_class):
        failures += 1
    lines = [
        _kv("suite", "phi"),
        _kv("seed", seed),
        _kv("random_cases", count),
        _kv("exhaustive_cases", total),
        _kv("classes", len(encode_by_class)),
        _kv("pinned", pinned),
    ]
    return _finish(lines, failures)


def suite_rank(seed: int = 0, max_size: int = 6) -> tuple[bool, str]:
    """Scott-rank fixtures, isomorphism invariance, and cap sufficiency."""
    engine = default_engine()
    rng = random.Random(seed)
    failures = 0
    fixtures = [("()", 0), ("(())", 1), ("(()())", 1)]
    for text, want in fixtures:
        got = scott_rank(parse_tree(text), engine=engine)
        if got.capped or got.rank != want:
            failures += 1
    ranks: list[int] = []
    checked = 0
    for tree in trees_up_to(max_size):
        checked += 1
        r = scott_rank(tree, engine=engine)
        if r.capped:
            failures += 1
        ranks.append(r.rank)
        copy = shuffled_copy(tree, rng.getrandbits(32))
        r2 = scott_rank(copy, engine=engine)
        if (r2.capped, r2.rank) != (r.capped, r.rank):
            failures += 1
    lines = [
        _kv("suite", "rank"),
        _kv("seed", seed),
        _kv("trees", checked),
        _kv("max_rank", max(ranks)),
    ]
    return _finish(lines, failures)


SUITES: dict[str, Callable[..., tuple[bool, str]]] = {
    "lemma31": suite_lemma31,
    "ancestor": suite_ancestor,
    "nested": suite_nested,
    "charform": suite_charform,
    "karp": suite_karp,
    "relativize": suite_relativize,
    "theta": suite_theta,
    "phi": suite_phi,
    "rank": suite_rank,
}


def run_suite(name: str, **params) -> tuple[bool, str]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**params)

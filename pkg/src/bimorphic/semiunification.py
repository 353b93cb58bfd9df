"""Matching, single-inequation semi-unification, and a brute-force oracle.

A semiunifier of ``{u1 = v1, ..., l <= r}`` is a substitution ``s`` that
unifies every equation and admits a witness ``w`` with ``w(s(l)) = s(r)``.

The solver works on a term graph with union-find classes.  Besides the
equality classes it keeps a relation ``x <= y`` between classes meaning
``w(s(x)) = s(y)`` for the single witness ``w``.  It saturates under

* decomposition: ``c(x1..xn) <= c(y1..yn)`` gives ``xi <= yi``; distinct
  heads fail;
* expansion: ``c(x1..xn) <= y`` with ``y`` a variable class binds ``y`` to
  ``c(y1..yn)`` over fresh variables;
* functionality: ``x <= y`` and ``x <= y'`` for a variable class ``x`` merge
  ``y`` and ``y'``;
* congruence: classes with equal heads and equal children are merged.

Every rule is forced, so a saturated acyclic graph reads back as a most
general semiunifier.  Sizes are monotone along ``<=`` (``|s(y)| >= |s(x)|``)
and strictly increase from a child to its parent, so a cycle through at
least one child-to-parent edge has no solution; the solver checks for such
cycles on every round, which also subsumes the occurs check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import BudgetExceeded, NoMatch, NoSemiunifier
from .fresh import FreshSupply
from .substitution import Subst, apply
from .types import (
    ARITY,
    Bool,
    Int,
    MonoType,
    TVar,
    children,
    head,
    rebuild,
    type_vars,
)

Equation = tuple[MonoType, MonoType]

DEFAULT_BUDGET = 20_000


@dataclass(frozen=True)
class SemiUnifProblem:
    equations: tuple[Equation, ...] = ()
    inequation: Equation | None = None

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(tuple(e) for e in self.equations))
        if self.inequation is not None:
            object.__setattr__(self, "inequation", tuple(self.inequation))

    def variables(self) -> list[str]:
        parts = list(self.equations)
        if self.inequation is not None:
            parts.append(self.inequation)
        return type_vars(parts)


@dataclass(frozen=True)
class EmittedSUP:
    """Output of the diagnostic emitter; may carry any number of inequations."""

    equations: tuple[Equation, ...] = ()
    inequations: tuple[Equation, ...] = field(default=())

    def as_uniform(self) -> SemiUnifProblem:
        if len(self.inequations) > 1:
            raise ValueError(
                f"{len(self.inequations)} inequations; only single-inequation "
                "problems can be solved"
            )
        return SemiUnifProblem(self.equations, self.inequations[0] if self.inequations else None)


def parse_sup_text(text: str) -> EmittedSUP:
    """Read ``eq:`` and ``leq:`` sections.

    Each section header may carry its first entry on the same line; entries
    are ``u = v`` under ``eq:`` and ``u <= v`` under ``leq:``.  ``--`` starts
    a comment.  Any number of inequations is accepted here; callers decide
    whether the result is solvable.
    """
    from .errors import ParseError
    from .parser import parse_type

    eqs: list[Equation] = []
    ineqs: list[Equation] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].strip()
        for name in ("eq:", "leq:"):
            if line.startswith(name):
                section = name
                line = line[len(name):].strip()
        if not line:
            continue
        if section is None:
            raise ParseError("entry outside an 'eq:' or 'leq:' section", lineno, 1)
        sep = "=" if section == "eq:" else "<="
        if section == "eq:" and "<=" in line:
            raise ParseError("inequation in the 'eq:' section", lineno, 1)
        left, found, right = line.partition(sep)
        if not found:
            raise ParseError(f"expected 'u {sep} v'", lineno, 1)
        try:
            pair = (parse_type(left), parse_type(right))
        except ParseError as exc:
            raise ParseError(exc.message, lineno, exc.column) from None
        (eqs if section == "eq:" else ineqs).append(pair)
    return EmittedSUP(tuple(eqs), tuple(ineqs))


def print_sup(p: EmittedSUP | SemiUnifProblem) -> str:
    from .parser import print_type

    if isinstance(p, SemiUnifProblem):
        p = EmittedSUP(p.equations, (p.inequation,) if p.inequation else ())
    lines = ["eq:"]
    lines += [f"  {print_type(l)} = {print_type(r)}" for l, r in p.equations]
    lines.append("leq:")
    lines += [f"  {print_type(l)} <= {print_type(r)}" for l, r in p.inequations]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Matching


def match_types(u: MonoType, v: MonoType) -> Subst:
    """Least ``s`` with ``s(u) = v``; variables of ``v`` are treated as constants."""
    return match_all([(u, v)])


def match_all(pairs: Iterable[Equation]) -> Subst:
    """Simultaneous matching: one ``s`` with ``s(u) = v`` for every pair."""
    binding: dict[str, MonoType] = {}
    stack = list(pairs)
    stack.reverse()
    while stack:
        u, v = stack.pop()
        if isinstance(u, TVar):
            prev = binding.get(u.name)
            if prev is None:
                binding[u.name] = v
            elif prev != v:
                raise NoMatch(f"'{u.name} needs both {prev} and {v}")
        elif isinstance(v, TVar) or head(u) != head(v):
            raise NoMatch(f"{u} does not match {v}")
        else:
            stack.extend(reversed(list(zip(children(u), children(v)))))
    return Subst(binding)


def matches(u: MonoType, v: MonoType) -> bool:
    try:
        match_types(u, v)
    except NoMatch:
        return False
    return True


def check_semiunifier(p: SemiUnifProblem, s: Subst) -> bool:
    if any(s(l) != s(r) for l, r in p.equations):
        return False
    if p.inequation is None:
        return True
    l, r = p.inequation
    return matches(s(l), s(r))


def factors_through(general: Subst, specific: Subst, names: Iterable[str]) -> Subst | None:
    """Return ``f`` with ``compose(f, general) == specific`` on ``names``, if any."""
    pairs = [(general.image(n), specific.image(n)) for n in names]
    try:
        return match_all(pairs)
    except NoMatch:
        return None


# ---------------------------------------------------------------------------
# Solver


class _Graph:
    def __init__(self, fresh: FreshSupply, budget: int):
        self.parent: list[int] = []
        self.sym: list[str | None] = []
        self.kids: list[tuple[int, ...]] = []
        self.var_node: dict[str, int] = {}
        self.var_members: list[list[str]] = []
        self.signatures: dict[tuple, int] = {}
        self.pending: list[tuple[int, int]] = []
        self.edges: set[tuple[int, int]] = set()
        self.fresh = fresh
        self.budget = budget
        self.steps = 0

    def tick(self, n: int = 1):
        self.steps += n
        if self.steps > self.budget:
            raise BudgetExceeded(f"semi-unification exceeded {self.budget} steps")

    def _new(self, sym, kids, var=None) -> int:
        self.tick()
        i = len(self.parent)
        self.parent.append(i)
        self.sym.append(sym)
        self.kids.append(tuple(kids))
        self.var_members.append([var] if var is not None else [])
        return i

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def intern(self, t: MonoType) -> int:
        if isinstance(t, TVar):
            node = self.var_node.get(t.name)
            if node is None:
                node = self.var_node[t.name] = self._new(None, (), t.name)
            return node
        kids = tuple(self.intern(k) for k in children(t))
        return self._structured(head(t), kids)

    def _structured(self, sym: str, kids: Sequence[int]) -> int:
        key = (sym, tuple(self.find(k) for k in kids))
        node = self.signatures.get(key)
        if node is not None:
            return self.find(node)
        node = self._new(sym, kids)
        self.signatures[key] = node
        return node

    def fresh_var(self) -> int:
        name = self.fresh.name()
        return self.intern(TVar(name))

    def union(self, a: int, b: int):
        self.pending.append((a, b))

    def settle(self) -> bool:
        """Process pending unions and congruences.  Returns whether anything merged."""
        merged = False
        while True:
            while self.pending:
                a, b = self.pending.pop()
                a, b = self.find(a), self.find(b)
                if a == b:
                    continue
                sa, sb = self.sym[a], self.sym[b]
                if sa is not None and sb is not None:
                    if sa != sb:
                        raise NoSemiunifier("clash", f"cannot equate {sa} with {sb}")
                    self.pending.extend(zip(self.kids[a], self.kids[b]))
                keep, drop = (b, a) if sa is None else (a, b)
                self.parent[drop] = keep
                self.var_members[keep].extend(self.var_members[drop])
                merged = True
                self.tick()
            # congruence closure over structured classes
            table: dict[tuple, int] = {}
            for i in range(len(self.parent)):
                if self.parent[i] != i or self.sym[i] is None:
                    continue
                key = (self.sym[i], tuple(self.find(k) for k in self.kids[i]))
                other = table.get(key)
                if other is None:
                    table[key] = i
                else:
                    self.pending.append((other, i))
            self.signatures = table
            if not self.pending:
                return merged

    def add_edge(self, x: int, y: int) -> bool:
        key = (self.find(x), self.find(y))
        if key in self.edges:
            return False
        self.edges.add(key)
        return True

    def normalize_edges(self):
        self.edges = {(self.find(x), self.find(y)) for x, y in self.edges}

    def check_cycles(self):
        """Fail on a cycle through a child-to-parent edge (sizes would have to grow)."""
        reps = [i for i in range(len(self.parent)) if self.parent[i] == i]
        succ: dict[int, list[tuple[int, bool]]] = {i: [] for i in reps}
        for x, y in self.edges:
            succ[self.find(x)].append((self.find(y), False))
        for i in reps:
            if self.sym[i] is not None:
                for k in self.kids[i]:
                    succ[self.find(k)].append((i, True))
        comp = _scc(reps, {i: [j for j, _ in succ[i]] for i in reps})
        structural_only = True
        bad = False
        for i in reps:
            for j, strict in succ[i]:
                if comp[i] == comp[j]:
                    if strict:
                        bad = True
                    else:
                        structural_only = False
        if bad:
            comps_with_leq = {comp[i] for i in reps for j, strict in succ[i]
                              if not strict and comp[i] == comp[j]}
            strict_comps = {comp[i] for i in reps for j, strict in succ[i]
                            if strict and comp[i] == comp[j]}
            if strict_comps - comps_with_leq or structural_only:
                raise NoSemiunifier("occurs", "a type would have to contain itself")
            raise NoSemiunifier(
                "cycle", "the witness would have to map a type onto a proper subterm of itself"
            )

    def saturate(self):
        while True:
            self.settle()
            self.normalize_edges()
            self.check_cycles()
            changed = False
            witness: dict[int, int] = {}
            for x, y in sorted(self.edges):
                x, y = self.find(x), self.find(y)
                if self.sym[x] is None:
                    prev = witness.get(x)
                    if prev is None:
                        witness[x] = y
                    elif self.find(prev) != y:
                        self.union(prev, y)
                        changed = True
                    continue
                if self.sym[y] is None:
                    fresh = [self.fresh_var() for _ in range(ARITY[self.sym[x]])]
                    node = self._structured(self.sym[x], fresh)
                    self.union(y, node)
                    targets = fresh
                    changed = True
                elif self.sym[y] != self.sym[x]:
                    raise NoSemiunifier(
                        "clash", f"witness cannot map {self.sym[x]} onto {self.sym[y]}"
                    )
                else:
                    targets = self.kids[y]
                for a, b in zip(self.kids[x], targets):
                    changed |= self.add_edge(a, b)
            if not changed and not self.pending:
                return

    def read_back(self, order: Sequence[str]) -> dict[int, MonoType]:
        rank = {name: i for i, name in enumerate(order)}
        memo: dict[int, MonoType] = {}

        def term(i: int) -> MonoType:
            i = self.find(i)
            if i in memo:
                return memo[i]
            if self.sym[i] is None:
                members = sorted(self.var_members[i], key=lambda n: rank.get(n, len(rank)))
                original = [m for m in members if m in rank]
                t = TVar(original[0]) if original else TVar(members[0])
            else:
                t = rebuild(self.sym[i], (term(k) for k in self.kids[i]))
            memo[i] = t
            return t

        return {name: term(self.var_node[name]) for name in order}


def _scc(nodes: list[int], succ: dict[int, list[int]]) -> dict[int, int]:
    """Tarjan's algorithm, iterative; returns node -> component id."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comp: dict[int, int] = {}
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            edges = succ[v]
            while pos < len(edges):
                w = edges[pos]
                pos += 1
                if w not in index:
                    work.append((v, pos))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = v
                    if w == v:
                        break
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comp


def semi_unify(
    p: SemiUnifProblem,
    fresh: FreshSupply | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Subst:
    """Most general semiunifier of a problem with at most one inequation.

    The result is restricted to the problem's variables; variables the
    solver had to invent come from ``fresh``.  Raises NoSemiunifier when no
    semiunifier exists and BudgetExceeded when ``budget`` steps did not
    suffice to decide.
    """
    order = p.variables()
    if fresh is None:
        fresh = FreshSupply("s", avoid=order)
    else:
        fresh.reserve(order)
    g = _Graph(fresh, budget)
    for name in order:
        g.intern(TVar(name))
    for l, r in p.equations:
        g.union(g.intern(l), g.intern(r))
    if p.inequation is not None:
        l, r = p.inequation
        g.add_edge(g.intern(l), g.intern(r))
    g.saturate()
    images = g.read_back(order)
    result = Subst(images)
    assert check_semiunifier(p, result), "solver produced a non-semiunifier"
    return result


# ---------------------------------------------------------------------------
# Oracle


class _HoleSupply:
    def __init__(self):
        self.n = 0

    def __call__(self) -> TVar:
        self.n += 1
        return TVar(f"?{self.n}")


def _is_hole(t: MonoType) -> bool:
    return isinstance(t, TVar) and t.name.startswith("?")


def _has_hole(t: MonoType) -> bool:
    return _is_hole(t) or any(_has_hole(k) for k in children(t))


def _maybe_equal(a: MonoType, b: MonoType) -> bool:
    if a == b:
        return True
    if _is_hole(a) or _is_hole(b):
        # a hole can become anything except a term properly containing itself
        hole, other = (a, b) if _is_hole(a) else (b, a)
        return hole not in _subterms(other)
    if isinstance(a, TVar) or isinstance(b, TVar):
        return a == b
    if head(a) != head(b):
        return False
    return all(_maybe_equal(x, y) for x, y in zip(children(a), children(b)))


def _maybe_instance(l: MonoType, r: MonoType, witness: dict) -> bool:
    if _is_hole(r):
        # w(l) = r = w(l') is impossible when l is a proper subterm of l'
        seen = witness.setdefault(r, [])
        if any(_proper_subterm(l, o) or _proper_subterm(o, l) for o in seen):
            return False
        seen.append(l)
        return True
    if _is_hole(l):
        return True
    if isinstance(l, TVar):
        seen = witness.setdefault(l.name, [])
        if any(not _maybe_equal(prev, r) for prev in seen):
            return False
        seen.append(r)
        return True
    if isinstance(r, TVar) or head(l) != head(r):
        return False
    return all(_maybe_instance(x, y, witness) for x, y in zip(children(l), children(r)))


def _proper_subterm(a: MonoType, b: MonoType) -> bool:
    return a != b and a in _subterms(b)


def _blockers(a: MonoType, b: MonoType, strong: list, weak: list):
    """Collect holes whose refinement decides a comparison of ``a`` with ``b``.

    A hole facing a non-hole term is strong (its head is forced); a hole
    facing another hole is weak.
    """
    ha, hb = _is_hole(a), _is_hole(b)
    if ha or hb:
        if ha and hb:
            weak.append(a.name)
            weak.append(b.name)
        else:
            strong.append(a.name if ha else b.name)
        return
    if children(a) and children(b) and head(a) == head(b):
        for x, y in zip(children(a), children(b)):
            _blockers(x, y, strong, weak)


def oracle_search(p: SemiUnifProblem, vocab: Iterable[str], depth: int) -> Subst | None:
    """Exhaustively search for a semiunifier with images of depth <= ``depth``.

    Images are built from the variables in ``vocab``, ``bool``, ``int`` and
    the type constructors occurring in ``p``.  The identity is tried first;
    then the bound deepens from 0 and the first substitution passing
    check_semiunifier is returned, or None.  Partial substitutions are pruned only by conditions every
    completion would also violate, so the search is complete within the
    bound.  ``None`` is not a proof of unsolvability.
    """
    names = p.variables()
    if check_semiunifier(p, Subst({})):
        return Subst({})
    atoms: list[MonoType] = [TVar(v) for v in dict.fromkeys(vocab)] + [Bool, Int]
    parts = list(p.equations) + ([p.inequation] if p.inequation else [])
    ctors = sorted(
        {head(t) for eq in parts for side in eq for t in _subterms(side) if children(t)},
        key=["->", "*", "list"].index,
    )
    for bound in range(depth + 1):
        found = _oracle_at(p, names, atoms, ctors, bound)
        if found is not None:
            return found
    return None


def _subterms(t: MonoType):
    yield t
    for k in children(t):
        yield from _subterms(k)


def _oracle_at(p, names, atoms, ctors, bound) -> Subst | None:
    holes = _HoleSupply()
    images = {n: holes() for n in names}
    budget = {images[n].name: bound for n in names}

    def consistent(s: Subst) -> bool:
        for l, r in p.equations:
            if not _maybe_equal(s(l), s(r)):
                return False
        if p.inequation is not None:
            l, r = p.inequation
            if not _maybe_instance(s(l), s(r), {}):
                return False
        return True

    def next_hole(s: Subst, images) -> str | None:
        strong: list[str] = []
        weak: list[str] = []
        for l, r in p.equations:
            _blockers(s(l), s(r), strong, weak)
        if p.inequation is not None:
            l, r = p.inequation
            _blockers(s(l), s(r), strong, weak)
        if strong:
            return strong[0]
        if weak:
            return weak[0]
        for n in names:
            for t in _subterms(images[n]):
                if _is_hole(t):
                    return t.name
        return None

    def search(images, budget) -> Subst | None:
        s = Subst(images)
        hole = next_hole(s, images)
        if hole is None:
            return s if check_semiunifier(p, s) else None
        left = budget[hole]
        options: list[tuple[MonoType, dict]] = [(a, {}) for a in atoms]
        if left > 0:
            for c in ctors:
                kids = [holes() for _ in range(ARITY[c])]
                options.append((rebuild(c, kids), {k.name: left - 1 for k in kids}))
        for filler, new_budget in options:
            refined = {n: apply({hole: filler}, t) for n, t in images.items()}
            if not consistent(Subst(refined)):
                continue
            nb = {k: v for k, v in budget.items() if k != hole}
            nb.update(new_budget)
            result = search(refined, nb)
            if result is not None:
                return result
        return None

    return search(images, budget)

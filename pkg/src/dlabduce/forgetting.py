"""Uniform interpolation by saturation, purification and definer elimination.

The calculus has four rules, applied inside a given-clause loop:

  Resolution            C1 or A(t1),  C2 or not A(t2)   =>  (C1 or C2)s
  Role propagation      C1 or (forall r.D1)(t1),  C2 or (Q r.D2)(t2)
                                     =>  (C1 or C2)s or (Q r.D12)(t1 s)
  Exists elimination    C or (exists r.D)(t),  not D(x)  =>  C
  Role instantiation    C or (forall r.D)(t),  r(a, b)   =>  C s or D(b)

where s is the unifier of the two terms (the universal variable unifies
with anything; two distinct individuals never unify), D12 is the memoized
definer for D1 and D2, and Q is either quantifier.  Resolution is
restricted to symbols in the forgetting signature and to definers.
Conclusions that would contain more than one negative definer literal,
or a negative definer literal on an individual, are discarded.

After saturation, every clause mentioning a forgotten symbol is deleted
and the definers are eliminated by reverse Ackermann substitution;
definers that depend on themselves (directly or through other definers)
introduce greatest-fixpoint binders.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

from . import model as m
from .model import Axiom, Concept, Ontology, signature
from .clauses import (
    Clause,
    ClauseSet,
    DefinerRegistry,
    Literal,
    UNIVERSAL,
    _prepare_literals,
    clause_to_axiom,
    clausify,
    literal_concept,
    name_lit,
    quant_lit,
    render_clause_set,
)
from .symbols import SymbolSet, SymbolTable, is_annotation, is_definer


class BudgetExceeded(RuntimeError):
    """Wall-clock or clause-cap budget ran out; partial results are unusable."""


@dataclass
class Budget:
    limit_ms: float = 300_000.0
    max_clauses: int = 500_000
    start: float = field(default_factory=time.monotonic)

    def elapsed_ms(self) -> float:
        return (time.monotonic() - self.start) * 1000.0

    def remaining_ms(self) -> float:
        return self.limit_ms - self.elapsed_ms()

    def check(self, n_clauses: int = 0) -> None:
        if self.elapsed_ms() > self.limit_ms:
            raise BudgetExceeded(f"wall clock limit of {self.limit_ms:.0f} ms exceeded")
        if n_clauses > self.max_clauses:
            raise BudgetExceeded(f"clause cap of {self.max_clauses} exceeded")


@dataclass
class ForgettingTask:
    clauses: ClauseSet
    registry: DefinerRegistry
    forget: SymbolSet
    budget: Budget = field(default_factory=Budget)

    def __post_init__(self) -> None:
        if self.forget.roles:
            raise ValueError("role forgetting is not supported")
        for sid in self.forget.concepts:
            if is_definer(sid) or is_annotation(sid):
                raise ValueError("forgetting signature must not contain "
                                 "definer or annotation symbols")


def _unify(t1: int, t2: int) -> int | None:
    """Most general unifier of two terms, or None.  UNIVERSAL matches anything."""
    if t1 == UNIVERSAL:
        return t2
    if t2 == UNIVERSAL or t1 == t2:
        return t1
    return None


def _apply(lits, lit_out: Literal | None, term: int):
    """Literals of a premise minus the resolved one, with x ground to `term`."""
    out = []
    for lit in lits:
        if lit is lit_out:
            continue
        if term != UNIVERSAL and lit.term == UNIVERSAL:
            lit = lit._replace(term=term)
        out.append(lit)
    return out


class _Saturation:
    """Given-clause loop over the calculus rules.

    Binary inferences additionally require at least one premise to be
    F-relevant: to mention a forgotten symbol or a definer whose
    definition transitively involves one.  A conclusion drawn from two
    irrelevant premises is entailed by clauses that survive
    purification, so skipping it cannot weaken the interpolant; this is
    what keeps saturation proportional to the forgotten part of the
    ontology instead of to the whole ontology.
    """

    def __init__(self, task: ForgettingTask):
        self.cs = task.clauses
        self.reg = task.registry
        self.budget = task.budget
        self.resolvable = set(task.forget.concepts)
        self.relevant_definers: set[int] = set()
        self.processed: set[int] = set()
        self.heap: list[tuple[int, int]] = []
        # literal indexes over all clauses ever added (dead ones filtered on use)
        self.pos_name: dict[int, list[int]] = {}
        self.neg_name: dict[int, list[int]] = {}
        self.quant_by_role: dict[int, list[int]] = {}
        self.forall_by_role: dict[int, list[int]] = {}
        self.exists_by_definer: dict[int, list[int]] = {}
        self.unit_neg_definer: dict[int, int] = {}
        self.by_literal: dict[Literal, list[int]] = {}
        self.by_first_literal: dict[Literal, list[int]] = {}
        self.role_assertions_by_role: dict[int, list] = {}
        for ra in self.cs.role_assertions:
            self.role_assertions_by_role.setdefault(ra.role, []).append(ra)
        for clause in self.cs.clauses:
            if self.cs.is_alive(clause.id):
                self._index(clause)
                heapq.heappush(self.heap, (len(clause.literals), clause.id))
        self._seed_relevance()

    # -- F-relevance ---------------------------------------------------------

    def _mentions_relevant(self, clause: Clause) -> bool:
        for lit in clause.literals:
            if lit.sym in self.resolvable or lit.sym in self.relevant_definers:
                return True
        return False

    def _defined_definer(self, clause: Clause) -> int | None:
        for lit in clause.literals:
            if lit.kind == "name" and not lit.polarity and is_definer(lit.sym):
                return lit.sym
        return None

    def _seed_relevance(self) -> None:
        changed = True
        while changed:
            changed = False
            for clause in self.cs.clauses:
                if not self.cs.is_alive(clause.id):
                    continue
                d = self._defined_definer(clause)
                if d is not None and d not in self.relevant_definers \
                        and self._mentions_relevant(clause):
                    self.relevant_definers.add(d)
                    changed = True

    def _update_relevance(self, clause: Clause) -> None:
        """A new clause can make a definer relevant retroactively; clauses
        mentioning it must then be reconsidered for inferences."""
        d = self._defined_definer(clause)
        if d is None or d in self.relevant_definers \
                or not self._mentions_relevant(clause):
            return
        fresh = {d}
        self.relevant_definers.add(d)
        changed = True
        while changed:
            changed = False
            for other in self.cs.clauses:
                if not self.cs.is_alive(other.id):
                    continue
                e = self._defined_definer(other)
                if e is not None and e not in self.relevant_definers \
                        and self._mentions_relevant(other):
                    self.relevant_definers.add(e)
                    fresh.add(e)
                    changed = True
        for other in self.cs.clauses:
            if other.id in self.processed and self.cs.is_alive(other.id) \
                    and any(l.sym in fresh for l in other.literals):
                self.processed.discard(other.id)
                heapq.heappush(self.heap, (len(other.literals), other.id))

    def _index(self, clause: Clause) -> None:
        if clause.literals:
            self.by_first_literal.setdefault(clause.literals[0], []).append(clause.id)
        for lit in clause.literals:
            self.by_literal.setdefault(lit, []).append(clause.id)
            if lit.kind == "name":
                table = self.pos_name if lit.polarity else self.neg_name
                table.setdefault(lit.sym, []).append(clause.id)
            else:
                self.quant_by_role.setdefault(lit.role, []).append(clause.id)
                if lit.kind == "forall":
                    self.forall_by_role.setdefault(lit.role, []).append(clause.id)
                else:
                    self.exists_by_definer.setdefault(lit.sym, []).append(clause.id)
        if (len(clause.literals) == 1 and clause.literals[0].kind == "name"
                and not clause.literals[0].polarity
                and is_definer(clause.literals[0].sym)
                and clause.literals[0].term == UNIVERSAL):
            self.unit_neg_definer[clause.literals[0].sym] = clause.id

    def _partners(self, ids: list[int]):
        seen = set()
        for cid in ids:
            if cid in seen or cid not in self.processed or not self.cs.is_alive(cid):
                continue
            seen.add(cid)
            yield self.cs.get(cid)

    def _emit(self, literals, rule: str, parents: tuple[int, ...]) -> None:
        prepared = _prepare_literals(literals)
        if prepared is None:
            return
        candidate = set(prepared)
        # forward subsumption: a subsumer's smallest literal is in the candidate
        for lit in prepared:
            for cid in self.by_first_literal.get(lit, ()):
                if self.cs.is_alive(cid) and self.cs.get(cid).lit_set <= candidate:
                    return
        clause, created = self.cs.add(prepared, "derived", rule=rule,
                                      parents=tuple(sorted(parents)))
        if not created or clause is None:
            return
        self._index(clause)
        self._update_relevance(clause)
        heapq.heappush(self.heap, (len(clause.literals), clause.id))
        # backward subsumption: anything strictly containing the new clause dies
        new_set = clause.lit_set
        anchor = clause.literals[0] if clause.literals else None
        victims = (self.by_literal.get(anchor, ()) if anchor is not None
                   else [c.id for c in self.cs.clauses])
        for cid in victims:
            if cid != clause.id and self.cs.is_alive(cid) \
                    and new_set < self.cs.get(cid).lit_set:
                self.cs.kill(cid)

    def _structural(self, definer: int, component: int) -> None:
        clause, created = self.cs.add(
            [name_lit(False, definer, UNIVERSAL), name_lit(True, component, UNIVERSAL)],
            "definer")
        if created and clause is not None:
            self._index(clause)
            self._update_relevance(clause)
            heapq.heappush(self.heap, (len(clause.literals), clause.id))

    def run(self) -> None:
        while self.heap:
            self.budget.check(len(self.cs))
            _, gid = heapq.heappop(self.heap)
            if gid in self.processed or not self.cs.is_alive(gid):
                continue
            self.processed.add(gid)
            given = self.cs.get(gid)
            self._infer_from(given)

    def _infer_from(self, given: Clause) -> None:
        given_rel = self._mentions_relevant(given)

        def eligible(other: Clause) -> bool:
            return given_rel or self._mentions_relevant(other)

        for lit in given.literals:
            if lit.kind == "name":
                sym = lit.sym
                if sym in self.resolvable or is_definer(sym):
                    index = self.neg_name if lit.polarity else self.pos_name
                    for other in list(self._partners(index.get(sym, ()))):
                        if eligible(other):
                            self._resolve(given, lit, other, sym)
                continue
            # quantified literal
            if lit.kind == "forall":
                for other in list(self._partners(self.quant_by_role.get(lit.role, ()))):
                    if eligible(other):
                        self._role_prop(given, lit, other)
                if given_rel:
                    self._role_instantiate(given, lit)
            else:
                unit = self.unit_neg_definer.get(lit.sym)
                if unit is not None and unit in self.processed \
                        and self.cs.is_alive(unit) \
                        and eligible(self.cs.get(unit)):
                    self._exists_elim(given, lit, self.cs.get(unit))
            # partners holding the forall side against this literal
            for other in list(self._partners(self.forall_by_role.get(lit.role, ()))):
                if not eligible(other):
                    continue
                for olit in other.literals:
                    if olit.kind == "forall" and olit.role == lit.role:
                        self._role_prop(other, olit, given)
        if (len(given.literals) == 1 and given.literals[0].kind == "name"
                and not given.literals[0].polarity
                and is_definer(given.literals[0].sym)
                and given.literals[0].term == UNIVERSAL):
            definer = given.literals[0].sym
            for other in list(self._partners(self.exists_by_definer.get(definer, ()))):
                if not eligible(other):
                    continue
                for olit in other.literals:
                    if olit.kind == "exists" and olit.sym == definer:
                        self._exists_elim(other, olit, given)

    def _resolve(self, c1: Clause, l1: Literal, c2: Clause, sym: int) -> None:
        for l2 in c2.literals:
            if l2.kind != "name" or l2.sym != sym or l2.polarity == l1.polarity:
                continue
            u = _unify(l1.term, l2.term)
            if u is None:
                continue
            lits = _apply(c1.literals, l1, u) + _apply(c2.literals, l2, u)
            self._emit(lits, "res", (c1.id, c2.id))

    def _role_prop(self, c1: Clause, forall_lit: Literal, c2: Clause) -> None:
        for l2 in c2.literals:
            if l2.kind == "name" or l2.role != forall_lit.role:
                continue
            if c1.id == c2.id and l2 is forall_lit:
                continue
            u = _unify(forall_lit.term, l2.term)
            if u is None:
                continue
            combined, created = self.reg.combine(forall_lit.sym, l2.sym)
            lits = _apply(c1.literals, forall_lit, u) + _apply(c2.literals, l2, u)
            lits.append(quant_lit(l2.kind, forall_lit.role, combined, u))
            self._emit(lits, "role_prop", (c1.id, c2.id))
            if created:
                self._structural(combined, forall_lit.sym)
                self._structural(combined, l2.sym)

    def _exists_elim(self, clause: Clause, exists_lit: Literal, unit: Clause) -> None:
        lits = [l for l in clause.literals if l is not exists_lit]
        self._emit(lits, "exis_elim", (clause.id, unit.id))

    def _role_instantiate(self, clause: Clause, forall_lit: Literal) -> None:
        for ra in self.role_assertions_by_role.get(forall_lit.role, ()):
            u = _unify(forall_lit.term, ra.subject)
            if u is None:
                continue
            lits = _apply(clause.literals, forall_lit, u)
            lits.append(name_lit(True, forall_lit.sym, ra.object))
            self._emit(lits, "role_inst", (clause.id,))


def saturate(task: ForgettingTask) -> ClauseSet:
    """Close the clause set under the calculus rules.  Mutates and returns it."""
    _Saturation(task).run()
    return task.clauses


def purify(cs: ClauseSet, forget: SymbolSet) -> ClauseSet:
    """Delete every clause that mentions a symbol scheduled for forgetting."""
    targets = forget.concepts

    def keep(clause: Clause) -> bool:
        return not any(l.kind == "name" and l.sym in targets for l in clause.literals)

    return cs.filtered(keep)


# ---------------------------------------------------------------------------
# Definer elimination (reverse Ackermann, with fixpoints for cycles)
# ---------------------------------------------------------------------------

class MalformedDefinerGraph(ValueError):
    pass


def _definers_in(c: Concept) -> frozenset[int]:
    return frozenset(s for s in signature(c).concepts if is_definer(s))


def _sccs(nodes: list[int], deps: dict[int, frozenset[int]]) -> list[list[int]]:
    """Tarjan SCCs, returned in reverse topological order (dependencies first)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = [0]

    def visit(v: int) -> None:
        work = [(v, iter(sorted(deps.get(v, ()))))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in deps and child not in index:
                    continue
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(sorted(deps.get(child, ())))))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(sorted(comp))

    for v in sorted(nodes):
        if v not in index:
            visit(v)
    return out


def _eliminate(clauses: list[Clause], reg: DefinerRegistry) -> list[tuple[Axiom, int]]:
    defining: dict[int, list[Concept]] = {}
    regular: list[Clause] = []
    for clause in clauses:
        target = None
        for lit in clause.literals:
            if lit.kind == "name" and not lit.polarity and is_definer(lit.sym):
                target = lit
                break
        if target is None:
            regular.append(clause)
            continue
        body = m.disj_all([literal_concept(l) for l in clause.literals if l is not target])
        defining.setdefault(target.sym, []).append(body)

    used: set[int] = set(defining)
    for clause in regular:
        for lit in clause.literals:
            if lit.kind != "name":
                used.add(lit.sym)
            elif is_definer(lit.sym):
                used.add(lit.sym)
    for bodies in defining.values():
        for body in bodies:
            used |= _definers_in(body)
    all_definers = sorted(used)

    body_of = {d: m.conj_all(defining[d]) if d in defining else m.top()
               for d in all_definers}
    deps = {d: _definers_in(body_of[d]) for d in all_definers}
    solution: dict[int, Concept] = {}

    def resolve_known(c: Concept) -> Concept:
        for d in _definers_in(c):
            if d in solution:
                c = m.replace_name(c, d, solution[d])
        return c

    # Components arrive dependencies-first.  Within a component, solve by
    # Gaussian elimination: inline each member's equation into the later
    # ones (introducing its own fixpoint binder if it is self-referential
    # at that point), then back-substitute in reverse order.
    for component in _sccs(all_definers, deps):
        members = list(component)
        prelim: dict[int, Concept] = {}
        for idx, d in enumerate(members):
            body = resolve_known(body_of[d])
            if d in _definers_in(body):
                body = m.gfp(m.close_over(body, d))
            prelim[d] = body
            for e in members[idx + 1:]:
                body_of[e] = m.replace_name(body_of[e], d, body)
        for d in reversed(members):
            body = prelim[d]
            for e in sorted(_definers_in(body)):
                if e in solution:
                    body = m.replace_name(body, e, solution[e])
            solution[d] = body

    axioms: list[tuple[Axiom, int]] = []
    seen: set = set()
    for clause in regular:
        axiom = clause_to_axiom(clause, lambda c: m.simplify(resolve_known(c)))
        if _definer_leak(axiom):
            raise MalformedDefinerGraph("definer survived elimination")
        if _trivially_true(axiom):
            continue
        key = _axiom_key(axiom)
        if key in seen:
            continue
        seen.add(key)
        axioms.append((axiom, clause.id))
    return axioms


def _definer_leak(ax: Axiom) -> bool:
    return any(is_definer(s) for s in signature(ax).concepts)


def _trivially_true(ax: Axiom) -> bool:
    if isinstance(ax, m.GCI):
        return ax.rhs.kind == m.TOP or ax.lhs.kind == m.BOT
    if isinstance(ax, m.ConceptAssertion):
        return ax.concept.kind == m.TOP
    if isinstance(ax, m.DisjunctiveAssertion):
        return any(c.kind == m.TOP for c, _ in ax.disjuncts)
    return False


def _axiom_key(ax: Axiom):
    norm = m.normalize_axiom(ax)
    if isinstance(norm, m.GCI):
        return ("gci", norm.lhs.cid, norm.rhs.cid)
    if isinstance(norm, m.ConceptAssertion):
        return ("ca", norm.concept.cid, norm.individual)
    if isinstance(norm, m.DisjunctiveAssertion):
        return ("da", tuple((c.cid, i) for c, i in norm.disjuncts))
    return ("ra", norm.role, norm.subject, norm.object)


def eliminate_definers(cs: ClauseSet, reg: DefinerRegistry) -> list[Axiom]:
    """Substitute definers away; cyclic definers become greatest fixpoints."""
    return [ax for ax, _ in _eliminate(cs.alive_clauses(), reg)]


# ---------------------------------------------------------------------------
# The forgetting entry point
# ---------------------------------------------------------------------------

@dataclass
class UniformInterpolant:
    """Result of forgetting: axioms over the kept signature plus provenance."""

    axioms: tuple[Axiom, ...]
    sources: tuple[int, ...]        # originating clause id per axiom
    clause_set: ClauseSet           # saturated set (pre-purification)
    registry: DefinerRegistry
    forgotten: SymbolSet

    def annotated_flags(self) -> list[bool]:
        return [any(is_annotation(s) for s in signature(ax).concepts)
                for ax in self.axioms]

    def derivation_log(self) -> list[tuple[str, tuple[int, ...], int]]:
        return [(c.rule, c.parents, c.id) for c in self.clause_set.clauses
                if c.rule is not None]

    def ancestors(self, clause_id: int) -> set[int]:
        """Reflexive-transitive closure of the parent relation."""
        seen: set[int] = set()
        stack = [clause_id]
        while stack:
            cid = stack.pop()
            if cid in seen:
                continue
            seen.add(cid)
            stack.extend(self.clause_set.get(cid).parents)
        return seen

    def depends_on_observation(self, axiom_index: int) -> bool:
        return any(self.clause_set.get(cid).origin == "observation"
                   for cid in self.ancestors(self.sources[axiom_index]))

    def trace(self, table: SymbolTable) -> str:
        return render_clause_set(self.clause_set, table, self.registry,
                                 alive_only=False)


def forget(onto: Ontology, extra: Axiom | None, fset: SymbolSet,
           budget: Budget | None = None) -> UniformInterpolant:
    """Compute the uniform interpolant of the ontology (plus an optional
    extra ABox axiom) for the complement of `fset`.

    Clausify, saturate, purify, eliminate definers.  The result may
    contain greatest fixpoints when forgotten symbols lie on a cycle.
    """
    budget = budget if budget is not None else Budget()
    cs, reg = clausify(onto, extra)
    task = ForgettingTask(cs, reg, fset, budget)
    saturate(task)
    kept = purify(cs, fset)
    pairs = _eliminate(kept.alive_clauses(), reg)
    return UniformInterpolant(
        axioms=tuple(ax for ax, _ in pairs),
        sources=tuple(src for _, src in pairs),
        clause_set=cs,
        registry=reg,
        forgotten=fset,
    )

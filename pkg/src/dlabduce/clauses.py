"""Clausal normal form with definer symbols.

An axiom set is turned into clauses of concept literals over a term.
There is conceptually a single universal variable ``x`` (encoded as the
term ``UNIVERSAL``); the other terms are individuals.  Under role
restrictions only definer symbols may appear, so every quantified
subconcept is replaced by a fresh definer ``D`` together with defining
clauses ``not D(x) or <filler clause>``.

Clause invariants enforced at construction:
  * literals are deduplicated and kept in a fixed sort order,
  * tautologies are never stored,
  * at most one negative definer literal of the form ``not D(x)`` and
    none of the form ``not D(a)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from . import model as m
from .model import (
    Concept,
    ConceptAssertion,
    DisjunctiveAssertion,
    GCI,
    Ontology,
    RoleAssertion,
    signature,
)
from .symbols import DEFINER_MIN, SymbolSet, SymbolTable, definer_id, is_definer

#: Term encoding: the single universal variable, or an individual id.
UNIVERSAL = -1

_LIT_KIND_RANK = {"name": 0, "exists": 1, "forall": 2}


class FixpointInInput(ValueError):
    pass


class MalformedClause(ValueError):
    pass


class Literal(NamedTuple):
    polarity: bool
    kind: str  # "name" | "exists" | "forall"
    sym: int   # concept id for "name"; definer id under a quantifier
    role: int  # role id for quantified literals, -1 otherwise
    term: int  # UNIVERSAL or an individual id

    def key(self):
        return (self.term, _LIT_KIND_RANK[self.kind], self.sym, self.role,
                self.polarity)

    def complement(self) -> "Literal":
        return self._replace(polarity=not self.polarity)


def name_lit(polarity: bool, sym: int, term: int) -> Literal:
    return Literal(polarity, "name", sym, -1, term)


def quant_lit(quantifier: str, role: int, definer: int, term: int) -> Literal:
    if not is_definer(definer):
        raise MalformedClause("only definers may appear under quantifiers")
    return Literal(True, quantifier, definer, role, term)


def literal_concept(lit: Literal) -> Concept:
    if lit.kind == "name":
        c = m.name(lit.sym)
        return c if lit.polarity else m.neg(c)
    if not lit.polarity:
        raise MalformedClause("quantified literals are always positive")
    filler = m.name(lit.sym)
    return m.exists(lit.role, filler) if lit.kind == "exists" else m.forall(lit.role, filler)


@dataclass(frozen=True)
class Clause:
    id: int
    literals: tuple[Literal, ...]
    origin: str                      # "ontology" | "observation" | "definer" | "derived"
    origin_index: int | None = None  # axiom index for "ontology"
    rule: str | None = None          # inference rule for "derived"
    parents: tuple[int, ...] = ()

    @property
    def lit_set(self) -> frozenset[Literal]:
        return frozenset(self.literals)

    def terms(self) -> list[int]:
        seen: dict[int, None] = {}
        for lit in self.literals:
            seen.setdefault(lit.term)
        return list(seen)


def _prepare_literals(literals: Iterable[Literal]) -> tuple[Literal, ...] | None:
    """Sort and deduplicate; None if tautological or side-condition violating."""
    unique = sorted(set(literals), key=Literal.key)
    seen = set(unique)
    neg_definers = 0
    for lit in unique:
        if lit.complement() in seen:
            return None  # tautology
        if lit.kind == "name" and not lit.polarity and is_definer(lit.sym):
            if lit.term != UNIVERSAL:
                return None  # no clause may contain not D(a)
            neg_definers += 1
    if neg_definers > 1:
        return None
    return tuple(unique)


class ClauseSet:
    """Clauses plus the ground role assertions they are saturated against."""

    def __init__(self) -> None:
        self.clauses: list[Clause] = []
        self.alive: list[bool] = []
        self._by_key: dict[tuple[Literal, ...], int] = {}
        self.role_assertions: list[RoleAssertion] = []
        self._role_seen: set[RoleAssertion] = set()

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def alive_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if self.alive[c.id - 1]]

    def is_alive(self, cid: int) -> bool:
        return self.alive[cid - 1]

    def kill(self, cid: int) -> None:
        self.alive[cid - 1] = False

    def get(self, cid: int) -> Clause:
        return self.clauses[cid - 1]

    def find(self, literals: Iterable[Literal]) -> Clause | None:
        lits = _prepare_literals(literals)
        if lits is None:
            return None
        cid = self._by_key.get(lits)
        return self.clauses[cid - 1] if cid is not None else None

    def add(self, literals: Iterable[Literal], origin: str,
            origin_index: int | None = None, rule: str | None = None,
            parents: tuple[int, ...] = ()) -> tuple[Clause | None, bool]:
        """Add a clause; returns (clause, created).

        Returns (None, False) when the literals form a tautology or violate
        the negative-definer side condition (such conclusions are discarded).
        """
        lits = _prepare_literals(literals)
        if lits is None:
            return None, False
        existing = self._by_key.get(lits)
        if existing is not None:
            return self.clauses[existing - 1], False
        clause = Clause(len(self.clauses) + 1, lits, origin, origin_index, rule, parents)
        self.clauses.append(clause)
        self.alive.append(True)
        self._by_key[lits] = clause.id
        return clause, True

    def add_role_assertion(self, ra: RoleAssertion) -> None:
        if ra not in self._role_seen:
            self._role_seen.add(ra)
            self.role_assertions.append(ra)

    def filtered(self, keep: Callable[[Clause], bool]) -> "ClauseSet":
        """A new set sharing the surviving clause objects (ids preserved)."""
        out = ClauseSet()
        out.clauses = list(self.clauses)
        out.alive = [self.alive[c.id - 1] and keep(c) for c in self.clauses]
        out._by_key = dict(self._by_key)
        out.role_assertions = list(self.role_assertions)
        out._role_seen = set(self._role_seen)
        return out


class DefinerRegistry:
    """Allocates definer symbols and memoizes them.

    Structural memoization: the definer for a filler concept is keyed on
    the normalized filler, so the same filler in different axioms shares
    one definer.  Combined definers (for D1 and D2 during role
    propagation) are keyed on the set of base definers they stand for,
    which caps the definer space at the powerset of the introduced ones.
    """

    def __init__(self) -> None:
        self.definitions: dict[int, Concept] = {}
        self._by_filler: dict[Concept, int] = {}
        self.base: dict[int, frozenset[int]] = {}
        self._by_base: dict[frozenset[int], int] = {}
        self._count = 0

    def _fresh(self, definition: Concept, base: frozenset[int] | None = None) -> int:
        d = definer_id(self._count)
        self._count += 1
        self.definitions[d] = definition
        self.base[d] = base if base is not None else frozenset((d,))
        self._by_base[self.base[d]] = d
        return d

    def for_filler(self, filler: Concept) -> tuple[int, bool]:
        key = m.normalize(filler)
        d = self._by_filler.get(key)
        if d is not None:
            return d, False
        d = self._fresh(filler)
        self._by_filler[key] = d
        return d, True

    def combine(self, d1: int, d2: int) -> tuple[int, bool]:
        union = self.base[d1] | self.base[d2]
        existing = self._by_base.get(union)
        if existing is not None:
            return existing, False
        d = self._fresh(m.conj(m.name(d1), m.name(d2)), union)
        return d, True

    def display(self, d: int) -> str:
        indexes = sorted(b - DEFINER_MIN + 1 for b in self.base.get(d, (d,)))
        return "D" + "".join(str(i) for i in indexes)

    def __contains__(self, d: int) -> bool:
        return d in self.definitions

    def __len__(self) -> int:
        return self._count


# ---------------------------------------------------------------------------
# Clausification
# ---------------------------------------------------------------------------

class _Clausifier:
    def __init__(self, cs: ClauseSet, reg: DefinerRegistry):
        self.cs = cs
        self.reg = reg

    def cnf(self, c: Concept, term: int) -> list[list[Literal]]:
        """CNF of an NNF concept at a term; quantified subconcepts get definers."""
        kind = c.kind
        if kind == m.TOP:
            return []
        if kind == m.BOT:
            return [[]]
        if kind == m.NAME:
            return [[name_lit(True, c.sym, term)]]
        if kind == m.NOT:
            if c.left.kind != m.NAME:
                raise MalformedClause("input concept is not in NNF")
            return [[name_lit(False, c.left.sym, term)]]
        if kind == m.AND:
            return self.cnf(c.left, term) + self.cnf(c.right, term)
        if kind == m.OR:
            left = self.cnf(c.left, term)
            right = self.cnf(c.right, term)
            return [l + r for l in left for r in right]
        if kind in (m.EXISTS, m.FORALL):
            d = self.definer_for(c.left)
            quantifier = "exists" if kind == m.EXISTS else "forall"
            return [[quant_lit(quantifier, c.role, d, term)]]
        raise FixpointInInput("fixpoints are not allowed in clausified input")

    def definer_for(self, filler: Concept) -> int:
        d, created = self.reg.for_filler(filler)
        if created:
            for lits in self.cnf(filler, UNIVERSAL):
                self.cs.add([name_lit(False, d, UNIVERSAL)] + lits, "definer")
        return d

    def add_concept(self, c: Concept, term: int, origin: str,
                    origin_index: int | None, extra: Literal | None = None) -> None:
        for lits in self.cnf(m.simplify(m.nnf(c)), term):
            if extra is not None:
                lits = lits + [extra]
            self.cs.add(lits, origin, origin_index)

    def add_disjunctive(self, ax: DisjunctiveAssertion, origin: str,
                        origin_index: int | None) -> None:
        parts = [self.cnf(m.simplify(m.nnf(c)), ind) for c, ind in ax.disjuncts]
        combos: list[list[Literal]] = [[]]
        for clause_lists in parts:
            combos = [acc + lits for acc in combos for lits in clause_lists]
        for lits in combos:
            self.cs.add(lits, origin, origin_index)


def annotate_axiom(ax: ConceptAssertion | DisjunctiveAssertion,
                   annotation: int) -> ConceptAssertion | DisjunctiveAssertion:
    """Disjoin the annotation concept into every disjunct of the axiom."""
    label = m.name(annotation)
    if isinstance(ax, ConceptAssertion):
        return ConceptAssertion(m.disj(label, ax.concept), ax.individual)
    if isinstance(ax, DisjunctiveAssertion):
        return DisjunctiveAssertion(tuple((m.disj(label, c), i) for c, i in ax.disjuncts))
    raise TypeError("only ABox concept axioms can be annotated")


def clausify(onto: Ontology,
             negated_obs: ConceptAssertion | DisjunctiveAssertion | None = None,
             annotation: int | None = None) -> tuple[ClauseSet, DefinerRegistry]:
    """Convert an ontology plus an optional negated observation to clauses.

    With an annotation symbol, the annotation is added as an extra
    positive literal to every clause originating from the negated
    observation (and only those).
    """
    for ax in onto.axioms():
        if m.axiom_has_fixpoint(ax):
            raise FixpointInInput("ontology contains fixpoint concepts")
    if negated_obs is not None and m.axiom_has_fixpoint(negated_obs):
        raise FixpointInInput("observation contains fixpoint concepts")

    cs = ClauseSet()
    reg = DefinerRegistry()
    cl = _Clausifier(cs, reg)
    for index, ax in enumerate(onto.axioms()):
        if isinstance(ax, GCI):
            cl.add_concept(m.disj(m.neg(ax.lhs), ax.rhs), UNIVERSAL, "ontology", index)
        elif isinstance(ax, ConceptAssertion):
            cl.add_concept(ax.concept, ax.individual, "ontology", index)
        elif isinstance(ax, RoleAssertion):
            cs.add_role_assertion(ax)
        elif isinstance(ax, DisjunctiveAssertion):
            cl.add_disjunctive(ax, "ontology", index)
        else:
            raise TypeError(f"unknown axiom type {type(ax).__name__}")

    if negated_obs is not None:
        obs_ax = negated_obs
        if annotation is not None:
            obs_ax = annotate_axiom(obs_ax, annotation)
        if isinstance(obs_ax, ConceptAssertion):
            cl.add_concept(obs_ax.concept, obs_ax.individual, "observation", None)
        else:
            cl.add_disjunctive(obs_ax, "observation", None)
    return cs, reg


# ---------------------------------------------------------------------------
# Back-conversion (definers left in place)
# ---------------------------------------------------------------------------

def clause_to_axiom(clause: Clause,
                    resolve: Callable[[Concept], Concept] | None = None):
    """Group a clause back into a GCI or an (possibly disjunctive) assertion.

    ``resolve`` post-processes each per-term concept (used by definer
    elimination to substitute solutions); by default concepts keep their
    definer names.
    """
    resolve = resolve if resolve is not None else (lambda c: c)
    terms = clause.terms()
    if not terms:
        return GCI(m.top(), m.bot())
    if any(t == UNIVERSAL for t in terms):
        if len(terms) > 1:
            raise MalformedClause("clause mixes the universal variable with individuals")
        negatives = [l for l in clause.literals if not l.polarity]
        positives = [l for l in clause.literals if l.polarity]
        lhs = m.conj_all([m.name(l.sym) for l in negatives])
        rhs = resolve(m.disj_all([literal_concept(l) for l in positives]))
        return GCI(resolve(lhs), rhs)
    groups: dict[int, list[Literal]] = {}
    for lit in clause.literals:
        groups.setdefault(lit.term, []).append(lit)
    parts = [(resolve(m.disj_all([literal_concept(l) for l in lits])), term)
             for term, lits in sorted(groups.items())]
    if len(parts) == 1:
        concept, term = parts[0]
        return ConceptAssertion(concept, term)
    return DisjunctiveAssertion(tuple(parts))


def declausify_context(cs: ClauseSet, reg: DefinerRegistry) -> Ontology:
    """Group clauses back into axioms, definer symbols still present."""
    axioms = [clause_to_axiom(c) for c in cs.alive_clauses()]
    axioms.extend(cs.role_assertions)
    return Ontology.from_axioms(axioms)


# ---------------------------------------------------------------------------
# Debug dump in the derivation-trace notation
# ---------------------------------------------------------------------------

def render_literal(lit: Literal, table: SymbolTable,
                   reg: DefinerRegistry | None = None) -> str:
    def sym_name(s: int) -> str:
        if reg is not None and is_definer(s):
            return reg.display(s)
        return table.name_of(s)

    if lit.kind == "name":
        base = sym_name(lit.sym)
        return base if lit.polarity else f"not {base}"
    word = lit.kind
    return f"{word} {table.name_of(lit.role)}.{sym_name(lit.sym)}"


def render_clause(clause: Clause, table: SymbolTable,
                  reg: DefinerRegistry | None = None) -> str:
    if not clause.literals:
        return "Bot"
    terms = clause.terms()
    if len(terms) == 1:
        term = terms[0]
        term_str = "x" if term == UNIVERSAL else table.name_of(term)
        body = " or ".join(render_literal(l, table, reg) for l in clause.literals)
        return f"({body})({term_str})"
    parts = []
    for lit in clause.literals:
        term_str = "x" if lit.term == UNIVERSAL else table.name_of(lit.term)
        parts.append(f"{render_literal(lit, table, reg)}({term_str})")
    return " or ".join(parts)


def render_clause_set(cs: ClauseSet, table: SymbolTable,
                      reg: DefinerRegistry | None = None,
                      alive_only: bool = True) -> str:
    lines = []
    for clause in cs.clauses:
        if alive_only and not cs.is_alive(clause.id):
            continue
        suffix = ""
        if clause.rule is not None:
            suffix = f"  {clause.rule}({','.join(str(p) for p in clause.parents)})"
        lines.append(f"{clause.id}. {render_clause(clause, table, reg)}{suffix}")
    return "\n".join(lines)

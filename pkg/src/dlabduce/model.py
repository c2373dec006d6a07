"""Core immutable model: concepts, axioms, ontologies, hypotheses.

Concepts are hash-consed: every constructor call goes through an intern
pool keyed on the node structure, so structurally equal concepts are the
same Python object and equality is identity.  Saturation compares
thousands of literals, which makes this worthwhile.

Conjunction and disjunction are stored as right-nested binary nodes;
``normalize`` flattens, deduplicates and sorts n-ary chains into a
canonical right-nested form used for display and equality tests.

Fixpoint binders (``lfp``/``gfp``) use de Bruijn indices internally --
``FixpointVar(0)`` is the innermost binder -- which keeps substitution
during definer elimination capture-free.  Variable names exist only in
the text format.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .symbols import (
    SymbolSet,
    SymbolTable,
    is_annotation,
    is_concept_id,
    is_definer,
    is_individual_id,
    is_role_id,
)

# Node kinds.
TOP = "top"
BOT = "bot"
NAME = "name"
NOT = "not"
AND = "and"
OR = "or"
EXISTS = "exists"
FORALL = "forall"
LFP = "lfp"
GFP = "gfp"
VAR = "var"

_KIND_RANK = {
    TOP: 0, BOT: 1, NAME: 2, VAR: 3, NOT: 4,
    AND: 5, OR: 6, EXISTS: 7, FORALL: 8, LFP: 9, GFP: 10,
}


class Concept:
    """A node of the concept AST.  Construct via the factory functions."""

    __slots__ = ("kind", "sym", "role", "left", "right", "cid",
                 "free_depth", "has_fixpoint", "has_definer", "has_annotation",
                 "_skey", "_sig")

    def __init__(self, kind, sym, role, left, right, cid):
        self.kind = kind
        self.sym = sym
        self.role = role
        self.left = left
        self.right = right
        self.cid = cid
        kids = [k for k in (left, right) if k is not None]
        fd = max((k.free_depth for k in kids), default=0)
        if kind == VAR:
            fd = sym + 1
        elif kind in (LFP, GFP):
            fd = max(0, fd - 1)
        self.free_depth = fd
        self.has_fixpoint = kind in (LFP, GFP, VAR) or any(k.has_fixpoint for k in kids)
        self.has_definer = (kind == NAME and is_definer(sym)) or any(k.has_definer for k in kids)
        self.has_annotation = (kind == NAME and is_annotation(sym)) or any(
            k.has_annotation for k in kids)
        self._skey = None
        self._sig = None

    def __repr__(self) -> str:  # debug only; user-facing text lives in parser.render
        if self.kind == NAME:
            return f"Name({self.sym})"
        if self.kind == VAR:
            return f"Var({self.sym})"
        kids = ",".join(repr(k) for k in (self.left, self.right) if k is not None)
        role = f"r{self.role}," if self.role is not None else ""
        return f"{self.kind}({role}{kids})"

    def skey(self):
        """Structural sort key; total order independent of interning order."""
        if self._skey is None:
            parts = [_KIND_RANK[self.kind], self.sym if self.sym is not None else -1,
                     self.role if self.role is not None else -1]
            if self.left is not None:
                parts.append(self.left.skey())
            if self.right is not None:
                parts.append(self.right.skey())
            self._skey = tuple(parts)
        return self._skey


_POOL: dict[tuple, Concept] = {}
_POOL_LOCK = threading.Lock()
_CID = itertools.count()


def _intern(kind, sym=None, role=None, left=None, right=None) -> Concept:
    key = (kind, sym, role,
           left.cid if left is not None else -1,
           right.cid if right is not None else -1)
    node = _POOL.get(key)
    if node is not None:
        return node
    with _POOL_LOCK:
        node = _POOL.get(key)
        if node is None:
            node = Concept(kind, sym, role, left, right, next(_CID))
            _POOL[key] = node
    return node


def top() -> Concept:
    return _intern(TOP)


def bot() -> Concept:
    return _intern(BOT)


def name(sid: int) -> Concept:
    if not is_concept_id(sid):
        raise ValueError(f"{sid} is not a concept id")
    return _intern(NAME, sym=sid)


def neg(c: Concept) -> Concept:
    return _intern(NOT, left=c)


def conj(a: Concept, b: Concept) -> Concept:
    return _intern(AND, left=a, right=b)


def disj(a: Concept, b: Concept) -> Concept:
    return _intern(OR, left=a, right=b)


def exists(role: int, filler: Concept) -> Concept:
    if not is_role_id(role):
        raise ValueError(f"{role} is not a role id")
    return _intern(EXISTS, role=role, left=filler)


def forall(role: int, filler: Concept) -> Concept:
    if not is_role_id(role):
        raise ValueError(f"{role} is not a role id")
    return _intern(FORALL, role=role, left=filler)


def lfp(body: Concept) -> Concept:
    return _intern(LFP, left=body)


def gfp(body: Concept) -> Concept:
    return _intern(GFP, left=body)


def fixvar(index: int) -> Concept:
    if index < 0:
        raise ValueError("de Bruijn index must be >= 0")
    return _intern(VAR, sym=index)


def conj_all(concepts: Iterable[Concept]) -> Concept:
    items = list(concepts)
    if not items:
        return top()
    out = items[-1]
    for c in reversed(items[:-1]):
        out = conj(c, out)
    return out


def disj_all(concepts: Iterable[Concept]) -> Concept:
    items = list(concepts)
    if not items:
        return bot()
    out = items[-1]
    for c in reversed(items[:-1]):
        out = disj(c, out)
    return out


# ---------------------------------------------------------------------------
# Negation normal form
# ---------------------------------------------------------------------------

def nnf(c: Concept) -> Concept:
    """Push negation down to names and fixpoint variables.

    Connectives and quantifiers dualise as usual.  A negated fixpoint
    flips its binder (gfp <-> lfp) and keeps the body as written, which
    reproduces the output convention of the underlying forgetting
    calculus for cyclic interpolants.  Fixpoint-free concepts are
    negated classically.
    """
    return _nnf(c, False)


def _nnf(c: Concept, negated: bool) -> Concept:
    kind = c.kind
    if kind == TOP:
        return bot() if negated else top()
    if kind == BOT:
        return top() if negated else bot()
    if kind == NAME:
        return neg(c) if negated else c
    if kind == VAR:
        return neg(c) if negated else c
    if kind == NOT:
        return _nnf(c.left, not negated)
    if kind == AND:
        l, r = _nnf(c.left, negated), _nnf(c.right, negated)
        return disj(l, r) if negated else conj(l, r)
    if kind == OR:
        l, r = _nnf(c.left, negated), _nnf(c.right, negated)
        return conj(l, r) if negated else disj(l, r)
    if kind == EXISTS:
        f = _nnf(c.left, negated)
        return forall(c.role, f) if negated else exists(c.role, f)
    if kind == FORALL:
        f = _nnf(c.left, negated)
        return exists(c.role, f) if negated else forall(c.role, f)
    if kind == GFP:
        body = _nnf(c.left, False)
        return lfp(body) if negated else gfp(body)
    if kind == LFP:
        body = _nnf(c.left, False)
        return gfp(body) if negated else lfp(body)
    raise AssertionError(f"unknown concept kind {kind}")


def is_nnf(c: Concept) -> bool:
    if c.kind == NOT:
        return c.left.kind in (NAME, VAR)
    return all(is_nnf(k) for k in (c.left, c.right) if k is not None)


# ---------------------------------------------------------------------------
# Canonical form and simplification
# ---------------------------------------------------------------------------

def _flatten(c: Concept, kind: str, out: list[Concept]) -> None:
    if c.kind == kind:
        _flatten(c.left, kind, out)
        _flatten(c.right, kind, out)
    else:
        out.append(normalize(c))


def normalize(c: Concept) -> Concept:
    """Canonical display form: and/or chains flattened, sorted, deduplicated."""
    kind = c.kind
    if kind in (AND, OR):
        parts: list[Concept] = []
        _flatten(c, kind, parts)
        parts.sort(key=Concept.skey)
        unique = [p for i, p in enumerate(parts) if i == 0 or p is not parts[i - 1]]
        build = conj_all if kind == AND else disj_all
        return build(unique)
    if kind == NOT:
        return neg(normalize(c.left))
    if kind == EXISTS:
        return exists(c.role, normalize(c.left))
    if kind == FORALL:
        return forall(c.role, normalize(c.left))
    if kind == LFP:
        return lfp(normalize(c.left))
    if kind == GFP:
        return gfp(normalize(c.left))
    return c


def simplify(c: Concept) -> Concept:
    """Boolean-constant simplification, bottom-up.

    Handles Top/Bot absorption in and/or, quantifier degenerate cases
    (exists r.Bot = Bot, forall r.Top = Top) and drops binders whose
    variable is unused.  Does not reorder anything.
    """
    kind = c.kind
    if kind == NOT:
        inner = simplify(c.left)
        if inner.kind == TOP:
            return bot()
        if inner.kind == BOT:
            return top()
        return neg(inner)
    if kind == AND:
        l, r = simplify(c.left), simplify(c.right)
        if l.kind == BOT or r.kind == BOT:
            return bot()
        if l.kind == TOP:
            return r
        if r.kind == TOP:
            return l
        if l is r:
            return l
        return conj(l, r)
    if kind == OR:
        l, r = simplify(c.left), simplify(c.right)
        if l.kind == TOP or r.kind == TOP:
            return top()
        if l.kind == BOT:
            return r
        if r.kind == BOT:
            return l
        if l is r:
            return l
        return disj(l, r)
    if kind == EXISTS:
        f = simplify(c.left)
        if f.kind == BOT:
            return bot()
        return exists(c.role, f)
    if kind == FORALL:
        f = simplify(c.left)
        if f.kind == TOP:
            return top()
        return forall(c.role, f)
    if kind in (LFP, GFP):
        body = simplify(c.left)
        if body.free_depth == 0:
            return body
        return lfp(body) if kind == LFP else gfp(body)
    return c


def replace_name(c: Concept, sid: int, replacement: Concept) -> Concept:
    """Substitute every occurrence of concept name `sid` by a closed concept."""
    if replacement.free_depth != 0:
        raise ValueError("replacement must be closed")
    if c.kind == NAME:
        return replacement if c.sym == sid else c
    if c.left is None and c.right is None:
        return c
    left = replace_name(c.left, sid, replacement) if c.left is not None else None
    right = replace_name(c.right, sid, replacement) if c.right is not None else None
    if left is c.left and right is c.right:
        return c
    return _intern(c.kind, sym=c.sym, role=c.role, left=left, right=right)


def close_over(c: Concept, sid: int, depth: int = 0) -> Concept:
    """Replace name `sid` by the fixpoint variable bound `depth` binders up."""
    if c.kind == NAME:
        return fixvar(depth) if c.sym == sid else c
    if c.kind in (LFP, GFP):
        body = close_over(c.left, sid, depth + 1)
        return c if body is c.left else _intern(c.kind, left=body)
    if c.left is None and c.right is None:
        return c
    left = close_over(c.left, sid, depth) if c.left is not None else None
    right = close_over(c.right, sid, depth) if c.right is not None else None
    if left is c.left and right is c.right:
        return c
    return _intern(c.kind, sym=c.sym, role=c.role, left=left, right=right)


def subconcepts(c: Concept) -> Iterator[Concept]:
    yield c
    if c.left is not None:
        yield from subconcepts(c.left)
    if c.right is not None:
        yield from subconcepts(c.right)


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GCI:
    lhs: Concept
    rhs: Concept


@dataclass(frozen=True)
class ConceptAssertion:
    concept: Concept
    individual: int

    def __post_init__(self):
        if not is_individual_id(self.individual):
            raise ValueError(f"{self.individual} is not an individual id")


@dataclass(frozen=True)
class RoleAssertion:
    role: int
    subject: int
    object: int


@dataclass(frozen=True)
class DisjunctiveAssertion:
    """Disjunction of concept assertions, possibly over several individuals.

    The disjunct order is preserved: order of appearance is the
    tie-breaking preference during redundancy elimination.
    """

    disjuncts: tuple[tuple[Concept, int], ...]

    def __post_init__(self):
        if len(self.disjuncts) < 2:
            raise ValueError("disjunctive assertion needs at least two disjuncts")


Axiom = Union[GCI, ConceptAssertion, RoleAssertion, DisjunctiveAssertion]
ABoxAxiom = Union[ConceptAssertion, RoleAssertion, DisjunctiveAssertion]


def normalize_axiom(ax: Axiom) -> Axiom:
    if isinstance(ax, GCI):
        return GCI(normalize(ax.lhs), normalize(ax.rhs))
    if isinstance(ax, ConceptAssertion):
        return ConceptAssertion(normalize(ax.concept), ax.individual)
    if isinstance(ax, DisjunctiveAssertion):
        return DisjunctiveAssertion(tuple((normalize(c), i) for c, i in ax.disjuncts))
    return ax


def axiom_has_fixpoint(ax: Axiom) -> bool:
    if isinstance(ax, GCI):
        return ax.lhs.has_fixpoint or ax.rhs.has_fixpoint
    if isinstance(ax, ConceptAssertion):
        return ax.concept.has_fixpoint
    if isinstance(ax, DisjunctiveAssertion):
        return any(c.has_fixpoint for c, _ in ax.disjuncts)
    return False


# ---------------------------------------------------------------------------
# Ontology
# ---------------------------------------------------------------------------

class Ontology:
    """A TBox of GCIs plus an ABox, with the symbol table they resolve in."""

    def __init__(self, tbox: Iterable[GCI] = (), abox: Iterable[ABoxAxiom] = (),
                 symbols: SymbolTable | None = None):
        from .symbols import GLOBAL_TABLE
        self.tbox: tuple[GCI, ...] = tuple(tbox)
        self.abox: tuple[ABoxAxiom, ...] = tuple(abox)
        self.symbols = symbols if symbols is not None else GLOBAL_TABLE
        for ax in self.tbox:
            if not isinstance(ax, GCI):
                raise TypeError("tbox entries must be GCIs")
        for ax in self.abox:
            if isinstance(ax, GCI):
                raise TypeError("GCIs belong in the tbox")

    @staticmethod
    def from_axioms(axioms: Iterable[Axiom], symbols: SymbolTable | None = None) -> "Ontology":
        tbox, abox = [], []
        for ax in axioms:
            (tbox if isinstance(ax, GCI) else abox).append(ax)
        return Ontology(tbox, abox, symbols)

    def axioms(self) -> tuple[Axiom, ...]:
        return self.tbox + self.abox

    def extended(self, extra: Iterable[Axiom]) -> "Ontology":
        extra = list(extra)
        return Ontology(
            self.tbox + tuple(a for a in extra if isinstance(a, GCI)),
            self.abox + tuple(a for a in extra if not isinstance(a, GCI)),
            self.symbols,
        )

    def individuals(self) -> list[int]:
        seen: dict[int, None] = {}
        for ax in self.abox:
            if isinstance(ax, ConceptAssertion):
                seen.setdefault(ax.individual)
            elif isinstance(ax, RoleAssertion):
                seen.setdefault(ax.subject)
                seen.setdefault(ax.object)
            elif isinstance(ax, DisjunctiveAssertion):
                for _, ind in ax.disjuncts:
                    seen.setdefault(ind)
        return list(seen)

    def __len__(self) -> int:
        return len(self.tbox) + len(self.abox)


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

def _concept_sig(c: Concept) -> SymbolSet:
    if c._sig is None:
        concepts: set[int] = set()
        roles: set[int] = set()
        stack = [c]
        while stack:
            node = stack.pop()
            if node.kind == NAME:
                concepts.add(node.sym)
            if node.role is not None:
                roles.add(node.role)
            if node.left is not None:
                stack.append(node.left)
            if node.right is not None:
                stack.append(node.right)
        c._sig = SymbolSet(frozenset(concepts), frozenset(roles))
    return c._sig


def signature(x) -> SymbolSet:
    """Concept and role names occurring in a concept, axiom, axiom list or ontology.

    Definer and annotation symbols are concept names and are included;
    callers that need user symbols only should filter.
    """
    if isinstance(x, Concept):
        return _concept_sig(x)
    if isinstance(x, GCI):
        return _concept_sig(x.lhs) | _concept_sig(x.rhs)
    if isinstance(x, ConceptAssertion):
        return _concept_sig(x.concept)
    if isinstance(x, RoleAssertion):
        return SymbolSet(roles=frozenset((x.role,)))
    if isinstance(x, DisjunctiveAssertion):
        out = SymbolSet()
        for c, _ in x.disjuncts:
            out = out | _concept_sig(c)
        return out
    if isinstance(x, Ontology):
        out = SymbolSet()
        for ax in x.axioms():
            out = out | signature(ax)
        return out
    if isinstance(x, (list, tuple)):
        out = SymbolSet()
        for ax in x:
            out = out | signature(ax)
        return out
    raise TypeError(f"cannot take the signature of {type(x).__name__}")


# ---------------------------------------------------------------------------
# Observations and hypotheses
# ---------------------------------------------------------------------------

class EmptyObservation(ValueError):
    pass


class RoleAssertionInObservation(ValueError):
    pass


def negate_observation(obs: list[ConceptAssertion]) -> ConceptAssertion | DisjunctiveAssertion:
    """Negate an observation {C1(a1), ..., Ck(ak)} into not C1(a1) or ... or not Ck(ak).

    Singleton observations yield a plain concept assertion; larger ones a
    disjunctive assertion (order preserved).  Concepts come out in NNF.
    """
    if not obs:
        raise EmptyObservation("observation must contain at least one assertion")
    for ax in obs:
        if isinstance(ax, RoleAssertion):
            raise RoleAssertionInObservation("observations cannot contain role assertions")
        if not isinstance(ax, ConceptAssertion):
            raise TypeError("observations are lists of concept assertions")
    negated = [(nnf(neg(ax.concept)), ax.individual) for ax in obs]
    if len(negated) == 1:
        c, ind = negated[0]
        return ConceptAssertion(c, ind)
    return DisjunctiveAssertion(tuple(negated))


@dataclass(frozen=True)
class Hypothesis:
    """A disjunction of concept assertions, one per independent explanation.

    ``conjunctive`` marks the degenerate trivial case H = psi for a
    multi-assertion observation, where the listed assertions hold jointly
    rather than disjunctively.
    """

    disjuncts: tuple[tuple[Concept, int], ...]
    contains_fixpoint: bool = False
    conjunctive: bool = False

    def __post_init__(self):
        if not self.disjuncts:
            raise ValueError("hypothesis must have at least one disjunct")
        for c, ind in self.disjuncts:
            if c.has_definer or c.has_annotation:
                raise ValueError("hypothesis leaks internal symbols")
            if not is_individual_id(ind):
                raise ValueError(f"{ind} is not an individual id")

    def axiom(self) -> ConceptAssertion | DisjunctiveAssertion:
        """The hypothesis as a single ABox axiom (requires a true disjunction)."""
        if self.conjunctive:
            raise ValueError("conjunctive hypothesis is not a single axiom")
        if len(self.disjuncts) == 1:
            c, ind = self.disjuncts[0]
            return ConceptAssertion(c, ind)
        return DisjunctiveAssertion(self.disjuncts)

    def axioms(self) -> list[ConceptAssertion]:
        """Per-disjunct assertions (for the conjunctive trivial case)."""
        return [ConceptAssertion(c, i) for c, i in self.disjuncts]


def hypothesis_signature(h: Hypothesis) -> SymbolSet:
    out = SymbolSet()
    for c, _ in h.disjuncts:
        out = out | signature(c)
    return out

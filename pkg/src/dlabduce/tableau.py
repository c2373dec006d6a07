"""ALC satisfiability and entailment with general TBoxes.

Standard completion-graph tableau.  GCIs are internalized: every node
carries nnf(not C or D) for each C SubClassOf D.  Termination comes from
subset blocking on generated nodes: a node whose label is contained in
an ancestor's label is never expanded existentially.

Disjunctions branch in a fixed order, with two prunings that keep the
search tractable without changing the result:

  * a disjunct whose atomic complement is already present is never tried,
    and a disjunction with a single surviving alternative is propagated
    deterministically;
  * every label entry carries the set of choice levels it was derived
    from, and a clash backjumps to the deepest choice that actually
    contributed to it (dependency-directed backtracking).  Choice points
    accumulate the conflicts of their failed branches, so a jump over an
    exhausted level re-raises the combined conflict.

Disjunctive ABox assertions are global branching points over their
disjuncts.  Fixpoint concepts are rejected (`FixpointUnsupported`),
never silently approximated.
"""

from __future__ import annotations

import time

from . import model as m
from .model import (
    Axiom,
    Concept,
    ConceptAssertion,
    DisjunctiveAssertion,
    GCI,
    Hypothesis,
    Ontology,
    RoleAssertion,
)
from .symbols import reserved_individual

_EMPTY: frozenset[int] = frozenset()


class FixpointUnsupported(ValueError):
    pass


class TableauBudgetExceeded(RuntimeError):
    pass


class _Clash(Exception):
    """Internal control flow; carries the union of responsible choice levels."""

    def __init__(self, conflict: frozenset[int]):
        self.conflict = conflict


class _ChoicePoint:
    __slots__ = ("mark", "alternatives", "base_dep", "next_index", "accumulated")

    def __init__(self, mark: int, alternatives, base_dep: frozenset[int]):
        self.mark = mark
        self.alternatives = alternatives
        self.base_dep = base_dep
        self.next_index = 0
        self.accumulated: set[int] = set()


class _Tableau:
    def __init__(self, kb: list[Concept], deadline: float | None):
        self.kb = kb
        self.deadline = deadline
        self.nodes: list[int] = []
        self.labels: dict[int, dict[Concept, frozenset[int]]] = {}
        self.succ: dict[int, list[tuple[int, int, frozenset[int]]]] = {}
        self.parent: dict[int, int | None] = {}
        self.global_ors: list[list[tuple[int, Concept]]] = []
        self.trail: list[tuple] = []
        self._next = 0

    # -- state mutation (everything lands on the trail) --------------------

    def new_node(self, parent: int | None, dep: frozenset[int] = _EMPTY) -> int:
        node = self._next
        self._next += 1
        self.nodes.append(node)
        self.labels[node] = {}
        self.succ[node] = []
        self.parent[node] = parent
        self.trail.append(("node", node))
        for c in self.kb:
            self.add(node, c, dep)
        return node

    def add(self, node: int, concept: Concept, dep: frozenset[int]) -> bool:
        """Label a node; returns True if new.  Raises _Clash on contradiction."""
        label = self.labels[node]
        if concept in label:
            return False
        label[concept] = dep
        self.trail.append(("lab", node, concept))
        other = None
        if concept.kind == m.BOT:
            raise _Clash(dep)
        if concept.kind == m.NAME:
            other = label.get(m.neg(concept))
        elif concept.kind == m.NOT:
            other = label.get(concept.left)
        if other is not None:
            raise _Clash(dep | other)
        return True

    def add_edge(self, node: int, role: int, target: int,
                 dep: frozenset[int]) -> None:
        self.succ[node].append((role, target, dep))
        self.trail.append(("edge", node))

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            if entry[0] == "lab":
                del self.labels[entry[1]][entry[2]]
            elif entry[0] == "edge":
                self.succ[entry[1]].pop()
            else:  # node
                node = entry[1]
                self.nodes.pop()
                del self.labels[node]
                del self.succ[node]
                del self.parent[node]
                self._next -= 1

    # -- rule application ---------------------------------------------------

    def _check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TableauBudgetExceeded("entailment check ran out of budget")

    def _refuter(self, node: int, concept: Concept) -> frozenset[int] | None:
        """Dependency of the label entry contradicting the concept, if any."""
        label = self.labels[node]
        if concept.kind == m.BOT:
            return _EMPTY
        if concept.kind == m.NAME:
            return label.get(m.neg(concept))
        if concept.kind == m.NOT and concept.left.kind == m.NAME:
            return label.get(concept.left)
        return None

    @staticmethod
    def _disjuncts(concept: Concept) -> list[Concept]:
        out: list[Concept] = []
        stack = [concept]
        while stack:
            c = stack.pop()
            if c.kind == m.OR:
                stack.append(c.right)
                stack.append(c.left)
            else:
                out.append(c)
        return out

    def _or_state(self, node: int, concept: Concept):
        """(satisfied, viable disjuncts, combined dep of the refuted ones)."""
        label = self.labels[node]
        viable: list[Concept] = []
        refuted: frozenset[int] = _EMPTY
        for d in self._disjuncts(concept):
            if d in label:
                return True, (), _EMPTY
            dep = self._refuter(node, d)
            if dep is None:
                viable.append(d)
            else:
                refuted |= dep
        return False, viable, refuted

    def _gor_state(self, alternatives):
        viable = []
        refuted: frozenset[int] = _EMPTY
        for node, c in alternatives:
            if c in self.labels[node]:
                return True, (), _EMPTY
            dep = self._refuter(node, c)
            if dep is None:
                viable.append((node, c))
            else:
                refuted |= dep
        return False, viable, refuted

    def _closure(self):
        """Apply all deterministic rules to a fixpoint.

        Returns a pending choice as (alternatives, base_dep) or None when
        saturated; raises _Clash on contradiction.
        """
        changed = True
        while changed:
            self._check_deadline()
            changed = False
            for node in list(self.nodes):
                label = self.labels[node]
                for c in list(label):
                    kind = c.kind
                    if kind == m.AND:
                        dep = label[c]
                        changed |= self.add(node, c.left, dep)
                        changed |= self.add(node, c.right, dep)
                    elif kind == m.FORALL:
                        dep = label[c]
                        for role, target, edge_dep in list(self.succ[node]):
                            if role == c.role:
                                changed |= self.add(target, c.left, dep | edge_dep)
                    elif kind == m.OR:
                        satisfied, viable, refuted = self._or_state(node, c)
                        if satisfied:
                            continue
                        if not viable:
                            raise _Clash(label[c] | refuted)
                        if len(viable) == 1:
                            changed |= self.add(node, viable[0],
                                                label[c] | refuted)
            for alternatives in self.global_ors:
                satisfied, viable, refuted = self._gor_state(alternatives)
                if satisfied:
                    continue
                if not viable:
                    raise _Clash(refuted)
                if len(viable) == 1:
                    node, c = viable[0]
                    changed |= self.add(node, c, refuted)
        # collect the first open branching point, if any
        for node in self.nodes:
            label = self.labels[node]
            for c in label:
                if c.kind == m.OR:
                    satisfied, viable, refuted = self._or_state(node, c)
                    if not satisfied:
                        return ([(node, d) for d in viable], label[c] | refuted)
        for alternatives in self.global_ors:
            satisfied, viable, refuted = self._gor_state(alternatives)
            if not satisfied:
                return (viable, refuted)
        return None

    def _blocked(self, node: int) -> bool:
        if self.parent[node] is None:
            return False
        keys = self.labels[node].keys()
        ancestor = self.parent[node]
        while ancestor is not None:
            if keys <= self.labels[ancestor].keys():
                return True
            ancestor = self.parent[ancestor]
        return False

    def _next_existential(self):
        for node in self.nodes:
            demands = [c for c in self.labels[node] if c.kind == m.EXISTS]
            if not demands:
                continue
            blocked = None
            for c in demands:
                if any(role == c.role and c.left in self.labels[target]
                       for role, target, _ in self.succ[node]):
                    continue
                if blocked is None:
                    blocked = self._blocked(node)
                if blocked:
                    break
                return node, c
        return None

    def _expand_existential(self, node: int, concept: Concept) -> None:
        dep = self.labels[node][concept]
        target = self.new_node(node, dep)
        self.add_edge(node, concept.role, target, dep)
        self.add(target, concept.left, dep)

    # -- search driver -------------------------------------------------------

    def run(self) -> bool:
        stack: list[_ChoicePoint] = []
        pending_clash: frozenset[int] | None = None
        while True:
            if pending_clash is None:
                try:
                    outcome = self._closure()
                    if outcome is None:
                        demand = self._next_existential()
                        if demand is None:
                            return True
                        self._expand_existential(*demand)
                        continue
                    alternatives, base_dep = outcome
                    stack.append(_ChoicePoint(len(self.trail), alternatives,
                                              base_dep))
                except _Clash as clash:
                    pending_clash = clash.conflict
                    continue
            # advance the top choice point (either fresh or after a clash)
            while stack:
                cp = stack[-1]
                level = len(stack)
                if pending_clash is not None:
                    if level not in pending_clash:
                        # this choice did not contribute; unwind it entirely
                        stack.pop()
                        self.undo_to(cp.mark)
                        continue
                    cp.accumulated |= (pending_clash - {level})
                    self.undo_to(cp.mark)
                    pending_clash = None
                if cp.next_index >= len(cp.alternatives):
                    stack.pop()
                    self.undo_to(cp.mark)
                    pending_clash = frozenset(cp.accumulated) | cp.base_dep
                    continue
                node, concept = cp.alternatives[cp.next_index]
                cp.next_index += 1
                try:
                    self.add(node, concept, cp.base_dep | {level})
                except _Clash as clash:
                    pending_clash = clash.conflict
                    continue
                break
            else:
                if pending_clash is not None:
                    return False


def _prepared(c: Concept) -> Concept:
    if c.has_fixpoint:
        raise FixpointUnsupported("tableau reasoning does not support fixpoints")
    return m.simplify(m.nnf(c))


def _satisfiable(tbox, abox, deadline_ms: float | None = None) -> bool:
    kb: list[Concept] = []
    seen: set[Concept] = set()
    for gci in tbox:
        c = _prepared(m.disj(m.neg(gci.lhs), gci.rhs))
        if c.kind != m.TOP and c not in seen:
            seen.add(c)
            kb.append(c)
    deadline = None
    if deadline_ms is not None:
        deadline = time.monotonic() + deadline_ms / 1000.0

    tab = _Tableau(kb, deadline)
    node_of: dict[int, int] = {}

    def node_for(individual: int) -> int:
        node = node_of.get(individual)
        if node is None:
            node = tab.new_node(None)
            node_of[individual] = node
        return node

    try:
        pending: list[tuple[int, Concept]] = []
        for ax in abox:
            if isinstance(ax, ConceptAssertion):
                pending.append((node_for(ax.individual), _prepared(ax.concept)))
            elif isinstance(ax, RoleAssertion):
                tab.add_edge(node_for(ax.subject), ax.role, node_for(ax.object),
                             _EMPTY)
            elif isinstance(ax, DisjunctiveAssertion):
                tab.global_ors.append(
                    [(node_for(ind), _prepared(c)) for c, ind in ax.disjuncts])
            else:
                raise TypeError(f"unsupported ABox axiom {type(ax).__name__}")
        if not tab.nodes:
            tab.new_node(None)  # models are non-empty; give the TBox a witness
        for node, concept in pending:
            tab.add(node, concept, _EMPTY)
    except _Clash:
        return False
    return tab.run()


def is_consistent(onto: Ontology, deadline_ms: float | None = None) -> bool:
    """True iff the ontology has a model."""
    return _satisfiable(onto.tbox, onto.abox, deadline_ms)


def _negated_axiom_assertions(ax: Axiom) -> list[ConceptAssertion]:
    if isinstance(ax, GCI):
        witness = reserved_individual()
        return [ConceptAssertion(m.conj(ax.lhs, m.neg(ax.rhs)), witness)]
    if isinstance(ax, ConceptAssertion):
        return [ConceptAssertion(m.neg(ax.concept), ax.individual)]
    if isinstance(ax, DisjunctiveAssertion):
        return [ConceptAssertion(m.neg(c), ind) for c, ind in ax.disjuncts]
    raise TypeError(f"cannot negate {type(ax).__name__} for entailment")


def entails(onto: Ontology, ax: Axiom, deadline_ms: float | None = None) -> bool:
    """True iff every model of the ontology satisfies the axiom.

    Implemented as inconsistency of the ontology plus the negated axiom;
    a GCI is refuted at a fresh witness individual.
    """
    extra = _negated_axiom_assertions(ax)
    return not _satisfiable(onto.tbox, list(onto.abox) + extra, deadline_ms)


def entails_all(onto: Ontology, axioms, deadline_ms: float | None = None) -> bool:
    return all(entails(onto, ax, deadline_ms) for ax in axioms)


def entails_hypothesis(onto: Ontology, hyp: Hypothesis,
                       obs: list[ConceptAssertion],
                       deadline_ms: float | None = None) -> bool:
    """Definition check: does the ontology plus the hypothesis entail the
    observation?  A disjunctive hypothesis is checked by case split."""
    if hyp.contains_fixpoint:
        raise FixpointUnsupported("hypothesis contains fixpoints")
    if hyp.conjunctive:
        probe = onto.extended(hyp.axioms())
        return entails_all(probe, obs, deadline_ms)
    for concept, ind in hyp.disjuncts:
        probe = onto.extended([ConceptAssertion(concept, ind)])
        if not entails_all(probe, obs, deadline_ms):
            return False
    return True


def equivalent_under(onto: Ontology, ax1: Axiom, ax2: Axiom,
                     deadline_ms: float | None = None) -> bool:
    """Mutual entailment of two axioms modulo the ontology."""
    return (entails(onto.extended([ax1]), ax2, deadline_ms)
            and entails(onto.extended([ax2]), ax1, deadline_ms))

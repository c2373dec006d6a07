"""The abduction pipeline: precondition checks, annotated forgetting,
redundancy elimination and contrapositive hypothesis assembly.

Given an ontology O, an observation psi and a forgetting signature F:

  (1) forget F from (O, not psi), with an annotation concept disjoined
      into the clauses stemming from not psi so that axioms depending on
      the observation can be recognised by their signature;
  (2) keep only the annotation-carrying axioms (the approximation), and
      in full mode additionally drop every axiom entailed by O together
      with the remaining candidates;
  (3) negate what is left into the hypothesis, one disjunct per axiom.

Modes: ``approx`` negates the approximation directly (plus a consistency
check), ``full`` runs the entailment-based reduction after the
approximation, ``full-no-approx`` reduces the whole interpolant without
the annotation filter (benchmark baseline).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from . import model as m
from . import tableau
from .clauses import annotate_axiom
from .forgetting import Budget, BudgetExceeded, UniformInterpolant, forget
from .model import (
    Axiom,
    ConceptAssertion,
    DisjunctiveAssertion,
    GCI,
    Hypothesis,
    Ontology,
    negate_observation,
    signature,
)
from .parser import render_axiom
from .symbols import SymbolSet, annotation_id, is_annotation, reserved_individual

MODES = ("approx", "full", "full-no-approx")


class AbductionError(ValueError):
    pass


class InconsistentOntology(AbductionError):
    pass


class ObservationInconsistent(AbductionError):
    pass


class ObservationAlreadyEntailed(AbductionError):
    pass


class NoHypothesis(AbductionError):
    pass


class UnsupportedMultiIndividualAxiom(AbductionError):
    pass


@dataclass
class AbductionRequest:
    ontology: Ontology
    observation: list[ConceptAssertion]
    forget: SymbolSet
    mode: str = "full"
    budget_ms: float = 300_000.0
    want_trace: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.forget.roles:
            raise AbductionError("forgetting signature cannot contain role symbols")
        allowed = signature(self.ontology).concepts | signature(list(self.observation)).concepts
        missing = self.forget.concepts - allowed
        if missing:
            raise AbductionError(
                "forgetting signature must be drawn from the ontology and "
                f"observation; unknown ids {sorted(missing)}")


@dataclass
class AbductionReport:
    mode: str
    hypothesis: Hypothesis | None = None
    no_hypothesis_reason: str | None = None
    v_size: int = 0
    v_app_size: int = 0
    v_star_size: int = 0
    removed_filter: list[Axiom] = field(default_factory=list)
    removed_reduce: list[Axiom] = field(default_factory=list)
    retained_unchecked: list[Axiom] = field(default_factory=list)
    gci_disjuncts: int = 0
    t_forget_ms: float = 0.0
    t_filter_ms: float = 0.0
    t_reduce_ms: float = 0.0
    t_total_ms: float = 0.0
    fixpoint: bool = False
    trivial: bool = False
    timeout: bool = False
    conditions: dict[str, str] = field(default_factory=dict)
    trace: str | None = None

    @property
    def removed_v_to_vapp(self) -> int:
        return len(self.removed_filter)

    @property
    def removed_vapp_to_vstar(self) -> int:
        return len(self.removed_reduce)

    def hypothesis_size(self) -> int:
        return len(self.hypothesis.disjuncts) if self.hypothesis is not None else 0

    def to_dict(self, table=None) -> dict:
        from .parser import render
        return {
            "mode": self.mode,
            "hypothesis": render(self.hypothesis, table) if self.hypothesis else None,
            "no_hypothesis_reason": self.no_hypothesis_reason,
            "v_size": self.v_size,
            "v_app_size": self.v_app_size,
            "v_star_size": self.v_star_size,
            "mean_redund_removed_v_to_vapp": self.removed_v_to_vapp,
            "mean_redund_removed_vapp_to_vstar": self.removed_vapp_to_vstar,
            "removed_at_filter": [render_axiom(ax, table) for ax in self.removed_filter],
            "removed_at_reduce": [render_axiom(ax, table) for ax in self.removed_reduce],
            "retained_unchecked": [render_axiom(ax, table) for ax in self.retained_unchecked],
            "size_h_disjuncts": self.hypothesis_size(),
            "t_forget_ms": round(self.t_forget_ms, 3),
            "t_filter_ms": round(self.t_filter_ms, 3),
            "t_reduce_ms": round(self.t_reduce_ms, 3),
            "t_total_ms": round(self.t_total_ms, 3),
            "fixpoint": self.fixpoint,
            "trivial": self.trivial,
            "timeout": self.timeout,
            "conditions": dict(self.conditions),
        }

    def to_json(self, table=None) -> str:
        return json.dumps(self.to_dict(table), indent=2)


def check_preconditions(req: AbductionRequest,
                        deadline_ms: float | None = None) -> bool:
    """Verify the admissibility conditions; returns True when the trivial
    hypothesis H = psi applies (no forgotten symbol occurs in psi)."""
    onto = req.ontology
    if not tableau.is_consistent(onto, deadline_ms):
        raise InconsistentOntology("the background ontology is inconsistent")
    if not tableau.is_consistent(onto.extended(req.observation), deadline_ms):
        raise ObservationInconsistent("the observation contradicts the ontology")
    if tableau.entails_all(onto, req.observation, deadline_ms):
        raise ObservationAlreadyEntailed("the observation already follows "
                                         "from the ontology")
    psi_concepts = signature(list(req.observation)).concepts
    return not (req.forget.concepts & psi_concepts)


def annotate(negated_obs: ConceptAssertion | DisjunctiveAssertion
             ) -> tuple[ConceptAssertion | DisjunctiveAssertion, int]:
    """Disjoin a fresh annotation concept into the negated observation.

    One annotation name suffices for the whole observation; it lives in a
    reserved id range, so it cannot collide with ontology symbols and can
    never be listed for forgetting.
    """
    label = annotation_id()
    return annotate_axiom(negated_obs, label), label


def filter_annotated(v: UniformInterpolant, label: int) -> list[Axiom]:
    """Keep the axioms carrying the annotation, with the annotation
    replaced by Bot and the result simplified."""
    kept: list[Axiom] = []
    for ax in v.axioms:
        if label in signature(ax).concepts:
            kept.append(_strip_annotation(ax, label))
    return kept


def _strip_annotation(ax: Axiom, label: int) -> Axiom:
    def strip(c: m.Concept) -> m.Concept:
        return m.simplify(m.replace_name(c, label, m.bot()))

    if isinstance(ax, ConceptAssertion):
        return ConceptAssertion(strip(ax.concept), ax.individual)
    if isinstance(ax, DisjunctiveAssertion):
        return DisjunctiveAssertion(tuple((strip(c), i) for c, i in ax.disjuncts))
    if isinstance(ax, GCI):
        return GCI(strip(ax.lhs), strip(ax.rhs))
    return ax


def reduce(candidates: list[Axiom], onto: Ontology,
           budget: Budget | None = None
           ) -> tuple[list[Axiom], list[Axiom], list[Axiom]]:
    """Sequential redundancy elimination (order of appearance wins ties).

    An axiom is dropped when the ontology together with the remaining
    candidates entails it.  Axioms containing fixpoints, and axioms whose
    entailment check exceeds the budget, are retained and reported as
    unchecked.  Returns (kept, removed, retained_unchecked).
    """
    remaining = list(candidates)
    removed: list[Axiom] = []
    unchecked: list[Axiom] = []
    i = 0
    while i < len(remaining):
        ax = remaining[i]
        if m.axiom_has_fixpoint(ax):
            unchecked.append(ax)
            i += 1
            continue
        premises = [a for j, a in enumerate(remaining)
                    if j != i and not m.axiom_has_fixpoint(a)]
        deadline = budget.remaining_ms() if budget is not None else None
        if deadline is not None and deadline <= 0:
            unchecked.append(ax)
            i += 1
            continue
        try:
            redundant = tableau.entails(onto.extended(premises), ax, deadline)
        except tableau.TableauBudgetExceeded:
            unchecked.append(ax)
            i += 1
            continue
        if redundant:
            removed.append(remaining.pop(i))
        else:
            i += 1
    return remaining, removed, unchecked


def assemble_hypothesis(vstar: list[Axiom]) -> tuple[Hypothesis, int]:
    """Negate the reduced interpolant into a hypothesis.

    Each assertion not C(a) becomes the disjunct nnf(C)(a); a greatest
    fixpoint negates to a least fixpoint.  A GCI is negated at a fresh
    internal witness individual; the count of such disjuncts is returned
    so callers can flag them.
    """
    if not vstar:
        raise NoHypothesis("the reduced uniform interpolant is empty")
    disjuncts: list[tuple[m.Concept, int]] = []
    gci_count = 0
    for ax in vstar:
        if isinstance(ax, ConceptAssertion):
            disjuncts.append((m.nnf(m.neg(ax.concept)), ax.individual))
        elif isinstance(ax, GCI):
            witness = reserved_individual(gci_count)
            gci_count += 1
            disjuncts.append((m.nnf(m.conj(ax.lhs, m.neg(ax.rhs))), witness))
        elif isinstance(ax, DisjunctiveAssertion):
            individuals = {ind for _, ind in ax.disjuncts}
            if len(individuals) > 1:
                raise UnsupportedMultiIndividualAxiom(
                    "cannot negate a disjunctive axiom spanning several "
                    "individuals into a single hypothesis disjunct")
            ind = next(iter(individuals))
            whole = m.disj_all([c for c, _ in ax.disjuncts])
            disjuncts.append((m.nnf(m.neg(whole)), ind))
        else:
            raise AbductionError(f"cannot negate {type(ax).__name__}")
    fixpoint = any(c.has_fixpoint for c, _ in disjuncts)
    return Hypothesis(tuple(disjuncts), contains_fixpoint=fixpoint), gci_count


def _trivial_hypothesis(obs: list[ConceptAssertion]) -> Hypothesis:
    individuals: dict[int, list[m.Concept]] = {}
    for ax in obs:
        individuals.setdefault(ax.individual, []).append(ax.concept)
    disjuncts = tuple((m.conj_all(cs), ind) for ind, cs in individuals.items())
    return Hypothesis(disjuncts, conjunctive=len(individuals) > 1)


def abduce(req: AbductionRequest) -> AbductionReport:
    """Run the full abduction pipeline and report what happened."""
    report = AbductionReport(mode=req.mode)
    started = time.perf_counter()
    budget = Budget(limit_ms=req.budget_ms)

    try:
        trivial = check_preconditions(req, budget.remaining_ms())
    except tableau.TableauBudgetExceeded:
        report.timeout = True
        report.no_hypothesis_reason = "precondition checks ran out of budget"
        report.t_total_ms = (time.perf_counter() - started) * 1000.0
        return report
    if trivial:
        report.trivial = True
        report.hypothesis = _trivial_hypothesis(req.observation)
        report.conditions = {"i": "by-construction", "ii": "by-construction",
                             "iii": "by-construction"}
        report.t_total_ms = (time.perf_counter() - started) * 1000.0
        return report

    negated = negate_observation(req.observation)
    label: int | None = None
    extra: Axiom = negated
    if req.mode != "full-no-approx":
        extra, label = annotate(negated)

    t0 = time.perf_counter()
    try:
        v = forget(req.ontology, extra, req.forget, budget)
    except BudgetExceeded:
        report.timeout = True
        report.no_hypothesis_reason = "forgetting ran out of budget"
        report.t_total_ms = (time.perf_counter() - started) * 1000.0
        return report
    report.t_forget_ms = (time.perf_counter() - t0) * 1000.0
    report.v_size = len(v.axioms)
    if req.want_trace:
        report.trace = v.trace(req.ontology.symbols)

    t0 = time.perf_counter()
    if label is not None:
        candidates = filter_annotated(v, label)
        flags = v.annotated_flags()
        report.removed_filter = [ax for ax, flag in zip(v.axioms, flags) if not flag]
    else:
        candidates = list(v.axioms)
    report.t_filter_ms = (time.perf_counter() - t0) * 1000.0
    report.v_app_size = len(candidates)

    t0 = time.perf_counter()
    if req.mode in ("full", "full-no-approx"):
        vstar, removed, unchecked = reduce(candidates, req.ontology, budget)
        report.removed_reduce = removed
        report.retained_unchecked = unchecked
    else:
        vstar = candidates
    report.t_reduce_ms = (time.perf_counter() - t0) * 1000.0
    report.v_star_size = len(vstar)

    try:
        hypothesis, gci_count = assemble_hypothesis(vstar)
    except NoHypothesis:
        report.no_hypothesis_reason = ("every candidate explanation was "
                                       "redundant; only the false hypothesis remains")
        report.t_total_ms = (time.perf_counter() - started) * 1000.0
        return report
    report.gci_disjuncts = gci_count
    report.fixpoint = hypothesis.contains_fixpoint

    if hypothesis.contains_fixpoint:
        report.conditions = {"i": "unverified", "ii": "unverified", "iii": "unverified"}
        report.hypothesis = hypothesis
    elif req.mode == "approx":
        try:
            consistent = tableau.is_consistent(
                req.ontology.extended([hypothesis.axiom()]),
                max(budget.remaining_ms(), 1000.0))
        except tableau.TableauBudgetExceeded:
            consistent = True  # conservative: report it, flag unverified
            report.timeout = True
            report.conditions = {"i": "unverified", "ii": "by-construction",
                                 "iii": "not-checked"}
            report.hypothesis = hypothesis
            report.t_total_ms = (time.perf_counter() - started) * 1000.0
            return report
        if not consistent:
            report.no_hypothesis_reason = ("the approximate hypothesis is "
                                           "inconsistent with the ontology")
            report.conditions = {"i": "fail", "ii": "by-construction",
                                 "iii": "not-checked"}
        else:
            report.hypothesis = hypothesis
            report.conditions = {"i": "checked", "ii": "by-construction",
                                 "iii": "not-checked"}
    else:
        report.hypothesis = hypothesis
        report.conditions = {"i": "by-construction", "ii": "by-construction",
                             "iii": "checked"}

    report.t_total_ms = (time.perf_counter() - started) * 1000.0
    return report

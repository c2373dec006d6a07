"""ABox abduction for ALC ontologies via uniform interpolation."""

from .model import (
    Concept,
    ConceptAssertion,
    DisjunctiveAssertion,
    GCI,
    Hypothesis,
    Ontology,
    RoleAssertion,
    negate_observation,
    nnf,
    signature,
)
from .forgetting import Budget, BudgetExceeded, UniformInterpolant, forget
from .parser import parse_axiom, parse_observation, parse_ontology, parse_signature, render
from .pipeline import AbductionReport, AbductionRequest, abduce
from .symbols import GLOBAL_TABLE, SymbolSet, SymbolTable
from .tableau import entails, entails_hypothesis, is_consistent

__all__ = [
    "AbductionReport",
    "AbductionRequest",
    "Budget",
    "BudgetExceeded",
    "Concept",
    "ConceptAssertion",
    "DisjunctiveAssertion",
    "GCI",
    "GLOBAL_TABLE",
    "Hypothesis",
    "Ontology",
    "RoleAssertion",
    "SymbolSet",
    "SymbolTable",
    "UniformInterpolant",
    "abduce",
    "entails",
    "entails_hypothesis",
    "forget",
    "is_consistent",
    "negate_observation",
    "nnf",
    "parse_axiom",
    "parse_observation",
    "parse_ontology",
    "parse_signature",
    "render",
    "signature",
]

__version__ = "0.1.0"

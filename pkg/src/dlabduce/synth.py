"""Seeded synthetic ontology generator for benchmark corpora.

Produces EL-like (Horn: atomic inclusions, conjunctions on the left,
existential restrictions on the right) and ALC-like ontologies (adds
disjunctive right-hand sides, universal restrictions and sparse
disjointness axioms), with an optional ABox.  Concept dependencies are
stratified (axioms only point from lower-numbered concepts to
higher-numbered ones) unless cycles are requested, which keeps forgetting
results fixpoint-free and makes runs easy to reason about.

The same seed always yields the same ontology.
"""

from __future__ import annotations

import random
from pathlib import Path

from . import model as m
from .model import ConceptAssertion, GCI, Ontology, RoleAssertion
from .parser import render
from .symbols import SymbolTable, GLOBAL_TABLE


def synth_ontology(seed: int,
                   n_axioms: int = 100,
                   n_concepts: int = 60,
                   n_roles: int = 4,
                   style: str = "el",
                   n_individuals: int = 0,
                   allow_cycles: bool = False,
                   name_prefix: str = "C",
                   table: SymbolTable | None = None) -> Ontology:
    if style not in ("el", "alc"):
        raise ValueError("style must be 'el' or 'alc'")
    table = table if table is not None else GLOBAL_TABLE
    rng = random.Random(seed)
    concepts = [table.concept(f"{name_prefix}{i}") for i in range(n_concepts)]
    roles = [table.role(f"r{i}") for i in range(max(1, n_roles))]
    individuals = [table.individual(f"i{seed}_{i}") for i in range(n_individuals)]

    def pick_lhs_rhs() -> tuple[int, int]:
        if allow_cycles:
            i, j = rng.randrange(n_concepts), rng.randrange(n_concepts)
            return i, j
        i = rng.randrange(n_concepts - 1)
        j = rng.randrange(i + 1, n_concepts)
        return i, j

    tbox: list[GCI] = []
    seen: set[tuple] = set()
    guard = 0
    while len(tbox) < n_axioms and guard < 50 * n_axioms:
        guard += 1
        i, j = pick_lhs_rhs()
        lhs = m.name(concepts[i])
        roll = rng.random()
        if style == "el":
            if roll < 0.55:
                rhs = m.name(concepts[j])
            elif roll < 0.8:
                rhs = m.exists(rng.choice(roles), m.name(concepts[j]))
            else:
                k = rng.randrange(n_concepts) if allow_cycles else rng.randrange(j)
                if k != i:
                    lhs = m.conj(lhs, m.name(concepts[k]))
                rhs = m.name(concepts[j])
        else:
            if roll < 0.4:
                rhs = m.name(concepts[j])
            elif roll < 0.55:
                rhs = m.exists(rng.choice(roles), m.name(concepts[j]))
            elif roll < 0.7:
                rhs = m.forall(rng.choice(roles), m.name(concepts[j]))
            elif roll < 0.9:
                k = rng.randrange(i + 1, n_concepts) if not allow_cycles else \
                    rng.randrange(n_concepts)
                rhs = m.disj(m.name(concepts[j]), m.name(concepts[k]))
            else:
                rhs = m.neg(m.name(concepts[j]))
        key = (lhs.cid, rhs.cid)
        if key in seen:
            continue
        seen.add(key)
        tbox.append(GCI(lhs, rhs))

    abox: list = []
    for idx, ind in enumerate(individuals):
        abox.append(ConceptAssertion(m.name(rng.choice(concepts)), ind))
        if idx and rng.random() < 0.5:
            abox.append(RoleAssertion(rng.choice(roles), individuals[idx - 1], ind))
    return Ontology(tbox, abox, table)


def write_corpus(directory: str | Path, ontologies: dict[str, Ontology]) -> list[Path]:
    """Render ontologies into <name>.dl files inside a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, onto in sorted(ontologies.items()):
        path = directory / f"{name}.dl"
        path.write_text(render(onto) + "\n", encoding="utf-8")
        paths.append(path)
    return paths

"""Symbol interning and signature sets.

Every name that can occur in an ontology is interned to an integer id.
The id space is partitioned into reserved ranges so that "is this a
definer?" / "is this an annotation concept?" are O(1) range checks:

    [0, DEFINER_MIN)            user concept names
    [DEFINER_MIN, ANNOTATION_MIN)   definer symbols (clausal normal form)
    [ANNOTATION_MIN, ROLE_MIN)      annotation concepts (dependency tracing)
    [ROLE_MIN, INDIVIDUAL_MIN)      role names
    [INDIVIDUAL_MIN, RESERVED_IND_MIN)  user individuals
    [RESERVED_IND_MIN, ...)         internal fresh individuals

Definer and annotation ids are allocated locally (per clausification /
per abduction call) starting at the bottom of their range, so two
independent tasks use the same ids.  That is intentional: it keeps
derivations byte-for-byte reproducible.  Nothing ever compares symbols
across tasks.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

DEFINER_MIN = 1 << 20
ANNOTATION_MIN = 1 << 21
ROLE_MIN = 1 << 22
INDIVIDUAL_MIN = 1 << 23
RESERVED_IND_MIN = 1 << 24


def is_definer(sid: int) -> bool:
    return DEFINER_MIN <= sid < ANNOTATION_MIN


def is_annotation(sid: int) -> bool:
    return ANNOTATION_MIN <= sid < ROLE_MIN


def is_concept_id(sid: int) -> bool:
    """Concept ids include user concepts, definers and annotations."""
    return 0 <= sid < ROLE_MIN


def is_role_id(sid: int) -> bool:
    return ROLE_MIN <= sid < INDIVIDUAL_MIN


def is_individual_id(sid: int) -> bool:
    return sid >= INDIVIDUAL_MIN


def definer_id(index: int) -> int:
    """Task-local definer id for the index-th definer (0-based)."""
    return DEFINER_MIN + index


def annotation_id(index: int = 0) -> int:
    return ANNOTATION_MIN + index


def reserved_individual(index: int = 0) -> int:
    """Internal fresh individual, e.g. the witness used to negate a GCI."""
    return RESERVED_IND_MIN + index


class SymbolTable:
    """Bidirectional name <-> id maps for concepts, roles and individuals.

    Interning is the only mutating operation and is guarded by a lock;
    lookups read plain dicts and are safe without one.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._concepts: dict[str, int] = {}
        self._roles: dict[str, int] = {}
        self._individuals: dict[str, int] = {}
        self._names: dict[int, str] = {}

    def _intern(self, table: dict[str, int], name: str, base: int) -> int:
        sid = table.get(name)
        if sid is not None:
            return sid
        with self._lock:
            sid = table.get(name)
            if sid is None:
                sid = base + len(table)
                table[name] = sid
                self._names[sid] = name
        return sid

    def concept(self, name: str) -> int:
        sid = self._intern(self._concepts, name, 0)
        if sid >= DEFINER_MIN:
            raise OverflowError("concept name space exhausted")
        return sid

    def role(self, name: str) -> int:
        return self._intern(self._roles, name, ROLE_MIN)

    def individual(self, name: str) -> int:
        return self._intern(self._individuals, name, INDIVIDUAL_MIN)

    def name_of(self, sid: int) -> str:
        name = self._names.get(sid)
        if name is not None:
            return name
        if is_definer(sid):
            return f"D{sid - DEFINER_MIN + 1}"
        if is_annotation(sid):
            return f"__ann{sid - ANNOTATION_MIN}"
        if sid >= RESERVED_IND_MIN:
            return f"__w{sid - RESERVED_IND_MIN}"
        raise KeyError(f"unknown symbol id {sid}")

    def has_concept(self, name: str) -> bool:
        return name in self._concepts

    def concept_names(self) -> list[str]:
        return list(self._concepts)


#: Default process-wide table.  Parsing and the service share it; callers
#: that need isolation can construct their own.
GLOBAL_TABLE = SymbolTable()


@dataclass(frozen=True)
class SymbolSet:
    """A signature: a set of concept ids plus a set of role ids."""

    concepts: frozenset[int] = field(default_factory=frozenset)
    roles: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for sid in self.concepts:
            if not is_concept_id(sid):
                raise ValueError(f"{sid} is not a concept id")
        for sid in self.roles:
            if not is_role_id(sid):
                raise ValueError(f"{sid} is not a role id")

    def __or__(self, other: "SymbolSet") -> "SymbolSet":
        return SymbolSet(self.concepts | other.concepts, self.roles | other.roles)

    def __and__(self, other: "SymbolSet") -> "SymbolSet":
        return SymbolSet(self.concepts & other.concepts, self.roles & other.roles)

    def __sub__(self, other: "SymbolSet") -> "SymbolSet":
        return SymbolSet(self.concepts - other.concepts, self.roles - other.roles)

    def __contains__(self, sid: int) -> bool:
        return sid in self.concepts or sid in self.roles

    def __bool__(self) -> bool:
        return bool(self.concepts) or bool(self.roles)

    @staticmethod
    def of_concepts(ids) -> "SymbolSet":
        return SymbolSet(concepts=frozenset(ids))

    def user_concepts(self) -> frozenset[int]:
        """Concept ids excluding definers and annotations."""
        return frozenset(s for s in self.concepts if s < DEFINER_MIN)

"""Text format for ontologies, observations, signatures and hypotheses.

The format is line-oriented.  Each non-blank, non-comment line is one
axiom:

    Pogona SubClassOf exists livesIn.(Woodland and Arid)
    (exists livesIn.Woodland)(Gary)
    worksFor(alice, csdept)

Keywords: ``and or not exists forall SubClassOf Top Bot lfp gfp``.
Precedence: ``not`` > quantifiers > ``and`` > ``or``; parentheses are
free-form.  Identifiers match ``[A-Za-z_][A-Za-z0-9_]*``; individuals are
distinguished purely by position (inside the ``(...)`` of an assertion).
Comments run from ``#`` to end of line.

Signature files list one symbol per line, with an optional ``role:``
prefix.

``parse(render(x))`` returns ``normalize(x)``: the renderer prints the
canonical flattened-and-sorted form of and/or chains.
"""

from __future__ import annotations

import re

from . import model as m
from .model import (
    Concept,
    ConceptAssertion,
    DisjunctiveAssertion,
    GCI,
    Hypothesis,
    Ontology,
    RoleAssertion,
    RoleAssertionInObservation,
)
from .symbols import GLOBAL_TABLE, SymbolSet, SymbolTable


class DLParseError(ValueError):
    """Base class for everything the parser can raise."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.reason = message


class DLSyntaxError(DLParseError):
    pass


class UnknownOperator(DLParseError):
    pass


class DuplicateDeclaration(DLParseError):
    pass


KEYWORDS = {"and", "or", "not", "exists", "forall", "SubClassOf", "Top", "Bot", "lfp", "gfp"}

_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[().,]|\S")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _tokenize(text: str, lineno: int) -> list[tuple[str, int]]:
    """Tokens as (lexeme, column) pairs; raises on characters outside the grammar."""
    out = []
    for match in _TOKEN.finditer(text):
        tok = match.group()
        col = match.start() + 1
        if tok in "().," or _IDENT.match(tok):
            out.append((tok, col))
        else:
            raise DLSyntaxError(f"unexpected character {tok!r}", lineno, col)
    return out


class _LineParser:
    def __init__(self, tokens: list[tuple[str, int]], lineno: int, table: SymbolTable):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.table = table
        self.env: list[str] = []  # fixpoint variable names, outermost first

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def col(self) -> int:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return self.tokens[-1][1] + len(self.tokens[-1][0]) if self.tokens else 1

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise DLSyntaxError("unexpected end of line", self.lineno, self.col())
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.peek()
        if got != tok:
            raise DLSyntaxError(f"expected {tok!r}, found {got!r}", self.lineno, self.col())
        self.pos += 1

    def ident(self, what: str = "identifier") -> str:
        got = self.peek()
        if got is None or not _IDENT.match(got) or got in KEYWORDS:
            raise DLSyntaxError(f"expected {what}, found {got!r}", self.lineno, self.col())
        self.pos += 1
        return got

    # concept := or-chain; chains rebuild right-nested, matching normalize()
    def concept(self) -> Concept:
        parts = [self.conjunct()]
        while self.peek() == "or":
            self.take()
            parts.append(self.conjunct())
        return m.disj_all(parts)

    def conjunct(self) -> Concept:
        parts = [self.unary()]
        while self.peek() == "and":
            self.take()
            parts.append(self.unary())
        return m.conj_all(parts)

    def unary(self) -> Concept:
        tok = self.peek()
        if tok == "not":
            self.take()
            return m.neg(self.unary())
        if tok in ("exists", "forall"):
            self.take()
            role = self.table.role(self.ident("role name"))
            self.expect(".")
            body = self.unary()
            return m.exists(role, body) if tok == "exists" else m.forall(role, body)
        if tok in ("lfp", "gfp"):
            self.take()
            var = self.ident("fixpoint variable")
            self.expect(".")
            self.env.append(var)
            body = self.unary()
            self.env.pop()
            return m.lfp(body) if tok == "lfp" else m.gfp(body)
        return self.atom()

    def atom(self) -> Concept:
        tok = self.peek()
        if tok == "Top":
            self.take()
            return m.top()
        if tok == "Bot":
            self.take()
            return m.bot()
        if tok == "(":
            self.take()
            c = self.concept()
            self.expect(")")
            return c
        if tok is None or tok in KEYWORDS or not _IDENT.match(tok):
            raise DLSyntaxError(f"expected a concept, found {tok!r}", self.lineno, self.col())
        self.take()
        if tok in self.env:
            # innermost binder of that name wins
            level = len(self.env) - 1 - max(i for i, v in enumerate(self.env) if v == tok)
            return m.fixvar(level)
        return m.name(self.table.concept(tok))

    def axiom(self):
        toks = [t for t, _ in self.tokens]
        if (len(toks) == 6 and _IDENT.match(toks[0]) and toks[0] not in KEYWORDS
                and toks[1] == "(" and toks[3] == "," and toks[5] == ")"):
            role = self.table.role(toks[0])
            subj = self.table.individual(self._ident_at(2))
            obj = self.table.individual(self._ident_at(4))
            return RoleAssertion(role, subj, obj)

        concept = self.concept()
        tok = self.peek()
        if tok == "SubClassOf":
            self.take()
            rhs = self.concept()
            self.end_of_line()
            return GCI(concept, rhs)
        if tok == "(":
            disjuncts = [(concept, self._assertion_individual())]
            while self.peek() == "or":
                self.take()
                c = self.concept()
                if self.peek() != "(":
                    raise DLSyntaxError("expected '(' after disjunct concept",
                                        self.lineno, self.col())
                disjuncts.append((c, self._assertion_individual()))
            self.end_of_line()
            if len(disjuncts) == 1:
                return ConceptAssertion(disjuncts[0][0], disjuncts[0][1])
            return DisjunctiveAssertion(tuple(disjuncts))
        if tok is not None and _IDENT.match(tok) and tok not in KEYWORDS:
            raise UnknownOperator(f"unknown operator {tok!r}", self.lineno, self.col())
        raise DLSyntaxError(f"expected 'SubClassOf' or '(', found {tok!r}",
                            self.lineno, self.col())

    def _ident_at(self, idx: int) -> str:
        tok, col = self.tokens[idx]
        if tok in KEYWORDS or not _IDENT.match(tok):
            raise DLSyntaxError(f"expected identifier, found {tok!r}", self.lineno, col)
        return tok

    def _assertion_individual(self) -> int:
        self.expect("(")
        ind = self.table.individual(self.ident("individual name"))
        self.expect(")")
        return ind

    def end_of_line(self) -> None:
        if self.peek() is not None:
            raise DLSyntaxError(f"trailing input {self.peek()!r}", self.lineno, self.col())


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            yield lineno, line


def parse_axiom_line(line: str, lineno: int = 1,
                     table: SymbolTable | None = None):
    table = table if table is not None else GLOBAL_TABLE
    tokens = _tokenize(line, lineno)
    parser = _LineParser(tokens, lineno, table)
    return parser.axiom()


def parse_axiom(text: str, table: SymbolTable | None = None):
    """Parse a single axiom (one line)."""
    lines = list(_lines(text))
    if len(lines) != 1:
        raise DLSyntaxError("expected exactly one axiom", len(lines) or 1, 1)
    lineno, line = lines[0]
    return parse_axiom_line(line, lineno, table)


def parse_ontology(text: str, table: SymbolTable | None = None) -> Ontology:
    table = table if table is not None else GLOBAL_TABLE
    axioms = [parse_axiom_line(line, lineno, table) for lineno, line in _lines(text)]
    return Ontology.from_axioms(axioms, table)


def parse_observation(text: str, table: SymbolTable | None = None) -> list[ConceptAssertion]:
    """Parse an observation: an ordered list of concept assertions."""
    table = table if table is not None else GLOBAL_TABLE
    out: list[ConceptAssertion] = []
    for lineno, line in _lines(text):
        ax = parse_axiom_line(line, lineno, table)
        if isinstance(ax, RoleAssertion):
            raise RoleAssertionInObservation(
                f"line {lineno}: observations cannot contain role assertions")
        if not isinstance(ax, ConceptAssertion):
            raise DLSyntaxError("observations must be concept assertions", lineno, 1)
        out.append(ax)
    return out


def parse_signature(text: str, table: SymbolTable | None = None) -> SymbolSet:
    """Parse a signature file: one symbol per line, optional ``role:`` prefix."""
    table = table if table is not None else GLOBAL_TABLE
    concepts: set[int] = set()
    roles: set[int] = set()
    seen: set[str] = set()
    for lineno, line in _lines(text):
        entry = line.strip()
        if entry in seen:
            raise DuplicateDeclaration(f"symbol {entry!r} declared twice", lineno, 1)
        seen.add(entry)
        if entry.startswith("role:"):
            name = entry[len("role:"):].strip()
            if not _IDENT.match(name or ""):
                raise DLSyntaxError(f"bad role name {name!r}", lineno, 1)
            roles.add(table.role(name))
        else:
            if not _IDENT.match(entry) or entry in KEYWORDS:
                raise DLSyntaxError(f"bad symbol name {entry!r}", lineno, 1)
            concepts.add(table.concept(entry))
    return SymbolSet(frozenset(concepts), frozenset(roles))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_VAR_NAMES = "XYZ"


def _var_name(level: int) -> str:
    suffix, base = divmod(level, len(_VAR_NAMES))
    return _VAR_NAMES[base] + (str(suffix) if suffix else "")


def _render_concept(c: Concept, table: SymbolTable, depth: int) -> str:
    kind = c.kind
    if kind == m.TOP:
        return "Top"
    if kind == m.BOT:
        return "Bot"
    if kind == m.NAME:
        return table.name_of(c.sym)
    if kind == m.VAR:
        return _var_name(depth - 1 - c.sym)
    if kind == m.NOT:
        return "not " + _render_operand(c.left, table, depth)
    if kind in (m.EXISTS, m.FORALL):
        word = "exists" if kind == m.EXISTS else "forall"
        body = c.left
        inner = _render_concept(body, table, depth)
        if body.kind in (m.AND, m.OR, m.LFP, m.GFP):
            inner = f"({inner})"
        return f"{word} {table.name_of(c.role)}.{inner}"
    if kind in (m.LFP, m.GFP):
        word = "lfp" if kind == m.LFP else "gfp"
        inner = _render_concept(c.left, table, depth + 1)
        if c.left.kind in (m.AND, m.OR):
            inner = f"({inner})"
        return f"{word} {_var_name(depth)} . {inner}"
    if kind in (m.AND, m.OR):
        word = " and " if kind == m.AND else " or "
        parts = []
        node = c
        while node.kind == kind:
            parts.append(node.left)
            node = node.right
        parts.append(node)
        rendered = []
        for p in parts:
            s = _render_concept(p, table, depth)
            if p.kind == m.OR and kind == m.AND:
                s = f"({s})"
            rendered.append(s)
        return word.join(rendered)
    raise AssertionError(f"unknown concept kind {kind}")


def _render_operand(c: Concept, table: SymbolTable, depth: int) -> str:
    s = _render_concept(c, table, depth)
    if c.kind in (m.AND, m.OR):
        return f"({s})"
    return s


def render_concept(c: Concept, table: SymbolTable | None = None) -> str:
    table = table if table is not None else GLOBAL_TABLE
    return _render_concept(m.normalize(c), table, 0)


def _render_assertion_part(c: Concept, ind: int, table: SymbolTable) -> str:
    s = _render_concept(m.normalize(c), table, 0)
    if c.kind not in (m.NAME, m.TOP, m.BOT):
        s = f"({s})"
    return f"{s}({table.name_of(ind)})"


def render_axiom(ax, table: SymbolTable | None = None) -> str:
    table = table if table is not None else GLOBAL_TABLE
    if isinstance(ax, GCI):
        lhs = _render_concept(m.normalize(ax.lhs), table, 0)
        rhs = _render_concept(m.normalize(ax.rhs), table, 0)
        return f"{lhs} SubClassOf {rhs}"
    if isinstance(ax, ConceptAssertion):
        return _render_assertion_part(ax.concept, ax.individual, table)
    if isinstance(ax, RoleAssertion):
        return (f"{table.name_of(ax.role)}({table.name_of(ax.subject)},"
                f"{table.name_of(ax.object)})")
    if isinstance(ax, DisjunctiveAssertion):
        return " or ".join(_render_assertion_part(c, i, table) for c, i in ax.disjuncts)
    raise TypeError(f"cannot render {type(ax).__name__}")


def render(x, table: SymbolTable | None = None) -> str:
    """Render an ontology, hypothesis, axiom or concept back to the text format."""
    if isinstance(x, Ontology):
        tbl = table if table is not None else x.symbols
        return "\n".join(render_axiom(ax, tbl) for ax in x.axioms())
    if isinstance(x, Hypothesis):
        tbl = table if table is not None else GLOBAL_TABLE
        parts = [_render_assertion_part(c, i, tbl) for c, i in x.disjuncts]
        if x.conjunctive:
            return "\n".join(parts)
        return " or ".join(parts)
    if isinstance(x, Concept):
        return render_concept(x, table)
    return render_axiom(x, table)

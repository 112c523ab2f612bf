"""Line-oriented text format for knowledge bases.

A document has four sections, each exactly once, in any order::

    [variables]
    x y z

    [bn]
    x | = 0.3
    y | x=1 = 0.6
    y | x=0 = 0.2

    [tbn]
    x' | x=1 = 0.9
    x' | x=0 = 0.2

    [ontology]
    A and exists r . B <= C @ x, !y
    C <= D @

``#`` starts a comment.  CPT lines give ``P(child = true | parents)`` and every
parent assignment needs its own line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import el
from .bayes import BayesNet, Cpt, find_cycle
from .context import Context, Variables, VAxiom, VOntology
from .dbn import Dbn, TwoSliceNet, primed
from .errors import DblError, InconsistentContext
from .reasoner import KnowledgeBase, TimedEvidence

SECTIONS = ("variables", "bn", "tbn", "ontology")
KEYWORDS = {"and", "exists", "top"}


@dataclass(frozen=True, order=True)
class Diagnostic:
    line: int
    column: int
    section: str
    message: str

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}" if self.line else "-"
        return f"{where}: [{self.section}] {self.message}"


class KbSyntaxError(DblError, ValueError):
    def __init__(self, diagnostics, source: str | None = None):
        self.diagnostics = sorted(diagnostics)
        self.source = source
        prefix = f"{source}:" if source else ""
        super().__init__("\n".join(prefix + str(d) for d in self.diagnostics))


class _LineFail(Exception):
    def __init__(self, line: int, column: int, message: str):
        self.line, self.column, self.message = line, column, message


class _Fail(Exception):
    def __init__(self, column: int, message: str):
        self.column = column
        self.message = message


# -- concepts -------------------------------------------------------------------------

_CONCEPT_TOKEN = re.compile(r"\s*(?:([().])|([A-Za-z0-9_]+))")


def _tokenize(text: str, offset: int = 0) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _CONCEPT_TOKEN.match(text, pos)
        if not m:
            raise _Fail(offset + pos + 1, f"unexpected character {text[pos]!r}")
        tok = m.group(1) or m.group(2)
        tokens.append((tok, offset + m.start(m.lastindex) + 1))
        pos = m.end()
    tokens.append(("", offset + len(text) + 1))
    return tokens


class _ConceptParser:
    def __init__(self, text: str, offset: int = 0):
        self.tokens = _tokenize(text, offset)
        self.i = 0

    def peek(self) -> tuple[str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok, col = self.take()
        if tok != value:
            raise _Fail(col, f"expected {value!r}, found {tok or 'end of line'!r}")

    def name(self, what: str) -> str:
        tok, col = self.take()
        if not tok or tok in "()." or tok in KEYWORDS:
            raise _Fail(col, f"expected {what} name, found {tok or 'end of line'!r}")
        return tok

    def concept(self) -> el.Concept:
        c = self.primary()
        while self.peek()[0] == "and":
            self.take()
            c = el.And(c, self.primary())
        return c

    def primary(self) -> el.Concept:
        tok, col = self.peek()
        if tok == "exists":
            self.take()
            role = self.name("role")
            self.expect(".")
            return el.Exists(role, self.filler())
        return self.filler()

    def filler(self) -> el.Concept:
        tok, col = self.peek()
        if tok == "top":
            self.take()
            return el.TOP
        if tok == "(":
            self.take()
            c = self.concept()
            self.expect(")")
            return c
        if tok == "exists":
            raise _Fail(col, "existential filler must be an atom, top or parenthesized")
        return el.Atom(self.name("concept"))

    def done(self) -> None:
        tok, col = self.peek()
        if tok:
            raise _Fail(col, f"unexpected {tok!r}")


def parse_concept(text: str) -> el.Concept:
    try:
        p = _ConceptParser(text)
        c = p.concept()
        p.done()
        return c
    except _Fail as e:
        raise ValueError(f"column {e.column}: {e.message}") from None


def _parse_gci(text: str, offset: int = 0) -> el.GCI:
    if text.count("<=") != 1:
        col = offset + (text.find("<=", text.find("<=") + 1) + 1 if "<=" in text else 1)
        raise _Fail(col, "expected exactly one '<='")
    left, right = text.split("<=")
    lp = _ConceptParser(left, offset)
    lhs = lp.concept()
    lp.done()
    rp = _ConceptParser(right, offset + len(left) + 2)
    rhs = rp.concept()
    rp.done()
    return el.GCI(lhs, rhs)


def parse_query(text: str) -> el.GCI:
    """Parse ``"C <= D"``."""
    try:
        return _parse_gci(text)
    except _Fail as e:
        raise ValueError(f"query column {e.column}: {e.message}") from None


# -- flag syntaxes ---------------------------------------------------------------------


def parse_literals(text: str, vars: Variables) -> Context:
    """``"x, !z"`` -> context; empty text is the empty context."""
    lits = [p.strip() for p in text.split(",") if p.strip()]
    return vars.context(*lits)


def parse_world(text: str, vars: Variables) -> int:
    return vars.world(*[p.strip() for p in text.split(",") if p.strip()])


_EVIDENCE_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*@\s*(\d+)\s*=\s*([01])\s*\Z")


def parse_evidence(text: str, vars: Variables) -> TimedEvidence:
    """``"x@1=1, y@3=0"`` -> timed evidence."""
    items = []
    for part in text.split(","):
        if not part.strip():
            continue
        m = _EVIDENCE_RE.match(part)
        if not m:
            raise ValueError(f"malformed evidence item {part.strip()!r} (expected var@slice=0|1)")
        vars.var(m.group(1))
        items.append((m.group(1), int(m.group(2)), m.group(3) == "1"))
    return TimedEvidence.of(items)


# -- documents -------------------------------------------------------------------------


@dataclass
class KbDocument:
    """Raw section contents with line provenance: section -> [(line number, text)]."""

    sections: dict[str, list[tuple[int, str]]] = field(default_factory=dict)
    header_lines: dict[str, int] = field(default_factory=dict)


def split_sections(text: str) -> tuple[KbDocument, list[Diagnostic]]:
    doc = KbDocument()
    diags = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", stripped)
        if m:
            name = m.group(1)
            col = line.index("[") + 1
            if name not in SECTIONS:
                diags.append(Diagnostic(lineno, col, name, f"unknown section [{name}]"))
                current = None
            elif name in doc.sections:
                diags.append(Diagnostic(lineno, col, name, f"duplicate section [{name}]"))
                current = None
            else:
                doc.sections[name] = []
                doc.header_lines[name] = lineno
                current = name
            continue
        if current is None:
            if not any(d.line == lineno for d in diags):
                diags.append(Diagnostic(lineno, 1, "-", "content outside of a known section"))
            continue
        doc.sections[current].append((lineno, line))
    for name in SECTIONS:
        if name not in doc.sections:
            diags.append(Diagnostic(0, 0, name, f"missing section [{name}]"))
    return doc, diags


_ROW_COND = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*'?)\s*=\s*([01])\s*\Z")


def _parse_cpt_lines(lines, section: str, vars: Variables, primed_children: bool):
    """Return ``({child: Cpt}, {child: first line number})``; stops at the first bad line."""
    names = set(vars.names)
    rows: dict[str, dict[tuple[int, ...], float]] = {}
    parents: dict[str, tuple[str, ...]] = {}
    first_line: dict[str, int] = {}
    for lineno, line in lines:
        if "|" not in line:
            raise _LineFail(lineno, 1, "expected 'child | conditions = probability'")
        bar = line.index("|")
        child = line[:bar].strip()
        child_col = len(line) - len(line.lstrip()) + 1
        if primed_children:
            if not child.endswith("'") or child[:-1] not in names:
                raise _LineFail(lineno, child_col, f"{child!r} is not a primed declared variable")
        elif child not in names:
            raise _LineFail(lineno, child_col, f"{child!r} is not a declared variable")
        rest = line[bar + 1:]
        eq = rest.rfind("=")
        if eq < 0:
            raise _LineFail(lineno, bar + 2, "missing '= probability'")
        prob_text = rest[eq + 1:].strip()
        prob_col = bar + 2 + eq + 1
        try:
            p = float(prob_text)
        except ValueError:
            raise _LineFail(lineno, prob_col, f"invalid probability {prob_text!r}") from None
        if not 0.0 <= p <= 1.0:
            raise _LineFail(lineno, prob_col, f"probability {p} out of range [0, 1]")
        cond_text = rest[:eq]
        conds: dict[str, int] = {}
        if cond_text.strip():
            col = bar + 2
            for part in cond_text.split(","):
                m = _ROW_COND.match(part)
                if not m:
                    raise _LineFail(lineno, col, f"malformed condition {part.strip()!r} (expected var=0|1)")
                var = m.group(1)
                base = var[:-1] if var.endswith("'") else var
                if base not in names or (var.endswith("'") and not primed_children):
                    raise _LineFail(lineno, col, f"undeclared parent {var!r}")
                if var in conds:
                    raise _LineFail(lineno, col, f"parent {var!r} repeated")
                conds[var] = int(m.group(2))
                col += len(part) + 1
        if child not in parents:
            parents[child] = tuple(conds)
            rows[child] = {}
            first_line[child] = lineno
        elif set(conds) != set(parents[child]):
            raise _LineFail(
                lineno, bar + 2,
                f"{child}: parent set {sorted(conds)} differs from earlier rows {sorted(parents[child])}",
            )
        key = tuple(conds[q] for q in parents[child])
        if key in rows[child]:
            raise _LineFail(lineno, bar + 2, f"{child}: duplicate CPT row")
        rows[child][key] = p
    cpts = {c: Cpt(c, parents[c], rows[c]) for c in parents}
    return cpts, first_line


def _structural(section: str, cpts, first_line, required, header) -> list[Diagnostic]:
    for name in required:
        if name not in cpts:
            return [Diagnostic(header, 1, section, f"{name}: no CPT")]
    for child, cpt in cpts.items():
        problems = cpt.problems()
        if problems:
            return [Diagnostic(first_line[child], 1, section, problems[0])]
    graph = {c: [p for p in cpt.parents if section == "bn" or p.endswith("'")] for c, cpt in cpts.items()}
    cycle = find_cycle(graph)
    if cycle:
        return [Diagnostic(first_line[cycle[0]], 1, section, "cycle: " + " -> ".join(reversed(cycle)))]
    return []


def parse_kb(text: str, source: str | None = None) -> KnowledgeBase:
    """Parse and validate a KB document, raising :class:`KbSyntaxError` with every section's first error."""
    doc, diags = split_sections(text)
    vars = None
    if "variables" in doc.sections:
        names: list[str] = []
        try:
            for lineno, line in doc.sections["variables"]:
                for m in re.finditer(r"[^\s,]+", line):
                    name = m.group(0)
                    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name in KEYWORDS:
                        raise _LineFail(lineno, m.start() + 1, f"invalid variable name {name!r}")
                    if name in names:
                        raise _LineFail(lineno, m.start() + 1, f"variable {name!r} declared twice")
                    names.append(name)
            vars = Variables(names)
        except _LineFail as e:
            diags.append(Diagnostic(e.line, e.column, "variables", e.message))

    bn = tbn = ont = None
    if vars is not None:
        for section, is_tbn in (("bn", False), ("tbn", True)):
            if section not in doc.sections:
                continue
            try:
                cpts, first = _parse_cpt_lines(doc.sections[section], section, vars, is_tbn)
            except _LineFail as e:
                diags.append(Diagnostic(e.line, e.column, section, e.message))
                continue
            required = [primed(v) for v in vars.names] if is_tbn else list(vars.names)
            problems = _structural(section, cpts, first, required, doc.header_lines[section])
            if problems:
                diags.extend(problems)
            elif is_tbn:
                tbn = TwoSliceNet(vars, cpts)
            else:
                bn = BayesNet(vars, cpts)

        if "ontology" in doc.sections:
            vaxioms = []
            try:
                for lineno, line in doc.sections["ontology"]:
                    body, _, lits = line.partition("@")
                    try:
                        gci = _parse_gci(body)
                    except _Fail as e:
                        raise _LineFail(lineno, e.column, e.message) from None
                    lit_col = len(body) + 2
                    try:
                        ctx = parse_literals(lits, vars)
                    except InconsistentContext:
                        raise _LineFail(lineno, lit_col, "inconsistent context") from None
                    except KeyError as e:
                        raise _LineFail(lineno, lit_col, str(e.args[0])) from None
                    vaxioms.append(VAxiom(gci, ctx))
                ont = VOntology(vars, tuple(vaxioms))
            except _LineFail as e:
                diags.append(Diagnostic(e.line, e.column, "ontology", e.message))

    if diags or bn is None or tbn is None or ont is None:
        raise KbSyntaxError(diags, source)
    return KnowledgeBase(Dbn(bn, tbn), ont)


def load_kb(path) -> KnowledgeBase:
    with open(path, encoding="utf-8") as f:
        return parse_kb(f.read(), source=str(path))


def _render_cpt(cpt: Cpt) -> list[str]:
    out = []
    for row in cpt.rows():
        conds = ", ".join(f"{p}={v}" for p, v in zip(cpt.parents, row))
        out.append(f"{cpt.child} | {conds} = {cpt.table[row]!r}".replace("|  =", "| ="))
    return out


def render_kb(kb: KnowledgeBase) -> str:
    vars = kb.vars
    lines = ["[variables]", " ".join(vars.names), "", "[bn]"]
    for name in vars.names:
        lines += _render_cpt(kb.dbn.initial.cpts[name])
    lines += ["", "[tbn]"]
    for name in vars.names:
        lines += _render_cpt(kb.dbn.transition.cpts[primed(name)])
    lines += ["", "[ontology]"]
    for va in kb.ontology.vaxioms:
        lines.append(f"{va.axiom} @ {vars.render_context(va.context)}".rstrip())
    return "\n".join(lines) + "\n"

"""Context variables, V-ontologies and context formulas.

Worlds are plain ints.  With ``n`` declared variables, variable ``i`` (in
declaration order) is bit ``1 << (n - 1 - i)``, so the first variable is the
most significant bit and a world vector indexed by ``w`` lists worlds in the
natural binary order.  Contexts are pairs of bit masks over the same layout.
"""

from __future__ import annotations

import re
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import el
from .errors import CapExceeded, InconsistentContext

#: Default maximum number of variables for world enumeration.
ENUMERATION_CAP = 20


@dataclass(frozen=True)
class ContextVar:
    name: str
    index: int


@dataclass(frozen=True)
class ContextLiteral:
    var: ContextVar
    positive: bool

    def __str__(self) -> str:
        return self.var.name if self.positive else f"!{self.var.name}"


_VAR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_@]*\Z")


class Variables(Sequence[ContextVar]):
    """Ordered, immutable set of Boolean context variables."""

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        for name in names:
            if not _VAR_RE.match(name):
                raise ValueError(f"invalid variable name {name!r}")
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}
        self._vars = tuple(ContextVar(n, i) for i, n in enumerate(names))

    def __getitem__(self, i):
        return self._vars[i]

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name) -> bool:
        if isinstance(name, ContextVar):
            name = name.name
        return name in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Variables) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Variables({list(self.names)!r})"

    def var(self, name: str) -> ContextVar:
        try:
            return self._vars[self._index[name]]
        except KeyError:
            raise KeyError(f"undeclared variable {name!r}") from None

    def index(self, name: str) -> int:  # type: ignore[override]
        return self.var(name).index

    def bit(self, name: str) -> int:
        return 1 << (len(self.names) - 1 - self.index(name))

    @property
    def full_mask(self) -> int:
        return (1 << len(self.names)) - 1

    def literal(self, text: str) -> ContextLiteral:
        text = text.strip()
        positive = not text.startswith(("!", "¬", "~"))
        name = text if positive else text[1:].strip()
        return ContextLiteral(self.var(name), positive)

    def context(self, *literals: str | ContextLiteral | tuple[str, bool]) -> Context:
        """Build a context from literals such as ``"x"``, ``"!y"`` or ``("z", False)``."""
        pos = neg = 0
        for lit in literals:
            if isinstance(lit, str):
                lit = self.literal(lit)
            elif isinstance(lit, tuple):
                lit = ContextLiteral(self.var(lit[0]), bool(lit[1]))
            b = self.bit(lit.var.name)
            if lit.positive:
                pos |= b
            else:
                neg |= b
        return Context(pos, neg)

    def world(self, *literals: str | tuple[str, bool]) -> int:
        """A total world given as literals; every variable must be mentioned."""
        ctx = self.context(*literals)
        if ctx.pos | ctx.neg != self.full_mask:
            missing = [n for n in self.names if not (ctx.pos | ctx.neg) & self.bit(n)]
            raise ValueError(f"world leaves variables unassigned: {', '.join(missing)}")
        return ctx.pos

    def world_from_true(self, true_names: Iterable[str]) -> int:
        w = 0
        for name in true_names:
            w |= self.bit(name)
        return w

    def worlds(self, cap: int = ENUMERATION_CAP) -> range:
        if len(self.names) > cap:
            raise CapExceeded(f"{len(self.names)} variables exceeds the enumeration cap of {cap}")
        return range(1 << len(self.names))

    def literals(self, ctx: Context) -> list[ContextLiteral]:
        out = []
        for v in self._vars:
            b = self.bit(v.name)
            if ctx.pos & b:
                out.append(ContextLiteral(v, True))
            elif ctx.neg & b:
                out.append(ContextLiteral(v, False))
        return out

    def render_world(self, w: int) -> str:
        return ", ".join(n if w & self.bit(n) else f"!{n}" for n in self.names)

    def render_context(self, ctx: Context, sep: str = ", ") -> str:
        return sep.join(str(lit) for lit in self.literals(ctx))

    def render_formula(self, phi: ContextFormula) -> str:
        """Canonical DNF text: ``(x & y) | (!x & z)``, ``true`` or ``false``."""
        if phi.is_false:
            return "false"
        if phi.is_true:
            return "true"
        parts = []
        for d in self.sorted_disjuncts(phi):
            lits = self.literals(d)
            body = " & ".join(str(lit) for lit in lits)
            parts.append(body if len(lits) == 1 else f"({body})")
        return " | ".join(parts)

    def sorted_disjuncts(self, phi: ContextFormula) -> list[Context]:
        def key(d: Context):
            return (len(self.literals(d)), [(lit.var.index, not lit.positive) for lit in self.literals(d)])

        return sorted(phi.disjuncts, key=key)


@dataclass(frozen=True)
class Context:
    """A consistent conjunction of literals, stored as positive/negative masks."""

    pos: int = 0
    neg: int = 0

    def __post_init__(self) -> None:
        if self.pos & self.neg:
            raise InconsistentContext("inconsistent context: a variable occurs with both signs")

    def holds(self, w: int) -> bool:
        return (w & self.pos) == self.pos and not (w & self.neg)

    def __len__(self) -> int:
        return self.pos.bit_count() + self.neg.bit_count()

    def subset_of(self, other: Context) -> bool:
        """Literal-set inclusion, i.e. ``other`` implies ``self``."""
        return not (self.pos & ~other.pos) and not (self.neg & ~other.neg)

    def meet(self, other: Context) -> Context | None:
        """Conjunction, or ``None`` when the literals clash."""
        pos, neg = self.pos | other.pos, self.neg | other.neg
        if pos & neg:
            return None
        return Context(pos, neg)


EMPTY_CONTEXT = Context()


def _minimal(disjuncts: Iterable[Context]) -> frozenset[Context]:
    ds = set(disjuncts)
    if len(ds) <= 1:
        return frozenset(ds)
    ds = sorted(ds, key=len)
    kept: list[Context] = []
    for d in ds:
        if not any(k.subset_of(d) for k in kept):
            kept.append(d)
    return frozenset(kept)


@dataclass(frozen=True, init=False)
class ContextFormula:
    """Monotone DNF over context literals with subset-minimal disjuncts.

    No disjuncts is ``false``; a single empty disjunct is ``true``.
    """

    disjuncts: frozenset[Context]

    def __init__(self, disjuncts: Iterable[Context] = ()):
        object.__setattr__(self, "disjuncts", _minimal(disjuncts))

    @classmethod
    def of(cls, ctx: Context) -> ContextFormula:
        return cls((ctx,))

    @property
    def is_false(self) -> bool:
        return not self.disjuncts

    @property
    def is_true(self) -> bool:
        return EMPTY_CONTEXT in self.disjuncts

    def holds(self, w: int) -> bool:
        return any(d.holds(w) for d in self.disjuncts)

    def __or__(self, other: ContextFormula) -> ContextFormula:
        return ContextFormula(self.disjuncts | other.disjuncts)

    def __and__(self, other: ContextFormula) -> ContextFormula:
        if self.is_true or other.is_false:
            return other
        if other.is_true or self.is_false:
            return self
        out = []
        for a in self.disjuncts:
            for b in other.disjuncts:
                m = a.meet(b)
                if m is not None:
                    out.append(m)
        return ContextFormula(out)

    def covers(self, d: Context, nvars: int) -> bool:
        """Whether every world satisfying ``d`` satisfies this formula."""
        if any(k.subset_of(d) for k in self.disjuncts):
            return True
        if not self.disjuncts:
            return False
        free = [1 << i for i in range(nvars) if not (d.pos | d.neg) & (1 << i)]
        if len(free) > ENUMERATION_CAP:
            raise CapExceeded(f"covering check over {len(free)} free variables")
        for k in range(1 << len(free)):
            w = d.pos
            for j, b in enumerate(free):
                if k >> j & 1:
                    w |= b
            if not self.holds(w):
                return False
        return True

    def adds_worlds(self, other: ContextFormula, nvars: int) -> bool:
        """Whether ``self | other`` has strictly more satisfying worlds than ``self``."""
        return any(not self.covers(d, nvars) for d in other.disjuncts)


TRUE = ContextFormula((EMPTY_CONTEXT,))
FALSE = ContextFormula()


def evaluate(phi: ContextFormula, w: int) -> bool:
    return phi.holds(w)


def indicator(phi: ContextFormula, nvars: int) -> np.ndarray:
    """Boolean vector over all ``2**nvars`` worlds marking where ``phi`` holds."""
    if nvars > ENUMERATION_CAP + 4:
        raise CapExceeded(f"{nvars} variables exceeds the indicator cap")
    idx = np.arange(1 << nvars, dtype=np.int64)
    out = np.zeros(1 << nvars, dtype=bool)
    for d in phi.disjuncts:
        out |= ((idx & d.pos) == d.pos) & ((idx & d.neg) == 0)
    return out


def satisfying_worlds(phi: ContextFormula, vars: Variables, cap: int = ENUMERATION_CAP) -> frozenset[int]:
    return frozenset(w for w in vars.worlds(cap) if phi.holds(w))


def equivalent(phi1: ContextFormula, phi2: ContextFormula, vars: Variables, cap: int = ENUMERATION_CAP) -> bool:
    return all(phi1.holds(w) == phi2.holds(w) for w in vars.worlds(cap))


# -- propositional formula syntax -------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<op>[()&|!¬~∧∨])|(?P<name>[A-Za-z_][A-Za-z0-9_@]*))")


def parse_formula(text: str, vars: Variables) -> ContextFormula:
    """Parse a propositional formula over ``vars`` and convert it to DNF.

    Accepts ``&``/``∧``, ``|``/``∨``, ``!``/``¬``/``~``, parentheses and the
    constants ``true``/``false``.  Negation is pushed to the literals.
    """
    tokens: list[str] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ValueError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        tokens.append(m.group("op") or m.group("name"))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    tokens.append("")
    i = 0

    def peek() -> str:
        return tokens[i]

    def take(expected: str | None = None) -> str:
        nonlocal i
        tok = tokens[i]
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected!r}, got {tok or 'end of input'!r}")
        i += 1
        return tok

    # each parse function returns (formula, negated formula)
    def disj():
        f, nf = conj_()
        while peek() in ("|", "∨"):
            take()
            g, ng = conj_()
            f, nf = f | g, nf & ng
        return f, nf

    def conj_():
        f, nf = unary()
        while peek() in ("&", "∧"):
            take()
            g, ng = unary()
            f, nf = f & g, nf | ng
        return f, nf

    def unary():
        tok = peek()
        if tok in ("!", "¬", "~"):
            take()
            f, nf = unary()
            return nf, f
        if tok == "(":
            take()
            out = disj()
            take(")")
            return out
        if tok == "true":
            take()
            return TRUE, FALSE
        if tok == "false":
            take()
            return FALSE, TRUE
        if tok and tok not in "()&|∧∨":
            take()
            b = vars.bit(tok)
            return ContextFormula.of(Context(b, 0)), ContextFormula.of(Context(0, b))
        raise ValueError(f"unexpected {tok or 'end of input'!r} in formula")

    result, _ = disj()
    if peek():
        raise ValueError(f"trailing input at {peek()!r}")
    return result


# -- V-ontologies -------------------------------------------------------------------


@dataclass(frozen=True)
class VAxiom:
    axiom: el.GCI
    context: Context = EMPTY_CONTEXT

    def __str__(self) -> str:
        return f"{self.axiom}"


@dataclass(frozen=True)
class VOntology:
    vars: Variables
    vaxioms: tuple[VAxiom, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vaxioms", tuple(self.vaxioms))
        full = self.vars.full_mask
        for va in self.vaxioms:
            if (va.context.pos | va.context.neg) & ~full:
                raise ValueError(f"context of {va.axiom} mentions undeclared variables")

    def __iter__(self) -> Iterator[VAxiom]:
        return iter(self.vaxioms)

    def __len__(self) -> int:
        return len(self.vaxioms)


def restrict(vont: VOntology, w: int) -> list[el.GCI]:
    """The classical ontology holding in world ``w``."""
    return [va.axiom for va in vont.vaxioms if va.context.holds(w)]


class _LabeledCompletion:
    """EL completion where every derived fact carries a context formula.

    A fact's label is the set of worlds in which it is derivable.  Rule
    applications conjoin the labels of all premises (axiom labels included)
    and the conclusion's label only changes when it gains a world.
    """

    def __init__(self, labeled_axioms: Iterable[tuple[el.NormalAxiom, ContextFormula]], names: set[str], nvars: int):
        self.nvars = nvars
        self.sub = defaultdict(list)
        self.conj_by = defaultdict(list)
        self.ex_right = defaultdict(list)
        self.ex_left = defaultdict(list)
        self.ex_by_filler = defaultdict(list)
        merged: dict[el.NormalAxiom, ContextFormula] = {}
        for ax, label in labeled_axioms:
            merged[ax] = merged.get(ax, FALSE) | label
        for ax, lab in merged.items():
            if isinstance(ax, el.Sub):
                self.sub[ax.lhs].append((ax.rhs, lab))
            elif isinstance(ax, el.ConjSub):
                self.conj_by[ax.left].append((ax.right, ax.rhs, lab))
                self.conj_by[ax.right].append((ax.left, ax.rhs, lab))
            elif isinstance(ax, el.SubEx):
                self.ex_right[ax.lhs].append((ax.role, ax.filler, lab))
            else:
                self.ex_left[(ax.role, ax.filler)].append((ax.rhs, lab))
                self.ex_by_filler[ax.filler].append((ax.role, ax.rhs, lab))

        self.S: dict[str, dict[str, ContextFormula]] = {a: {} for a in names}
        self.R: dict[tuple[str, str, str], ContextFormula] = {}
        self.preds: dict[tuple[str, str], set[str]] = defaultdict(set)
        self.queue: deque = deque()
        for a in names:
            self.add_s(a, a, TRUE)
            self.add_s(a, el.TOP_NAME, TRUE)

    def add_s(self, a: str, b: str, label: ContextFormula) -> None:
        if label.is_false:
            return
        old = self.S[a].get(b, FALSE)
        if not old.adds_worlds(label, self.nvars):
            return
        self.S[a][b] = old | label
        self.queue.append(("S", a, b))

    def add_r(self, role: str, a: str, b: str, label: ContextFormula) -> None:
        if label.is_false:
            return
        old = self.R.get((role, a, b), FALSE)
        if not old.adds_worlds(label, self.nvars):
            return
        self.R[(role, a, b)] = old | label
        self.preds[(role, b)].add(a)
        self.queue.append(("R", role, a, b))

    def run(self) -> None:
        while self.queue:
            item = self.queue.popleft()
            if item[0] == "S":
                self._fire_s(item[1], item[2])
            else:
                self._fire_r(item[1], item[2], item[3])

    def _fire_s(self, a: str, b: str) -> None:
        lab = self.S[a][b]
        for c, axl in self.sub[b]:
            self.add_s(a, c, lab & axl)
        for other, c, axl in self.conj_by[b]:
            olab = self.S[a].get(other)
            if olab is not None:
                self.add_s(a, c, lab & olab & axl)
        for role, filler, axl in self.ex_right[b]:
            self.add_r(role, a, filler, lab & axl)
        for role, c, axl in self.ex_by_filler[b]:
            for p in list(self.preds[(role, a)]):
                self.add_s(p, c, self.R[(role, p, a)] & lab & axl)

    def _fire_r(self, role: str, a: str, b: str) -> None:
        lab = self.R[(role, a, b)]
        for b2, blab in list(self.S[b].items()):
            for c, axl in self.ex_left.get((role, b2), ()):
                self.add_s(a, c, lab & blab & axl)


def context_formula(vont: VOntology, query: el.GCI) -> ContextFormula:
    """Formula satisfied by exactly the worlds whose restricted ontology entails ``query``."""
    n = el.Normalizer()
    for i, va in enumerate(vont.vaxioms):
        n.add(va.axiom, tag=i)
    lhs, rhs = n.add_query_definitions(query)
    labeled = []
    for ax, tag in n.output:
        label = TRUE if tag is None else ContextFormula.of(vont.vaxioms[tag].context)
        labeled.append((ax, label))
    names = n.tbox().names() | {lhs, rhs}
    lc = _LabeledCompletion(labeled, names, len(vont.vars))
    lc.run()
    return lc.S[lhs].get(rhs, FALSE)

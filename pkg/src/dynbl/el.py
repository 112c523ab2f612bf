"""EL concepts, normalization and completion-based classification.

Concepts are immutable trees built from :class:`Atom`, :data:`TOP`,
:class:`And` and :class:`Exists`.  A TBox is any sequence of :class:`GCI`.
Entailment is decided the usual way: normalize into the four normal forms,
saturate the completion rules and look the subsumption up.
"""

from __future__ import annotations

import re
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

_NAME_RE = re.compile(r"[A-Za-z0-9_]+\Z")
_RESERVED_RE = re.compile(r"_n\d+\Z|_q_")

#: Name used for the top concept inside normalized axioms and subsumption pairs.
TOP_NAME = "⊤"
FRESH_PREFIX = "_n"
QUERY_LHS = "_q_lhs"
QUERY_RHS = "_q_rhs"


class Concept:
    """Base class for EL concepts."""

    __slots__ = ()

    def __and__(self, other: Concept) -> Concept:
        return And(self, other)


@dataclass(frozen=True)
class Atom(Concept):
    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not _NAME_RE.match(self.name):
            raise ValueError(f"invalid concept name {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Top(Concept):
    def __str__(self) -> str:
        return "top"


TOP = Top()


@dataclass(frozen=True)
class And(Concept):
    left: Concept
    right: Concept

    def __str__(self) -> str:
        right = f"({self.right})" if isinstance(self.right, And) else str(self.right)
        return f"{self.left} and {right}"


@dataclass(frozen=True)
class Exists(Concept):
    role: str
    filler: Concept

    def __post_init__(self) -> None:
        if not isinstance(self.role, str) or not _NAME_RE.match(self.role):
            raise ValueError(f"invalid role name {self.role!r}")

    def __str__(self) -> str:
        if isinstance(self.filler, (Atom, Top)):
            return f"exists {self.role} . {self.filler}"
        return f"exists {self.role} . ({self.filler})"


@dataclass(frozen=True)
class GCI:
    """General concept inclusion ``lhs ⊑ rhs``."""

    lhs: Concept
    rhs: Concept

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


def conj(*concepts: Concept) -> Concept:
    """Left-associated conjunction; ``conj()`` is ``TOP``."""
    if not concepts:
        return TOP
    out = concepts[0]
    for c in concepts[1:]:
        out = And(out, c)
    return out


def conjuncts(c: Concept) -> Iterator[Concept]:
    if isinstance(c, And):
        yield from conjuncts(c.left)
        yield from conjuncts(c.right)
    else:
        yield c


def canonical_key(c: Concept) -> tuple:
    """Hashable key identifying ``c`` up to associativity/commutativity of ⊓."""
    if isinstance(c, Atom):
        return ("a", c.name)
    if isinstance(c, Top):
        return ("t",)
    if isinstance(c, Exists):
        return ("e", c.role, canonical_key(c.filler))
    if isinstance(c, And):
        return ("c",) + tuple(sorted({canonical_key(p) for p in conjuncts(c)}))
    raise TypeError(f"not a concept: {c!r}")


def signature(c: Concept) -> tuple[set[str], set[str]]:
    """Concept names and role names occurring in ``c``."""
    names: set[str] = set()
    roles: set[str] = set()
    stack = [c]
    while stack:
        c = stack.pop()
        if isinstance(c, Atom):
            names.add(c.name)
        elif isinstance(c, And):
            stack += (c.left, c.right)
        elif isinstance(c, Exists):
            roles.add(c.role)
            stack.append(c.filler)
    return names, roles


def depth(c: Concept) -> int:
    if isinstance(c, And):
        return 1 + max(depth(c.left), depth(c.right))
    if isinstance(c, Exists):
        return 1 + depth(c.filler)
    return 0


# -- normal forms -----------------------------------------------------------


class Sub(NamedTuple):
    """``lhs ⊑ rhs``"""

    lhs: str
    rhs: str


class ConjSub(NamedTuple):
    """``left ⊓ right ⊑ rhs``"""

    left: str
    right: str
    rhs: str


class SubEx(NamedTuple):
    """``lhs ⊑ ∃role.filler``"""

    lhs: str
    role: str
    filler: str


class ExSub(NamedTuple):
    """``∃role.filler ⊑ rhs``"""

    role: str
    filler: str
    rhs: str


NormalAxiom = Union[Sub, ConjSub, SubEx, ExSub]


@dataclass(frozen=True)
class NormalizedTBox:
    axioms: frozenset
    #: fresh name -> the complex concept it abbreviates
    definitions: dict = field(default_factory=dict, compare=False)

    def names(self) -> set[str]:
        out = {TOP_NAME}
        for ax in self.axioms:
            if isinstance(ax, Sub):
                out.update((ax.lhs, ax.rhs))
            elif isinstance(ax, ConjSub):
                out.update((ax.left, ax.right, ax.rhs))
            elif isinstance(ax, SubEx):
                out.update((ax.lhs, ax.filler))
            else:
                out.update((ax.filler, ax.rhs))
        return out


def _check_names(c: Concept) -> None:
    for name in signature(c)[0]:
        if _RESERVED_RE.match(name):
            raise ValueError(f"concept name {name!r} uses a reserved prefix")


class Normalizer:
    """Incremental normalizer that tags each output axiom with its source.

    Axioms produced for a source GCI carry that GCI's tag.  Fresh names are
    shared between sources (keyed by :func:`canonical_key`) and are defined by
    full equivalences; those definition axioms carry the tag ``None`` since
    they are conservative over any subset of the input.
    """

    def __init__(self) -> None:
        self.output: list[tuple[NormalAxiom, object]] = []
        self.definitions: dict[str, Concept] = {}
        self._fresh: dict[tuple, str] = {}

    def add(self, gci: GCI, tag: object = None) -> None:
        _check_names(gci.lhs)
        _check_names(gci.rhs)
        self._sub(gci.lhs, gci.rhs, tag)

    def add_query_definitions(self, query: GCI) -> tuple[str, str]:
        """Add ``_q_lhs ⊑ C`` and ``D ⊑ _q_rhs`` (untagged) for ``query = C ⊑ D``."""
        _check_names(query.lhs)
        _check_names(query.rhs)
        self._sub(Atom(QUERY_LHS), query.lhs, None)
        self._lhs(query.rhs, QUERY_RHS, None)
        return QUERY_LHS, QUERY_RHS

    def _emit(self, ax: NormalAxiom, tag: object) -> None:
        self.output.append((ax, tag))

    def _name(self, c: Concept) -> str:
        if isinstance(c, Atom):
            return c.name
        if isinstance(c, Top):
            return TOP_NAME
        key = canonical_key(c)
        if key in self._fresh:
            return self._fresh[key]
        if isinstance(c, And):
            parts = {canonical_key(p): p for p in conjuncts(c) if not isinstance(p, Top)}
            ordered = [parts[k] for k in sorted(parts)]
            if not ordered:
                return TOP_NAME
            if len(ordered) == 1:
                return self._name(ordered[0])
        x = f"{FRESH_PREFIX}{len(self._fresh)}"
        self._fresh[key] = x
        self.definitions[x] = c
        if isinstance(c, And):
            # x ≡ prefix ⊓ last, where the prefix has its own name; keeps output linear
            left = self._name(conj(*ordered[:-1]))
            right = self._name(ordered[-1])
            self._emit(Sub(x, left), None)
            self._emit(Sub(x, right), None)
            self._emit(ConjSub(left, right, x), None)
        else:
            self._sub(Atom(x), c, None)
            self._lhs(c, x, None)
        return x

    def _sub(self, c: Concept, d: Concept, tag: object) -> None:
        for part in conjuncts(d):
            if isinstance(part, Top):
                continue
            if isinstance(part, Atom):
                self._lhs(c, part.name, tag)
            elif isinstance(c, (Atom, Top)):
                self._emit(SubEx(self._name(c), part.role, self._name(part.filler)), tag)
            else:
                self._lhs(c, self._name(part), tag)

    def _lhs(self, c: Concept, b: str, tag: object) -> None:
        if isinstance(c, (Atom, Top)):
            self._emit(Sub(self._name(c), b), tag)
        elif isinstance(c, Exists):
            self._emit(ExSub(c.role, self._name(c.filler), b), tag)
        else:
            parts = {canonical_key(p): p for p in conjuncts(c) if not isinstance(p, Top)}
            ordered = [parts[k] for k in sorted(parts)]
            if not ordered:
                self._emit(Sub(TOP_NAME, b), tag)
            elif len(ordered) == 1:
                self._lhs(ordered[0], b, tag)
            else:
                left = self._name(conj(*ordered[:-1]))
                right = self._name(ordered[-1])
                self._emit(ConjSub(left, right, b), tag)

    def tbox(self) -> NormalizedTBox:
        return NormalizedTBox(frozenset(ax for ax, _ in self.output), dict(self.definitions))


def normalize(tbox: Iterable[GCI]) -> NormalizedTBox:
    n = Normalizer()
    for gci in tbox:
        n.add(gci)
    return n.tbox()


# -- completion ---------------------------------------------------------------


def _saturate(axioms: Iterable[NormalAxiom], names: set[str]) -> dict[str, set[str]]:
    sub = defaultdict(list)
    conj_by = defaultdict(list)
    ex_right = defaultdict(list)
    ex_left = defaultdict(list)
    ex_by_filler = defaultdict(list)
    for ax in axioms:
        if isinstance(ax, Sub):
            sub[ax.lhs].append(ax.rhs)
        elif isinstance(ax, ConjSub):
            conj_by[ax.left].append((ax.right, ax.rhs))
            conj_by[ax.right].append((ax.left, ax.rhs))
        elif isinstance(ax, SubEx):
            ex_right[ax.lhs].append((ax.role, ax.filler))
        else:
            ex_left[(ax.role, ax.filler)].append(ax.rhs)
            ex_by_filler[ax.filler].append((ax.role, ax.rhs))

    S: dict[str, set[str]] = {a: set() for a in names}
    preds: dict[tuple[str, str], set[str]] = defaultdict(set)  # (role, B) -> {A | (A,B) in R(role)}
    succs: dict[str, set[tuple[str, str]]] = defaultdict(set)  # A -> {(role, B)}
    todo: deque = deque()
    for a in names:
        todo.append(("S", a, a))
        todo.append(("S", a, TOP_NAME))

    while todo:
        item = todo.popleft()
        if item[0] == "S":
            _, a, b = item
            if b in S[a]:
                continue
            S[a].add(b)
            for c in sub[b]:
                todo.append(("S", a, c))
            for other, c in conj_by[b]:
                if other in S[a]:
                    todo.append(("S", a, c))
            for role, filler in ex_right[b]:
                todo.append(("R", role, a, filler))
            # b newly in S(a): ∃role.b ⊑ c fires for every role-predecessor of a
            for role, c in ex_by_filler[b]:
                for p in preds[(role, a)]:
                    todo.append(("S", p, c))
        else:
            _, role, a, b = item
            if (role, b) in succs[a]:
                continue
            succs[a].add((role, b))
            preds[(role, b)].add(a)
            for b2 in S[b]:
                for c in ex_left.get((role, b2), ()):
                    todo.append(("S", a, c))
    return S


def classify(tbox: NormalizedTBox, names: Iterable[str] = ()) -> frozenset[tuple[str, str]]:
    """All subsumptions ``(A, B)`` between names derived by completion.

    ``names`` adds concept names that do not occur in the axioms.
    """
    all_names = tbox.names() | set(names)
    S = _saturate(tbox.axioms, all_names)
    return frozenset((a, b) for a, bs in S.items() for b in bs)


def entails(tbox: Sequence[GCI], query: GCI) -> bool:
    """Classical EL entailment ``tbox ⊨ query``."""
    n = Normalizer()
    for gci in tbox:
        n.add(gci)
    lhs, rhs = n.add_query_definitions(query)
    nt = n.tbox()
    S = _saturate(nt.axioms, nt.names() | {lhs, rhs})
    return rhs in S[lhs]

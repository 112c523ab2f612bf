"""Bayesian networks over Boolean context variables.

CPT rows are keyed by tuples of 0/1 values, one per parent in the order of
``Cpt.parents``; the stored value is ``P(child = true | row)``.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .context import ENUMERATION_CAP, Context, ContextFormula, Variables, indicator
from .errors import CapExceeded, ValidationError, ZeroProbability

#: Maximum number of variables for the dense joint vector.
JOINT_CAP = 24

Row = tuple


@dataclass(frozen=True)
class Cpt:
    child: str
    parents: tuple[str, ...] = ()
    table: Mapping[Row, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", {tuple(int(v) for v in k): float(p) for k, p in dict(self.table).items()})

    @classmethod
    def root(cls, child: str, p: float) -> Cpt:
        return cls(child, (), {(): p})

    def rows(self) -> list[Row]:
        """All parent assignments, first parent most significant."""
        return list(itertools.product((0, 1), repeat=len(self.parents)))

    def p_true(self, row: Row) -> float:
        return self.table[tuple(row)]

    def as_array(self) -> np.ndarray:
        """``P(child = true | row)`` as a flat array indexed like :meth:`rows`."""
        return np.array([self.table[r] for r in self.rows()], dtype=float)

    def problems(self) -> list[str]:
        out = []
        if self.child in self.parents:
            out.append(f"{self.child}: variable is its own parent")
        if len(set(self.parents)) != len(self.parents):
            out.append(f"{self.child}: duplicate parents")
        for row in self.rows():
            if row not in self.table:
                assignment = ", ".join(f"{p}={v}" for p, v in zip(self.parents, row))
                out.append(f"{self.child}: missing CPT row for parent assignment ({assignment})")
            elif not 0.0 <= self.table[row] <= 1.0:
                out.append(f"{self.child}: probability {self.table[row]} out of range [0, 1]")
        for row in self.table:
            if len(row) != len(self.parents) or any(v not in (0, 1) for v in row):
                out.append(f"{self.child}: malformed CPT row {row}")
        return out


def find_cycle(parents: Mapping[str, Sequence[str]]) -> list[str] | None:
    """A directed cycle in the parent relation, or ``None``."""
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(v: str) -> list[str] | None:
        state[v] = 1
        stack.append(v)
        for p in parents.get(v, ()):
            if state.get(p) == 1:
                return stack[stack.index(p):] + [p]
            if p not in state:
                found = visit(p)
                if found:
                    return found
        stack.pop()
        state[v] = 2
        return None

    for v in sorted(parents):
        if v not in state:
            found = visit(v)
            if found:
                return found
    return None


@dataclass(frozen=True)
class BayesNet:
    vars: Variables
    cpts: Mapping[str, Cpt]

    def __post_init__(self) -> None:
        if not isinstance(self.vars, Variables):
            object.__setattr__(self, "vars", Variables(self.vars))
        if not isinstance(self.cpts, Mapping):
            object.__setattr__(self, "cpts", {c.child: c for c in self.cpts})

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(p, c.child) for c in self.cpts.values() for p in c.parents]

    def parents(self, name: str) -> tuple[str, ...]:
        return self.cpts[name].parents

    def validate(self) -> list[str]:
        return validate(self)

    def check(self) -> BayesNet:
        problems = validate(self)
        if problems:
            raise ValidationError(problems)
        return self


def validate(bn: BayesNet) -> list[str]:
    """Diagnostics for cycles, missing/extra CPTs and malformed tables (empty when valid)."""
    out = []
    names = set(bn.vars.names)
    for name in bn.vars.names:
        if name not in bn.cpts:
            out.append(f"{name}: no CPT")
    for child, cpt in bn.cpts.items():
        if child != cpt.child:
            out.append(f"{child}: CPT registered under the wrong name")
        if child not in names:
            out.append(f"{child}: CPT for undeclared variable")
        for p in cpt.parents:
            if p not in names:
                out.append(f"{child}: undeclared parent {p}")
        out.extend(cpt.problems())
    cycle = find_cycle({c: cpt.parents for c, cpt in bn.cpts.items()})
    if cycle:
        out.append("cycle: " + " -> ".join(reversed(cycle)))
    return out


def world_prob(bn: BayesNet, w: int) -> float:
    """Joint probability of the total assignment ``w``."""
    value = {v: bool(w & bn.vars.bit(v)) for v in bn.vars.names}
    p = 1.0
    for name in bn.vars.names:
        cpt = bn.cpts[name]
        pt = cpt.p_true(tuple(int(value[q]) for q in cpt.parents))
        p *= pt if value[name] else 1.0 - pt
    return p


def cpt_product(cpts: Iterable[Cpt], order: Sequence[str]) -> np.ndarray:
    """Product of CPT entries over every assignment of ``order`` (first name = MSB).

    Variables in ``order`` without a CPT act as conditioning variables.
    """
    n = len(order)
    if n > JOINT_CAP:
        raise CapExceeded(f"{n} variables exceeds the joint-table cap of {JOINT_CAP}")
    pos = {name: n - 1 - i for i, name in enumerate(order)}
    idx = np.arange(1 << n, dtype=np.uint32 if n < 32 else np.uint64)

    def bits(name: str) -> np.ndarray:
        return ((idx >> pos[name]) & 1).astype(np.intp)

    out = np.ones(1 << n)
    for cpt in cpts:
        row = np.zeros(1 << n, dtype=np.intp)
        for parent in cpt.parents:
            row = (row << 1) | bits(parent)
        pt = cpt.as_array()[row]
        out *= np.where(bits(cpt.child) == 1, pt, 1.0 - pt)
    return out


def joint(bn: BayesNet) -> np.ndarray:
    """Vector of world probabilities indexed by world."""
    return cpt_product(bn.cpts.values(), bn.vars.names)


def formula_prob(bn: BayesNet, phi: ContextFormula) -> float:
    n = len(bn.vars)
    if n > ENUMERATION_CAP:
        raise CapExceeded(f"{n} variables exceeds the enumeration cap of {ENUMERATION_CAP}")
    return float(joint(bn)[indicator(phi, n)].sum())


# -- variable elimination ------------------------------------------------------


class Factor:
    """Table over Boolean variables; axis ``i`` belongs to ``vars[i]``, index 1 = true."""

    __slots__ = ("vars", "table")

    def __init__(self, vars: Sequence[str], table: np.ndarray):
        self.vars = tuple(vars)
        self.table = np.asarray(table, dtype=float).reshape((2,) * len(self.vars))

    @classmethod
    def from_cpt(cls, cpt: Cpt) -> Factor:
        pt = cpt.as_array().reshape((2,) * len(cpt.parents))
        return cls(cpt.parents + (cpt.child,), np.stack([1.0 - pt, pt], axis=-1))

    def __mul__(self, other: Factor) -> Factor:
        out = list(self.vars) + [v for v in other.vars if v not in self.vars]
        if len(out) > 50:
            raise CapExceeded("factor scope too large for elimination")
        letter = {v: string.ascii_letters[i] for i, v in enumerate(out)}
        subscripts = "{},{}->{}".format(
            "".join(letter[v] for v in self.vars),
            "".join(letter[v] for v in other.vars),
            "".join(letter[v] for v in out),
        )
        return Factor(out, np.einsum(subscripts, self.table, other.table))

    def sum_out(self, var: str) -> Factor:
        i = self.vars.index(var)
        return Factor(self.vars[:i] + self.vars[i + 1:], self.table.sum(axis=i))

    def reduce(self, evidence: Mapping[str, bool]) -> Factor:
        index = tuple(int(evidence[v]) if v in evidence else slice(None) for v in self.vars)
        return Factor([v for v in self.vars if v not in evidence], self.table[index])


def min_fill_order(scopes: Iterable[Iterable[str]], eliminate: Iterable[str], rank: Mapping[str, int]) -> list[str]:
    """Greedy min-fill ordering; ties broken by ``rank``."""
    adj: dict[str, set[str]] = {}
    for scope in scopes:
        scope = list(scope)
        for v in scope:
            adj.setdefault(v, set()).update(u for u in scope if u != v)
    remaining = set(eliminate)
    for v in remaining:
        adj.setdefault(v, set())
    order = []
    while remaining:
        def fill(v: str) -> int:
            nb = list(adj[v])
            return sum(1 for i, a in enumerate(nb) for b in nb[i + 1:] if b not in adj[a])

        v = min(remaining, key=lambda u: (fill(u), rank[u]))
        nb = adj.pop(v)
        for a in nb:
            adj[a].discard(v)
            adj[a].update(nb - {a})
        remaining.remove(v)
        order.append(v)
    return order


def _evidence_dict(bn: BayesNet, evidence: Mapping[str, bool] | Context | None) -> dict[str, bool]:
    if evidence is None:
        return {}
    if isinstance(evidence, Context):
        return {lit.var.name: lit.positive for lit in bn.vars.literals(evidence)}
    for name in evidence:
        bn.vars.var(name)
    return {k: bool(v) for k, v in evidence.items()}


def _eliminate(bn: BayesNet, ev: Mapping[str, bool], hidden: Sequence[str]) -> list[Factor]:
    factors = [Factor.from_cpt(bn.cpts[v]).reduce(ev) for v in bn.vars.names]
    rank = {v: i for i, v in enumerate(bn.vars.names)}
    for v in min_fill_order([f.vars for f in factors], hidden, rank):
        involved = [f for f in factors if v in f.vars]
        if not involved:
            continue
        factors = [f for f in factors if v not in f.vars]
        prod = involved[0]
        for f in involved[1:]:
            prod = prod * f
        factors.append(prod.sum_out(v))
    return factors


def marginal(bn: BayesNet, targets: Sequence[str], evidence: Mapping[str, bool] | Context | None = None) -> np.ndarray:
    """``P(targets | evidence)`` by variable elimination.

    Returns a flat vector over target assignments, first target most significant.
    """
    ev = _evidence_dict(bn, evidence)
    targets = list(targets)
    for t in targets:
        bn.vars.var(t)
    hidden = [v for v in bn.vars.names if v not in targets and v not in ev]
    factors = _eliminate(bn, ev, hidden)
    result = Factor((), np.array(1.0))
    for f in factors:
        result = result * f
    for t in targets:
        if t not in result.vars:
            if t in ev:
                pinned = np.zeros(2)
                pinned[int(ev[t])] = 1.0
                result = result * Factor((t,), pinned)
            else:
                result = result * Factor((t,), np.ones(2))
    table = np.transpose(result.table, [result.vars.index(t) for t in targets]).reshape(-1)
    total = table.sum()
    if total <= 0.0:
        raise ZeroProbability("inconsistent evidence: P(evidence) = 0")
    return table / total


def evidence_prob(bn: BayesNet, evidence: Mapping[str, bool] | Context) -> float:
    """``P(evidence)`` by variable elimination."""
    ev = _evidence_dict(bn, evidence)
    factors = _eliminate(bn, ev, [v for v in bn.vars.names if v not in ev])
    return float(np.prod([float(f.table) for f in factors]))

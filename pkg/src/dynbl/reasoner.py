"""Probabilistic query answering over a DBN-governed V-ontology.

Every probability is computed exactly through the context formula of the
query; the ``*_oracle`` functions recompute the same numbers by brute-force
enumeration and never touch the context formula or the filtering code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from . import bayes, el
from .context import Context, ContextFormula, VOntology, context_formula, indicator, restrict
from .dbn import (
    Dbn,
    TransitionMatrix,
    initial_distribution,
    slice_marginal,
    slice_name,
    transition_matrix,
    unravel,
)
from .errors import ZeroProbability
from .markov import ChainAnalysis, analyze, delta, reaches_in_every_class

DEFAULT_HORIZON = 32


@dataclass(frozen=True)
class KnowledgeBase:
    dbn: Dbn
    ontology: VOntology

    def __post_init__(self) -> None:
        if self.ontology.vars != self.dbn.vars:
            raise ValueError("ontology and DBN must declare the same variables in the same order")

    @property
    def vars(self):
        return self.dbn.vars


@dataclass(frozen=True)
class EvidenceLiteral:
    var: str
    slice: int
    value: bool


@dataclass(frozen=True)
class TimedEvidence:
    literals: frozenset[EvidenceLiteral] = frozenset()

    def __post_init__(self) -> None:
        lits = frozenset(self.literals)
        object.__setattr__(self, "literals", lits)
        seen: dict[tuple[str, int], bool] = {}
        for lit in lits:
            if lit.slice < 1:
                raise ValueError(f"evidence slice {lit.slice} for {lit.var} must be >= 1")
            key = (lit.var, lit.slice)
            if seen.get(key, lit.value) != lit.value:
                raise ValueError(f"inconsistent evidence: {lit.var}@{lit.slice} assigned both values")
            seen[key] = lit.value

    @classmethod
    def of(cls, items: Mapping[tuple[str, int], bool] | Iterable[tuple[str, int, bool]]) -> TimedEvidence:
        if isinstance(items, Mapping):
            items = [(v, s, val) for (v, s), val in items.items()]
        return cls(frozenset(EvidenceLiteral(v, int(s), bool(val)) for v, s, val in items))

    @property
    def horizon(self) -> int:
        return max((lit.slice for lit in self.literals), default=0)

    def as_unrolled(self) -> dict[str, bool]:
        return {slice_name(lit.var, lit.slice): lit.value for lit in self.literals}

    def __bool__(self) -> bool:
        return bool(self.literals)


class ResultKind(enum.Enum):
    CERTAIN_ONE = "CertainOne"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class EventualResult:
    kind: ResultKind
    delta_value: float
    lower_bound: float
    horizon_used: int

    @property
    def probability(self) -> float | None:
        """1 when certain; unknown (``None``) otherwise."""
        return 1.0 if self.kind is ResultKind.CERTAIN_ONE else None


class Reasoner:
    """Answers queries on one knowledge base, caching context formulas and the chain."""

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self._formulas: dict[el.GCI, ContextFormula] = {}

    def formula(self, query: el.GCI) -> ContextFormula:
        if query not in self._formulas:
            self._formulas[query] = context_formula(self.kb.ontology, query)
        return self._formulas[query]

    def _mask(self, query: el.GCI) -> np.ndarray:
        return indicator(self.formula(query), len(self.kb.vars))

    @cached_property
    def matrix(self) -> TransitionMatrix:
        return transition_matrix(self.kb.dbn.transition)

    @cached_property
    def chain(self) -> ChainAnalysis:
        return analyze(self.matrix)

    def prob(self, query: el.GCI) -> float:
        return bayes.formula_prob(self.kb.dbn.initial, self.formula(query))

    def prob_given(self, query: el.GCI, kappa: Context) -> float:
        joint = bayes.joint(self.kb.dbn.initial)
        ctx = indicator(ContextFormula.of(kappa), len(self.kb.vars))
        p_kappa = float(joint[ctx].sum())
        if p_kappa <= 0.0:
            raise ZeroProbability("conditioning on zero-probability context")
        return float(joint[ctx & self._mask(query)].sum()) / p_kappa

    def prob_at(self, query: el.GCI, t: int, method: str = "filter") -> float:
        """Probability of ``query`` at time ``t``.

        ``filter`` and ``unroll`` use the context formula on the slice
        distribution; ``worlds`` sums over worlds by direct entailment tests.
        """
        if method == "worlds":
            dist = slice_marginal(self.kb.dbn, t)
            return float(sum(
                dist[w] for w in self.kb.vars.worlds() if el.entails(restrict(self.kb.ontology, w), query)
            ))
        dist = slice_marginal(self.kb.dbn, t, method=method)
        return float(dist.probs[self._mask(query)].sum())

    def survival(self, query: el.GCI, t: int) -> np.ndarray:
        """Unnormalized mass of worlds at ``t`` reached without ``query`` ever holding."""
        if t < 1:
            raise ValueError("time points start at 1")
        mask = self._mask(query)
        v = np.where(mask, 0.0, initial_distribution(self.kb.dbn.initial).probs)
        for _ in range(t - 1):
            v = np.where(mask, 0.0, v @ self.matrix.matrix)
        return v

    def prob_within(self, query: el.GCI, t: int) -> float:
        return float(1.0 - self.survival(query, t).sum())

    def prob_at_evidence(self, query: el.GCI, t: int, evidence: TimedEvidence, method: str = "filter") -> float:
        if evidence.horizon > t:
            raise ValueError(f"evidence mentions slice {evidence.horizon} beyond t={t}")
        for lit in evidence.literals:
            self.kb.vars.var(lit.var)
        if method == "unroll":
            net = unravel(self.kb.dbn, t)
            targets = [slice_name(v, t) for v in self.kb.vars.names]
            dist = bayes.marginal(net, targets, evidence.as_unrolled())
            return float(dist[self._mask(query)].sum())
        if method != "filter":
            raise ValueError(f"unknown method {method!r}")
        vars = self.kb.vars
        allowed = {}
        for lit in evidence.literals:
            bit = vars.bit(lit.var)
            idx = np.arange(1 << len(vars))
            keep = (idx & bit) != 0 if lit.value else (idx & bit) == 0
            allowed[lit.slice] = allowed.get(lit.slice, True) & keep
        v = initial_distribution(self.kb.dbn.initial).probs
        for i in range(1, t + 1):
            if i > 1:
                v = v @ self.matrix.matrix
            if i in allowed:
                v = np.where(allowed[i], v, 0.0)
        total = v.sum()
        if total <= 0.0:
            raise ZeroProbability("zero-probability evidence")
        return float(v[self._mask(query)].sum() / total)

    def prob_eventually(self, query: el.GCI, horizon: int = DEFAULT_HORIZON) -> EventualResult:
        phi = self.formula(query)
        d = delta(self.chain, phi)
        certain = reaches_in_every_class(self.chain, phi)
        return EventualResult(
            kind=ResultKind.CERTAIN_ONE if certain else ResultKind.INDETERMINATE,
            delta_value=d,
            lower_bound=self.prob_within(query, horizon),
            horizon_used=horizon,
        )


# -- functional interface -------------------------------------------------------------


def prob(kb: KnowledgeBase, query: el.GCI) -> float:
    return Reasoner(kb).prob(query)


def prob_given(kb: KnowledgeBase, query: el.GCI, kappa: Context) -> float:
    return Reasoner(kb).prob_given(query, kappa)


def prob_at(kb: KnowledgeBase, query: el.GCI, t: int, method: str = "filter") -> float:
    return Reasoner(kb).prob_at(query, t, method)


def prob_within(kb: KnowledgeBase, query: el.GCI, t: int) -> float:
    return Reasoner(kb).prob_within(query, t)


def prob_at_evidence(kb: KnowledgeBase, query: el.GCI, t: int, evidence: TimedEvidence, method: str = "filter") -> float:
    return Reasoner(kb).prob_at_evidence(query, t, evidence, method)


def prob_eventually(kb: KnowledgeBase, query: el.GCI, horizon: int = DEFAULT_HORIZON) -> EventualResult:
    return Reasoner(kb).prob_eventually(query, horizon)


# -- brute-force twins ----------------------------------------------------------------


def entailing_worlds(kb: KnowledgeBase, query: el.GCI) -> np.ndarray:
    """Boolean vector over worlds: does the restricted ontology entail ``query``?"""
    return np.array([el.entails(restrict(kb.ontology, w), query) for w in kb.vars.worlds()], dtype=bool)


def _trajectories(kb: KnowledgeBase, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Joint probabilities of all length-``t`` trajectories and their per-slice worlds."""
    net = unravel(kb.dbn, t)
    probs = bayes.joint(net)
    n = len(kb.vars)
    idx = np.arange(1 << (n * t), dtype=np.int64)
    slices = np.stack([(idx >> (n * (t - i))) & ((1 << n) - 1) for i in range(1, t + 1)], axis=1)
    return probs, slices


def prob_oracle(kb: KnowledgeBase, query: el.GCI) -> float:
    ok = entailing_worlds(kb, query)
    return float(sum(bayes.world_prob(kb.dbn.initial, w) for w in kb.vars.worlds() if ok[w]))


def prob_at_oracle(kb: KnowledgeBase, query: el.GCI, t: int) -> float:
    probs, slices = _trajectories(kb, t)
    return float(probs[entailing_worlds(kb, query)[slices[:, -1]]].sum())


def prob_within_oracle(kb: KnowledgeBase, query: el.GCI, t: int) -> float:
    probs, slices = _trajectories(kb, t)
    hit = entailing_worlds(kb, query)[slices].any(axis=1)
    return float(probs[hit].sum())


def prob_at_evidence_oracle(kb: KnowledgeBase, query: el.GCI, t: int, evidence: TimedEvidence) -> float:
    probs, slices = _trajectories(kb, t)
    keep = np.ones(len(probs), dtype=bool)
    for lit in evidence.literals:
        bit = kb.vars.bit(lit.var)
        keep &= ((slices[:, lit.slice - 1] & bit) != 0) == lit.value
    p_e = probs[keep].sum()
    if p_e <= 0.0:
        raise ZeroProbability("zero-probability evidence")
    ok = entailing_worlds(kb, query)[slices[:, -1]]
    return float(probs[keep & ok].sum() / p_e)

"""Probabilistic reasoning over ontologies whose contexts evolve under a dynamic Bayesian network."""

from .bayes import BayesNet, Cpt
from .context import (
    FALSE,
    TRUE,
    Context,
    ContextFormula,
    Variables,
    VAxiom,
    VOntology,
    context_formula,
    equivalent,
    parse_formula,
    restrict,
    satisfying_worlds,
)
from .dbn import Dbn, TransitionMatrix, TwoSliceNet, WorldDistribution
from .el import GCI, TOP, And, Atom, Exists, entails
from .errors import CapExceeded, DblError, InconsistentContext, ValidationError, ZeroProbability
from .kbformat import KbSyntaxError, load_kb, parse_kb, parse_query, render_kb
from .reasoner import EventualResult, KnowledgeBase, Reasoner, ResultKind, TimedEvidence

__version__ = "0.1.0"

__all__ = [
    "And", "Atom", "BayesNet", "CapExceeded", "Context", "ContextFormula", "Cpt", "Dbn", "DblError",
    "EventualResult", "Exists", "FALSE", "GCI", "InconsistentContext", "KbSyntaxError", "KnowledgeBase",
    "Reasoner", "ResultKind", "TOP", "TRUE", "TimedEvidence", "TransitionMatrix", "TwoSliceNet",
    "VAxiom", "VOntology", "ValidationError", "Variables", "WorldDistribution", "ZeroProbability",
    "context_formula", "entails", "equivalent", "load_kb", "parse_formula", "parse_kb", "parse_query",
    "render_kb", "restrict", "satisfying_worlds",
]

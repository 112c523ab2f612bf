"""Two-slice networks, DBNs, unraveling and world-level filtering.

In a :class:`TwoSliceNet` the next-slice copy of ``x`` is named ``x'``.
Unraveled networks name the copy of ``x`` in slice ``i`` as ``x@i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import bayes
from .bayes import BayesNet, Cpt, find_cycle
from .context import Variables
from .errors import CapExceeded, ValidationError

#: Largest |V| for a dense world transition matrix.
MATRIX_CAP = 12
#: Largest number of variables in an unraveled network.
UNROLL_CAP = 24

TOL = 1e-9


def primed(name: str) -> str:
    return name + "'"


def unprimed(name: str) -> str:
    return name[:-1] if name.endswith("'") else name


def slice_name(name: str, t: int) -> str:
    return f"{name}@{t}"


@dataclass(frozen=True)
class TwoSliceNet:
    """Transition model ``P(V' | V)``; CPTs exist only for primed variables."""

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

    def validate(self) -> list[str]:
        out = []
        names = set(self.vars.names)
        allowed = names | {primed(n) for n in names}
        for name in self.vars.names:
            if primed(name) not in self.cpts:
                out.append(f"{primed(name)}: no CPT")
        for child, cpt in self.cpts.items():
            if child in names:
                out.append(f"{child}: unprimed variables take no CPT in a two-slice network")
                continue
            if child not in allowed:
                out.append(f"{child}: CPT for undeclared variable")
            for p in cpt.parents:
                if p not in allowed:
                    out.append(f"{child}: undeclared parent {p}")
            out.extend(cpt.problems())
        cycle = find_cycle({c: [p for p in cpt.parents if p.endswith("'")] for c, cpt in self.cpts.items()})
        if cycle:
            out.append("cycle: " + " -> ".join(reversed(cycle)))
        return out

    def check(self) -> TwoSliceNet:
        problems = self.validate()
        if problems:
            raise ValidationError(problems)
        return self


@dataclass(frozen=True)
class Dbn:
    initial: BayesNet
    transition: TwoSliceNet

    def __post_init__(self) -> None:
        if self.initial.vars != self.transition.vars:
            raise ValueError("initial and transition networks must share the same variable order")

    @property
    def vars(self) -> Variables:
        return self.initial.vars

    def validate(self) -> list[str]:
        return [f"[bn] {p}" for p in self.initial.validate()] + [f"[tbn] {p}" for p in self.transition.validate()]


@dataclass(frozen=True)
class WorldDistribution:
    vars: Variables
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (1 << len(self.vars),):
            raise ValueError(f"expected {1 << len(self.vars)} world probabilities, got shape {probs.shape}")
        object.__setattr__(self, "probs", probs)

    def __getitem__(self, w: int) -> float:
        return float(self.probs[w])

    def is_normalized(self, tol: float = TOL) -> bool:
        return bool((self.probs >= -tol).all() and abs(self.probs.sum() - 1.0) <= tol)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row ``w`` is the distribution of the next world given current world ``w``."""

    vars: Variables
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        size = 1 << len(self.vars)
        if m.shape != (size, size):
            raise ValueError(f"expected a {size}x{size} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def __getitem__(self, key):
        return self.matrix[key]

    def is_stochastic(self, tol: float = TOL) -> bool:
        m = self.matrix
        return bool((m >= -tol).all() and (m <= 1 + tol).all() and np.allclose(m.sum(axis=1), 1.0, rtol=0, atol=tol))


def transition_matrix(tbn: TwoSliceNet, cap: int = MATRIX_CAP) -> TransitionMatrix:
    n = len(tbn.vars)
    if n > cap:
        raise CapExceeded(f"{n} variables exceeds the transition-matrix cap of {cap}")
    order = list(tbn.vars.names) + [primed(v) for v in tbn.vars.names]
    m = bayes.cpt_product(tbn.cpts.values(), order).reshape(1 << n, 1 << n)
    return TransitionMatrix(tbn.vars, m)


def initial_distribution(bn: BayesNet, cap: int = MATRIX_CAP + 8) -> WorldDistribution:
    if len(bn.vars) > cap:
        raise CapExceeded(f"{len(bn.vars)} variables exceeds the distribution cap of {cap}")
    return WorldDistribution(bn.vars, bayes.joint(bn))


def forward_step(dist: WorldDistribution, m: TransitionMatrix) -> WorldDistribution:
    if dist.vars != m.vars:
        raise ValueError("distribution and transition matrix are over different variables")
    return WorldDistribution(dist.vars, dist.probs @ m.matrix)


def slice_marginal(d: Dbn, t: int, method: str = "filter") -> WorldDistribution:
    """Distribution of the worlds at time ``t``.

    ``method="filter"`` iterates :func:`forward_step`; ``method="unroll"``
    eliminates every variable outside slice ``t`` of :func:`unravel`.
    """
    if t < 1:
        raise ValueError("time points start at 1")
    if method == "filter":
        dist = initial_distribution(d.initial)
        if t > 1:
            m = transition_matrix(d.transition)
            for _ in range(t - 1):
                dist = forward_step(dist, m)
        return dist
    if method == "unroll":
        net = unravel(d, t)
        targets = [slice_name(v, t) for v in d.vars.names]
        return WorldDistribution(d.vars, bayes.marginal(net, targets))
    raise ValueError(f"unknown method {method!r}")


def unravel(d: Dbn, t: int, cap: int = UNROLL_CAP) -> BayesNet:
    """The network over slices ``1..t``; slice 1 copies the initial net."""
    if t < 1:
        raise ValueError("time points start at 1")
    names = d.vars.names
    if t * len(names) > cap:
        raise CapExceeded(f"unraveling {len(names)} variables to t={t} exceeds the cap of {cap}")
    cpts = []
    for v in names:
        c = d.initial.cpts[v]
        cpts.append(Cpt(slice_name(v, 1), tuple(slice_name(p, 1) for p in c.parents), c.table))
    for i in range(2, t + 1):
        for v in names:
            c = d.transition.cpts[primed(v)]
            parents = tuple(
                slice_name(unprimed(p), i) if p.endswith("'") else slice_name(p, i - 1) for p in c.parents
            )
            cpts.append(Cpt(slice_name(v, i), parents, c.table))
    net_vars = Variables(slice_name(v, i) for i in range(1, t + 1) for v in names)
    return BayesNet(net_vars, {c.child: c for c in cpts})

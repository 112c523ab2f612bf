"""The Markov chain over worlds induced by a two-slice network."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.sparse.csgraph import connected_components

from .context import ContextFormula, indicator
from .dbn import TOL, TransitionMatrix, WorldDistribution


@dataclass(frozen=True)
class ChainAnalysis:
    matrix: TransitionMatrix
    support: np.ndarray  # bool adjacency, support[i, j] iff P(j | i) > 0
    components: tuple[tuple[int, ...], ...]
    recurrent: tuple[tuple[int, ...], ...]
    periods: tuple[int, ...]  # one per recurrent class
    stationary: tuple[WorldDistribution, ...]  # one per recurrent class

    @property
    def irreducible(self) -> bool:
        return len(self.components) == 1

    @property
    def aperiodic(self) -> bool:
        return all(p == 1 for p in self.periods)


def _period(cls: tuple[int, ...], support: np.ndarray) -> int:
    members = set(cls)
    if any(support[i, i] for i in cls):
        return 1
    level = {cls[0]: 0}
    queue = deque([cls[0]])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(support[u]):
            v = int(v)
            if v not in members:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = gcd(g, level[u] + 1 - level[v])
    return abs(g) if g else 1


def _solve_stationary(m: np.ndarray, cls: tuple[int, ...]) -> np.ndarray:
    """Stationary vector of the chain restricted to a closed class."""
    idx = np.array(cls)
    sub = m[np.ix_(idx, idx)]
    k = len(cls)
    a = sub.T - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def analyze(m: TransitionMatrix) -> ChainAnalysis:
    support = m.matrix > 0.0
    ncomp, labels = connected_components(support, directed=True, connection="strong")
    components = [tuple(int(i) for i in np.flatnonzero(labels == c)) for c in range(ncomp)]
    components.sort()
    recurrent = []
    for comp in components:
        members = np.zeros(len(labels), dtype=bool)
        members[list(comp)] = True
        if not support[np.ix_(members, ~members)].any():
            recurrent.append(comp)
    stationary = []
    for cls in recurrent:
        full = np.zeros(len(labels))
        full[list(cls)] = _solve_stationary(m.matrix, cls)
        stationary.append(WorldDistribution(m.vars, full))
    return ChainAnalysis(
        matrix=m,
        support=support,
        components=tuple(components),
        recurrent=tuple(recurrent),
        periods=tuple(_period(c, support) for c in recurrent),
        stationary=tuple(stationary),
    )


def class_masses(analysis: ChainAnalysis, phi: ContextFormula) -> list[float]:
    """Stationary mass of the ``phi``-worlds, per recurrent class."""
    mask = indicator(phi, len(analysis.matrix.vars))
    return [float(pi.probs[mask].sum()) for pi in analysis.stationary]


def delta(m: TransitionMatrix | ChainAnalysis, phi: ContextFormula) -> float:
    """Minimum mass any stationary distribution puts on the ``phi``-worlds.

    Stationary distributions are the convex combinations of the per-class
    ones, so the minimum is attained at one of them.
    """
    analysis = m if isinstance(m, ChainAnalysis) else analyze(m)
    return min(class_masses(analysis, phi))


def reaches_in_every_class(analysis: ChainAnalysis, phi: ContextFormula) -> bool:
    """Qualitative form of ``delta > 0``: every recurrent class contains a ``phi``-world."""
    mask = indicator(phi, len(analysis.matrix.vars))
    return all(mask[list(cls)].any() for cls in analysis.recurrent)


def stationary_check(m: TransitionMatrix, dist: WorldDistribution, tol: float = TOL) -> bool:
    return bool(np.abs(dist.probs @ m.matrix - dist.probs).max() <= tol)


def power_iterate(m: TransitionMatrix, start: np.ndarray, tol: float = 1e-12, max_steps: int = 100_000) -> np.ndarray:
    v = np.asarray(start, dtype=float)
    for _ in range(max_steps):
        nxt = v @ m.matrix
        if np.abs(nxt - v).max() < tol:
            return nxt
        v = nxt
    return v

"""Acceptance criteria, one test each.

Every test prints a single ``criterion N PASS|FAIL: ...`` line and records it
so the terminal summary repeats all of them after the run.
"""

import os
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from dynbl import el
from dynbl.context import (
    ContextFormula,
    Variables,
    context_formula,
    equivalent,
    indicator,
    parse_formula,
    restrict,
)
from dynbl.dbn import WorldDistribution, transition_matrix
from dynbl.errors import ZeroProbability
from dynbl.markov import analyze, delta, power_iterate, stationary_check
from dynbl.reasoner import Reasoner, ResultKind, TimedEvidence, prob_within_oracle

from conftest import ACCEPTANCE_LINES, kb_path, one_var_kb
from generators import CONCEPT_NAMES, interesting_query, random_evidence, random_gci, random_kb, random_tbn, random_vontology
from oracles import trajectories

AB = el.GCI(el.Atom("A"), el.Atom("B"))
INNER = "DYNBL_ACCEPTANCE_INNER"


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_context_formula_matches_entailment():
    rng = random.Random(1001)
    start = time.perf_counter()
    ontologies = checks = mismatches = nonconstant = 0
    atomic = [el.GCI(el.Atom(a), el.Atom(b)) for a in CONCEPT_NAMES for b in CONCEPT_NAMES]
    while ontologies < 200:
        ont = random_vontology(rng, rng.randint(1, 4), rng.randint(1, 12), depth=3)
        # per-world classical classification answers every atomic query at once
        subsumptions = [el.classify(el.normalize(restrict(ont, w)), CONCEPT_NAMES) for w in ont.vars.worlds()]
        for q in atomic + [random_gci(rng, 2) for _ in range(3)]:
            phi = context_formula(ont, q)
            nonconstant += not (phi.is_true or phi.is_false)
            mask = indicator(phi, len(ont.vars))
            for w in ont.vars.worlds():
                if isinstance(q.lhs, el.Atom) and isinstance(q.rhs, el.Atom):
                    truth = (q.lhs.name, q.rhs.name) in subsumptions[w]
                else:
                    truth = el.entails(restrict(ont, w), q)
                checks += 1
                mismatches += bool(mask[w]) != truth
        ontologies += 1
    elapsed = time.perf_counter() - start
    report(1, mismatches == 0 and elapsed < 30.0,
           f"{ontologies} ontologies, {checks} world checks ({nonconstant} non-constant formulas), "
           f"{mismatches} mismatches, {elapsed:.1f} s (limit 30 s)")


def test_criterion_2_example_formula(example1, xyz, comp_fails):
    phi = context_formula(example1, comp_fails)
    reference = parse_formula("(x & (y | z)) | (!x & y & z)", xyz)
    expected = {xyz.context("x", "y"), xyz.context("x", "z"), xyz.context("!x", "y", "z")}
    ok = equivalent(phi, reference, xyz) and phi.disjuncts == expected
    report(2, ok, f"canonical DNF {xyz.render_formula(phi)}")


def _timed_family(seed: int, count: int):
    rng = random.Random(seed)
    for _ in range(count):
        kb = random_kb(rng, rng.randint(1, 3))
        yield kb, interesting_query(rng, kb)


def _nonconstant(r, q) -> bool:
    phi = r.formula(q)
    return not (phi.is_true or phi.is_false)


def test_criterion_3_three_routes_agree():
    worst = 0.0
    n = varied = 0
    for kb, q in _timed_family(3003, 60):
        r = Reasoner(kb)
        varied += _nonconstant(r, q)
        for t in range(1, 5):
            vals = [r.prob_at(q, t, m) for m in ("filter", "worlds", "unroll")]
            worst = max(worst, max(vals) - min(vals))
        n += 1
    report(3, worst <= 1e-9, f"{n} KBs ({varied} with non-constant formula), t=1..4, max pairwise gap {worst:.2e} (tol 1e-9)")


def test_criterion_4_time_bounded():
    worst = 0.0
    monotone = base = True
    n = varied = 0
    for kb, q in _timed_family(4004, 60):
        r = Reasoner(kb)
        varied += _nonconstant(r, q)
        last = -1.0
        for t in range(1, 5):
            v = r.prob_within(q, t)
            worst = max(worst, abs(v - prob_within_oracle(kb, q, t)))
            monotone &= v >= last - 1e-12
            last = v
        base &= abs(r.prob_within(q, 1) - r.prob(q)) <= 1e-12
        n += 1
    ok = worst <= 1e-9 and monotone and base
    report(4, ok, f"{n} KBs ({varied} with non-constant formula), oracle gap {worst:.2e}, nondecreasing={monotone}, t=1 equals prob={base}")


def test_criterion_5_stationary(toy1):
    chain = analyze(transition_matrix(toy1.dbn.transition))
    pi = chain.stationary[0]
    toy_ok = (len(chain.recurrent) == 1 and abs(pi[1] - 2 / 3) <= 1e-9 and abs(pi[0] - 1 / 3) <= 1e-9
              and abs(delta(chain, ContextFormula.of(toy1.vars.context("x"))) - 2 / 3) <= 1e-9)

    rng = random.Random(5005)
    nprng = np.random.default_rng(5005)
    residual = gap = 0.0
    for _ in range(30):
        vars = Variables(["x", "y", "z"][: rng.randint(1, 3)])
        m = transition_matrix(random_tbn(rng, vars, positive=True))
        assert (m.matrix > 0).all()
        a = analyze(m)
        assert a.irreducible and a.aperiodic
        p = a.stationary[0].probs
        residual = max(residual, np.abs(p @ m.matrix - p).max())
        for _ in range(3):
            start = nprng.random(len(p))
            gap = max(gap, np.abs(power_iterate(m, start / start.sum()) - p).max())
    ok = toy_ok and residual < 1e-9 and gap <= 1e-6
    report(5, ok, f"toy pi=({pi[1]:.9f}, {pi[0]:.9f}), 30 random chains, residual {residual:.1e}, power-iteration gap {gap:.1e}")


def test_criterion_6_deterministic_chain():
    nprng = np.random.default_rng(6006)
    results = []
    ok = True
    for p_x in (0.0, 0.4, 1.0):
        kb = one_var_kb(p_x, 1.0, 0.0)
        r = Reasoner(kb)
        chain = r.chain
        ok &= len(chain.recurrent) == 2
        for _ in range(10):
            v = nprng.random(2)
            ok &= stationary_check(r.matrix, WorldDistribution(kb.vars, v / v.sum()))
        ok &= delta(chain, r.formula(AB)) == 0.0
        res = r.prob_eventually(AB, 16)
        ok &= res.kind is ResultKind.INDETERMINATE and res.lower_bound == p_x
        results.append(f"P(x)={p_x}: lower_bound={res.lower_bound!r}")
    report(6, bool(ok), "2 recurrent classes, 10 random distributions stationary, delta 0; " + ", ".join(results))


def test_criterion_7_positive_delta_is_certain():
    rng = random.Random(7007)
    positive = monotone_all = 0
    certain_ok = True
    tried = 0
    while positive < 40 and tried < 400:
        tried += 1
        kb = random_kb(rng, rng.randint(1, 3))
        q = interesting_query(rng, kb)
        r = Reasoner(kb)
        d = delta(r.chain, r.formula(q))
        if d > 0:
            positive += 1
            certain_ok &= r.prob_eventually(q).kind is ResultKind.CERTAIN_ONE
        bounds = [r.prob_within(q, h) for h in (8, 16, 32)]
        monotone_all += bounds[0] <= bounds[1] + 1e-12 and bounds[1] <= bounds[2] + 1e-12
    ok = positive >= 40 and certain_ok and monotone_all == tried
    report(7, ok, f"{positive} KBs with delta>0 all CertainOne={certain_ok}; horizons 8/16/32 nondecreasing on {monotone_all}/{tried}")


def _enumerated_evidence_prob(kb, q, t, ev):
    ok = [el.entails(restrict(kb.ontology, w), q) for w in kb.vars.worlds()]
    num = den = 0.0
    for p, traj in trajectories(kb.dbn, t):
        if all(bool(traj[lit.slice - 1] & kb.vars.bit(lit.var)) == lit.value for lit in ev.literals):
            den += p
            if ok[traj[-1]]:
                num += p
    return num, den


def test_criterion_8_evidence():
    rng = random.Random(8008)
    worst = empty_gap = 0.0
    n = 0
    while n < 60:
        kb = random_kb(rng, rng.randint(1, 2))
        q = interesting_query(rng, kb)
        t = rng.randint(1, 3)
        ev = random_evidence(rng, kb.vars, t)
        num, den = _enumerated_evidence_prob(kb, q, t, ev)
        r = Reasoner(kb)
        if den == 0.0:
            with pytest.raises(ZeroProbability):
                r.prob_at_evidence(q, t, ev)
            continue
        worst = max(worst, abs(r.prob_at_evidence(q, t, ev) - num / den))
        empty_gap = max(empty_gap, abs(r.prob_at_evidence(q, t, TimedEvidence()) - r.prob_at(q, t)))
        n += 1
    report(8, worst <= 1e-9 and empty_gap <= 1e-12,
           f"{n} KBs with P(E)>0, max gap to enumeration {worst:.2e}, empty-evidence gap {empty_gap:.1e}")


def test_criterion_9_cli_goldens():
    toy, example = str(kb_path("toy1.kb")), str(kb_path("example1.kb"))
    cases = [
        (["context-formula", "--kb", example, "--query", "Comp <= FailComp"], b"(x & y) | (x & z) | (!x & y & z)\n"),
        (["prob-at", "--kb", toy, "--query", "A <= B", "--time", "2"], b"0.690000\n"),
        (["prob-at", "--kb", toy, "--query", "A <= B", "--time", "2", "--format", "json"],
         b'{"probability": 0.690000, "time": 2}\n'),
    ]
    failures = []
    runs = 0
    for argv, expected in cases:
        for extra in ([], ["--oracle"]):
            proc = subprocess.run([sys.executable, "-m", "dynbl", *argv, *extra], capture_output=True)
            runs += 1
            if proc.returncode != 0 or proc.stdout != expected:
                failures.append(" ".join(argv[:1] + extra))
    report(9, not failures, f"{runs} runs bit-exact" if not failures else f"mismatch: {failures}")


@pytest.mark.skipif(os.environ.get(INNER) == "1", reason="runs only in the outer session")
def test_criterion_10_suite_time():
    tests_dir = os.path.dirname(__file__)
    env = dict(os.environ, **{INNER: "1"})
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", tests_dir],
        capture_output=True, text=True, env=env, cwd=os.path.dirname(tests_dir),
    )
    elapsed = time.perf_counter() - start
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(10, proc.returncode == 0 and elapsed < 120.0, f"full suite in {elapsed:.1f} s (limit 120 s): {summary}")

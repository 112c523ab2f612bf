"""Command-line interface.

Exit status: 0 on success, 1 when a query fails (zero-probability
conditioning, size caps, oracle disagreement), 2 on KB parse/validation or
request errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import bayes, el
from .context import restrict
from .errors import CapExceeded, DblError, ZeroProbability
from .kbformat import KbSyntaxError, load_kb, parse_evidence, parse_literals, parse_query, parse_world
from .markov import delta, power_iterate, stationary_check
from .reasoner import (
    DEFAULT_HORIZON,
    KnowledgeBase,
    Reasoner,
    entailing_worlds,
    prob_at_evidence_oracle,
    prob_at_oracle,
    prob_oracle,
    prob_within_oracle,
)

ORACLE_TOL = 1e-9
ORACLE_UNROLL_CAP = 24

COMMANDS = ("check", "entail", "context-formula", "prob", "prob-at", "prob-within", "prob-eventually", "stationary")

#: flags each command needs before anything is computed
REQUIRED = {
    "entail": ("query", "world"),
    "context-formula": ("query",),
    "prob": ("query",),
    "prob-at": ("query", "time"),
    "prob-within": ("query", "time"),
    "prob-eventually": ("query",),
}


class RequestError(Exception):
    pass


class OracleMismatch(DblError):
    pass


class Num(float):
    """A float rendered with a fixed number of decimals in both text and JSON."""


@dataclass
class QueryRequest:
    command: str
    kb: str
    query: str | None = None
    time: int | None = None
    horizon: int = DEFAULT_HORIZON
    evidence: str | None = None
    given: str | None = None
    world: str | None = None
    oracle: bool = False
    format: str = "text"
    precision: int = 6

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise RequestError(f"unknown command {self.command!r}")
        for name in REQUIRED.get(self.command, ()):
            if getattr(self, name) is None:
                raise RequestError(f"{self.command} requires --{name}")
        if self.time is not None and self.time < 1:
            raise RequestError("--time must be >= 1")
        if self.horizon < 1:
            raise RequestError("--horizon must be >= 1")
        if not 0 <= self.precision <= 12:
            raise RequestError("--precision must be between 0 and 12")
        if self.format not in ("text", "json"):
            raise RequestError("--format must be text or json")


@dataclass
class Outcome:
    text: str
    data: dict[str, Any]
    notes: list[str] = field(default_factory=list)


def _fmt(x: float, precision: int) -> str:
    if abs(x) < 0.5 * 10.0**-precision:
        x = 0.0  # no "-0.000000"
    return f"{x:.{precision}f}"


def to_json(obj: Any, precision: int) -> str:
    if isinstance(obj, Num):
        return _fmt(obj, precision)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {to_json(v, precision)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v, precision) for v in obj) + "]"
    return json.dumps(obj)


def _agree(name: str, value: float, expected: float) -> None:
    if abs(value - expected) > ORACLE_TOL:
        raise OracleMismatch(f"oracle disagreement for {name}: {value!r} vs brute force {expected!r}")


def _oracle_feasible(kb: KnowledgeBase, t: int) -> bool:
    return t * len(kb.vars) <= ORACLE_UNROLL_CAP


def _check(req, kb, r, p) -> Outcome:
    return Outcome("OK", {"status": "ok", "variables": list(kb.vars.names), "axioms": len(kb.ontology)})


def _entail(req, kb, r, p) -> Outcome:
    q = parse_query(req.query)
    w = parse_world(req.world, kb.vars)
    result = el.entails(restrict(kb.ontology, w), q)
    if req.oracle:
        if r.formula(q).holds(w) != result:
            raise OracleMismatch("context formula disagrees with direct entailment")
    return Outcome("true" if result else "false", {"entailed": result, "world": kb.vars.render_world(w)})


def _context_formula(req, kb, r, p) -> Outcome:
    q = parse_query(req.query)
    phi = r.formula(q)
    if req.oracle:
        ok = entailing_worlds(kb, q)
        for w in kb.vars.worlds():
            if phi.holds(w) != ok[w]:
                raise OracleMismatch(f"context formula wrong at world {{{kb.vars.render_world(w)}}}")
    text = kb.vars.render_formula(phi)
    disjuncts = [[str(lit) for lit in kb.vars.literals(d)] for d in kb.vars.sorted_disjuncts(phi)]
    return Outcome(text, {"formula": text, "disjuncts": disjuncts})


def _prob(req, kb, r, p) -> Outcome:
    q = parse_query(req.query)
    data: dict[str, Any] = {}
    if req.given is not None:
        kappa = parse_literals(req.given, kb.vars)
        value = r.prob_given(q, kappa)
        if req.oracle:
            ok = entailing_worlds(kb, q)
            num = den = 0.0
            for w in kb.vars.worlds():
                if kappa.holds(w):
                    pw = bayes.world_prob(kb.dbn.initial, w)
                    den += pw
                    num += pw if ok[w] else 0.0
            _agree("prob --given", value, num / den)
        data["probability"] = Num(value)
        data["given"] = kb.vars.render_context(kappa)
    else:
        value = r.prob(q)
        if req.oracle:
            _agree("prob", value, prob_oracle(kb, q))
        data["probability"] = Num(value)
    return Outcome(_fmt(value, p), data)


def _prob_at(req, kb, r, p) -> Outcome:
    q = parse_query(req.query)
    data: dict[str, Any] = {}
    if req.evidence:
        ev = parse_evidence(req.evidence, kb.vars)
        value = r.prob_at_evidence(q, req.time, ev)
        if req.oracle:
            _agree("prob-at --evidence (unrolled elimination)", value, r.prob_at_evidence(q, req.time, ev, method="unroll"))
            if _oracle_feasible(kb, req.time):
                _agree("prob-at --evidence", value, prob_at_evidence_oracle(kb, q, req.time, ev))
    else:
        value = r.prob_at(q, req.time)
        if req.oracle:
            _agree("prob-at (world sum)", value, r.prob_at(q, req.time, method="worlds"))
            if _oracle_feasible(kb, req.time):
                _agree("prob-at", value, prob_at_oracle(kb, q, req.time))
    data["probability"] = Num(value)
    data["time"] = req.time
    if req.evidence:
        data["evidence"] = req.evidence
    return Outcome(_fmt(value, p), data)


def _prob_within(req, kb, r, p) -> Outcome:
    q = parse_query(req.query)
    value = r.prob_within(q, req.time)
    notes = []
    if req.oracle:
        if _oracle_feasible(kb, req.time):
            _agree("prob-within", value, prob_within_oracle(kb, q, req.time))
        else:
            notes.append(f"oracle skipped: {req.time}x{len(kb.vars)} trajectory variables exceed {ORACLE_UNROLL_CAP}")
    return Outcome(_fmt(value, p), {"probability": Num(value), "time": req.time}, notes)


def _prob_eventually(req, kb, r, p) -> Outcome:
    q = parse_query(req.query)
    res = r.prob_eventually(q, req.horizon)
    notes = []
    if req.oracle:
        for pi in r.chain.stationary:
            if not stationary_check(r.matrix, pi):
                raise OracleMismatch("per-class stationary vector fails pi M = pi")
        if _oracle_feasible(kb, req.horizon):
            _agree("prob-eventually lower bound", res.lower_bound, prob_within_oracle(kb, q, req.horizon))
        else:
            notes.append(f"lower-bound oracle skipped: horizon {req.horizon} too long for enumeration")
    prob = res.probability
    text = (
        f"{res.kind.value} probability={_fmt(prob, p) if prob is not None else 'unknown'}"
        f" delta={_fmt(res.delta_value, p)} lower_bound={_fmt(res.lower_bound, p)} horizon={res.horizon_used}"
    )
    data = {
        "kind": res.kind.value,
        "probability": Num(prob) if prob is not None else None,
        "delta": Num(res.delta_value),
        "lower_bound": Num(res.lower_bound),
        "horizon": res.horizon_used,
    }
    return Outcome(text, data, notes)


def _stationary(req, kb, r, p) -> Outcome:
    chain = r.chain
    vars = kb.vars
    classes = []
    lines = [
        f"irreducible: {str(chain.irreducible).lower()}",
        f"aperiodic: {str(chain.aperiodic).lower()}",
        f"recurrent classes: {len(chain.recurrent)}",
    ]
    for k, (cls, pi, period) in enumerate(zip(chain.recurrent, chain.stationary, chain.periods), start=1):
        if req.oracle:
            if not stationary_check(r.matrix, pi):
                raise OracleMismatch(f"class {k}: stationary vector fails pi M = pi")
            start = np.zeros(len(pi.probs))
            start[cls[0]] = 1.0
            if period == 1:
                _agree_vec(f"class {k} power iteration", power_iterate(r.matrix, start), pi.probs, 1e-6)
        entries = {vars.render_world(w): Num(pi[w]) for w in cls}
        lines.append(f"class {k}: " + "; ".join(f"{{{w}}}={_fmt(v, p)}" for w, v in entries.items()))
        classes.append({"worlds": list(entries), "stationary": list(entries.values()), "period": period})
    data: dict[str, Any] = {"irreducible": chain.irreducible, "aperiodic": chain.aperiodic, "classes": classes}
    if req.query is not None:
        q = parse_query(req.query)
        d = delta(chain, r.formula(q))
        lines.append(f"delta: {_fmt(d, p)}")
        data["delta"] = Num(d)
    return Outcome("\n".join(lines), data)


def _agree_vec(name: str, got: np.ndarray, expected: np.ndarray, tol: float) -> None:
    if np.abs(got - expected).max() > tol:
        raise OracleMismatch(f"oracle disagreement for {name}")


HANDLERS: dict[str, Callable[..., Outcome]] = {
    "check": _check,
    "entail": _entail,
    "context-formula": _context_formula,
    "prob": _prob,
    "prob-at": _prob_at,
    "prob-within": _prob_within,
    "prob-eventually": _prob_eventually,
    "stationary": _stationary,
}


def run(req: QueryRequest, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        req.validate()
        kb = load_kb(req.kb)
    except (RequestError, KbSyntaxError) as e:
        print(f"error: {e}", file=err)
        return 2
    except OSError as e:
        print(f"error: cannot read {req.kb}: {e.strerror}", file=err)
        return 2
    try:
        outcome = HANDLERS[req.command](req, kb, Reasoner(kb), req.precision)
    except (ZeroProbability, CapExceeded, OracleMismatch) as e:
        print(f"error: {e}", file=err)
        return 1
    except (ValueError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=err)
        return 2
    for note in outcome.notes:
        print(note, file=err)
    if req.format == "json":
        print(to_json(outcome.data, req.precision), file=out)
    else:
        print(outcome.text, file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kb", required=True, metavar="FILE", help="knowledge base file")
    common.add_argument("--query", metavar="STR", help='consequence such as "A <= B"')
    common.add_argument("--time", type=int, metavar="N")
    common.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, metavar="N")
    common.add_argument("--evidence", metavar="STR", help='timed evidence such as "x@1=1,y@3=0"')
    common.add_argument("--given", metavar="STR", help='context such as "x,!z"')
    common.add_argument("--world", metavar="STR", help='total world such as "x,!y,z"')
    common.add_argument("--oracle", action="store_true", help="cross-check against brute-force enumeration")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--precision", type=int, default=6, metavar="N")

    parser = argparse.ArgumentParser(prog="dynbl", description="Probabilistic reasoning over time-evolving contexts.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    req = QueryRequest(**vars(args))
    return run(req)


if __name__ == "__main__":
    sys.exit(main())

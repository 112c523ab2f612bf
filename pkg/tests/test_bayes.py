import random

import numpy as np
import pytest

from dynbl.bayes import BayesNet, Cpt, evidence_prob, formula_prob, joint, marginal, min_fill_order, validate, world_prob
from dynbl.context import FALSE, TRUE, ContextFormula, Variables
from dynbl.errors import ValidationError, ZeroProbability

from generators import random_bn
from oracles import enumerate_marginal, initial_prob


@pytest.fixture
def xy_chain():
    vars = Variables(["x", "y"])
    return BayesNet(vars, {"x": Cpt.root("x", 0.7), "y": Cpt("y", ("x",), {(1,): 0.3, (0,): 0.1})})


@pytest.fixture
def single():
    return BayesNet(Variables(["x"]), {"x": Cpt.root("x", 0.7)})


class TestValidate:
    def test_single_node_ok(self, single):
        assert validate(single) == []
        assert single.check() is single

    def test_cycle(self):
        vars = Variables(["x", "y"])
        bn = BayesNet(vars, {
            "x": Cpt("x", ("y",), {(0,): 0.5, (1,): 0.5}),
            "y": Cpt("y", ("x",), {(0,): 0.5, (1,): 0.5}),
        })
        problems = validate(bn)
        assert any(p.startswith("cycle") for p in problems)
        with pytest.raises(ValidationError):
            bn.check()

    def test_missing_row_names_assignment(self):
        bn = BayesNet(Variables(["x", "y"]), {"x": Cpt.root("x", 0.5), "y": Cpt("y", ("x",), {(1,): 0.3})})
        assert validate(bn) == ["y: missing CPT row for parent assignment (x=0)"]

    def test_out_of_range_and_missing_cpt(self):
        bn = BayesNet(Variables(["x", "y"]), {"x": Cpt.root("x", 1.5)})
        problems = validate(bn)
        assert "y: no CPT" in problems
        assert any("out of range" in p for p in problems)

    def test_undeclared_parent(self):
        bn = BayesNet(Variables(["x"]), {"x": Cpt("x", ("q",), {(0,): 0.1, (1,): 0.2})})
        assert "x: undeclared parent q" in validate(bn)


class TestWorldProb:
    def test_single(self, single):
        assert world_prob(single, 1) == pytest.approx(0.7, abs=1e-12)

    def test_chain(self, xy_chain):
        w = xy_chain.vars.world("x", "!y")
        assert world_prob(xy_chain, w) == pytest.approx(0.7 * 0.7, abs=1e-12)

    def test_normalization_random(self):
        rng = random.Random(1)
        for n in range(1, 7):
            vars = Variables([f"v{i}" for i in range(n)])
            for _ in range(5):
                bn = random_bn(rng, vars)
                assert sum(world_prob(bn, w) for w in vars.worlds()) == pytest.approx(1.0, abs=1e-9)
                assert joint(bn).sum() == pytest.approx(1.0, abs=1e-9)

    def test_joint_matches_oracle(self):
        rng = random.Random(4)
        vars = Variables(["a", "b", "c", "d"])
        for _ in range(10):
            bn = random_bn(rng, vars)
            j = joint(bn)
            for w in vars.worlds():
                assert j[w] == pytest.approx(initial_prob(bn, w), abs=1e-12)


class TestFormulaProb:
    def test_constants(self, xy_chain):
        assert formula_prob(xy_chain, TRUE) == pytest.approx(1.0)
        assert formula_prob(xy_chain, FALSE) == 0.0

    def test_single_literal(self, single):
        assert formula_prob(single, ContextFormula.of(single.vars.context("x"))) == pytest.approx(0.7)

    def test_monotone_under_disjuncts(self):
        rng = random.Random(8)
        vars = Variables(["x", "y", "z"])
        bn = random_bn(rng, vars)
        phi = FALSE
        last = 0.0
        for lits in [("x", "y"), ("!x", "z"), ("y",), ("!z",)]:
            phi = phi | ContextFormula.of(vars.context(*lits))
            p = formula_prob(bn, phi)
            assert p >= last - 1e-12
            last = p


class TestMarginal:
    def test_root(self, single):
        assert np.allclose(marginal(single, ["x"]), [0.3, 0.7])

    def test_chain_child(self, xy_chain):
        assert marginal(xy_chain, ["y"])[1] == pytest.approx(0.7 * 0.3 + 0.3 * 0.1, abs=1e-12)

    def test_evidence_on_target(self, single):
        assert np.allclose(marginal(single, ["x"], {"x": True}), [0.0, 1.0])

    def test_inconsistent_evidence(self):
        bn = BayesNet(Variables(["x"]), {"x": Cpt.root("x", 0.0)})
        with pytest.raises(ZeroProbability, match="inconsistent evidence"):
            marginal(bn, ["x"], {"x": True})

    def test_context_evidence(self, xy_chain):
        m = marginal(xy_chain, ["x"], xy_chain.vars.context("y"))
        assert m[1] == pytest.approx(0.7 * 0.3 / 0.24, abs=1e-12)

    def test_agrees_with_enumeration(self):
        rng = random.Random(12)
        for _ in range(60):
            n = rng.randint(1, 5)
            vars = Variables([f"v{i}" for i in range(n)])
            bn = random_bn(rng, vars)
            targets = rng.sample(list(vars.names), rng.randint(1, n))
            rest = [v for v in vars.names if v not in targets]
            evidence = {v: rng.random() < 0.5 for v in rng.sample(rest, rng.randint(0, len(rest)))}
            expect, total = enumerate_marginal(bn, targets, evidence)
            if total == 0.0:
                with pytest.raises(ZeroProbability):
                    marginal(bn, targets, evidence)
                continue
            got = marginal(bn, targets, evidence)
            assert evidence_prob(bn, evidence) == pytest.approx(total, abs=1e-9)
            for k in range(1 << len(targets)):
                key = tuple((k >> (len(targets) - 1 - i)) & 1 for i in range(len(targets)))
                assert got[k] == pytest.approx(expect.get(key, 0.0), abs=1e-9)


def test_min_fill_prefers_leaves_and_breaks_ties_by_index():
    rank = {"a": 0, "b": 1, "c": 2, "d": 3}
    # chain a-b-c-d: eliminating a or d adds no fill; a wins on index
    order = min_fill_order([("a", "b"), ("b", "c"), ("c", "d")], ["a", "b", "c", "d"], rank)
    assert order[0] == "a"
    assert sorted(order) == ["a", "b", "c", "d"]

import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dynbl import el  # noqa: E402
from dynbl.bayes import BayesNet, Cpt  # noqa: E402
from dynbl.context import Variables, VAxiom, VOntology  # noqa: E402
from dynbl.dbn import Dbn, TwoSliceNet  # noqa: E402
from dynbl.reasoner import KnowledgeBase  # noqa: E402

A, B = el.Atom("A"), el.Atom("B")


def use(c):
    return el.Exists("use", c)


def kb_path(name: str) -> Path:
    return Path(str(resources.files("dynbl") / "data" / name))


@pytest.fixture
def xyz():
    return Variables(["x", "y", "z"])


@pytest.fixture
def example1(xyz):
    """The computer-failure V-ontology over x, y, z."""
    C = el.Atom
    axioms = [
        VAxiom(el.GCI(C("Comp"), el.And(use(C("Mem")), use(C("CPU"))))),
        VAxiom(el.GCI(use(C("FailMem")), C("FailComp")), xyz.context("x")),
        VAxiom(el.GCI(use(C("FailCPU")), C("FailComp")), xyz.context("x")),
        VAxiom(el.GCI(el.And(use(C("FailMem")), use(C("FailCPU"))), C("FailComp")), xyz.context("!x")),
        VAxiom(el.GCI(C("Mem"), C("FailMem")), xyz.context("y")),
        VAxiom(el.GCI(C("CPU"), C("FailCPU")), xyz.context("z")),
    ]
    return VOntology(xyz, tuple(axioms))


@pytest.fixture
def comp_fails():
    return el.GCI(el.Atom("Comp"), el.Atom("FailComp"))


def one_var_kb(p_x: float, stay: float, switch_on: float) -> KnowledgeBase:
    """V = {x}, ontology {A ⊑ B : {x}}, P(x) = p_x, P(x'|x) = stay, P(x'|¬x) = switch_on."""
    vars = Variables(["x"])
    bn = BayesNet(vars, {"x": Cpt.root("x", p_x)})
    tbn = TwoSliceNet(vars, {"x'": Cpt("x'", ("x",), {(1,): stay, (0,): switch_on})})
    ont = VOntology(vars, (VAxiom(el.GCI(A, B), vars.context("x")),))
    return KnowledgeBase(Dbn(bn, tbn), ont)


@pytest.fixture
def toy1():
    return one_var_kb(0.7, 0.9, 0.2)


@pytest.fixture
def frozen_chain():
    """Identity transition on x: P(x'|x) = 1, P(x'|¬x) = 0."""
    return one_var_kb(0.4, 1.0, 0.0)


@pytest.fixture
def example_kb():
    from dynbl.kbformat import load_kb

    return load_kb(kb_path("example1.kb"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

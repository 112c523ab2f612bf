import io
import json
import subprocess
import sys

import pytest

from dynbl import cli
from dynbl.cli import QueryRequest, main, run

from conftest import kb_path

TOY = str(kb_path("toy1.kb"))
EXAMPLE = str(kb_path("example1.kb"))
PHI1 = "(x & y) | (x & z) | (!x & y & z)"

FROZEN = """\
[variables]
x
[bn]
x | = 0.4
[tbn]
x' | x=1 = 1
x' | x=0 = 0
[ontology]
A <= B @ x
"""


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    args = cli.build_parser().parse_args(list(argv))
    code = run(QueryRequest(**vars(args)), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def frozen_kb(tmp_path):
    path = tmp_path / "frozen.kb"
    path.write_text(FROZEN)
    return str(path)


GOLDENS = [
    (("check", "--kb", TOY), "OK\n"),
    (("prob", "--kb", TOY, "--query", "A <= B"), "0.700000\n"),
    (("prob", "--kb", TOY, "--query", "A <= B", "--given", "!x"), "0.000000\n"),
    (("prob-at", "--kb", TOY, "--query", "A <= B", "--time", "2"), "0.690000\n"),
    (("prob-at", "--kb", TOY, "--query", "A <= B", "--time", "2", "--format", "json"),
     '{"probability": 0.690000, "time": 2}\n'),
    (("prob-at", "--kb", TOY, "--query", "A <= B", "--time", "2", "--evidence", "x@1=1"), "0.900000\n"),
    (("prob-within", "--kb", TOY, "--query", "A <= B", "--time", "2"), "0.760000\n"),
    (("prob-within", "--kb", TOY, "--query", "A <= B", "--time", "2", "--precision", "3"), "0.760\n"),
    (("context-formula", "--kb", EXAMPLE, "--query", "Comp <= FailComp"), PHI1 + "\n"),
    (("entail", "--kb", EXAMPLE, "--query", "Comp <= FailComp", "--world", "x,!y,z"), "true\n"),
    (("entail", "--kb", EXAMPLE, "--query", "Comp <= FailComp", "--world", "!x,y,!z"), "false\n"),
    (("stationary", "--kb", TOY, "--query", "A <= B"),
     "irreducible: true\naperiodic: true\nrecurrent classes: 1\nclass 1: {!x}=0.333333; {x}=0.666667\ndelta: 0.666667\n"),
    (("prob-eventually", "--kb", TOY, "--query", "A <= B", "--horizon", "4"),
     "CertainOne probability=1.000000 delta=0.666667 lower_bound=0.846400 horizon=4\n"),
]


@pytest.mark.parametrize("argv, expected", GOLDENS, ids=[" ".join(a[:1] + a[3:]) for a, _ in GOLDENS])
@pytest.mark.parametrize("oracle", [False, True])
def test_goldens(argv, expected, oracle):
    code, out, err = call(*argv, *(["--oracle"] if oracle else []))
    assert (code, out) == (0, expected), err


def test_context_formula_json():
    code, out, _ = call("context-formula", "--kb", EXAMPLE, "--query", "Comp <= FailComp", "--format", "json")
    assert code == 0
    assert json.loads(out) == {"formula": PHI1, "disjuncts": [["x", "y"], ["x", "z"], ["!x", "y", "z"]]}


def test_frozen_chain(frozen_kb):
    code, out, _ = call("prob-eventually", "--kb", frozen_kb, "--query", "A <= B", "--format", "json", "--oracle",
                        "--horizon", "8")
    assert code == 0
    assert out == '{"kind": "Indeterminate", "probability": null, "delta": 0.000000, "lower_bound": 0.400000, "horizon": 8}\n'
    code, out, _ = call("stationary", "--kb", frozen_kb, "--oracle")
    assert out.splitlines()[:3] == ["irreducible: false", "aperiodic: true", "recurrent classes: 2"]


@pytest.mark.parametrize("argv, code, message", [
    (("prob-at", "--kb", TOY, "--query", "A <= B"), 2, "requires --time"),
    (("prob", "--kb", TOY, "--query", "A <="), 2, "query column"),
    (("prob", "--kb", "/does/not/exist.kb", "--query", "A <= B"), 2, "cannot read"),
    (("entail", "--kb", TOY, "--query", "A <= B", "--world", "y"), 2, "undeclared"),
    (("prob-at", "--kb", TOY, "--query", "A <= B", "--time", "0"), 2, "--time"),
    (("prob-at", "--kb", TOY, "--query", "A <= B", "--time", "1", "--evidence", "x@2=1"), 2, "beyond"),
    (("prob", "--kb", TOY, "--query", "A <= B", "--precision", "13"), 2, "precision"),
])
def test_request_errors(argv, code, message):
    got, out, err = call(*argv)
    assert got == code
    assert out == ""
    assert message in err


def test_zero_probability_is_query_error(frozen_kb):
    code, _, err = call("prob-at", "--kb", frozen_kb, "--query", "A <= B", "--time", "2", "--evidence", "x@1=1,x@2=0")
    assert code == 1
    assert "zero-probability" in err


def test_parse_error_exit(tmp_path):
    path = tmp_path / "bad.kb"
    path.write_text(FROZEN.replace("x | = 0.4", "x | = 4"))
    code, _, err = call("check", "--kb", str(path))
    assert code == 2
    assert "bad.kb:4:" in err


def test_oracle_mismatch_fails_loudly(monkeypatch):
    monkeypatch.setattr(cli, "prob_oracle", lambda kb, q: 0.5)
    code, out, err = call("prob", "--kb", TOY, "--query", "A <= B", "--oracle")
    assert code == 1
    assert out == ""
    assert "oracle disagreement" in err


def test_main_entry_and_determinism():
    argv = ["-m", "dynbl", "context-formula", "--kb", EXAMPLE, "--query", "Comp <= FailComp"]
    runs = [subprocess.run([sys.executable, *argv], capture_output=True) for _ in range(2)]
    assert runs[0].returncode == 0
    assert runs[0].stdout == runs[1].stdout == (PHI1 + "\n").encode()


def test_main_returns_code(capsys):
    assert main(["check", "--kb", TOY]) == 0
    assert capsys.readouterr().out == "OK\n"

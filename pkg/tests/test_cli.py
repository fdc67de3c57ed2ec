import io
import json
import math
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from powerlin.arcspace import Jet, lift_jet_hypersurface
from powerlin.cli import _plain, run
from powerlin.series import Series, SeriesVec, load_series, parse_poly

from strategies import small_rationals

DATA = Path(__file__).resolve().parent.parent / "data"


def call(*argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], out)
    return code, out.getvalue()


def call_json(*argv):
    code, text = call(*argv, "--format", "json")
    return code, json.loads(text)


def test_lift_arc_writes_the_lifted_arc(tmp_path):
    target = tmp_path / "arc.ser"
    code, rep = call_json("lift-arc", "--poly", "y^2 - x^3", "--jet", DATA / "cusp.jet",
                          "--order", 12, "--out", target)
    assert code == 0
    expected = lift_jet_hypersurface(parse_poly("y^2 - x^3", ["x", "y"]),
                                     Jet.load((DATA / "cusp.jet").read_text()), 12)
    assert load_series(target.read_text()) == expected
    assert [load_series(c["file"]) for c in rep["arc"]] == list(expected)
    assert rep["stratum"] == {"i": 1, "e_prime": 3, "ord_f": "9"}
    assert rep["residual_order"] == ["inf"]
    assert rep["kappa"]["sigma_h"] == "3"


def test_obstructed_jet_exits_two(tmp_path):
    jet = tmp_path / "bad.jet"
    jet.write_text("level=5\n0, 0, 1\n0, 0, 0, 1, 1\n")
    code, rep = call_json("lift-arc", "--poly", "y^2 - x^3", "--jet", jet, "--order", 12)
    assert code == 2 and rep["status"] == "OBSTRUCTED"


def test_ode_exponential():
    code, rep = call_json("ode", "--system", DATA / "expgrow.sys", "--init", "1", "--order", 10)
    assert code == 0
    x = load_series(rep["x"][0]["file"])
    assert [x.coeff((k,)) for k in range(11)] == [Fraction(1, math.factorial(k)) for k in range(11)]


def test_wavrik_degenerate_is_a_precondition_error():
    code, rep = call_json("wavrik", "--F", "y^2 - x^3", "--approx", DATA / "zero.ser",
                          "--agree", 2, "--order", 10)
    assert code == 3 and rep["status"] == "PRECONDITION_GAP"


def test_violated_conditions_exit_two(tmp_path):
    ybar = tmp_path / "ybar"
    ybar.write_text("0\n")
    code, rep = call_json("drinfeld", "--f", "y*x2 + x1^2", "--gamma0", DATA / "umbrella.gamma0",
                          "--ring", "Q[e]/e^3", "--q", "t - e", "--xbar", DATA / "umbrella.xbar",
                          "--ybar", ybar, "--order", 8)
    assert code == 2
    assert rep["status"] == "CONDITIONS_VIOLATED" and rep["witness"] == ["E2"]


def test_drinfeld_fixture():
    code, rep = call_json("drinfeld", "--f", "y*x2 + x1^2", "--gamma0", DATA / "umbrella.gamma0",
                          "--ring", "Q[e]/e^3", "--q", "t - e", "--xbar", DATA / "umbrella.xbar",
                          "--ybar", DATA / "umbrella.ybar", "--order", 8)
    assert code == 0
    assert rep["gamma"][2]["expr"] == "-e^2*t - 2*e^2*t^2 - e^2*t^3"


def test_usage_and_parse_errors_exit_three():
    assert call("ode", "--system", DATA / "expgrow.sys")[0] == 3
    assert call("no-such-command")[0] == 3
    assert call("ode", "--system", DATA / "missing.sys", "--init", "1")[0] == 3
    code, rep = call_json("verify", "bogus")
    assert code == 3 and rep["status"] == "UNKNOWN_SUITE"
    code, rep = call_json("ode", "--system", DATA / "expgrow.sys", "--init", "1", "--L", "2")
    assert code == 3 and rep["status"] == "DOMAIN_MISMATCH"


@pytest.mark.parametrize("suite", ["division", "linearize", "nmatrix", "arcspace", "apps"])
def test_verify_suites_pass(suite):
    code, rep = call_json("verify", suite, "--seed", 7)
    assert code == 0 and rep["passed"]
    assert all(c["passed"] for c in rep["checks"])


def test_verify_reports_golden_checks():
    _, rep = call_json("verify", "linearize", "--seed", 7)
    assert "x + xy closed-form automorphism" in [c["name"] for c in rep["checks"]]
    _, rep = call_json("verify", "nmatrix", "--seed", 7)
    assert rep["checks"][0]["name"].startswith("difference operator canonical form")


def test_canonical_form_of_fibonacci_matrix():
    code, rep = call_json("canonical-form", "--matrix", DATA / "fibonacci.mat", "--order", 6)
    assert code == 0
    assert rep["pivots"] == [[i, i + 2] for i in range(5)]
    assert rep["kernel_columns"] == [0, 1]


def test_output_is_deterministic():
    argv = ["tougeron", "--F", "y^2 + 2*x*y + x^3", "--rep", DATA / "tougeron1.rep", "--order", 8]
    assert call(*argv) == call(*argv)
    assert call(*argv, "--format", "json") == call(*argv, "--format", "json")


@st.composite
def vectors(draw):
    n = draw(st.integers(1, 2))
    m = draw(st.integers(1, 3))
    validity = draw(st.one_of(st.just(math.inf), st.integers(0, 6)))
    comps = []
    for _ in range(m):
        keys = draw(st.lists(st.tuples(*[st.integers(0, 3)] * n), max_size=5, unique=True))
        terms = {k: draw(small_rationals) for k in keys}
        comps.append(Series(terms, n, validity))
    return SeriesVec(comps)


@given(vectors())
@settings(deadline=None, max_examples=40)
def test_emitted_series_reparse_to_equal_values(vec):
    plain = json.loads(json.dumps(_plain({"v": vec, "s": vec[0]})))
    assert [load_series(c["file"]) for c in plain["v"]] == list(vec)
    assert load_series(plain["s"]["file"]) == vec[0]

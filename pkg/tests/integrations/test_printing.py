import json

import pytest
import sympy

from pvalgebra.algebra.brackets import LAMBDA, CheckReport
from pvalgebra.algebra.diffpoly import atom, coordinates, jet
from pvalgebra.geometry.sigma import section, sigma_coframe
from pvalgebra.integrations.dsl import evaluate, sigma_scope
from pvalgebra.integrations.printing import render, report_text, to_latex, to_record, to_text

x = coordinates("x", 3)
p1, p2 = jet("p1"), jet("p2")
dx1, dx3 = jet("x1", 1), jet("x3", 1)
H = sympy.Function("H[1,2,3]")(*x)


######################
# Text


def test_text_atoms_and_jets():
    assert to_text(dx1) == "d(x1)"
    assert to_text(atom("f", x)) == "f[x]"
    assert to_text(H) == "H[1,2,3]"
    assert to_text(atom("f", x, [2])) == "D2 f[x]"
    assert to_text(jet("x1") ** 2) == "x1^2"


@pytest.mark.parametrize(
    "value",
    [
        3 * p1 * dx1 - H * dx3 / 2,
        atom("f", x, [1, 3]) * p2**2 + jet("p1", 2),
        sympy.Symbol("k") * sympy.Symbol("lambda") ** 3 - p1,
        -x[0] * x[1] + sympy.Rational(2, 3),
    ],
)
def test_text_roundtrip(value):
    assert evaluate(to_text(value), sigma_scope(3)) == sympy.expand(value)


def test_form_and_section_text():
    coframe = sigma_coframe(2)
    form = jet("x2") * coframe.generator("dx1") * coframe.generator("dx2")
    assert to_text(form) == "(x2)*dx1 wedge dx2"
    s = section(coframe, [1, 0], [0, jet("x1")])
    assert to_text(s) == "sec(xi=del1, alpha=(x1)*dx2)"
    assert evaluate(to_text(s), sigma_scope(2, coframe=coframe)) == s


######################
# LaTeX


def test_latex_monomial():
    assert to_latex(p1 * dx1) == r"p_{1}\partial x^{1}"


def test_latex_atoms_and_parameters():
    assert to_latex(-H * dx3) == r"-H_{123}\partial x^{3}"
    assert to_latex(LAMBDA**2 * p1) == r"{\lambda}^{2}p_{1}"
    assert to_latex(sympy.S.Zero) == "0"


def test_latex_rational_coefficient():
    assert to_latex(sympy.Rational(1, 2) * dx1) == r"\frac{1}{2}\partial x^{1}"


######################
# JSON


def test_lambda_record():
    record = to_record(-LAMBDA, as_lambda=True)
    assert record == {"schema": 1, "lambda": [{"0": "0"}, {"1": "-1"}]}


def test_lambda_record_of_constants():
    assert to_record(sympy.S.One, as_lambda=True)["lambda"] == [{"0": "1"}]


def test_value_record():
    assert json.loads(render(dx1, "json")) == {"schema": 1, "value": "d(x1)"}


def test_report_record():
    report = CheckReport("demo")
    report.add("a", p1)
    record = to_record(report)
    assert record["ok"] is False
    assert record["residuals"]["a"]["reduced"] == "p1"


def test_report_text():
    report = CheckReport("demo", sign=-1)
    report.add("a", 0)
    assert report_text(report) == "demo: ok\n  sign: -1\n  a: 0"


def test_unknown_format():
    with pytest.raises(ValueError):
        render(p1, "yaml")

"""
Text, LaTeX and JSON renderings of differential polynomials, λ-polynomials,
forms, sections and check reports.

The text format is the DSL of ``integrations.dsl``: printing a value and
parsing the result gives the value back.
"""

import json
import re

import sympy
from sympy.core.function import AppliedUndef
from sympy.printing.precedence import PRECEDENCE
from sympy.printing.str import StrPrinter

from ..algebra.brackets import LAMBDA, MU, CheckReport, lambda_coefficients
from ..algebra.diffpoly import generator_sort_key, is_jet, jet_info, jet_sort_key
from ..algebra.relations import parse_atom_name
from ..geometry.forms import DForm, VectorField
from ..geometry.sigma import GenSection
from ..geometry.tduality import InvariantForm, InvariantSection

FORMATS = ("text", "latex", "json")

SCHEMA_VERSION = 1

_LATEX_PARAMETERS = {"lambda": r"\lambda", "mu": r"\mu", "nu": r"\nu", "hbar": r"\hbar"}
_CONTROL_WORD = re.compile(r"\\[A-Za-z]+$")

# Generator families written with a lower index in LaTeX
LOWER_INDEX_FAMILIES = ("p",)


# ---------------------------------------------------------------------
# Text
# ---------------------------------------------------------------------

def _family(symbol) -> str:
    info = jet_info(symbol)
    return generator_sort_key(info[0])[0] if info else str(symbol)


def _atom_text(expr) -> str:
    name = expr.func.__name__
    if parse_atom_name(name) is not None:
        return name
    if not expr.args:
        return f"{name}[]"
    return f"{name}[{_family(expr.args[0])}]"


class TextPrinter(StrPrinter):
    """StrPrinter speaking the DSL: ``d(x1)`` jets, ``f[x]`` atoms, ``D1`` partials and ``^`` powers."""

    def _print_Symbol(self, expr):
        return expr.name

    def _print_AppliedUndef(self, expr):
        return _atom_text(expr)

    def _print_Derivative(self, expr):
        function = expr.expr
        marks = []
        for variable, count in expr.variable_count:
            marks.extend([f"D{function.args.index(variable) + 1}"] * int(count))
        return " ".join(marks + [self._print(function)])

    def _print_Pow(self, expr, rational=False):
        base, exp = expr.args
        if exp.is_Integer and exp < 0:
            return super()._print_Pow(expr, rational)
        base_text = self.parenthesize(base, PRECEDENCE["Pow"], strict=False)
        exp_text = str(exp) if exp.is_Integer else f"({self._print(exp)})"
        return f"{base_text}^{exp_text}"


_text_printer = TextPrinter()


def to_text(value) -> str:
    if isinstance(value, DForm):
        return form_text(value)
    if isinstance(value, VectorField):
        return _linear_text([(value.coframe.frames[a], c) for a, c in sorted(value.components.items())])
    if isinstance(value, GenSection):
        return f"sec(xi={to_text(value.xi)}, alpha={to_text(value.alpha)})"
    if isinstance(value, InvariantSection):
        xi = _linear_text([(f"h{mu + 1}", c) for mu, c in enumerate(value.xi)])
        alpha = _linear_text([(f"dy{mu + 1}", c) for mu, c in enumerate(value.alpha)])
        return (f"sec(xi={xi}, xiw={to_text(value.xiw)}, alpha={alpha}, "
                f"alphap={to_text(value.alphap)})")
    if isinstance(value, InvariantForm):
        return f"{form_text(value.alpha)} + A*({form_text(value.beta)})"
    if isinstance(value, CheckReport):
        return report_text(value)
    return _text_printer.doprint(sympy.sympify(value))


def _linear_text(items) -> str:
    parts = []
    for label, coefficient in items:
        if coefficient == 0:
            continue
        if coefficient == 1:
            parts.append(label)
        else:
            parts.append(f"({to_text(coefficient)})*{label}")
    return " + ".join(parts) or "0"


def form_text(form: DForm) -> str:
    items = []
    for indices, coefficient in sorted(form.terms.items(), key=lambda item: (len(item[0]), item[0])):
        label = " wedge ".join(form.coframe.names[i] for i in indices)
        if not indices:
            items.append(f"({to_text(coefficient)})")
        elif coefficient == 1:
            items.append(label)
        else:
            items.append(f"({to_text(coefficient)})*{label}")
    return " + ".join(items) or "0"


def report_text(report: CheckReport) -> str:
    lines = [f"{report.name}: {'ok' if report.ok else 'FAILED'}"]
    if report.sign is not None:
        lines.append(f"  sign: {report.sign}")
    for label, value in report.reduced.items():
        lines.append(f"  {label}: {to_text(value)}")
    for key, note in report.notes.items():
        lines.append(f"  note {key}: {note}")
    return "\n".join(lines)


# ---------------------------------------------------------------------
# LaTeX
# ---------------------------------------------------------------------

def _latex_index(indices) -> str:
    return "".join(str(i) for i in indices)


def _latex_jet(symbol) -> str:
    gen, order = jet_info(symbol)
    family, index = generator_sort_key(gen)
    mark = "_" if family in LOWER_INDEX_FAMILIES else "^"
    core = f"{family}{mark}{{{index}}}" if index else family
    if order == 0:
        return core
    if order == 1:
        return rf"\partial {core}"
    return rf"\partial^{{{order}}} {core}"


def _latex_atom(expr) -> str:
    parsed = parse_atom_name(expr.func.__name__)
    if parsed is not None:
        return f"{parsed[0]}_{{{_latex_index(parsed[1])}}}"
    return expr.func.__name__


def _latex_factor(factor) -> str:
    if isinstance(factor, sympy.Pow):
        base, exp = factor.args
        return f"{{{_latex_factor(base)}}}^{{{exp}}}"
    if isinstance(factor, sympy.Symbol):
        if is_jet(factor):
            return _latex_jet(factor)
        return _LATEX_PARAMETERS.get(factor.name, factor.name)
    if isinstance(factor, AppliedUndef):
        return _latex_atom(factor)
    if isinstance(factor, sympy.Derivative):
        function = factor.expr
        marks = "".join(rf"\partial_{{{function.args.index(v) + 1}}}" * int(c) for v, c in factor.variable_count)
        return f"{marks} {_latex_atom(function)}"
    return sympy.latex(factor)


def _factor_key(factor) -> tuple:
    base = factor.args[0] if isinstance(factor, sympy.Pow) else factor
    if isinstance(base, sympy.Symbol) and is_jet(base):
        return (2, jet_sort_key(base))
    if isinstance(base, sympy.Symbol):
        return (0, base.name)
    return (1, sympy.default_sort_key(base))


def _join_factors(pieces: list[str]) -> str:
    text = ""
    for piece in pieces:
        if text and _CONTROL_WORD.search(text) and piece[:1].isalpha():
            text += " "
        text += piece
    return text


def _latex_coefficient(coefficient, has_factors: bool) -> tuple[str, str]:
    sign = "-" if coefficient < 0 else "+"
    magnitude = abs(coefficient)
    if magnitude == 1 and has_factors:
        return sign, ""
    if magnitude.is_Integer:
        return sign, str(magnitude)
    return sign, rf"\frac{{{magnitude.p}}}{{{magnitude.q}}}"


def to_latex(value) -> str:
    if isinstance(value, DForm):
        parts = []
        for indices, coefficient in sorted(value.terms.items()):
            monomial = r" \wedge ".join(value.coframe.names[i] for i in indices)
            coefficient_text = to_latex(coefficient)
            if not indices:
                parts.append(coefficient_text)
            else:
                parts.append(f"\\left({coefficient_text}\\right) {monomial}" if coefficient != 1 else monomial)
        return " + ".join(parts) or "0"
    if isinstance(value, CheckReport | GenSection | InvariantSection | InvariantForm | VectorField):
        return to_text(value)

    expr = sympy.expand(sympy.sympify(value))
    if expr == 0:
        return "0"
    out = []
    for term in sorted(sympy.Add.make_args(expr), key=sympy.default_sort_key):
        coefficient, rest = term.as_coeff_Mul()
        factors = [] if rest == 1 else sorted(sympy.Mul.make_args(rest), key=_factor_key)
        sign, number = _latex_coefficient(coefficient, bool(factors))
        body = _join_factors(([number] if number else []) + [_latex_factor(f) for f in factors])
        if not out:
            out.append(f"-{body}" if sign == "-" else body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# ---------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------

def _lambda_record(value) -> dict:
    expr = sympy.expand(sympy.sympify(value))
    if MU in expr.free_symbols:
        poly = sympy.Poly(expr, LAMBDA, MU)
        entries = [{f"{i},{j}": to_text(c)} for (i, j), c in sorted(poly.terms())]
        return {"lambda_mu": entries}
    coefficients = lambda_coefficients(expr, LAMBDA)
    top = max(coefficients, default=0)
    return {"lambda": [{str(j): to_text(coefficients.get(j, 0))} for j in range(top + 1)]}


def to_record(value, *, as_lambda: bool = False) -> dict:
    if isinstance(value, CheckReport):
        return value.to_dict(to_text)
    record: dict = {"schema": SCHEMA_VERSION}
    if isinstance(value, DForm):
        record["form"] = [
            {"monomial": [value.coframe.names[i] for i in indices], "coefficient": to_text(coefficient)}
            for indices, coefficient in sorted(value.terms.items())
        ]
    elif isinstance(value, GenSection | InvariantSection | InvariantForm | VectorField):
        record["section" if not isinstance(value, InvariantForm) else "invariant_form"] = to_text(value)
    elif as_lambda or LAMBDA in sympy.sympify(value).free_symbols:
        record.update(_lambda_record(value))
    else:
        record["value"] = to_text(value)
    return record


def to_json(value, **kwargs) -> str:
    return json.dumps(to_record(value, **kwargs), indent=2)


def render(value, fmt: str = "text", **kwargs) -> str:
    """Render ``value`` in one of ``FORMATS``."""
    if fmt == "text":
        return to_text(value)
    if fmt == "latex":
        return to_latex(value)
    if fmt == "json":
        return to_json(value, **kwargs)
    raise ValueError(f"Unknown output format {fmt!r}, expected one of {FORMATS}")

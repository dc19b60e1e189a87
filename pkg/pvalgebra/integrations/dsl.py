"""
The expression language shared by the command line and the configuration files.

    ?sum     : product | sum "+" product | sum "-" product
    ?product : unary | product "*" unary | product "/" unary | product "wedge" unary
    ?unary   : power | "-" unary | "+" unary
    ?power   : atom | atom "^" unary
    ?atom    : INT | NAME | JET_OPEN NAME ")" | NAME "[" indices "]" | DERIV atom
             | "(" sum ")" | "sec" "(" NAME "=" sum ("," NAME "=" sum)* ")"

``x1`` is a jet variable, ``d(x1)`` and ``d2(x1)`` its derivatives, ``f[x]``
an opaque function of the x coordinates, ``H[1,2,3]`` an entry of an
antisymmetric table and ``D1 f[x]`` a partial derivative. Inside a coframe
scope the generator names (``dx1``, ``dy1``, ``A``) are 1-forms, the frame
names (``del1``, ``h1``, ``e``) vector fields, and ``*`` between two forms is
the wedge product.

Parsing only builds a tree. Identifiers are resolved, and table indices
normalized, when the tree is evaluated against a ``Scope``.
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import lark
import sympy

from ..algebra.diffpoly import coordinates, generator_sort_key, jet, normalize
from ..algebra.relations import AtomTable
from ..geometry.forms import Coframe, DForm, VectorField, wedge
from ..geometry.sigma import GenSection
from ..geometry.tduality import DualPair, InvariantSection, split_section
from ..utils.errors import ParseError

logger = logging.getLogger(__name__)

GRAMMAR = r"""
    ?start: sum

    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub

    ?product: unary
        | product "*" unary       -> mul
        | product "/" unary       -> div
        | product "wedge" unary   -> wedge

    ?unary: power
        | "-" unary   -> neg
        | "+" unary

    ?power: atom
        | atom "^" unary   -> pow

    ?atom: INT                       -> number
        | NAME                       -> name
        | JET_OPEN NAME ")"          -> jet
        | NAME "[" indices "]"       -> table
        | DERIV atom                 -> deriv
        | "(" sum ")"
        | "sec" "(" keyword ("," keyword)* ")"   -> section

    indices: INT ("," INT)*
           | NAME
           |

    keyword: NAME "=" sum

    JET_OPEN.2: /d\d*\(/
    DERIV.2: /D\d+/
    NAME: /[A-Za-z_][A-Za-z_0-9]*/

    %import common.INT
    %import common.WS
    %ignore WS
"""

PARAMETERS = ("lambda", "mu", "hbar", "k")

SECTION_KEYWORDS = ("xi", "xiw", "alpha", "alphap")


@functools.cache
def _parser() -> lark.Lark:
    return lark.Lark(GRAMMAR, parser="lalr", propagate_positions=True)


def parse(text: str) -> lark.Tree:
    """Parse DSL text into a tree; syntax errors become ``ParseError`` with a position."""
    try:
        return _parser().parse(text)
    except lark.exceptions.UnexpectedInput as exc:
        line, column = exc.line, exc.column
        token = getattr(exc, "token", None)
        if token is not None and token.type == "$END" or isinstance(exc, lark.exceptions.UnexpectedEOF):
            lines = text.split("\n")
            line, column = len(lines), len(lines[-1]) + 1
        snippet = text.split("\n")[line - 1] if isinstance(line, int) and line >= 1 else text
        raise ParseError(f"Syntax error in {text!r}", line=line, column=column, text=snippet) from exc


# ---------------------------------------------------------------------
# Scope
# ---------------------------------------------------------------------

@dataclass
class Scope:
    """
    What identifiers mean during evaluation.

    ``generators`` are the jet generator names; ``families`` give the
    coordinates of each family (``f[x]`` is a function of all of them);
    ``tables`` resolve ``H[i,j,k]``; ``coframe`` supplies forms and frames;
    ``pair`` makes ``sec(...)`` build invariant sections.
    """

    generators: set[str] = field(default_factory=set)
    families: dict[str, tuple[sympy.Symbol, ...]] = field(default_factory=dict)
    tables: dict[str, AtomTable] = field(default_factory=dict)
    parameters: dict[str, sympy.Symbol] = field(default_factory=dict)
    coframe: Coframe | None = None
    forms: dict[str, DForm] = field(default_factory=dict)
    pair: DualPair | None = None

    def __post_init__(self):
        for name in PARAMETERS:
            self.parameters.setdefault(name, sympy.Symbol(name))

    @property
    def default_family(self) -> str | None:
        return next(iter(self.families), None)

    def family_of(self, name: str) -> str | None:
        family, index = generator_sort_key(name)
        return family if family in self.families and 1 <= index <= len(self.families[family]) else None

    def table(self, name: str, rank: int) -> AtomTable:
        if name in self.tables:
            return self.tables[name]
        family = self.default_family
        if family is None:
            raise KeyError(f"No coordinates in scope for the table {name}")
        table = AtomTable(name, rank, self.families[family])
        self.tables[name] = table
        return table


def sigma_scope(dim: int, tables: Mapping[str, AtomTable] | None = None, coframe: Coframe | None = None,
                parameters: Mapping[str, sympy.Symbol] | None = None) -> Scope:
    """Phase-space scope: jets of x1..xN and p1..pN over the x coordinates."""
    generators = {f"x{i}" for i in range(1, dim + 1)} | {f"p{i}" for i in range(1, dim + 1)}
    return Scope(generators, {"x": coordinates("x", dim)}, dict(tables or {}), dict(parameters or {}), coframe)


def pair_scope(pair: DualPair, side: str = "E") -> Scope:
    """Scope over one side of a dual pair; F and Fhat are the curvature 2-forms there."""
    coframe = {"E": pair.E, "Ehat": pair.Ehat, "doubled": pair.doubled}[side]
    coords = pair.coords
    forms = {}
    for name, entries in (("F", pair.F), ("Fhat", pair.Fhat), ("Omega", pair.Omega)):
        forms[name] = DForm.from_terms(coframe, [(tuple(i - 1 for i in k), v) for k, v in entries.items()])
    parameters = {str(p): p for p in pair.parameters}
    return Scope({f"y{i}" for i in range(1, pair.n + 1)}, {"y": coords}, {}, parameters, coframe, forms, pair)


# ---------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------

def _is_form(value) -> bool:
    return isinstance(value, DForm)


class Evaluator(lark.visitors.Interpreter):
    """Evaluate a parse tree to sympy expressions, forms, vector fields or sections."""

    def __init__(self, scope: Scope, text: str = ""):
        self.scope = scope
        self.text = text

    def _error(self, message: str, item) -> ParseError:
        line = getattr(item, "line", None)
        column = getattr(item, "column", None)
        if line is None and hasattr(item, "meta") and not item.meta.empty:
            line, column = item.meta.line, item.meta.column
        return ParseError(message, line=line, column=column, text=self.text)

    def _binary(self, tree):
        return [self.visit(child) if isinstance(child, lark.Tree) else self._leaf(child) for child in tree.children]

    def _leaf(self, token):
        if token.type == "INT":
            return sympy.Integer(int(token))
        return self.name(lark.Tree("name", [token]))

    def visit(self, tree):
        if isinstance(tree, lark.Token):
            return self._leaf(tree)
        return super().visit(tree)

    def number(self, tree):
        return sympy.Integer(int(tree.children[0]))

    def name(self, tree):
        token = tree.children[0]
        name = str(token)
        scope = self.scope
        if name in scope.parameters:
            return scope.parameters[name]
        if name in scope.generators or scope.family_of(name):
            return jet(name)
        if name in scope.forms:
            return scope.forms[name]
        if scope.coframe is not None:
            if name in scope.coframe.names:
                return scope.coframe.generator(name)
            if name in scope.coframe.frames:
                return scope.coframe.frame(name)
        raise self._error(f"Unknown identifier {name!r}", token)

    def jet(self, tree):
        opener, name = tree.children
        order = int(str(opener)[1:-1] or 1)
        if str(name) not in self.scope.generators:
            raise self._error(f"Unknown generator {name!s} in a jet", name)
        return jet(str(name), order)

    def table(self, tree):
        name_token, indices = tree.children
        name = str(name_token)
        parts = [str(token) for token in indices.children]
        if not parts or not parts[0].isdigit():
            family = parts[0] if parts else self.scope.default_family
            if family not in self.scope.families:
                raise self._error(f"Unknown coordinate family {family!r} for {name}", name_token)
            return sympy.Function(name)(*self.scope.families[family])
        values = [int(part) for part in parts]
        try:
            return self.scope.table(name, len(values)).component(*values)
        except (KeyError, ValueError) as exc:
            raise self._error(str(exc), name_token) from None

    def deriv(self, tree):
        mark, operand = tree.children
        value = self.visit(operand)
        position = int(str(mark)[1:])
        atoms = value.atoms(sympy.core.function.AppliedUndef) if isinstance(value, sympy.Basic) else set()
        if not atoms:
            raise self._error(f"{mark!s} applies to function atoms only", mark)
        coords = next(iter(atoms)).args
        if not 1 <= position <= len(coords):
            raise self._error(f"{mark!s} refers to a coordinate outside 1..{len(coords)}", mark)
        return sympy.diff(value, coords[position - 1])

    def add(self, tree):
        left, right = self._binary(tree)
        return left + right

    def sub(self, tree):
        left, right = self._binary(tree)
        return left - right

    def neg(self, tree):
        return -self._binary(tree)[0]

    def mul(self, tree):
        left, right = self._binary(tree)
        if _is_form(left) and _is_form(right):
            return wedge(left, right)
        return left * right

    def wedge(self, tree):
        left, right = self._binary(tree)
        if not (_is_form(left) and _is_form(right)):
            left = left if _is_form(left) else self._as_form(left, tree)
            right = right if _is_form(right) else self._as_form(right, tree)
        return wedge(left, right)

    def _as_form(self, value, tree) -> DForm:
        if self.scope.coframe is None or isinstance(value, VectorField | GenSection):
            raise self._error("wedge needs forms", tree)
        return self.scope.coframe.scalar(value)

    def div(self, tree):
        left, right = self._binary(tree)
        if not isinstance(right, sympy.Basic) or right.free_symbols or right == 0:
            raise self._error("Division is by nonzero constants only", tree)
        return left * (1 / right)

    def pow(self, tree):
        base, exp = self._binary(tree)
        if not isinstance(exp, sympy.Basic) or not exp.is_Rational:
            raise self._error("Exponents must be rational constants", tree)
        if not isinstance(base, sympy.Basic):
            raise self._error("Only scalars can be raised to a power", tree)
        return base ** exp

    def section(self, tree):
        values = {}
        for keyword in tree.children:
            name_token, expr = keyword.children
            name = str(name_token)
            if name not in SECTION_KEYWORDS:
                raise self._error(f"Unknown section field {name!r}", name_token)
            values[name] = self.visit(expr)
        coframe = self.scope.coframe
        if coframe is None:
            raise self._error("Sections need a coframe in scope", tree)
        xi = values.get("xi", sympy.S.Zero)
        alpha = values.get("alpha", sympy.S.Zero)
        if not isinstance(xi, VectorField):
            if xi != 0:
                raise self._error("xi must be a vector field", tree)
            xi = VectorField.from_components(coframe, [])
        if not isinstance(alpha, DForm):
            if alpha != 0:
                raise self._error("alpha must be a 1-form", tree)
            alpha = coframe.zero()
        if self.scope.pair is None:
            if "xiw" in values or "alphap" in values:
                raise self._error("xiw and alphap need a dual pair in scope", tree)
            return GenSection(xi, alpha)
        vertical = len(coframe) - 1
        if vertical in xi.components or (vertical,) in alpha.terms:
            raise self._error("Use xiw and alphap for the vertical components", tree)
        s = split_section(GenSection(xi, alpha))
        return InvariantSection.make(s.n, s.xi, values.get("xiw", 0), s.alpha, values.get("alphap", 0))


def evaluate(text: str, scope: Scope | None = None):
    """Parse and evaluate ``text``. Scalars come back in canonical form."""
    scope = scope or Scope()
    value = Evaluator(scope, text).visit(parse(text))
    if isinstance(value, sympy.Basic) or isinstance(value, int):
        return normalize(value)
    return value

"""
Differential polynomials.

A differential polynomial is a sympy expression that is polynomial in jet
variables u_i^{(m)} with coefficients built from rationals, constant
parameters and function atoms of the base coordinates.

Jet variables
-------------
- Jet symbols are interned: ``jet("x1", 2)`` always returns the same
  ``sympy.Symbol`` (named ``d2(x1)``).
- The order-0 jets of the coordinate generators double as base coordinates.
  Function atoms are ``sympy.Function(name)(*coordinates)``, so the chain rule
  of the total derivative comes for free from ``sympy.diff``.
- Derivatives of atoms are sympy ``Derivative`` objects, which keep their
  variables sorted, so partials commute structurally.

Canonical form
--------------
``normalize`` validates the expression tree and expands it. Two expanded
sympy expressions are equal iff they are structurally equal, which gives a
unique canonical form for free.
"""

from __future__ import annotations

import functools
import logging
import re
import threading
from collections.abc import Iterable

import sympy
from sympy.core.function import AppliedUndef

from ..utils.errors import NonPolynomialError
from ..utils.types import DiffPoly

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------
# Jet symbol registry
# ---------------------------------------------------------------------

_JET_NAME = re.compile(r"^d(\d*)\((\w+)\)$")
_GENERATOR_NAME = re.compile(r"^([A-Za-z_]+?)(\d*)$")

_registry_lock = threading.Lock()
_jets: dict[tuple[str, int], sympy.Symbol] = {}
_jet_info: dict[sympy.Symbol, tuple[str, int]] = {}


def jet_name(gen: str, order: int = 0) -> str:
    """Printable name of u^{(order)} for generator ``gen``: x1, d(x1), d2(x1)."""
    if order == 0:
        return gen
    if order == 1:
        return f"d({gen})"
    return f"d{order}({gen})"


def jet(gen: str, order: int = 0) -> sympy.Symbol:
    """Return the interned jet symbol u_gen^{(order)}."""
    if order < 0:
        raise ValueError(f"Jet order must be non-negative, got {order}")
    key = (gen, order)
    sym = _jets.get(key)
    if sym is None:
        with _registry_lock:
            sym = _jets.get(key)
            if sym is None:
                sym = sympy.Symbol(jet_name(gen, order))
                _jets[key] = sym
                _jet_info[sym] = key
    return sym


def jet_info(sym) -> tuple[str, int] | None:
    """(generator, order) for a jet symbol, None for anything else."""
    return _jet_info.get(sym)


def is_jet(sym) -> bool:
    return sym in _jet_info


def parse_jet_name(name: str) -> tuple[str, int]:
    """Inverse of ``jet_name``."""
    match = _JET_NAME.match(name)
    if match:
        return match.group(2), int(match.group(1) or 1)
    return name, 0


def generator_sort_key(gen: str) -> tuple:
    """Natural ordering of generator names: x2 < x10, and x-type before p-type by family name."""
    match = _GENERATOR_NAME.match(gen)
    if not match:
        return (gen, 0)
    family, index = match.groups()
    return (family, int(index) if index else 0)


def jet_sort_key(sym: sympy.Symbol) -> tuple:
    gen, order = _jet_info[sym]
    return (generator_sort_key(gen), order)


def coordinates(family: str, dim: int) -> tuple[sympy.Symbol, ...]:
    """Order-0 jets ``family1 .. family<dim>`` used as base coordinates."""
    return tuple(jet(f"{family}{i}") for i in range(1, dim + 1))


def atom(name: str, coords: Iterable[sympy.Symbol], deriv: Iterable[int] = ()) -> sympy.Expr:
    """
    A function atom ``name(coords)`` with the partial-derivative multi-index
    ``deriv`` (1-based coordinate positions, order-insensitive).
    """
    coords = tuple(coords)
    expr = sympy.Function(name)(*coords)
    for index in deriv:
        expr = sympy.diff(expr, coords[index - 1])
    return expr


# ---------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------

def _check_node(node) -> None:
    if isinstance(node, sympy.Pow):
        base, exp = node.args
        if base.is_Number:
            if not (base.is_Rational and (exp.is_Integer or exp.is_Rational and base != 0)):
                raise NonPolynomialError(f"Non-rational constant {node}")
            if not exp.is_Integer:
                raise NonPolynomialError(f"Irrational constant {node}")
            return
        if not (exp.is_Integer and exp >= 0):
            raise NonPolynomialError(f"Division by or root of a non-constant: {node}")
    elif isinstance(node, sympy.Float):
        raise NonPolynomialError(f"Floating point coefficient {node}; use a rational")
    elif isinstance(node, sympy.Number) and not node.is_Rational:
        raise NonPolynomialError(f"Non-rational constant {node}")
    elif isinstance(node, AppliedUndef):
        for arg in node.args:
            info = jet_info(arg)
            if info is None or info[1] != 0:
                raise NonPolynomialError(f"Function atom {node} depends on {arg}, not on a base coordinate")
    elif isinstance(node, sympy.Derivative):
        if not isinstance(node.expr, AppliedUndef):
            raise NonPolynomialError(f"Unsupported derivative node {node}")
    elif isinstance(node, sympy.Function):
        raise NonPolynomialError(f"Non-polynomial function {node.func}")


def normalize(expr) -> DiffPoly:
    """
    Validate and expand ``expr`` into canonical form.

    Accepts trees built from +, *, non-negative integer powers, rationals,
    constant parameter symbols, function atoms and jet symbols. Anything else
    (division by a non-constant, floats, transcendental functions) raises
    ``NonPolynomialError``.
    """
    expr = sympy.sympify(expr)
    for node in sympy.preorder_traversal(expr):
        _check_node(node)
    return sympy.expand(expr)


def jet_symbols(f) -> set[sympy.Symbol]:
    """Jet symbols occurring in ``f``, including coordinates inside atoms."""
    return {s for s in sympy.sympify(f).free_symbols if s in _jet_info}


def generators_of(f) -> set[str]:
    return {_jet_info[s][0] for s in jet_symbols(f)}


def max_order(f, gen: str) -> int:
    """Highest jet order of ``gen`` in ``f`` (-1 if ``gen`` does not occur)."""
    orders = [order for g, order in (_jet_info[s] for s in jet_symbols(f)) if g == gen]
    return max(orders, default=-1)


def terms(f) -> list[tuple[sympy.Expr, tuple[tuple[sympy.Symbol, int], ...]]]:
    """
    Split ``f`` into (coefficient, jet monomial) pairs.

    Jet monomials are tuples of (jet symbol, power) sorted by generator and
    order; coefficients collect everything else (rationals, parameters, atoms;
    atom arguments are coordinates but never count as jet factors). The list is
    sorted graded-lexicographically on the monomials.
    """
    grouped: dict[tuple, sympy.Expr] = {}
    for term in sympy.Add.make_args(sympy.expand(f)):
        if term == 0:
            continue
        coefficient = sympy.S.One
        monomial: dict[sympy.Symbol, int] = {}
        for factor in sympy.Mul.make_args(term):
            base, exp = factor.as_base_exp()
            if base in _jet_info and exp.is_Integer:
                monomial[base] = monomial.get(base, 0) + int(exp)
            else:
                coefficient *= factor
        key = tuple(sorted(monomial.items(), key=lambda item: jet_sort_key(item[0])))
        grouped[key] = grouped.get(key, sympy.S.Zero) + coefficient

    def order_key(item):
        monomial = item[0]
        degree = sum(power for _, power in monomial)
        return (degree, [(jet_sort_key(sym), power) for sym, power in monomial], sympy.default_sort_key(item[1]))

    return sorted(((sympy.expand(c), m) for m, c in grouped.items() if sympy.expand(c) != 0),
                  key=lambda item: order_key((item[1], item[0])))


# ---------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------

@functools.lru_cache(maxsize=8192)
def _total_derivative(f: sympy.Expr) -> sympy.Expr:
    result = sympy.S.Zero
    for sym in sorted(jet_symbols(f), key=jet_sort_key):
        gen, order = _jet_info[sym]
        result += sympy.diff(f, sym) * jet(gen, order + 1)
    return sympy.expand(result)


def total_derivative(f, times: int = 1) -> DiffPoly:
    """
    The loop derivative ∂ = Σ u^{(m+1)} ∂/∂u^{(m)}.

    On a function atom the coordinate dependence gives the chain rule
    ∂f = Σ_k ∂_k f · x^{k,(1)}.
    """
    result = sympy.expand(sympy.sympify(f))
    for _ in range(times):
        result = _total_derivative(result)
    return result


def jet_partial(f, gen: str, order: int = 0) -> DiffPoly:
    """
    Formal partial ∂f/∂u_gen^{(order)}.

    Jets are independent variables. For an order-0 coordinate generator the
    partial also differentiates the function atoms through their argument.
    """
    return sympy.expand(sympy.diff(sympy.sympify(f), jet(gen, order)))


def variational_derivative(f, gen: str) -> DiffPoly:
    """Euler-Lagrange expression δf/δu_gen = Σ_m (−∂)^m ∂f/∂u_gen^{(m)}."""
    result = sympy.S.Zero
    for order in range(max_order(f, gen) + 1):
        term = jet_partial(f, gen, order)
        if term != 0:
            result += (-1) ** order * total_derivative(term, order)
    return sympy.expand(result)


def constant_term(f) -> sympy.Expr:
    """Part of ``f`` free of every jet (atoms count as non-constant)."""
    return sympy.Add(*[t for t in sympy.Add.make_args(sympy.expand(f)) if not jet_symbols(t)])


def functional_equal(f, g, generators: Iterable[str] | None = None) -> bool:
    """
    True iff ∫f = ∫g as local functionals, tested by the vanishing of every
    variational derivative of f − g.

    This quotients by constants as well as by the image of ∂.
    """
    difference = sympy.expand(sympy.sympify(f) - sympy.sympify(g))
    gens = set(generators) if generators is not None else generators_of(difference)
    return all(variational_derivative(difference, gen) == 0 for gen in gens)


def functional_equal_strict(f, g, generators: Iterable[str] | None = None) -> bool:
    """Like ``functional_equal`` but constants are not quotiented out."""
    difference = sympy.expand(sympy.sympify(f) - sympy.sympify(g))
    return constant_term(difference) == 0 and functional_equal(f, g, generators)

"""
Desk δ-calculus oracle.

An independent route to λ-brackets that never uses the master formula. Local
Poisson brackets are kept as distributions

    {u_i(t), u_j(s)} = Σ L(t) R(s) δ^{(k)}(t − s)

and extended to differential polynomials by the chain rule with ∂_t and ∂_s
acting on the distribution. The j-th product is the moment

    f_(j)g (s) = ∫ (t − s)^j {f(t), g(s)} dt

computed with the rule ∫ r^a F(s + r) δ^{(b)}(r) dr = (−1)^b C(b,a) a! ∂^{b−a}F(s)
for b ≥ a and 0 otherwise. The circle has total measure 1, so ∫ δ(t − s) dt = 1.

Used to cross-check the λ-bracket engine in tests and from the ``oracle``
command.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import sympy

from ..utils.types import DiffPoly, LambdaPoly
from .brackets import LAMBDA
from .diffpoly import jet, jet_info, jet_symbols, normalize, total_derivative
from .relations import sort_with_sign

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeltaTerm:
    """left(t) · right(s) · δ^{(order)}(t − s)."""

    left: sympy.Expr
    right: sympy.Expr
    order: int = 0


DistributionTable = Mapping[tuple[str, str], Sequence[DeltaTerm]]


def darboux_distribution(dim: int, flux_component: Callable[[int, int, int], sympy.Expr] | None = None,
                         coordinate: str = "x", momentum: str = "p") -> dict[tuple[str, str], list[DeltaTerm]]:
    """
    The twisted phase-space brackets as distributions:
    {x^i(t), p_j(s)} = δ^i_j δ(t−s) and {p_i(t), p_j(s)} = −Σ_k H_ijk(x(t)) x^k'(t) δ(t−s).
    """
    table: dict[tuple[str, str], list[DeltaTerm]] = {}
    for i in range(1, dim + 1):
        table[(f"{coordinate}{i}", f"{momentum}{i}")] = [DeltaTerm(sympy.S.One, sympy.S.One, 0)]
        table[(f"{momentum}{i}", f"{coordinate}{i}")] = [DeltaTerm(-sympy.S.One, sympy.S.One, 0)]
    if flux_component is not None:
        for i in range(1, dim + 1):
            for j in range(1, dim + 1):
                if i == j:
                    continue
                left = -sum(flux_component(i, j, k) * jet(f"{coordinate}{k}", 1) for k in range(1, dim + 1))
                left = sympy.expand(left)
                if left != 0:
                    table[(f"{momentum}{i}", f"{momentum}{j}")] = [DeltaTerm(left, sympy.S.One, 0)]
    return table


def _differentiate_t(terms: list[DeltaTerm]) -> list[DeltaTerm]:
    result = []
    for term in terms:
        derivative = total_derivative(term.left)
        if derivative != 0:
            result.append(DeltaTerm(derivative, term.right, term.order))
        result.append(DeltaTerm(term.left, term.right, term.order + 1))
    return result


def _differentiate_s(terms: list[DeltaTerm]) -> list[DeltaTerm]:
    result = []
    for term in terms:
        derivative = total_derivative(term.right)
        if derivative != 0:
            result.append(DeltaTerm(term.left, derivative, term.order))
        result.append(DeltaTerm(term.left, -term.right, term.order + 1))
    return result


def _partials(f) -> list[tuple[str, int, sympy.Expr]]:
    result = []
    for sym in jet_symbols(f):
        value = sympy.expand(sympy.diff(f, sym))
        if value != 0:
            gen, order = jet_info(sym)
            result.append((gen, order, value))
    return result


def distributional_bracket(f, g, table: DistributionTable) -> list[DeltaTerm]:
    """
    {f(t), g(s)} = Σ ∂f/∂u_i^{(m)}(t) ∂g/∂u_j^{(n)}(s) ∂_t^m ∂_s^n {u_i(t), u_j(s)}.
    """
    f, g = normalize(f), normalize(g)
    result = []
    for i, m, a in _partials(f):
        for j, n, b in _partials(g):
            terms = list(table.get((i, j), ()))
            for _ in range(m):
                terms = _differentiate_t(terms)
            for _ in range(n):
                terms = _differentiate_s(terms)
            result.extend(DeltaTerm(sympy.expand(a * term.left), sympy.expand(b * term.right), term.order)
                          for term in terms)
    return result


def integrate_moment(term: DeltaTerm, power: int) -> sympy.Expr:
    """∫ (t − s)^power · term dt as a function of s."""
    if term.order < power:
        return sympy.S.Zero
    b, a = term.order, power
    value = (-1) ** b * sympy.binomial(b, a) * sympy.factorial(a) * total_derivative(term.left, b - a)
    return sympy.expand(value * term.right)


def oracle_jth_product(f, g, j: int, table: DistributionTable) -> DiffPoly:
    if j < 0:
        raise ValueError("The oracle computes non-negative products only")
    return sympy.expand(sum((integrate_moment(term, j) for term in distributional_bracket(f, g, table)),
                            sympy.S.Zero))


def oracle_lambda_bracket(f, g, table: DistributionTable, var: sympy.Symbol = LAMBDA) -> LambdaPoly:
    """{f_λ g} = Σ_j λ^j/j! f_(j)g from the distributional bracket."""
    terms = distributional_bracket(f, g, table)
    top = max((term.order for term in terms), default=-1)
    value = sympy.S.Zero
    for j in range(top + 1):
        moment = sum((integrate_moment(term, j) for term in terms), sympy.S.Zero)
        value += var ** j / sympy.factorial(j) * moment
    return sympy.expand(value)


def flux_component_from_table(dim: int, entries: Mapping[tuple[int, int, int], sympy.Expr]):
    """Adapter turning increasing-index entries into an antisymmetric component function."""
    def component(i, j, k):
        sign, ordered = sort_with_sign((i, j, k))
        return sign * entries.get(ordered, 0) if sign else sympy.S.Zero

    return component

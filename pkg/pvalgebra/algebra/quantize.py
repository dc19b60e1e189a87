"""
Truncated quantization.

- ``lie_bracket``: [a, b] = ∫_{−∂}^0 {a_λ b} dλ, the Lie algebra attached to a
  Lie conformal algebra; the λ^j coefficient c_j contributes −(−∂)^{j+1}c_j/(j+1).
- ``hbar_family``: the family [a_λ b]_ħ = ħ[a_λ b].
- ``ConformalBasis``: a finite basis (generators and their ∂-derivatives up to
  a fixed order) in which all Lie brackets must decompose; escapes are
  truncation failures, never dropped.
- ``EnvElement`` and ``pbw_normal_form``: ℚ[ħ]-combinations of words over the
  basis, rewritten with ab → ba + ħ[a,b] until every word is ordered.
- ``quasiclassical_limit``: ħ → 0, leaving commutative monomials in S(R).
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import sympy
from sympy.core.function import AppliedUndef

from ..utils.errors import TruncationError
from ..utils.types import DiffPoly
from .brackets import LAMBDA, MU, BracketSpec, CheckReport, check_axiom_suite, lambda_bracket, lambda_coefficients
from .diffpoly import jet_symbols, normalize, terms, total_derivative
from .relations import reduce_relations

logger = logging.getLogger(__name__)

HBAR = sympy.Symbol("hbar")

DEFAULT_MAX_WORD = 3
DEFAULT_MAX_DORDER = 2
DEFAULT_MAX_HBAR = 2

STRATEGIES = ("leftmost", "rightmost")


def lie_bracket(a, b, spec: BracketSpec) -> DiffPoly:
    value = sympy.S.Zero
    for j, c in lambda_coefficients(lambda_bracket(a, b, spec)).items():
        value += -((-1) ** (j + 1)) * total_derivative(c, j + 1) / (j + 1)
    return reduce_relations(value, spec.relations)


def lie_jacobiator(a, b, c, spec: BracketSpec) -> DiffPoly:
    """[a,[b,c]] − [[a,b],c] − [b,[a,c]]"""
    value = (lie_bracket(a, lie_bracket(b, c, spec), spec) - lie_bracket(lie_bracket(a, b, spec), c, spec)
             - lie_bracket(b, lie_bracket(a, c, spec), spec))
    return reduce_relations(value, spec.relations)


def hbar_family(spec: BracketSpec, degree: int = 1) -> BracketSpec:
    """Every table entry multiplied by ħ^degree."""
    return spec.scaled(HBAR ** degree)


# ---------------------------------------------------------------------
# Conformal basis
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class BasisElement:
    name: str
    value: DiffPoly
    rank: int
    dorder: int = 0

    @property
    def sort_key(self) -> tuple:
        return (self.rank, self.dorder, self.name)


def _is_scalar(value) -> bool:
    return not jet_symbols(value) and not value.atoms(AppliedUndef) and not value.atoms(sympy.Derivative)


@dataclass(eq=False)
class ConformalBasis:
    """
    PBW-ordered basis elements with a memo of decomposed Lie brackets.

    Decompositions map basis positions to coefficients; the key ``None``
    holds the scalar part.
    """

    spec: BracketSpec
    elements: tuple[BasisElement, ...]
    max_dorder: int = DEFAULT_MAX_DORDER
    _brackets: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.elements = tuple(sorted(self.elements, key=lambda element: element.sort_key))
        names = [element.name for element in self.elements]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate basis names in {names}")

    @classmethod
    def from_generators(cls, spec: BracketSpec, generators: Sequence, max_dorder: int = DEFAULT_MAX_DORDER,
                        names: Sequence[str] | None = None) -> ConformalBasis:
        """Basis of the generators and their ∂-derivatives up to ``max_dorder``."""
        elements = []
        for rank, generator in enumerate(generators):
            value = normalize(generator)
            spec.check_generators(value)
            base = names[rank] if names else _default_name(value)
            for order in range(max_dorder + 1):
                name = base if order == 0 else f"d{order if order > 1 else ''}({base})"
                elements.append(BasisElement(name, value, rank, order))
                value = total_derivative(value)
        return cls(spec, tuple(elements), max_dorder)

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        for position, element in enumerate(self.elements):
            if element.name == name:
                return position
        raise KeyError(f"No basis element named {name}")

    def decompose(self, value) -> dict[int | None, sympy.Expr]:
        """Coefficients of ``value`` in the basis (plus scalars); TruncationError if it escapes the span."""
        value = reduce_relations(normalize(value), self.spec.relations)
        if value == 0:
            return {}
        unknowns = sympy.symbols(f"c0:{len(self.elements) + 1}", cls=sympy.Dummy)
        residual = value - unknowns[-1] - sum(c * e.value for c, e in zip(unknowns, self.elements))
        residual = reduce_relations(sympy.expand(residual), self.spec.relations)
        equations = [coefficient for coefficient, _ in _linear_terms(residual)]
        solutions = sympy.linsolve(equations, unknowns)
        if not solutions:
            logger.warning(f"Bracket value {value} escapes the truncated basis")
            raise TruncationError(f"{value} is not in the span of the truncated basis")
        solution = next(iter(solutions))
        free = {symbol: 0 for symbol in unknowns}
        result = {}
        for position, coefficient in enumerate(solution):
            coefficient = sympy.expand(sympy.sympify(coefficient).subs(free))
            if coefficient == 0:
                continue
            if not _is_scalar(coefficient):
                raise TruncationError(f"{value} needs non-constant coefficients in the truncated basis")
            result[None if position == len(self.elements) else position] = coefficient
        return result

    def bracket(self, i: int, j: int) -> dict[int | None, sympy.Expr]:
        """Decomposition of [e_i, e_j] (memoized)."""
        key = (i, j)
        if key not in self._brackets:
            value = lie_bracket(self.elements[i].value, self.elements[j].value, self.spec)
            self._brackets[key] = self.decompose(value)
        return self._brackets[key]

    def bracket_table(self) -> dict[tuple[int, int], dict[int | None, sympy.Expr]]:
        return {(i, j): self.bracket(i, j) for i, j in itertools.product(range(len(self)), repeat=2)}

    def value_of(self, word: Sequence[int]) -> DiffPoly:
        """Commutative product of the basis values in a word."""
        return sympy.expand(sympy.Mul(*[self.elements[i].value for i in word]))


def _default_name(value) -> str:
    return str(value).replace(" ", "")


def _linear_terms(expr) -> list[tuple[sympy.Expr, tuple]]:
    """Split by jet monomial and then by atom content, leaving the c-linear coefficients."""
    result = []
    for coefficient, monomial in terms(expr):
        grouped: dict = {}
        for term in sympy.Add.make_args(sympy.expand(coefficient)):
            free = term.atoms(AppliedUndef) | term.atoms(sympy.Derivative)
            key = tuple(sorted(
                [factor for factor in sympy.Mul.make_args(term)
                 if factor.atoms(AppliedUndef) or factor.atoms(sympy.Derivative)],
                key=sympy.default_sort_key,
            )) if free else ()
            plain = sympy.Mul(*[factor for factor in sympy.Mul.make_args(term)
                                if not (factor.atoms(AppliedUndef) or factor.atoms(sympy.Derivative))])
            grouped[key] = grouped.get(key, sympy.S.Zero) + plain
        result.extend((value, (monomial, key)) for key, value in grouped.items())
    return result


# ---------------------------------------------------------------------
# Enveloping algebra
# ---------------------------------------------------------------------

Word = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class EnvElement:
    """ℚ[ħ]-combination of words over a ConformalBasis."""

    basis: ConformalBasis
    terms: Mapping[Word, sympy.Expr] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, basis: ConformalBasis, items: Iterable[tuple[Word, sympy.Expr]]) -> EnvElement:
        merged: dict[Word, sympy.Expr] = {}
        for word, coefficient in items:
            merged[tuple(word)] = merged.get(tuple(word), sympy.S.Zero) + coefficient
        return cls(basis, {w: sympy.expand(c) for w, c in merged.items() if sympy.expand(c) != 0})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: EnvElement) -> EnvElement:
        return EnvElement.from_terms(self.basis, [*self.terms.items(), *other.terms.items()])

    def __neg__(self) -> EnvElement:
        return EnvElement(self.basis, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: EnvElement) -> EnvElement:
        return self + (-other)

    def __mul__(self, other) -> EnvElement:
        if isinstance(other, EnvElement):
            return self.concat(other)
        return EnvElement.from_terms(self.basis, [(w, c * other) for w, c in self.terms.items()])

    __rmul__ = __mul__

    def concat(self, other: EnvElement) -> EnvElement:
        """Word concatenation (not normalized)."""
        return EnvElement.from_terms(self.basis, [(u + v, a * b) for (u, a), (v, b)
                                                  in itertools.product(self.terms.items(), other.terms.items())])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnvElement):
            return NotImplemented
        return (self - other).is_zero

    __hash__ = None

    def hbar_degree(self) -> int:
        return max((sympy.degree(c, HBAR) for c in self.terms.values()), default=0)

    def hbar_part(self, degree: int) -> EnvElement:
        return EnvElement.from_terms(self.basis, [(w, sympy.expand(c).coeff(HBAR, degree))
                                                  for w, c in self.terms.items()])

    def names(self) -> dict[tuple[str, ...], sympy.Expr]:
        return {tuple(self.basis.elements[i].name for i in w): c for w, c in self.terms.items()}


def word(basis: ConformalBasis, *names: str) -> EnvElement:
    return EnvElement(basis, {tuple(basis.index(name) for name in names): sympy.S.One})


def _descent(w: Word, strategy: str) -> int | None:
    positions = [i for i in range(len(w) - 1) if w[i] > w[i + 1]]
    if not positions:
        return None
    return positions[0] if strategy == "leftmost" else positions[-1]


def pbw_normal_form(element: EnvElement | Word, basis: ConformalBasis | None = None, *,
                    strategy: str = "leftmost", max_word: int = DEFAULT_MAX_WORD,
                    max_hbar: int = DEFAULT_MAX_HBAR) -> EnvElement:
    """
    Rewrite every out-of-order adjacent pair ab (a after b in PBW order) as
    ba + ħ[a,b] until all words are ordered.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"Unknown rewrite strategy {strategy}; expected one of {STRATEGIES}")
    if not isinstance(element, EnvElement):
        element = EnvElement(basis, {tuple(element): sympy.S.One})
    basis = element.basis

    pending: dict[Word, sympy.Expr] = dict(element.terms)
    for w in pending:
        if len(w) > max_word:
            raise TruncationError(f"Word of length {len(w)} exceeds the configured maximum {max_word}")
    done: dict[Word, sympy.Expr] = {}
    while pending:
        w = min(pending, key=lambda key: (len(key), key))
        coefficient = sympy.expand(pending.pop(w))
        if coefficient == 0:
            continue
        position = _descent(w, strategy)
        if position is None:
            done[w] = done.get(w, sympy.S.Zero) + coefficient
            continue
        a, b = w[position], w[position + 1]
        swapped = w[:position] + (b, a) + w[position + 2:]
        pending[swapped] = pending.get(swapped, sympy.S.Zero) + coefficient
        for k, value in basis.bracket(a, b).items():
            target = w[:position] + (() if k is None else (k,)) + w[position + 2:]
            contribution = sympy.expand(coefficient * HBAR * value)
            if sympy.degree(contribution, HBAR) > max_hbar:
                logger.warning(f"ħ-degree overflow while rewriting {w}")
                raise TruncationError(f"ħ-degree exceeds the configured maximum {max_hbar}")
            pending[target] = pending.get(target, sympy.S.Zero) + contribution
    return EnvElement.from_terms(basis, done.items())


def commutator(a: EnvElement, b: EnvElement, **kwargs) -> EnvElement:
    return pbw_normal_form(a.concat(b), **kwargs) - pbw_normal_form(b.concat(a), **kwargs)


# ---------------------------------------------------------------------
# Quasiclassical limit
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class QuasiclassicalLimit:
    """The ħ → 0 image in S(R), plus the ħ¹ part kept as the recovered bracket."""

    basis: ConformalBasis
    symmetric: Mapping[Word, sympy.Expr]
    first_order: Mapping[Word, sympy.Expr]

    def product(self, other: QuasiclassicalLimit) -> QuasiclassicalLimit:
        """Commutative product of the symmetric parts."""
        merged: dict[Word, sympy.Expr] = {}
        for (u, a), (v, b) in itertools.product(self.symmetric.items(), other.symmetric.items()):
            key = tuple(sorted(u + v))
            merged[key] = sympy.expand(merged.get(key, sympy.S.Zero) + a * b)
        return QuasiclassicalLimit(self.basis, {k: v for k, v in merged.items() if v != 0}, {})

    def to_diffpoly(self) -> DiffPoly:
        return sympy.expand(sum((c * self.basis.value_of(w) for w, c in self.symmetric.items()), sympy.S.Zero))

    def bracket_value(self) -> DiffPoly:
        return sympy.expand(sum((c * self.basis.value_of(w) for w, c in self.first_order.items()), sympy.S.Zero))


def quasiclassical_limit(element: EnvElement) -> QuasiclassicalLimit:
    symmetric, first = {}, {}
    for w, c in element.terms.items():
        key = tuple(sorted(w))
        zero = sympy.expand(c).coeff(HBAR, 0)
        one = sympy.expand(c).coeff(HBAR, 1)
        if zero != 0:
            symmetric[key] = sympy.expand(symmetric.get(key, sympy.S.Zero) + zero)
        if one != 0:
            first[key] = sympy.expand(first.get(key, sympy.S.Zero) + one)
    return QuasiclassicalLimit(element.basis, {k: v for k, v in symmetric.items() if v != 0},
                               {k: v for k, v in first.items() if v != 0})


def classical_bracket(a: str, b: str, basis: ConformalBasis) -> DiffPoly:
    """((ab − ba)/ħ) at ħ → 0, read back as a differential polynomial."""
    difference = commutator(word(basis, a), word(basis, b))
    return quasiclassical_limit(difference).bracket_value()


# ---------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------

def _bracket_element(basis: ConformalBasis, i: int, j: int) -> EnvElement:
    return EnvElement.from_terms(basis, [(() if k is None else (k,), v) for k, v in basis.bracket(i, j).items()])


def check_quasi_commutativity(a: str, b: str, c: str, basis: ConformalBasis, *,
                              max_hbar: int = DEFAULT_MAX_HBAR) -> CheckReport:
    """:a:bc:: − :b:ac:: − ħ:[a,b]c: in the truncated enveloping algebra."""
    i, j = basis.index(a), basis.index(b)
    options = {"max_hbar": max_hbar, "max_word": 3}
    left = pbw_normal_form(word(basis, a, b, c), **options)
    right = pbw_normal_form(word(basis, b, a, c), **options)
    correction = pbw_normal_form((HBAR * _bracket_element(basis, i, j)).concat(word(basis, c)), **options)
    residual = left - right - correction
    report = CheckReport("quasi_commutativity")
    report.add(f"qcom[{a},{b},{c}]", env_residual(residual))
    return report


def check_lie_algebra(basis: ConformalBasis) -> CheckReport:
    """Antisymmetry and Jacobi of the Lie bracket on all basis pairs and triples."""
    spec = basis.spec
    values = [element.value for element in basis.elements]
    names = [element.name for element in basis.elements]
    report = CheckReport("lie_algebra")
    for i, j in itertools.product(range(len(values)), repeat=2):
        report.add(f"antisymmetry[{names[i]},{names[j]}]",
                   lie_bracket(values[i], values[j], spec) + lie_bracket(values[j], values[i], spec),
                   spec.relations)
    for i, j, k in itertools.combinations(range(len(values)), 3):
        report.add(f"jacobi[{names[i]},{names[j]},{names[k]}]", lie_jacobiator(values[i], values[j], values[k], spec),
                   spec.relations)
    report.log()
    return report


def env_residual(element: EnvElement) -> sympy.Expr:
    """Encode an EnvElement as a scalar: one placeholder symbol per word, zero iff the element is zero."""
    value = sympy.S.Zero
    for names, coefficient in element.names().items():
        value += coefficient * sympy.Symbol("[" + " ".join(names) + "]")
    return sympy.expand(value)


def check_confluence(basis: ConformalBasis, max_word: int = DEFAULT_MAX_WORD,
                     max_hbar: int = DEFAULT_MAX_HBAR) -> CheckReport:
    """Leftmost and rightmost rewriting agree on every word up to ``max_word``."""
    report = CheckReport("pbw_confluence")
    for length in range(2, max_word + 1):
        for w in itertools.product(range(len(basis)), repeat=length):
            left = pbw_normal_form(EnvElement(basis, {w: sympy.S.One}), strategy="leftmost",
                                   max_word=max_word, max_hbar=max_hbar)
            right = pbw_normal_form(EnvElement(basis, {w: sympy.S.One}), strategy="rightmost",
                                    max_word=max_word, max_hbar=max_hbar)
            label = ",".join(basis.elements[i].name for i in w)
            report.add(f"confluence[{label}]", env_residual(left - right))
    report.log()
    return report


def check_idempotence(basis: ConformalBasis, max_word: int = DEFAULT_MAX_WORD) -> CheckReport:
    report = CheckReport("pbw_idempotence")
    for length in range(1, max_word + 1):
        for w in itertools.product(range(len(basis)), repeat=length):
            once = pbw_normal_form(EnvElement(basis, {w: sympy.S.One}), max_word=max_word)
            twice = pbw_normal_form(once, max_word=max_word)
            label = ",".join(basis.elements[i].name for i in w)
            report.add(f"idempotent[{label}]", env_residual(twice - once))
    return report


def check_limit(basis: ConformalBasis) -> CheckReport:
    """
    Quantize-then-limit equals the commutative product, and (ab − ba)/ħ at
    ħ = 0 equals the Lie bracket, for every pair of basis elements.
    """
    report = CheckReport("quasiclassical_limit")
    for i, j in itertools.product(range(len(basis)), repeat=2):
        a, b = basis.elements[i], basis.elements[j]
        limit = quasiclassical_limit(pbw_normal_form(EnvElement(basis, {(i, j): sympy.S.One})))
        report.add(f"product[{a.name},{b.name}]", limit.to_diffpoly() - a.value * b.value)
        report.add(f"bracket[{a.name},{b.name}]",
                   classical_bracket(a.name, b.name, basis) - lie_bracket(a.value, b.value, basis.spec),
                   basis.spec.relations)
    report.log()
    return report


def check_hbar_divisibility(spec: BracketSpec, samples: Sequence, *, jacobi: bool = True) -> CheckReport:
    """
    In the ħ-family every λ-bracket is divisible by ħ and every nested
    bracket of the Jacobi identity by ħ². The family itself must stay a PVA,
    so its axiom suite runs on the same samples under the ``family`` prefix.
    """
    family = hbar_family(spec)
    report = CheckReport("hbar_divisibility")
    samples = [normalize(sample) for sample in samples]
    for index, (f, g) in enumerate(zip(samples, samples[1:] + samples[:1])):
        bracket = lambda_bracket(f, g, family)
        report.add(f"bracket[{index}]", bracket.subs(HBAR, 0))
        nested = lambda_bracket(f, lambda_bracket(g, f, family, MU), family, LAMBDA)
        report.add(f"nested.hbar0[{index}]", sympy.expand(nested).coeff(HBAR, 0))
        report.add(f"nested.hbar1[{index}]", sympy.expand(nested).coeff(HBAR, 1))
    report.merge(check_axiom_suite(family, samples, jacobi=jacobi), prefix="family")
    report.log()
    return report


"""
The λ-bracket engine.

A ``BracketSpec`` fixes the brackets {u_i λ u_j} of the generators. The
master formula extends them to all differential polynomials:

    {f_λ g} = Σ ∂g/∂u_j^{(n)} (λ+∂)^n {u_i λ+∂ u_j}_→ (−λ−∂)^m ∂f/∂u_i^{(m)}

where the subscript arrow means every power of ∂+λ acts on everything to its
right. The substitution is expanded eagerly with the binomial theorem, so
values are ordinary polynomials in λ with differential polynomial
coefficients.

Internally a λ-polynomial is handled as a dict {power: coefficient}.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import sympy

from ..utils.errors import TruncationError, UnknownGeneratorError
from ..utils.types import BracketTable, DiffPoly, LambdaMuPoly, LambdaPoly
from .diffpoly import generators_of, jet, jet_info, jet_symbols, normalize, total_derivative
from .relations import ClosureRelation, reduce_relations

logger = logging.getLogger(__name__)

LAMBDA = sympy.Symbol("lambda")
MU = sympy.Symbol("mu")
NU = sympy.Symbol("nu")

DEFAULT_MAX_LAMBDA_DEGREE = 8


# ---------------------------------------------------------------------
# Bracket specification
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class BracketSpec:
    """
    Generator table of a candidate Poisson vertex algebra.

    ``table`` is complete over ``generators`` (see ``skew_complete``); entries
    are polynomials in ``LAMBDA``. ``relations`` are the closedness relations
    modulo which residuals are judged.
    """

    generators: tuple[str, ...]
    table: BracketTable = field(default_factory=dict)
    relations: tuple[ClosureRelation, ...] = ()
    max_lambda_degree: int = DEFAULT_MAX_LAMBDA_DEGREE

    def entry(self, left: str, right: str) -> LambdaPoly:
        return self.table.get((left, right), sympy.S.Zero)

    def check_generators(self, f) -> None:
        unknown = generators_of(f) - set(self.generators)
        if unknown:
            raise UnknownGeneratorError(f"Unknown generator(s) {sorted(unknown)}; known: {list(self.generators)}")

    def reduce(self, expr) -> sympy.Expr:
        return reduce_relations(expr, self.relations)

    def scaled(self, factor) -> BracketSpec:
        """Spec with every table entry multiplied by ``factor``."""
        table = {key: sympy.expand(factor * value) for key, value in self.table.items()}
        return replace(self, table=table)

    def without_relations(self) -> BracketSpec:
        return replace(self, relations=())


def skew_complete(generators: Sequence[str], entries: BracketTable, *,
                  relations: Iterable[ClosureRelation] = (),
                  max_lambda_degree: int = DEFAULT_MAX_LAMBDA_DEGREE) -> BracketSpec:
    """
    Build a complete BracketSpec from a partial table.

    A missing (b, a) entry is filled with −{a_{−λ−∂} b}; pairs given in both
    orders must agree with skew-symmetry modulo ``relations``. Pairs given in
    neither order are zero.
    """
    generators = tuple(generators)
    relations = tuple(relations)
    table = {}
    for (left, right), value in entries.items():
        if left not in generators or right not in generators:
            raise UnknownGeneratorError(f"Bracket entry ({left}, {right}) uses an undeclared generator")
        table[(left, right)] = normalize(value)

    for left, right in itertools.product(generators, repeat=2):
        if (left, right) in table:
            continue
        if (right, left) in table:
            table[(left, right)] = skew(table[(right, left)])

    for (left, right), value in table.items():
        expected = skew(table[(right, left)]) if (right, left) in table else None
        if expected is not None and reduce_relations(value - expected, relations) != 0:
            raise ValueError(f"Entries ({left}, {right}) and ({right}, {left}) violate skew-symmetry")

    table = {key: value for key, value in table.items() if value != 0}
    return BracketSpec(generators, table, relations, max_lambda_degree)


# ---------------------------------------------------------------------
# λ-polynomial helpers
# ---------------------------------------------------------------------

def lambda_coefficients(poly, var: sympy.Symbol = LAMBDA) -> dict[int, sympy.Expr]:
    """Coefficients of ``poly`` as a polynomial in ``var``."""
    coefficients: dict[int, sympy.Expr] = {}
    for term in sympy.Add.make_args(sympy.expand(poly)):
        if term == 0:
            continue
        coefficient, power = term.as_coeff_exponent(var)
        if not (power.is_Integer and power >= 0) or coefficient.has(var):
            raise ValueError(f"{poly} is not a polynomial in {var}")
        coefficients[int(power)] = coefficients.get(int(power), sympy.S.Zero) + coefficient
    return {power: value for power, value in coefficients.items() if value != 0}


def from_coefficients(coefficients: Mapping[int, sympy.Expr], var: sympy.Symbol = LAMBDA) -> sympy.Expr:
    return sympy.expand(sympy.Add(*[value * var ** power for power, value in coefficients.items()]))


def lambda_degree(poly, var: sympy.Symbol = LAMBDA) -> int:
    return max(lambda_coefficients(poly, var), default=-1)


def _accumulate(target: dict[int, sympy.Expr], power: int, value) -> None:
    target[power] = target.get(power, sympy.S.Zero) + value


def _shift(coefficients: Mapping[int, sympy.Expr], r: int) -> dict[int, sympy.Expr]:
    """(λ+∂)^r applied to a λ-polynomial, ∂ acting on its coefficients."""
    if r == 0:
        return dict(coefficients)
    result: dict[int, sympy.Expr] = {}
    for power, value in coefficients.items():
        derivative = value
        for s in range(r + 1):
            if s:
                derivative = total_derivative(derivative)
            if derivative == 0:
                break
            _accumulate(result, power + r - s, sympy.binomial(r, s) * derivative)
    return {power: sympy.expand(value) for power, value in result.items()}


def apply_shifted(poly, operand, var: sympy.Symbol = LAMBDA) -> sympy.Expr:
    """
    {·_{var+∂} ·}_→ : Σ_r c_r (var+∂)^r operand for poly = Σ_r c_r var^r.
    """
    result: dict[int, sympy.Expr] = {}
    for r, c in lambda_coefficients(poly, var).items():
        for power, value in _shift({0: sympy.sympify(operand)}, r).items():
            _accumulate(result, power, c * value)
    return from_coefficients(result, var)


def skew(poly, var: sympy.Symbol = LAMBDA) -> sympy.Expr:
    """−P_{−var−∂}: the value of {g_var f} given P = {f_var g}."""
    result: dict[int, sympy.Expr] = {}
    for r, c in lambda_coefficients(poly, var).items():
        for power, value in _shift({0: c}, r).items():
            _accumulate(result, power, -((-1) ** r) * value)
    return from_coefficients(result, var)


def _check_degree(poly, spec: BracketSpec, var: sympy.Symbol) -> None:
    degree = lambda_degree(poly, var)
    if degree > spec.max_lambda_degree:
        logger.warning(f"λ-degree {degree} exceeds the configured cap {spec.max_lambda_degree}")
        raise TruncationError(f"λ-degree {degree} exceeds the cap {spec.max_lambda_degree}")


# ---------------------------------------------------------------------
# The master formula
# ---------------------------------------------------------------------

def _jet_partials(f) -> dict[tuple[str, int], sympy.Expr]:
    partials = {}
    for sym in jet_symbols(f):
        value = sympy.expand(sympy.diff(f, sym))
        if value != 0:
            partials[jet_info(sym)] = value
    return partials


def lambda_bracket(f, g, spec: BracketSpec, var: sympy.Symbol = LAMBDA) -> LambdaPoly:
    """
    {f_var g} by the master formula.

    ``var`` defaults to λ; the Jacobi identity uses μ and ν. Symbols other
    than jets (λ, μ, parameters) are constants for the bracket.
    """
    f, g = normalize(f), normalize(g)
    spec.check_generators(f)
    spec.check_generators(g)

    result: dict[int, sympy.Expr] = {}
    g_partials = _jet_partials(g)
    for (i, m), a in _jet_partials(f).items():
        # (−λ−∂)^m ∂f/∂u_i^{(m)}
        inner = {power: (-1) ** m * value for power, value in _shift({0: a}, m).items()}
        for (j, n), b in g_partials.items():
            entry = spec.entry(i, j)
            if entry == 0:
                continue
            # B_ij(λ+∂) acting on the inner polynomial, coefficient on the left
            middle: dict[int, sympy.Expr] = {}
            for r, c in lambda_coefficients(entry, LAMBDA).items():
                for power, value in _shift(inner, r).items():
                    _accumulate(middle, power, c * value)
            for power, value in _shift(middle, n).items():
                _accumulate(result, power, b * value)

    value = from_coefficients(result, var)
    _check_degree(value, spec, var)
    return value


def lambda_bracket_mu(f, g, spec: BracketSpec) -> LambdaPoly:
    """The λ-bracket written in the second formal parameter μ."""
    return lambda_bracket(f, g, spec, MU)


def functional_bracket(f, g, spec: BracketSpec) -> DiffPoly:
    """Representative of {∫f, ∫g} = ∫{f_λ g}|_{λ=0}."""
    return lambda_coefficients(lambda_bracket(f, g, spec)).get(0, sympy.S.Zero)


def jth_product(f, g, j: int, spec: BracketSpec) -> DiffPoly:
    """
    f_(j) g: j! times the λ^j coefficient for j ≥ 0, and (∂^k f)·g for
    j = −k−1 < 0.
    """
    if j < 0:
        return sympy.expand(total_derivative(normalize(f), -j - 1) * normalize(g))
    coefficient = lambda_coefficients(lambda_bracket(f, g, spec)).get(j, sympy.S.Zero)
    return sympy.expand(sympy.factorial(j) * coefficient)


def jacobiator(f, g, h, spec: BracketSpec) -> LambdaMuPoly:
    """{f_λ{g_μ h}} − {g_μ{f_λ h}} − {{f_λ g}_{λ+μ} h}, fully expanded."""
    first = lambda_bracket(f, lambda_bracket_mu(g, h, spec), spec, LAMBDA)
    second = lambda_bracket_mu(g, lambda_bracket(f, h, spec), spec)
    inner = lambda_bracket(f, g, spec, LAMBDA)
    third = lambda_bracket(inner, h, spec, NU).subs(NU, LAMBDA + MU)
    return sympy.expand(first - second - third)


# ---------------------------------------------------------------------
# Check reports
# ---------------------------------------------------------------------

@dataclass
class CheckReport:
    """
    Residuals of a family of identities.

    ``residuals`` keeps the raw value of each identity; ``reduced`` the value
    modulo the declared relations. The report succeeds iff every reduced
    residual is zero.
    """

    name: str
    residuals: dict[str, sympy.Expr] = field(default_factory=dict)
    reduced: dict[str, sympy.Expr] = field(default_factory=dict)
    sign: int | None = None
    notes: dict[str, str] = field(default_factory=dict)

    def add(self, label: str, value, relations: Iterable[ClosureRelation] = ()) -> sympy.Expr:
        value = sympy.expand(sympy.sympify(value))
        reduced = reduce_relations(value, relations)
        self.residuals[label] = value
        self.reduced[label] = reduced
        return reduced

    def merge(self, other: CheckReport, prefix: str | None = None) -> CheckReport:
        for label in other.residuals:
            key = f"{prefix}.{label}" if prefix else label
            self.residuals[key] = other.residuals[label]
            self.reduced[key] = other.reduced[label]
        self.notes.update(other.notes)
        if other.sign is not None:
            self.sign = other.sign
        return self

    @property
    def ok(self) -> bool:
        return all(value == 0 for value in self.reduced.values())

    def failures(self) -> list[str]:
        return [label for label, value in self.reduced.items() if value != 0]

    def first_failure(self) -> tuple[str, sympy.Expr] | None:
        failures = self.failures()
        return (failures[0], self.reduced[failures[0]]) if failures else None

    def to_dict(self, formatter: Callable[[sympy.Expr], str] = str) -> dict:
        return {
            "schema": 1,
            "name": self.name,
            "ok": self.ok,
            "sign": self.sign,
            "residuals": {
                label: {
                    "raw": formatter(self.residuals[label]),
                    "reduced": formatter(self.reduced[label]),
                    "zero": self.reduced[label] == 0,
                }
                for label in self.residuals
            },
            "notes": dict(self.notes),
        }

    def log(self) -> None:
        logger.info(f"check {self.name}: {len(self.failures())} residual(s) nonzero")


def run_checks(tasks: Sequence[Callable[[], tuple[str, sympy.Expr]]], report: CheckReport,
               relations: Iterable[ClosureRelation] = (), max_workers: int = 1) -> CheckReport:
    """Evaluate independent residual tasks, optionally on a thread pool."""
    relations = tuple(relations)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda task: task(), tasks))
    else:
        results = [task() for task in tasks]
    for label, value in results:
        report.add(label, value, relations)
    return report


# ---------------------------------------------------------------------
# Axiom checks
# ---------------------------------------------------------------------

def _sesquilinearity(f, g, spec):
    bracket = lambda_bracket(f, g, spec)
    left = lambda_bracket(total_derivative(f), g, spec) + LAMBDA * bracket
    right = lambda_bracket(f, total_derivative(g), spec) - from_coefficients(_shift(lambda_coefficients(bracket), 1))
    return left, right


def _skew_residual(f, g, spec):
    return lambda_bracket(f, g, spec) - skew(lambda_bracket(g, f, spec))


def _left_leibniz(f, g, h, spec):
    return (lambda_bracket(f, g * h, spec)
            - lambda_bracket(f, g, spec) * h - g * lambda_bracket(f, h, spec))


def _right_leibniz(f, g, h, spec):
    return (lambda_bracket(f * g, h, spec)
            - apply_shifted(lambda_bracket(f, h, spec), g)
            - apply_shifted(lambda_bracket(g, h, spec), f))


def _cyclic_triples(samples: Sequence) -> list[tuple]:
    count = len(samples)
    if count == 0:
        return []
    return [(samples[i], samples[(i + 1) % count], samples[(i + 2) % count]) for i in range(count)]


def check_axiom_suite(spec: BracketSpec, samples: Sequence, *, jacobi: bool = False,
                      max_workers: int = 1) -> CheckReport:
    """
    Sesquilinearity (both slots), skew-symmetry and both Leibniz rules on
    the cyclic pairs and triples of ``samples``; optionally the Jacobi identity.
    """
    samples = [normalize(sample) for sample in samples]
    tasks = []
    for index, (f, g, h) in enumerate(_cyclic_triples(samples)):
        tasks.extend([
            lambda f=f, g=g, index=index: (f"sesquilinearity.left[{index}]", _sesquilinearity(f, g, spec)[0]),
            lambda f=f, g=g, index=index: (f"sesquilinearity.right[{index}]", _sesquilinearity(f, g, spec)[1]),
            lambda f=f, g=g, index=index: (f"skew[{index}]", _skew_residual(f, g, spec)),
            lambda f=f, g=g, h=h, index=index: (f"leibniz.left[{index}]", _left_leibniz(f, g, h, spec)),
            lambda f=f, g=g, h=h, index=index: (f"leibniz.right[{index}]", _right_leibniz(f, g, h, spec)),
        ])
        if jacobi:
            tasks.append(lambda f=f, g=g, h=h, index=index: (f"jacobi[{index}]", jacobiator(f, g, h, spec)))

    report = run_checks(tasks, CheckReport("pva_axioms"), spec.relations, max_workers)
    report.log()
    return report


def check_jacobi_generators(spec: BracketSpec, generators: Sequence[str] | None = None) -> CheckReport:
    """Jacobiator on every ordered triple of generators; raw values keep the obstruction."""
    generators = tuple(generators or spec.generators)
    report = CheckReport("jacobi")
    for a, b, c in itertools.product(generators, repeat=3):
        report.add(f"jacobi[{a},{b},{c}]", jacobiator(jet(a), jet(b), jet(c), spec), spec.relations)
    report.log()
    return report


def check_translation_covariance(f, g, j: int, spec: BracketSpec) -> CheckReport:
    """(∂f)_(j)g = −j f_(j−1)g and f_(j)(∂g) = ∂(f_(j)g) + j f_(j−1)g, for j ≥ 0."""
    if j < 0:
        raise ValueError("Translation covariance is stated for non-negative products only")
    report = CheckReport("translation_covariance")
    df, dg = total_derivative(normalize(f)), total_derivative(normalize(g))
    previous = jth_product(f, g, j - 1, spec)
    report.add("left", jth_product(df, g, j, spec) + j * previous, spec.relations)
    report.add("right", jth_product(f, dg, j, spec) - total_derivative(jth_product(f, g, j, spec)) - j * previous,
               spec.relations)
    return report


def check_borcherds(f, g, h, m: int, n: int, p: int, spec: BracketSpec, *,
                    allow_negative: bool = False, window: int | None = None) -> CheckReport:
    """
    Residual of the Borcherds identity

        Σ_j (−1)^j C(n,j) [f_(m+n−j)(g_(p+j)h) − (−1)^n g_(n+p−j)(f_(m+j)h)]
            = Σ_j C(m,j) (f_(n+j)g)_(m+p−j) h

    The identity holds for m, n, p ≥ 0 in any Lie conformal algebra. With
    ``allow_negative`` the −k−1 products use the ∂-extension and the sums are
    cut at the window.
    """
    window = spec.max_lambda_degree if window is None else window
    if max(abs(m), abs(n), abs(p)) > window:
        raise TruncationError(f"Borcherds indices ({m}, {n}, {p}) exceed the window {window}")
    if min(m, n, p) < 0 and not allow_negative:
        raise ValueError("Negative Borcherds indices need allow_negative=True")

    def product(a, b, j):
        return jth_product(a, b, j, spec)

    def upper(k):
        return k if k >= 0 else window

    lhs = sympy.S.Zero
    for j in range(upper(n) + 1):
        coefficient = sympy.Integer(-1) ** j * sympy.binomial(n, j)
        if coefficient == 0:
            continue
        lhs += coefficient * (product(f, product(g, h, p + j), m + n - j)
                              - sympy.Integer(-1) ** n * product(g, product(f, h, m + j), n + p - j))
    rhs = sympy.S.Zero
    for j in range(upper(m) + 1):
        coefficient = sympy.binomial(m, j)
        if coefficient == 0:
            continue
        rhs += coefficient * product(product(f, g, n + j), h, m + p - j)

    report = CheckReport("borcherds")
    report.add(f"borcherds[{m},{n},{p}]", lhs - rhs, spec.relations)
    return report

"""
The H-twisted phase space of loops in an N-dimensional target.

- ``darboux_spec``: {x^i λ p_j} = δ^i_j, {x λ x} = 0, {p_i λ p_j} = −Σ_k H_ijk x^k'.
- ``as_function``: the current f_(ξ,α) = α_i x^i' + ξ^i p_i of a section of TE ⊕ T*E.
- ``geometric_dorfman``: ([ξ,χ], ℒ_ξβ − ι_χdα + H(ξ,χ,·)) on sections.
- ``verify_correspondence``: ⟦f_s, f_t⟧ = −f_⟦s,t⟧, f_(1) = σ·2⟨s,t⟩ and f_(j) = 0 for j ≥ 2.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import sympy

from ..algebra.brackets import DEFAULT_MAX_LAMBDA_DEGREE, BracketSpec, CheckReport, jth_product, skew_complete
from ..algebra.cdalg import from_spec, schwinger_coefficients
from ..algebra.diffpoly import coordinates, jet
from ..algebra.relations import (
    AtomTable,
    ClosureRelation,
    check_explicit_closure,
    exterior_components,
    reduce_relations,
    sort_with_sign,
)
from ..utils.errors import CoframeMismatchError
from ..utils.sampling import random_coefficient
from ..utils.types import IndexTuple
from .forms import (
    Coframe,
    DForm,
    VectorField,
    contract,
    exterior_derivative,
    flat_coframe,
    form_from_components,
    lie_bracket,
    lie_derivative,
)

logger = logging.getLogger(__name__)

COORDINATE = "x"
MOMENTUM = "p"

# Sign σ in f_(1)g = σ·2⟨s,t⟩ under the δ′ convention of the bracket engine
DEFAULT_SIGN = -1


# ---------------------------------------------------------------------
# Flux
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class Flux:
    """
    Antisymmetric 3-form components H_ijk over x1..xN.

    ``entries`` holds the increasing-index components; ``table`` is set for
    fully symbolic fluxes, whose closedness is a rewrite relation rather than
    an identity.
    """

    dim: int
    entries: Mapping[IndexTuple, sympy.Expr] = field(default_factory=dict)
    table: AtomTable | None = None
    closed: bool = True
    name: str = "H"

    def __post_init__(self):
        for indices in self.entries:
            if len(indices) != 3 or list(indices) != sorted(set(indices)):
                raise ValueError(f"Flux entries need increasing index triples, got {indices}")
            if not all(1 <= index <= self.dim for index in indices):
                raise ValueError(f"Flux index {indices} outside 1..{self.dim}")

    @property
    def coords(self) -> tuple[sympy.Symbol, ...]:
        return coordinates(COORDINATE, self.dim)

    def component(self, i: int, j: int, k: int) -> sympy.Expr:
        sign, ordered = sort_with_sign((i, j, k))
        if sign == 0:
            return sympy.S.Zero
        return sign * self.entries.get(ordered, sympy.S.Zero)

    def relations(self) -> tuple[ClosureRelation, ...]:
        if self.closed and self.table is not None:
            return (ClosureRelation(self.table),)
        return ()

    def obstruction(self) -> dict[IndexTuple, sympy.Expr]:
        """Components of dH, nonzero only when N ≥ 4."""
        return {J: v for J, v in exterior_components(self.entries, 3, self.coords).items() if v != 0}


def symbolic_flux(dim: int, name: str = "H", closed: bool = True) -> Flux:
    table = AtomTable(name, 3, coordinates(COORDINATE, dim))
    return Flux(dim, table.components(), table, closed, name)


def constant_flux(dim: int, values: Mapping[Sequence[int], object], closed: bool = True, name: str = "H") -> Flux:
    """Flux from explicit components (any index order); closed explicit data is verified."""
    entries: dict[IndexTuple, sympy.Expr] = {}
    for indices, value in values.items():
        sign, ordered = sort_with_sign(indices)
        if sign == 0:
            continue
        entries[ordered] = sympy.expand(entries.get(ordered, 0) + sign * sympy.sympify(value))
    flux = Flux(dim, {k: v for k, v in entries.items() if v != 0}, None, closed, name)
    if closed:
        check_explicit_closure(flux.entries, 3, flux.coords, name=name)
    return flux


def zero_flux(dim: int) -> Flux:
    return Flux(dim, {}, None, True)


def sigma_coframe(dim: int, flux: Flux | None = None) -> Coframe:
    relations = flux.relations() if flux is not None else ()
    return flat_coframe(coordinates(COORDINATE, dim), relations=relations, name=f"sigma{dim}")


def flux_form(flux: Flux, coframe: Coframe | None = None) -> DForm:
    coframe = coframe or sigma_coframe(flux.dim, flux)
    return form_from_components(coframe, flux.entries)


def darboux_spec(dim: int, flux: Flux | None = None,
                 max_lambda_degree: int = DEFAULT_MAX_LAMBDA_DEGREE) -> BracketSpec:
    """The generator table of the twisted phase-space bracket."""
    if dim < 1:
        raise ValueError("Dimension must be at least 1")
    if flux is not None and flux.dim != dim:
        raise ValueError(f"Flux of dimension {flux.dim} does not match N = {dim}")
    xs = [f"{COORDINATE}{i}" for i in range(1, dim + 1)]
    ps = [f"{MOMENTUM}{i}" for i in range(1, dim + 1)]
    entries: dict[tuple[str, str], sympy.Expr] = {}
    for i in range(1, dim + 1):
        entries[(xs[i - 1], ps[i - 1])] = sympy.S.One
    if flux is not None:
        for i, j in itertools.combinations(range(1, dim + 1), 2):
            value = -sum((flux.component(i, j, k) * jet(xs[k - 1], 1) for k in range(1, dim + 1)), sympy.S.Zero)
            if value != 0:
                entries[(ps[i - 1], ps[j - 1])] = value
    relations = flux.relations() if flux is not None else ()
    return skew_complete(xs + ps, entries, relations=relations, max_lambda_degree=max_lambda_degree)


# ---------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GenSection:
    """(ξ, α) ∈ Γ(TE ⊕ T*E) over a coframe."""

    xi: VectorField
    alpha: DForm

    def __post_init__(self):
        if self.xi.coframe is not self.alpha.coframe:
            raise CoframeMismatchError("Vector and form parts of a section live over different coframes")
        if not self.alpha.is_zero and self.alpha.degree() != 1:
            raise ValueError("The form part of a section must be a 1-form")

    @property
    def coframe(self) -> Coframe:
        return self.xi.coframe

    def __add__(self, other: GenSection) -> GenSection:
        return GenSection(self.xi + other.xi, self.alpha + other.alpha)

    def __neg__(self) -> GenSection:
        return GenSection(-self.xi, -self.alpha)

    def __sub__(self, other: GenSection) -> GenSection:
        return self + (-other)

    def __mul__(self, scalar) -> GenSection:
        return GenSection(self.xi * scalar, self.alpha * scalar)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, GenSection):
            return NotImplemented
        return self.xi == other.xi and self.alpha == other.alpha

    __hash__ = None

    def reduce(self) -> GenSection:
        return GenSection(self.xi.reduce(), self.alpha.reduce())


def section(coframe: Coframe, xi: Sequence = (), alpha: Sequence = ()) -> GenSection:
    """Section with components listed in coframe order (missing entries are zero)."""
    xi_field = VectorField.from_components(coframe, enumerate(xi))
    alpha_form = DForm.from_terms(coframe, [((a,), value) for a, value in enumerate(alpha)])
    return GenSection(xi_field, alpha_form)


def _check_sigma(coframe: Coframe) -> int:
    dim = len(coframe)
    expected = list(coordinates(COORDINATE, dim))
    if coframe.coordinates != expected:
        raise ValueError(f"Section coframe {coframe.name} is not the x1..x{dim} coordinate coframe")
    return dim


def as_function(s: GenSection) -> sympy.Expr:
    """f_(ξ,α) = Σ α_i x^i' + Σ ξ^i p_i."""
    dim = _check_sigma(s.coframe)
    value = sympy.S.Zero
    for i in range(dim):
        value += s.alpha.terms.get((i,), 0) * jet(f"{COORDINATE}{i + 1}", 1)
        value += s.xi.components.get(i, 0) * jet(f"{MOMENTUM}{i + 1}")
    return sympy.expand(value)


def _flux_as_form(flux, coframe: Coframe) -> DForm:
    if flux is None:
        return coframe.zero()
    if isinstance(flux, DForm):
        return flux
    return flux_form(flux, coframe)


def geometric_dorfman(s: GenSection, t: GenSection, flux: Flux | DForm | None = None) -> GenSection:
    """⟦(ξ,α),(χ,β)⟧_H = ([ξ,χ], ℒ_ξβ − ι_χ dα + ι_χ ι_ξ H)."""
    if s.coframe is not t.coframe:
        raise CoframeMismatchError("Sections live over different coframes")
    H = _flux_as_form(flux, s.coframe)
    vector = lie_bracket(s.xi, t.xi)
    form = (lie_derivative(s.xi, t.alpha) - contract(t.xi, exterior_derivative(s.alpha))
            + contract(t.xi, contract(s.xi, H)))
    return GenSection(vector, form)


def geometric_pairing(s: GenSection, t: GenSection) -> sympy.Expr:
    """½(ι_χ α + ι_ξ β)."""
    value = contract(t.xi, s.alpha).terms.get((), 0) + contract(s.xi, t.alpha).terms.get((), 0)
    return sympy.expand(sympy.Rational(1, 2) * value)


def is_isotropic(s: GenSection, t: GenSection) -> bool:
    return all(geometric_pairing(a, b) == 0 for a, b in ((s, s), (t, t), (s, t)))


def random_section(coframe: Coframe, rng: np.random.Generator, *, label: str = "s",
                   kind: str = "symbolic", density: float = 0.7) -> GenSection:
    """Section whose nonzero components are atoms (``symbolic``) or small polynomials."""
    coords = coframe.coordinates
    xi, alpha = [], []
    for a in range(len(coframe)):
        xi.append(random_coefficient(rng, coords, f"{label}x{a + 1}", kind) if rng.random() < density else 0)
        alpha.append(random_coefficient(rng, coords, f"{label}a{a + 1}", kind) if rng.random() < density else 0)
    return section(coframe, xi, alpha)


# ---------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------

def _detect_sign(value, target, relations) -> int | None:
    if reduce_relations(target, relations) == 0:
        return None
    for sign in (1, -1):
        if reduce_relations(value - sign * target, relations) == 0:
            return sign
    return None


def verify_correspondence(s: GenSection, t: GenSection, flux: Flux | None = None, j_max: int = 6, *,
                          sign: int | None = DEFAULT_SIGN) -> CheckReport:
    """
    ⟦f_s, f_t⟧ + f_⟦s,t⟧ (exact), f_(1) − σ·2⟨s,t⟩ and f_(j) for 2 ≤ j ≤ j_max.

    σ is ``sign``; with ``sign=None`` it is detected from this pair alone and
    the product-1 residual can no longer fail on a sign flip.
    """
    dim = _check_sigma(s.coframe)
    flux = flux or zero_flux(dim)
    spec = darboux_spec(dim, flux)
    f, g = as_function(s), as_function(t)
    report = CheckReport("as_correspondence")

    bracket = geometric_dorfman(s, t, flux)
    report.add("product0", jth_product(f, g, 0, spec) + as_function(bracket), spec.relations)

    first = jth_product(f, g, 1, spec)
    target = 2 * geometric_pairing(s, t)
    if sign is None:
        sign = _detect_sign(first, target, spec.relations)
    report.sign = sign
    report.add("product1", first - (sign if sign is not None else DEFAULT_SIGN) * target, spec.relations)

    for j in range(2, j_max + 1):
        report.add(f"product{j}", jth_product(f, g, j, spec), spec.relations)
    report.log()
    return report


def check_sign_constant(reports: Iterable[CheckReport]) -> int | None:
    """The common σ of several correspondence reports; ValueError if they disagree."""
    signs = {report.sign for report in reports if report.sign is not None}
    if len(signs) > 1:
        raise ValueError(f"The first-product sign is not constant across pairs: {sorted(signs)}")
    return signs.pop() if signs else None


def check_dirac_anomaly(pairs: Iterable[tuple[GenSection, GenSection]], flux: Flux | None = None,
                        j_max: int = 4) -> CheckReport:
    """Schwinger coefficients of pointwise-isotropic pairs; all vanish on Dirac-type samples."""
    report = CheckReport("dirac_anomaly")
    for index, (s, t) in enumerate(pairs):
        if not is_isotropic(s, t):
            raise ValueError(f"Pair {index} is not pointwise isotropic")
        dim = _check_sigma(s.coframe)
        cd = from_spec(darboux_spec(dim, flux or zero_flux(dim)))
        for j, value in enumerate(schwinger_coefficients(as_function(s), as_function(t), cd, j_max), start=1):
            report.add(f"C{j}[{index}]", value, cd.spec.relations)
    report.log()
    return report

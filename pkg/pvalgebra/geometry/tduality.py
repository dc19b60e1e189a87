"""
T-duality of circle bundles in the invariant frame calculus.

A dual pair is described over base coordinates y1..yn by

- E with coframe (dy, A), dA = F, and Ê with coframe (dy, Â), dÂ = F̂;
- a base 3-form Ω with dΩ = F∧F̂;
- the fluxes H = Ω − A∧F̂ on E and Ĥ = Ω − F∧Â on Ê.

Invariant sections are quadruples (ξ, ξ_w, α, α_p) read as
ξ^μ h_μ + ξ_w e ⊕ α_μ dy^μ + α_p A, and invariant forms are pairs (α, β) read
as α + A∧β. The swap ``psi`` exchanges ξ_w and α_p; ``t_transform`` sends
α + A∧β to β − Â∧α.

Fibre coordinates never appear: every coefficient is a function of y.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import sympy

from ..algebra.brackets import CheckReport
from ..algebra.diffpoly import atom, coordinates
from ..algebra.relations import AtomTable, ClosureRelation, check_explicit_closure, sort_with_sign
from ..utils.errors import CoframeMismatchError, RelationError
from ..utils.sampling import random_coefficient
from ..utils.types import IndexTuple
from .forms import (
    Coframe,
    CoframeGenerator,
    DForm,
    VectorField,
    contract,
    exterior_derivative,
    flat_coframe,
    form_from_components,
    pullback,
    twisted_derivative,
    wedge,
)
from .sigma import Flux, GenSection, flux_form, geometric_dorfman, geometric_pairing

logger = logging.getLogger(__name__)

BASE_COORDINATE = "y"
SYMBOLIC = "symbolic"

# Component types of an invariant section
COMPONENTS = ("xi", "xiw", "alpha", "alphap")


# ---------------------------------------------------------------------
# Dual pairs
# ---------------------------------------------------------------------

def _table_entries(spec, name: str, rank: int, coords) -> tuple[dict[IndexTuple, sympy.Expr], AtomTable | None]:
    if isinstance(spec, str):
        if spec != SYMBOLIC:
            raise ValueError(f"Table {name} must be '{SYMBOLIC}', omitted or a component mapping, got {spec!r}")
        table = AtomTable(name, rank, tuple(coords))
        return table.components(), table
    entries: dict[IndexTuple, sympy.Expr] = {}
    for indices, value in (spec or {}).items():
        indices = tuple(indices)
        if len(indices) != rank or not all(1 <= index <= len(coords) for index in indices):
            raise ValueError(f"Table {name} of rank {rank} got indices {indices}")
        sign, ordered = sort_with_sign(indices)
        if sign:
            entries[ordered] = sympy.expand(entries.get(ordered, 0) + sign * sympy.sympify(value))
    return {k: v for k, v in entries.items() if v != 0}, None


def _four_form_components(F: Mapping, Fhat: Mapping, base: Coframe) -> dict[IndexTuple, sympy.Expr]:
    product = wedge(form_from_components(base, F), form_from_components(base, Fhat))
    return {tuple(i + 1 for i in indices): value for indices, value in product.terms.items()}


def _bundle_coframe(name: str, coords, vertical: str, frame: str, curvature: Mapping, relations) -> Coframe:
    generators = tuple(CoframeGenerator(f"d{c}", f"h{i}", c) for i, c in enumerate(coords, start=1))
    generators += (CoframeGenerator(vertical, frame),)
    differential = {(a - 1, b - 1): value for (a, b), value in curvature.items()}
    return Coframe(name, generators, {vertical: differential}, tuple(relations))


@dataclass(eq=False)
class DualPair:
    """A T-dual pair of circle bundles with fluxes, over an n-dimensional base."""

    n: int
    F: Mapping[IndexTuple, sympy.Expr]
    Fhat: Mapping[IndexTuple, sympy.Expr]
    Omega: Mapping[IndexTuple, sympy.Expr]
    relations: tuple[ClosureRelation, ...]
    base: Coframe
    E: Coframe
    Ehat: Coframe
    doubled: Coframe
    H: DForm
    Hhat: DForm
    parameters: tuple[sympy.Symbol, ...] = field(default_factory=tuple)

    @property
    def coords(self) -> tuple[sympy.Symbol, ...]:
        return coordinates(BASE_COORDINATE, self.n)

    def check(self) -> CheckReport:
        """dH, dĤ and the correspondence relation, all modulo the pair's relations."""
        report = CheckReport("dual_pair")
        report.add("dH", exterior_derivative(self.H).as_expr(), self.relations)
        report.add("dHhat", exterior_derivative(self.Hhat).as_expr(), self.relations)
        report.add("correspondence", correspondence_residual(self).as_expr(), self.relations)
        return report


def build_pair(n: int, F=SYMBOLIC, Fhat=SYMBOLIC, Omega=SYMBOLIC,
               parameters: Iterable[sympy.Symbol] = ()) -> DualPair:
    """
    Assemble a dual pair. Each of ``F``, ``Fhat`` and ``Omega`` is ``"symbolic"``
    (an antisymmetric atom table with its closedness relation declared), None
    (zero) or a mapping of index tuples to explicit components, which must
    satisfy dF = dF̂ = 0 and dΩ = F∧F̂.
    """
    if n < 1:
        raise ValueError("Base dimension must be at least 1")
    coords = coordinates(BASE_COORDINATE, n)
    base = flat_coframe(coords, name=f"base{n}")

    F_entries, F_table = _table_entries(F, "F", 2, coords)
    Fhat_entries, Fhat_table = _table_entries(Fhat, "Fhat", 2, coords)
    Omega_entries, Omega_table = _table_entries(Omega, "Omega", 3, coords)

    relations: list[ClosureRelation] = []
    for entries, table, name in ((F_entries, F_table, "F"), (Fhat_entries, Fhat_table, "Fhat")):
        if table is not None:
            relations.append(ClosureRelation(table))
        else:
            check_explicit_closure(entries, 2, coords, name=name)
    rhs = _four_form_components(F_entries, Fhat_entries, base)
    if Omega_table is not None:
        relations.append(ClosureRelation(Omega_table, rhs))
    else:
        check_explicit_closure(Omega_entries, 3, coords, rhs=rhs, relations=relations, name="Omega")
    relations = tuple(relations)

    E = _bundle_coframe(f"E{n}", coords, "A", "e", F_entries, relations)
    Ehat = _bundle_coframe(f"Ehat{n}", coords, "Ahat", "ehat", Fhat_entries, relations)
    doubled_generators = E.generators + (Ehat.generators[-1],)
    doubled = Coframe(f"EE{n}", doubled_generators,
                      {"A": E.differentials["A"], "Ahat": Ehat.differentials["Ahat"]}, relations)

    def flux(coframe: Coframe, vertical: str, curvature: Mapping, vertical_first: bool) -> DForm:
        omega = form_from_components(coframe, Omega_entries)
        curved = form_from_components(coframe, curvature)
        if vertical_first:
            return omega - wedge(coframe.generator(vertical), curved)
        return omega - wedge(curved, coframe.generator(vertical))

    H = flux(E, "A", Fhat_entries, True)
    Hhat = flux(Ehat, "Ahat", F_entries, False)
    pair = DualPair(n, F_entries, Fhat_entries, Omega_entries, relations, base, E, Ehat, doubled,
                    H, Hhat, tuple(parameters))

    report = pair.check()
    if not report.ok:
        label, value = report.first_failure()
        logger.warning(f"Dual pair fails {label}: {value}")
        raise RelationError(f"The dual pair data violates {label}: {value}")
    logger.debug(f"Built dual pair over base dimension {n}")
    return pair


def correspondence_residual(pair: DualPair) -> DForm:
    """p*H − p̂*Ĥ − d(A∧Â) on the doubled coframe."""
    doubled = pair.doubled
    potential = wedge(doubled.generator("A"), doubled.generator("Ahat"))
    return pullback(pair.H, doubled) - pullback(pair.Hhat, doubled) - exterior_derivative(potential)


# ---------------------------------------------------------------------
# Invariant sections and forms
# ---------------------------------------------------------------------

def _scalars(values: Sequence, n: int, label: str) -> tuple[sympy.Expr, ...]:
    values = tuple(sympy.sympify(v) for v in values) if values else (sympy.S.Zero,) * n
    if len(values) != n:
        raise ValueError(f"{label} needs {n} components, got {len(values)}")
    return tuple(sympy.expand(v) for v in values)


@dataclass(frozen=True)
class InvariantSection:
    """(ξ, ξ_w, α, α_p): ξ^μ h_μ + ξ_w e ⊕ α_μ dy^μ + α_p A."""

    xi: tuple[sympy.Expr, ...]
    xiw: sympy.Expr
    alpha: tuple[sympy.Expr, ...]
    alphap: sympy.Expr

    @classmethod
    def make(cls, n: int, xi: Sequence = (), xiw=0, alpha: Sequence = (), alphap=0) -> InvariantSection:
        return cls(_scalars(xi, n, "xi"), sympy.expand(sympy.sympify(xiw)),
                   _scalars(alpha, n, "alpha"), sympy.expand(sympy.sympify(alphap)))

    @property
    def n(self) -> int:
        return len(self.xi)

    def __add__(self, other: InvariantSection) -> InvariantSection:
        return InvariantSection.make(self.n, [a + b for a, b in zip(self.xi, other.xi)], self.xiw + other.xiw,
                                     [a + b for a, b in zip(self.alpha, other.alpha)], self.alphap + other.alphap)

    def __neg__(self) -> InvariantSection:
        return InvariantSection.make(self.n, [-a for a in self.xi], -self.xiw, [-a for a in self.alpha],
                                     -self.alphap)

    def __sub__(self, other: InvariantSection) -> InvariantSection:
        return self + (-other)

    def as_expr(self) -> sympy.Expr:
        value = self.xiw * sympy.Symbol("e") + self.alphap * sympy.Symbol("A")
        for mu in range(self.n):
            value += self.xi[mu] * sympy.Symbol(f"h{mu + 1}") + self.alpha[mu] * sympy.Symbol(f"dy{mu + 1}")
        return sympy.expand(value)


def psi(s: InvariantSection) -> InvariantSection:
    """(ξ, ξ_w, α, α_p) ↦ (ξ, α_p, α, ξ_w)."""
    return InvariantSection(s.xi, s.alphap, s.alpha, s.xiw)


@dataclass(frozen=True, eq=False)
class InvariantForm:
    """α + A∧β with α, β forms on the base."""

    alpha: DForm
    beta: DForm

    def __post_init__(self):
        if self.alpha.coframe is not self.beta.coframe:
            raise CoframeMismatchError("Both parts of an invariant form must live on the same base")

    @property
    def base(self) -> Coframe:
        return self.alpha.coframe

    def parity_twist(self) -> InvariantForm:
        """(−1)^deg on the total form: α_d ↦ (−1)^d α_d, β_d ↦ (−1)^{d+1} β_d."""
        return InvariantForm(self.alpha.parity_twist(), -self.beta.parity_twist())

    def __add__(self, other: InvariantForm) -> InvariantForm:
        return InvariantForm(self.alpha + other.alpha, self.beta + other.beta)

    def __neg__(self) -> InvariantForm:
        return InvariantForm(-self.alpha, -self.beta)

    def __sub__(self, other: InvariantForm) -> InvariantForm:
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvariantForm):
            return NotImplemented
        return self.alpha == other.alpha and self.beta == other.beta

    __hash__ = None


def t_transform(omega: InvariantForm) -> InvariantForm:
    """T(α + A∧β) = β − Â∧α."""
    return InvariantForm(omega.beta, -omega.alpha)


def t_transform_twisted(omega: InvariantForm) -> InvariantForm:
    """T̃ω = (−1)^{deg ω} Tω, degree by degree."""
    return t_transform(omega.parity_twist())


def _vertical(coframe: Coframe) -> int:
    return len(coframe) - 1


def section_on(s: InvariantSection, coframe: Coframe) -> GenSection:
    """The section over E or Ê; the vertical generator is the last one of the coframe."""
    v = _vertical(coframe)
    if v != s.n:
        raise CoframeMismatchError(f"Section over base dimension {s.n} does not fit coframe {coframe.name}")
    xi = VectorField.from_components(coframe, [*enumerate(s.xi), (v, s.xiw)])
    alpha = DForm.from_terms(coframe, [*(((mu,), a) for mu, a in enumerate(s.alpha)), ((v,), s.alphap)])
    return GenSection(xi, alpha)


def form_on(omega: InvariantForm, coframe: Coframe) -> DForm:
    v = _vertical(coframe)
    if len(omega.base) != v:
        raise CoframeMismatchError(f"Invariant form over {omega.base.name} does not fit coframe {coframe.name}")
    return pullback(omega.alpha, coframe) + wedge(coframe.generator(coframe.names[v]),
                                                  pullback(omega.beta, coframe))


def to_total(item, pair: DualPair):
    """Invariant section or form as an object on E."""
    if isinstance(item, InvariantSection):
        return section_on(item, pair.E)
    return form_on(item, pair.E)


def to_dual(item, pair: DualPair):
    """Invariant section or form as an object on Ê."""
    if isinstance(item, InvariantSection):
        return section_on(item, pair.Ehat)
    return form_on(item, pair.Ehat)


def split_form(form: DForm, base: Coframe) -> InvariantForm:
    """Inverse of ``form_on``: α + V∧β from a form on E or Ê."""
    v = _vertical(form.coframe)
    alpha, beta = [], []
    for indices, value in form.terms.items():
        if v in indices:
            rest = tuple(i for i in indices if i != v)
            # dy^I∧V = (−1)^{|I|} V∧dy^I
            beta.append((rest, (-1) ** len(rest) * value))
        else:
            alpha.append((indices, value))
    return InvariantForm(DForm.from_terms(base, alpha), DForm.from_terms(base, beta))


def split_section(s: GenSection) -> InvariantSection:
    v = _vertical(s.coframe)
    return InvariantSection.make(
        v,
        [s.xi.components.get(mu, 0) for mu in range(v)],
        s.xi.components.get(v, 0),
        [s.alpha.terms.get((mu,), 0) for mu in range(v)],
        s.alpha.terms.get((v,), 0),
    )


def split(item, pair: DualPair):
    if isinstance(item, GenSection):
        return split_section(item)
    return split_form(item, pair.base)


def invariant_pairing(s: InvariantSection, t: InvariantSection, pair: DualPair) -> sympy.Expr:
    return geometric_pairing(to_total(s, pair), to_total(t, pair))


# ---------------------------------------------------------------------
# Clifford action
# ---------------------------------------------------------------------

def clifford_act(s: GenSection | InvariantSection, omega: DForm) -> DForm:
    """(ξ, α)·ω = ι_ξ ω + α∧ω."""
    if isinstance(s, InvariantSection):
        s = section_on(s, omega.coframe)
    return contract(s.xi, omega) + wedge(s.alpha, omega)


def clifford_check(s: GenSection | InvariantSection, omega: DForm,
                   relations: Iterable[ClosureRelation] | None = None) -> CheckReport:
    """s·(s·ω) − ⟨s,s⟩ω."""
    if isinstance(s, InvariantSection):
        s = section_on(s, omega.coframe)
    relations = omega.coframe.relations if relations is None else tuple(relations)
    report = CheckReport("clifford")
    residual = clifford_act(s, clifford_act(s, omega)) - geometric_pairing(s, s) * omega
    report.add("clifford", residual.as_expr(), relations)
    return report


# ---------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------

def _detect_sign(lhs: DForm, rhs: DForm, relations) -> int | None:
    if (rhs.reduce(relations)).is_zero:
        return None
    for sign in (1, -1):
        if (lhs - sign * rhs).reduce(relations).is_zero:
            return sign
    return None


def verify_intertwine(pair: DualPair, omega: InvariantForm) -> CheckReport:
    """T(d_H ω) + d_Ĥ(T ω) on Ê."""
    report = CheckReport("intertwine")
    twisted = twisted_derivative(pair.H, to_total(omega, pair))
    lhs = to_dual(t_transform(split(twisted, pair)), pair)
    rhs = twisted_derivative(pair.Hhat, to_dual(t_transform(omega), pair))
    report.add("intertwine", (lhs + rhs).as_expr(), pair.relations)
    report.log()
    return report


def verify_commute(pair: DualPair, s: InvariantSection, omega: InvariantForm) -> CheckReport:
    """
    T(s·ω) against Ψ(s)·T(ω). The sign relating the two is detected and
    reported; the parity-twisted transform must satisfy the identity exactly.
    """
    report = CheckReport("commute")
    acted = split(clifford_act(s, to_total(omega, pair)), pair)
    lhs = to_dual(t_transform(acted), pair)
    rhs = clifford_act(psi(s), to_dual(t_transform(omega), pair))
    sign = _detect_sign(lhs, rhs, pair.relations)
    report.sign = sign
    report.add("commute", (lhs - (sign if sign is not None else -1) * rhs).as_expr(), pair.relations)

    twisted_lhs = to_dual(t_transform_twisted(acted), pair)
    twisted_rhs = clifford_act(psi(s), to_dual(t_transform_twisted(omega), pair))
    report.add("commute_twisted", (twisted_lhs - twisted_rhs).as_expr(), pair.relations)
    report.log()
    return report


def _background(background, coframe: Coframe) -> DForm:
    if background is None:
        return coframe.zero()
    if isinstance(background, DualPair):
        return background.H if coframe is background.E else background.Hhat
    if isinstance(background, Flux):
        return flux_form(background, coframe)
    return background


def derived_bracket_check(background, s, t, omega: DForm) -> CheckReport:
    """
    ⟦s,t⟧_H·ω − [[d_H, s·], t·]ω with graded commutators: [d_H, s·] is the
    anticommutator of two odd operators and the outer bracket a commutator.
    """
    coframe = omega.coframe
    if isinstance(s, InvariantSection):
        s, t = section_on(s, coframe), section_on(t, coframe)
    H = _background(background, coframe)

    def inner(form: DForm) -> DForm:
        return twisted_derivative(H, clifford_act(s, form)) + clifford_act(s, twisted_derivative(H, form))

    nested = inner(clifford_act(t, omega)) - clifford_act(t, inner(omega))
    direct = clifford_act(geometric_dorfman(s, t, H), omega)
    report = CheckReport("derived_bracket")
    report.add("derived_bracket", (direct - nested).as_expr(), coframe.relations)
    report.log()
    return report


def verify_tduality_theorem(pair: DualPair, s: InvariantSection, t: InvariantSection) -> CheckReport:
    """Ψ⟦s,t⟧_H − ⟦Ψs,Ψt⟧_Ĥ and ⟨s,t⟩ − ⟨Ψs,Ψt⟩."""
    report = CheckReport("tduality")
    bracket = split(geometric_dorfman(to_total(s, pair), to_total(t, pair), pair.H), pair)
    dual = split(geometric_dorfman(to_dual(psi(s), pair), to_dual(psi(t), pair), pair.Hhat), pair)
    report.add("bracket", (psi(bracket) - dual).as_expr(), pair.relations)
    pairing = geometric_pairing(to_dual(psi(s), pair), to_dual(psi(t), pair))
    report.add("pairing", invariant_pairing(s, t, pair) - pairing, pair.relations)
    report.log()
    return report


def clifford_route_check(pair: DualPair, s: InvariantSection, t: InvariantSection,
                         omega: InvariantForm) -> CheckReport:
    """T̃(⟦s,t⟧_H·ω) − ⟦Ψs,Ψt⟧_Ĥ·T̃ω, the bracket duality read through the spinor module."""
    report = CheckReport("clifford_route")
    bracket = geometric_dorfman(to_total(s, pair), to_total(t, pair), pair.H)
    lhs = to_dual(t_transform_twisted(split(clifford_act(bracket, to_total(omega, pair)), pair)), pair)
    dual = geometric_dorfman(to_dual(psi(s), pair), to_dual(psi(t), pair), pair.Hhat)
    rhs = clifford_act(dual, to_dual(t_transform_twisted(omega), pair))
    report.add("clifford_route", (lhs - rhs).as_expr(), pair.relations)
    return report


# ---------------------------------------------------------------------
# Sampling and exhaustive sweeps
# ---------------------------------------------------------------------

def symbolic_section(pair: DualPair, label: str, components: Iterable[str] = COMPONENTS) -> InvariantSection:
    """Section whose selected component types carry opaque coefficient atoms."""
    components = set(components)
    unknown = components - set(COMPONENTS)
    if unknown:
        raise ValueError(f"Unknown section components {sorted(unknown)}")
    coords = pair.coords
    n = pair.n
    return InvariantSection.make(
        n,
        [atom(f"{label}xi{mu}", coords) if "xi" in components else 0 for mu in range(1, n + 1)],
        atom(f"{label}w", coords) if "xiw" in components else 0,
        [atom(f"{label}a{mu}", coords) if "alpha" in components else 0 for mu in range(1, n + 1)],
        atom(f"{label}p", coords) if "alphap" in components else 0,
    )


def random_invariant_section(rng: np.random.Generator, pair: DualPair, label: str = "s",
                             kind: str = "symbolic", density: float = 0.7) -> InvariantSection:
    coords = pair.coords

    def draw(name):
        return random_coefficient(rng, coords, f"{label}{name}", kind) if rng.random() < density else 0

    return InvariantSection.make(pair.n, [draw(f"xi{mu}") for mu in range(1, pair.n + 1)], draw("w"),
                                 [draw(f"a{mu}") for mu in range(1, pair.n + 1)], draw("p"))


def invariant_form_basis(pair: DualPair, degree: int, label: str = "w") -> list[InvariantForm]:
    """
    One invariant form per coframe monomial of total degree ``degree``, each
    carrying its own coefficient atom: dy^I (|I| = degree) and A∧dy^J (|J| = degree − 1).
    """
    base, coords = pair.base, pair.coords
    forms = []
    for indices in itertools.combinations(range(pair.n), degree):
        name = f"{label}{''.join(str(i + 1) for i in indices) or '0'}"
        forms.append(InvariantForm(DForm.from_terms(base, [(indices, atom(name, coords))]), base.zero()))
    if degree >= 1:
        for indices in itertools.combinations(range(pair.n), degree - 1):
            name = f"{label}A{''.join(str(i + 1) for i in indices)}"
            forms.append(InvariantForm(base.zero(), DForm.from_terms(base, [(indices, atom(name, coords))])))
    return forms


def exhaustive_theorem_cases(pair: DualPair) -> CheckReport:
    """The theorem on all 16 pairs of single-component-type sections with symbolic coefficients."""
    report = CheckReport("tduality_exhaustive")
    for left, right in itertools.product(COMPONENTS, repeat=2):
        s = symbolic_section(pair, "s", [left])
        t = symbolic_section(pair, "t", [right])
        report.merge(verify_tduality_theorem(pair, s, t), prefix=f"{left}.{right}")
    report.log()
    return report


def exhaustive_intertwine(pair: DualPair, max_degree: int | None = None) -> CheckReport:
    """Intertwining on every basis form of each degree up to n + 1."""
    max_degree = pair.n + 1 if max_degree is None else max_degree
    report = CheckReport("intertwine_exhaustive")
    for degree in range(max_degree + 1):
        for index, omega in enumerate(invariant_form_basis(pair, degree)):
            report.merge(verify_intertwine(pair, omega), prefix=f"deg{degree}[{index}]")
    report.log()
    return report

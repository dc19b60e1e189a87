"""
Exterior algebra over a declared coframe.

A ``Coframe`` lists 1-form generators θ^a. Each generator has a dual frame
field X_a and an assigned differential dθ^a (a 2-form over the same coframe).
A generator attached to a base coordinate has a frame field acting on
coefficients as the partial derivative in that coordinate; a vertical
generator (for example the connection form A) has a frame field that kills
base functions.

Coefficients are differential polynomials in the sense of ``algebra.diffpoly``
whose atoms depend on the base coordinates only.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import sympy

from ..algebra.relations import ClosureRelation, reduce_relations, sort_with_sign
from ..utils.errors import CoframeMismatchError
from ..utils.types import IndexTuple

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoframeGenerator:
    """θ^a with its dual frame field name and, for horizontal generators, the coordinate."""

    name: str
    frame: str
    coordinate: sympy.Symbol | None = None


@dataclass(eq=False)
class Coframe:
    """
    Ordered 1-form generators with assigned differentials.

    ``differentials`` maps a generator name to the terms of its 2-form
    {(a, b): coefficient} over generator positions; generators not listed
    are closed.
    """

    name: str
    generators: tuple[CoframeGenerator, ...]
    differentials: Mapping[str, Mapping[IndexTuple, sympy.Expr]] = field(default_factory=dict)
    relations: tuple[ClosureRelation, ...] = ()

    def __post_init__(self):
        names = [generator.name for generator in self.generators]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate coframe generators {names}")
        unknown = set(self.differentials) - set(names)
        if unknown:
            raise ValueError(f"Differentials given for undeclared generators {sorted(unknown)}")

    def __len__(self) -> int:
        return len(self.generators)

    @property
    def names(self) -> list[str]:
        return [generator.name for generator in self.generators]

    @property
    def frames(self) -> list[str]:
        return [generator.frame for generator in self.generators]

    @property
    def coordinates(self) -> list[sympy.Symbol]:
        return [g.coordinate for g in self.generators if g.coordinate is not None]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"Coframe {self.name} has no generator {name}") from None

    def frame_index(self, frame: str) -> int:
        try:
            return self.frames.index(frame)
        except ValueError:
            raise KeyError(f"Coframe {self.name} has no frame field {frame}") from None

    def zero(self) -> DForm:
        return DForm(self, {})

    def scalar(self, value) -> DForm:
        return DForm.from_terms(self, [((), value)])

    def generator(self, name: str) -> DForm:
        return DForm(self, {(self.index(name),): sympy.S.One})

    def frame(self, name: str) -> VectorField:
        return VectorField(self, {self.frame_index(name): sympy.S.One})

    def differential(self, position: int) -> DForm:
        terms = self.differentials.get(self.generators[position].name, {})
        return DForm.from_terms(self, terms.items())

    def apply_frame(self, position: int, value) -> sympy.Expr:
        """X_a acting on a coefficient function."""
        coordinate = self.generators[position].coordinate
        if coordinate is None:
            return sympy.S.Zero
        return sympy.expand(sympy.diff(value, coordinate))

    def structure_functions(self) -> dict[tuple[int, int], dict[int, sympy.Expr]]:
        """[X_a, X_b] = Σ_c C^c_ab X_c with C^c_ab = −dθ^c(X_a, X_b), for a < b."""
        result: dict[tuple[int, int], dict[int, sympy.Expr]] = {}
        for c in range(len(self)):
            for (a, b), value in self.differential(c).terms.items():
                result.setdefault((a, b), {})[c] = sympy.expand(-value)
        return result

    def check_closed(self) -> dict[str, DForm]:
        """d(dθ^a) for every generator, reduced by the relations; all zero on a consistent coframe."""
        return {g.name: exterior_derivative(self.differential(i)).reduce()
                for i, g in enumerate(self.generators)}


def _require_same(*items) -> Coframe:
    coframe = items[0].coframe
    for item in items[1:]:
        if item.coframe is not coframe:
            raise CoframeMismatchError(f"Operands live over coframes {coframe.name} and {item.coframe.name}")
    return coframe


# ---------------------------------------------------------------------
# Forms
# ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DForm:
    """Sum of coefficient × increasing wedge monomial of coframe generators."""

    coframe: Coframe
    terms: Mapping[IndexTuple, sympy.Expr] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, coframe: Coframe, items: Iterable[tuple[Sequence[int], object]]) -> DForm:
        merged: dict[IndexTuple, sympy.Expr] = {}
        for indices, coefficient in items:
            sign, ordered = sort_with_sign(indices)
            if sign == 0:
                continue
            merged[ordered] = merged.get(ordered, sympy.S.Zero) + sign * sympy.sympify(coefficient)
        terms = {key: sympy.expand(value) for key, value in merged.items()}
        return cls(coframe, {key: value for key, value in terms.items() if value != 0})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {len(indices) for indices in self.terms}

    def degree(self) -> int:
        degrees = self.degrees()
        if len(degrees) > 1:
            raise ValueError(f"Form is not homogeneous: degrees {sorted(degrees)}")
        return degrees.pop() if degrees else 0

    def homogeneous_part(self, degree: int) -> DForm:
        return DForm(self.coframe, {k: v for k, v in self.terms.items() if len(k) == degree})

    def component(self, *names: str) -> sympy.Expr:
        positions = [self.coframe.index(name) for name in names]
        sign, ordered = sort_with_sign(positions)
        return sign * self.terms.get(ordered, sympy.S.Zero)

    def map_coefficients(self, function) -> DForm:
        return DForm.from_terms(self.coframe, [(k, function(v)) for k, v in self.terms.items()])

    def reduce(self, relations: Iterable[ClosureRelation] | None = None) -> DForm:
        relations = self.coframe.relations if relations is None else tuple(relations)
        return self.map_coefficients(lambda value: reduce_relations(value, relations))

    def subs(self, mapping) -> DForm:
        return self.map_coefficients(lambda value: sympy.sympify(value).subs(mapping))

    def parity_twist(self) -> DForm:
        """(−1)^{deg} on each homogeneous part."""
        return DForm(self.coframe, {k: (-1) ** len(k) * v for k, v in self.terms.items()})

    def as_expr(self) -> sympy.Expr:
        """Coefficients attached to one placeholder symbol per monomial, for reports."""
        value = sympy.S.Zero
        for indices, coefficient in self.terms.items():
            label = "^".join(self.coframe.names[i] for i in indices) or "1"
            value += coefficient * (sympy.Symbol(label) if indices else 1)
        return sympy.expand(value)

    def __add__(self, other) -> DForm:
        other = self._coerce(other)
        _require_same(self, other)
        return DForm.from_terms(self.coframe, [*self.terms.items(), *other.terms.items()])

    __radd__ = __add__

    def __neg__(self) -> DForm:
        return DForm(self.coframe, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other) -> DForm:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> DForm:
        return self._coerce(other) - self

    def __mul__(self, other) -> DForm:
        if isinstance(other, DForm):
            return wedge(self, other)
        return self.map_coefficients(lambda value: value * other)

    def __rmul__(self, other) -> DForm:
        return self.map_coefficients(lambda value: other * value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DForm | int | sympy.Expr):
            return NotImplemented
        other = self._coerce(other)
        return self.coframe is other.coframe and (self - other).is_zero

    __hash__ = None

    def _coerce(self, other) -> DForm:
        if isinstance(other, DForm):
            return other
        return self.coframe.scalar(other)

    def __repr__(self) -> str:
        return f"DForm({self.coframe.name}: {self.as_expr()})"


@dataclass(frozen=True, eq=False)
class VectorField:
    """Σ_a X^a X_a with coefficient functions of the base coordinates."""

    coframe: Coframe
    components: Mapping[int, sympy.Expr] = field(default_factory=dict)

    @classmethod
    def from_components(cls, coframe: Coframe, items: Iterable[tuple[int, object]]) -> VectorField:
        merged: dict[int, sympy.Expr] = {}
        for position, value in items:
            merged[position] = merged.get(position, sympy.S.Zero) + sympy.sympify(value)
        return cls(coframe, {k: sympy.expand(v) for k, v in merged.items() if sympy.expand(v) != 0})

    def component(self, frame: str) -> sympy.Expr:
        return self.components.get(self.coframe.frame_index(frame), sympy.S.Zero)

    def apply(self, value) -> sympy.Expr:
        """X(f) on a coefficient function."""
        return sympy.expand(sum((c * self.coframe.apply_frame(a, value) for a, c in self.components.items()),
                                sympy.S.Zero))

    @property
    def is_zero(self) -> bool:
        return not self.components

    def map_coefficients(self, function) -> VectorField:
        return VectorField.from_components(self.coframe, [(k, function(v)) for k, v in self.components.items()])

    def reduce(self, relations: Iterable[ClosureRelation] | None = None) -> VectorField:
        relations = self.coframe.relations if relations is None else tuple(relations)
        return self.map_coefficients(lambda value: reduce_relations(value, relations))

    def __add__(self, other: VectorField) -> VectorField:
        _require_same(self, other)
        return VectorField.from_components(self.coframe, [*self.components.items(), *other.components.items()])

    def __neg__(self) -> VectorField:
        return VectorField(self.coframe, {k: -v for k, v in self.components.items()})

    def __sub__(self, other: VectorField) -> VectorField:
        return self + (-other)

    def __mul__(self, scalar) -> VectorField:
        return self.map_coefficients(lambda value: value * scalar)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.coframe is other.coframe and (self - other).is_zero

    __hash__ = None

    def as_expr(self) -> sympy.Expr:
        return sympy.expand(sum((c * sympy.Symbol(self.coframe.frames[a]) for a, c in self.components.items()),
                                sympy.S.Zero))

    def __repr__(self) -> str:
        return f"VectorField({self.coframe.name}: {self.as_expr()})"


# ---------------------------------------------------------------------
# Cartan calculus
# ---------------------------------------------------------------------

def wedge(*forms: DForm) -> DForm:
    """Exterior product of one or more forms over the same coframe."""
    if not forms:
        raise ValueError("wedge needs at least one form")
    result = forms[0]
    for other in forms[1:]:
        coframe = _require_same(result, other)
        items = []
        for (left, a), (right, b) in ((x, y) for x in result.terms.items() for y in other.terms.items()):
            if set(left) & set(right):
                continue
            items.append((left + right, a * b))
        result = DForm.from_terms(coframe, items)
    return result


def _d_coefficient(coframe: Coframe, value) -> DForm:
    return DForm.from_terms(coframe, [((a,), coframe.apply_frame(a, value)) for a in range(len(coframe))])


def exterior_derivative(form: DForm) -> DForm:
    """
    d as a graded derivation: d(c θ^I) = dc ∧ θ^I + c Σ_r (−1)^r θ^{I<r} ∧ dθ^{I_r} ∧ θ^{I>r}.
    """
    coframe = form.coframe
    result = coframe.zero()
    for indices, coefficient in form.terms.items():
        monomial = DForm(coframe, {indices: sympy.S.One})
        result = result + wedge(_d_coefficient(coframe, coefficient), monomial)
        for r, position in enumerate(indices):
            differential = coframe.differential(position)
            if differential.is_zero:
                continue
            before = DForm(coframe, {indices[:r]: sympy.S.One})
            after = DForm(coframe, {indices[r + 1:]: sympy.S.One})
            result = result + (-1) ** r * coefficient * wedge(before, differential, after)
    return result


def contract(field_: VectorField, form: DForm) -> DForm:
    """Interior product ι_X, an antiderivation of degree −1."""
    coframe = _require_same(field_, form)
    items = []
    for indices, coefficient in form.terms.items():
        for r, position in enumerate(indices):
            value = field_.components.get(position)
            if value is None:
                continue
            items.append((indices[:r] + indices[r + 1:], (-1) ** r * value * coefficient))
    return DForm.from_terms(coframe, items)


def lie_derivative(field_: VectorField, form: DForm) -> DForm:
    """ℒ_X = ι_X d + d ι_X."""
    return contract(field_, exterior_derivative(form)) + exterior_derivative(contract(field_, form))


def twisted_derivative(flux: DForm, form: DForm) -> DForm:
    """d_H = d − H∧ for a 3-form H."""
    if not flux.is_zero and flux.degree() != 3:
        raise ValueError(f"The twisting form must have degree 3, got degrees {sorted(flux.degrees())}")
    return exterior_derivative(form) - wedge(flux, form)


def lie_bracket(left: VectorField, right: VectorField) -> VectorField:
    """[X, Y] = Σ_c (X(Y^c) − Y(X^c)) X_c + Σ X^a Y^b [X_a, X_b]."""
    coframe = _require_same(left, right)
    items = []
    for c in range(len(coframe)):
        value = left.apply(right.components.get(c, 0)) - right.apply(left.components.get(c, 0))
        if value != 0:
            items.append((c, value))
    structure = coframe.structure_functions()
    for a, x in left.components.items():
        for b, y in right.components.items():
            if a == b:
                continue
            key, sign = ((a, b), 1) if a < b else ((b, a), -1)
            for c, value in structure.get(key, {}).items():
                items.append((c, sign * x * y * value))
    return VectorField.from_components(coframe, items)


def pullback(form: DForm, target: Coframe, mapping: Mapping[str, str] | None = None) -> DForm:
    """Re-express a form over another coframe, generators matched by name (or ``mapping``)."""
    mapping = mapping or {}
    items = []
    for indices, coefficient in form.terms.items():
        names = [mapping.get(form.coframe.names[i], form.coframe.names[i]) for i in indices]
        items.append(([target.index(name) for name in names], coefficient))
    return DForm.from_terms(target, items)


def push_vector(field_: VectorField, target: Coframe, mapping: Mapping[str, str] | None = None) -> VectorField:
    """Re-express a vector field over another coframe, frame fields matched by name."""
    mapping = mapping or {}
    items = []
    for position, value in field_.components.items():
        frame = field_.coframe.frames[position]
        items.append((target.frame_index(mapping.get(frame, frame)), value))
    return VectorField.from_components(target, items)


def flat_coframe(coords: Sequence[sympy.Symbol], prefix: str = "d", frame_prefix: str = "del",
                 relations: Iterable[ClosureRelation] = (), name: str = "flat") -> Coframe:
    """Coordinate coframe dx1..dxN with frames del1..delN."""
    generators = tuple(
        CoframeGenerator(f"{prefix}{coordinate}", f"{frame_prefix}{position}", coordinate)
        for position, coordinate in enumerate(coords, start=1)
    )
    return Coframe(name, generators, {}, tuple(relations))


def form_from_components(coframe: Coframe, components: Mapping[IndexTuple, sympy.Expr],
                         positions: Sequence[int] | None = None) -> DForm:
    """
    Σ_{I increasing} T_I θ^{I} from components indexed 1-based, optionally
    remapped to coframe ``positions``.
    """
    positions = list(positions) if positions is not None else list(range(len(coframe)))
    return DForm.from_terms(coframe, [(tuple(positions[i - 1] for i in indices), value)
                                      for indices, value in components.items()])

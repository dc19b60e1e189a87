"""
Antisymmetric atom tables and closedness rewrite relations.

A table such as H_{ijk}, F_{μν} or Ω_{μνρ} is stored as one function atom per
strictly increasing index tuple, named ``H[1,2,3]``. Any other index order is
mapped to the increasing one with the sign of the sorting permutation;
repeated indices give zero.

A ``ClosureRelation`` declares (dT)_J = R_J for every increasing J. It is used
as a rewrite rule: the derivative ∂_ρ T_I with ρ < min(I) is eliminated in
favour of R and of derivatives whose index is larger than the smallest
leading index of the atom. Every rewrite strictly lowers the smallest leading
index of the table atoms it produces, so iterating to a fixpoint terminates.
"""

from __future__ import annotations

import itertools
import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import sympy
from sympy.combinatorics import Permutation
from sympy.core.function import AppliedUndef

from ..utils.errors import RelationError
from ..utils.types import IndexTuple

logger = logging.getLogger(__name__)

_ATOM_NAME = re.compile(r"^(\w+)\[([\d,\s]+)\]$")

# Rewriting a well-formed relation set converges in a handful of passes
MAX_REWRITE_PASSES = 64


def sort_with_sign(indices: Sequence[int]) -> tuple[int, IndexTuple]:
    """
    Return (sign, sorted indices) for an antisymmetric index tuple.

    The sign is 0 when an index repeats.
    """
    indices = tuple(indices)
    if len(set(indices)) < len(indices):
        return 0, tuple(sorted(indices))
    order = sorted(range(len(indices)), key=lambda position: indices[position])
    sign = Permutation(order).signature() if len(order) > 1 else 1
    return sign, tuple(indices[position] for position in order)


def parse_atom_name(name: str) -> tuple[str, IndexTuple] | None:
    """``"H[1,2,3]"`` -> ("H", (1, 2, 3)); None for plain atom names."""
    match = _ATOM_NAME.match(name)
    if not match:
        return None
    return match.group(1), tuple(int(part) for part in match.group(2).split(","))


@dataclass(frozen=True)
class AtomTable:
    """A totally antisymmetric table of function atoms over ``coords``."""

    name: str
    rank: int
    coords: tuple[sympy.Symbol, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)

    def function(self, indices: IndexTuple) -> sympy.Function:
        return sympy.Function(f"{self.name}[{','.join(map(str, indices))}]")

    def component(self, *indices: int) -> sympy.Expr:
        if len(indices) != self.rank:
            raise ValueError(f"Table {self.name} has rank {self.rank}, got indices {indices}")
        for index in indices:
            if not 1 <= index <= self.dim:
                raise ValueError(f"Index {index} of {self.name} outside 1..{self.dim}")
        sign, ordered = sort_with_sign(indices)
        if sign == 0:
            return sympy.S.Zero
        return sign * self.function(ordered)(*self.coords)

    def increasing(self, rank: int | None = None) -> list[IndexTuple]:
        """All increasing index tuples of length ``rank`` (default: the table rank)."""
        return list(itertools.combinations(range(1, self.dim + 1), self.rank if rank is None else rank))

    def components(self) -> dict[IndexTuple, sympy.Expr]:
        return {indices: self.component(*indices) for indices in self.increasing()}

    def owns(self, func) -> IndexTuple | None:
        """Indices of an applied atom of this table, None otherwise."""
        if not isinstance(func, AppliedUndef):
            return None
        parsed = parse_atom_name(func.func.__name__)
        if parsed is None or parsed[0] != self.name or len(parsed[1]) != self.rank:
            return None
        return parsed[1]


def exterior_components(table_values: Mapping[IndexTuple, sympy.Expr], rank: int,
                        coords: Sequence[sympy.Symbol]) -> dict[IndexTuple, sympy.Expr]:
    """
    Components (dT)_J = Σ_a (−1)^a ∂_{J_a} T_{J without J_a} of the exterior
    derivative of a form given by its increasing components.
    """
    dim = len(coords)
    result = {}
    for J in itertools.combinations(range(1, dim + 1), rank + 1):
        value = sympy.S.Zero
        for a, index in enumerate(J):
            rest = J[:a] + J[a + 1:]
            value += (-1) ** a * sympy.diff(table_values.get(rest, 0), coords[index - 1])
        result[J] = sympy.expand(value)
    return result


@dataclass(frozen=True)
class ClosureRelation:
    """
    The declared relation dT = R for an antisymmetric table T.

    ``rhs`` maps increasing (rank+1)-tuples to the components of R; missing
    entries are zero, so ``ClosureRelation(table)`` is the closedness dT = 0.
    """

    table: AtomTable
    rhs: Mapping[IndexTuple, sympy.Expr] = field(default_factory=dict)

    def residual(self) -> dict[IndexTuple, sympy.Expr]:
        """(dT)_J − R_J for every J, before any rewriting."""
        values = exterior_components(self.table.components(), self.table.rank, self.table.coords)
        return {J: sympy.expand(value - self.rhs.get(J, 0)) for J, value in values.items()}

    def rewrite(self, derivative: sympy.Derivative) -> sympy.Expr | None:
        """
        Replacement for one derivative atom, or None if the rule does not apply.

        ∂_ρ T_I with ρ < min(I) becomes R_{ρI} − Σ_{a≥1} (−1)^a ∂_{J_a} T_{J without J_a}
        with J = (ρ, I), then any remaining partials are applied to that.
        """
        indices = self.table.owns(derivative.expr)
        if indices is None:
            return None
        coords = self.table.coords
        partials = []
        for variable, count in derivative.variable_count:
            if variable not in coords:
                return None
            partials.extend([coords.index(variable) + 1] * int(count))
        candidates = [index for index in partials if index < min(indices)]
        if not candidates:
            return None
        rho = min(candidates)
        remaining = list(partials)
        remaining.remove(rho)

        J = (rho,) + indices
        replacement = sympy.sympify(self.rhs.get(J, 0))
        for a in range(1, len(J)):
            rest = J[:a] + J[a + 1:]
            replacement -= (-1) ** a * sympy.diff(self.table.component(*rest), coords[J[a] - 1])
        for index in remaining:
            replacement = sympy.diff(replacement, coords[index - 1])
        return sympy.expand(replacement)


def reduce_relations(expr, relations: Iterable[ClosureRelation]) -> sympy.Expr:
    """Rewrite ``expr`` to its normal form modulo the closedness relations."""
    relations = tuple(relations)
    expr = sympy.expand(sympy.sympify(expr))
    if not relations:
        return expr
    for _ in range(MAX_REWRITE_PASSES):
        substitutions = {}
        for derivative in expr.atoms(sympy.Derivative):
            for relation in relations:
                replacement = relation.rewrite(derivative)
                if replacement is not None:
                    substitutions[derivative] = replacement
                    break
        if not substitutions:
            return expr
        expr = sympy.expand(expr.xreplace(substitutions))
    logger.warning(f"Relation rewriting did not converge after {MAX_REWRITE_PASSES} passes")
    raise RelationError("Closedness rewriting did not reach a fixpoint; the relation set is inconsistent")


def check_explicit_closure(values: Mapping[IndexTuple, sympy.Expr], rank: int, coords: Sequence[sympy.Symbol],
                           rhs: Mapping[IndexTuple, sympy.Expr] | None = None,
                           relations: Iterable[ClosureRelation] = (), name: str = "T") -> None:
    """Raise ``RelationError`` if explicit components violate dT = rhs."""
    rhs = rhs or {}
    for J, value in exterior_components(values, rank, coords).items():
        residual = reduce_relations(value - rhs.get(J, 0), relations)
        if residual != 0:
            logger.warning(f"Explicit table {name} violates its closedness relation at {J}: {residual}")
            raise RelationError(f"d{name} differs from its declared value at indices {J}: residual {residual}")

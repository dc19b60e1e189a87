"""
Weak Courant-Dorfman structure derived from a λ-bracket.

    ⟦f, g⟧ = {f_λ g}|_{λ=0}
    ⟨f, g⟩ = ½ Σ_{j≥1} (−∂)^{j−1}/j! · d^j/dλ^j ({f_λ g} + {g_λ f})|_{λ=0}

The ½ makes ⟦f,g⟧ + ⟦g,f⟧ = ∂⟨f,g⟩ hold on the nose; the bare symmetrized
sum is available as ``symmetrized_pairing_sum``.

With this normalization the Courant bracket satisfies

    ⟦f,⟦g,h⟧_C⟧_C + cyclic = −½ ∂ Nij(f,g,h),   Nij = ⅓(⟨⟦f,g⟧_C,h⟩ + cyclic)

which ``check_weak_cd`` verifies next to the unnormalized form ∂ Nij.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import sympy

from ..utils.types import DiffPoly
from .brackets import BracketSpec, CheckReport, jth_product, lambda_bracket, lambda_coefficients, run_checks
from .diffpoly import normalize, total_derivative

logger = logging.getLogger(__name__)

HALF = sympy.Rational(1, 2)
THIRD = sympy.Rational(1, 3)


@dataclass(frozen=True)
class CDStructure:
    """Dorfman bracket, pairing and derivation induced by a BracketSpec."""

    spec: BracketSpec

    def derivation(self, f) -> DiffPoly:
        return total_derivative(f)

    def dorfman(self, f, g) -> DiffPoly:
        return dorfman(f, g, self)

    def pairing(self, f, g) -> DiffPoly:
        return pairing(f, g, self)


def from_spec(spec: BracketSpec) -> CDStructure:
    return CDStructure(spec)


def dorfman(f, g, cd: CDStructure) -> DiffPoly:
    return jth_product(f, g, 0, cd.spec)


def _higher_sum(f, g, cd: CDStructure) -> sympy.Expr:
    value = sympy.S.Zero
    for j, c in lambda_coefficients(lambda_bracket(f, g, cd.spec)).items():
        if j >= 1:
            # (−∂)^{j−1}/j! · j! c_j
            value += (-1) ** (j - 1) * total_derivative(c, j - 1)
    return sympy.expand(value)


def symmetrized_pairing_sum(f, g, cd: CDStructure) -> DiffPoly:
    """Σ_{j≥1} (−∂)^{j−1}/j! (f_(j)g + g_(j)f), summed to the actual λ-degree."""
    return sympy.expand(_higher_sum(f, g, cd) + _higher_sum(g, f, cd))


def pairing(f, g, cd: CDStructure) -> DiffPoly:
    return sympy.expand(HALF * symmetrized_pairing_sum(f, g, cd))


def courant_bracket(f, g, cd: CDStructure) -> DiffPoly:
    return sympy.expand(dorfman(f, g, cd) - HALF * total_derivative(pairing(f, g, cd)))


def nijenhuis(f, g, h, cd: CDStructure) -> DiffPoly:
    value = (pairing(courant_bracket(f, g, cd), h, cd)
             + pairing(courant_bracket(g, h, cd), f, cd)
             + pairing(courant_bracket(h, f, cd), g, cd))
    return sympy.expand(THIRD * value)


def courant_jacobiator(f, g, h, cd: CDStructure) -> DiffPoly:
    value = (courant_bracket(f, courant_bracket(g, h, cd), cd)
             + courant_bracket(g, courant_bracket(h, f, cd), cd)
             + courant_bracket(h, courant_bracket(f, g, cd), cd))
    return sympy.expand(value)


def schwinger_coefficients(f, g, cd: CDStructure, j_max: int) -> list[DiffPoly]:
    """[C_1, ..., C_{j_max}] with C_j = f_(j)g / j!."""
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    coefficients = lambda_coefficients(lambda_bracket(f, g, cd.spec))
    return [coefficients.get(j, sympy.S.Zero) for j in range(1, j_max + 1)]


# ---------------------------------------------------------------------
# Axiom residuals
# ---------------------------------------------------------------------

def axiom_leibniz(f, g, h, cd):
    """⟦f,⟦g,h⟧⟧ − ⟦⟦f,g⟧,h⟧ − ⟦g,⟦f,h⟧⟧"""
    return (dorfman(f, dorfman(g, h, cd), cd) - dorfman(dorfman(f, g, cd), h, cd)
            - dorfman(g, dorfman(f, h, cd), cd))


def axiom_symmetric_part(f, g, cd):
    """⟦f,g⟧ + ⟦g,f⟧ − ∂⟨f,g⟩"""
    return dorfman(f, g, cd) + dorfman(g, f, cd) - total_derivative(pairing(f, g, cd))


def axiom_derivative_kernel(a, f, cd):
    """⟦∂a, f⟧"""
    return dorfman(total_derivative(a), f, cd)


def axiom_invariance(f, g, h, cd):
    """∂(⟨f,∂⟨g,h⟩⟩ − ⟨⟦f,g⟧,h⟩ − ⟨g,⟦f,h⟧⟩)"""
    value = (pairing(f, total_derivative(pairing(g, h, cd)), cd)
             - pairing(dorfman(f, g, cd), h, cd) - pairing(g, dorfman(f, h, cd), cd))
    return total_derivative(value)


def axiom_exact_pairing(a, b, cd):
    """∂⟨∂a, ∂b⟩"""
    return total_derivative(pairing(total_derivative(a), total_derivative(b), cd))


def check_weak_cd(cd: CDStructure, triples: Sequence[tuple], *, courant: bool = True,
                  max_workers: int = 1) -> CheckReport:
    """
    Residuals of the Leibniz, symmetric-part, derivative-kernel, invariance
    and exact-pairing axioms on every sample triple, and of
    the Courant-Jacobiator identity when ``courant`` is set.

    Every residual is judged modulo the table's relations: the Leibniz
    residual on momentum generators vanishes only once dH = 0 is imposed.
    """
    tasks = []
    for index, triple in enumerate(triples):
        f, g, h = (normalize(item) for item in triple)
        tasks.extend([
            lambda f=f, g=g, h=h, index=index: (f"leibniz[{index}]", axiom_leibniz(f, g, h, cd)),
            lambda f=f, g=g, index=index: (f"symmetric_part[{index}]", axiom_symmetric_part(f, g, cd)),
            lambda f=f, g=g, index=index: (f"derivative_kernel[{index}]", axiom_derivative_kernel(f, g, cd)),
            lambda f=f, g=g, h=h, index=index: (f"invariance[{index}]", axiom_invariance(f, g, h, cd)),
            lambda f=f, g=g, index=index: (f"exact_pairing[{index}]", axiom_exact_pairing(f, g, cd)),
        ])
        if courant:
            tasks.append(
                lambda f=f, g=g, h=h, index=index: (
                    f"courant_jacobi[{index}]",
                    courant_jacobiator(f, g, h, cd) + HALF * total_derivative(nijenhuis(f, g, h, cd)),
                )
            )

    report = run_checks(tasks, CheckReport("weak_courant_dorfman"), cd.spec.relations, max_workers)
    if courant:
        report.notes["courant_jacobi"] = "Jac_C = -1/2 d Nij with the pairing normalized so that the symmetric part is exact"
    report.log()
    return report


def courant_jacobi_unnormalized(f, g, h, cd: CDStructure) -> DiffPoly:
    """Jac_C − ∂Nij, the identity read without the −½ factor."""
    return sympy.expand(courant_jacobiator(f, g, h, cd) - total_derivative(nijenhuis(f, g, h, cd)))

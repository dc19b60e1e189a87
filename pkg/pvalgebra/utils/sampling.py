"""Seeded random differential polynomials for the property checks."""

import logging
from collections.abc import Sequence

import numpy as np
import sympy

from ..algebra.diffpoly import atom, jet

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_SIZE = 64
DEFAULT_SEED = 0
DEFAULT_JET_ORDER = 2

KINDS = ("symbolic", "polynomial")


def make_rng(seed: int | None = DEFAULT_SEED) -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def _small_integer(rng: np.random.Generator) -> int:
    value = 0
    while value == 0:
        value = int(rng.integers(-3, 4))
    return value


def random_coefficient(rng: np.random.Generator, coords: Sequence[sympy.Symbol], label: str,
                       kind: str = "symbolic") -> sympy.Expr:
    """
    A coefficient function of the base coordinates: an opaque atom ``label(coords)``
    or an integer polynomial of degree ≤ 2.
    """
    if kind == "symbolic":
        return atom(label, coords)
    if kind != "polynomial":
        raise ValueError(f"Unknown coefficient kind {kind!r}, expected one of {KINDS}")
    value = sympy.Integer(int(rng.integers(-2, 3)))
    for coordinate in coords:
        if rng.random() < 0.5:
            value += _small_integer(rng) * coordinate
    if coords and rng.random() < 0.3:
        a, b = rng.choice(len(coords), size=2)
        value += coords[a] * coords[b]
    return sympy.expand(value)


def random_diffpoly(rng: np.random.Generator, generators: Sequence[str], coords: Sequence[sympy.Symbol] = (), *,
                    max_order: int = DEFAULT_JET_ORDER, max_terms: int = 3, max_degree: int = 2,
                    label: str = "c", atoms: bool = True) -> sympy.Expr:
    """
    A sum of up to ``max_terms`` monomials in jets of ``generators`` of order
    ≤ ``max_order``. With ``atoms`` set, each monomial carries an opaque
    coefficient function of ``coords``; otherwise a small integer.
    """
    if not generators:
        raise ValueError("Cannot sample a differential polynomial without generators")
    value = sympy.S.Zero
    for term in range(int(rng.integers(1, max_terms + 1))):
        monomial = sympy.S.One
        for _ in range(int(rng.integers(1, max_degree + 1))):
            gen = generators[int(rng.integers(len(generators)))]
            monomial *= jet(gen, int(rng.integers(0, max_order + 1)))
        if atoms and coords:
            coefficient = atom(f"{label}{term + 1}", coords)
        else:
            coefficient = _small_integer(rng)
        value += coefficient * monomial
    return sympy.expand(value)


def random_samples(rng: np.random.Generator, generators: Sequence[str], coords: Sequence[sympy.Symbol] = (),
                   count: int = DEFAULT_SAMPLE_SIZE, **kwargs) -> list[sympy.Expr]:
    """``count`` independent samples; atom labels are distinct per sample."""
    label = kwargs.pop("label", "c")
    samples = [random_diffpoly(rng, generators, coords, label=f"{label}{index}_", **kwargs)
               for index in range(count)]
    logger.debug(f"Drew {count} random differential polynomials over {list(generators)}")
    return samples


def random_triples(rng: np.random.Generator, generators: Sequence[str], coords: Sequence[sympy.Symbol] = (),
                   count: int = DEFAULT_SAMPLE_SIZE, **kwargs) -> list[tuple[sympy.Expr, sympy.Expr, sympy.Expr]]:
    samples = random_samples(rng, generators, coords, 3 * count, **kwargs)
    return [tuple(samples[3 * i:3 * i + 3]) for i in range(count)]

import pytest
import sympy

from pvalgebra.algebra.cdalg import (
    axiom_symmetric_part,
    check_weak_cd,
    courant_bracket,
    courant_jacobi_unnormalized,
    courant_jacobiator,
    dorfman,
    from_spec,
    nijenhuis,
    pairing,
    schwinger_coefficients,
    symmetrized_pairing_sum,
)
from pvalgebra.algebra.diffpoly import coordinates, jet
from pvalgebra.geometry.sigma import darboux_spec, symbolic_flux
from pvalgebra.utils.sampling import make_rng, random_triples

x1, p1, p2 = jet("x1"), jet("p1"), jet("p2")
dx1, dx3 = jet("x1", 1), jet("x3", 1)


@pytest.fixture
def flat1():
    return from_spec(darboux_spec(1))


######################
# Derived operations


def test_dorfman_is_zeroth_product(flat1):
    assert dorfman(x1, p1, flat1) == 1
    assert dorfman(p1, x1, flat1) == -1


def test_pairing_is_half_the_symmetrized_sum(flat1):
    f = p1 + dx1
    assert symmetrized_pairing_sum(f, f, flat1) == -4
    assert pairing(f, f, flat1) == -2


def test_symmetric_part_of_dorfman(flat1):
    f, g = x1 * p1, dx1 * x1 + p1
    assert axiom_symmetric_part(f, g, flat1) == 0


def test_courant_bracket_with_flux():
    cd = from_spec(darboux_spec(3, symbolic_flux(3)))
    H = symbolic_flux(3).component(1, 2, 3)
    assert courant_bracket(p1, p2, cd) == -H * dx3


def test_schwinger_coefficients(flat1):
    assert schwinger_coefficients(p1, dx1, flat1, 3) == [-1, 0, 0]
    with pytest.raises(ValueError):
        schwinger_coefficients(p1, dx1, flat1, 0)


######################
# Courant-Jacobiator


def test_nijenhuis_operator(flat1):
    assert nijenhuis(p1, x1 * dx1, x1 * p1, flat1) == -x1 / 2


def test_courant_jacobiator_normalization(flat1):
    f, g, h = p1, x1 * dx1, x1 * p1
    assert courant_jacobiator(f, g, h, flat1) == sympy.Rational(1, 4) * dx1
    assert courant_jacobi_unnormalized(f, g, h, flat1) == sympy.Rational(3, 4) * dx1


######################
# Axiom suites


def test_weak_cd_flat(flat1):
    triples = random_triples(make_rng(3), flat1.spec.generators, coordinates("x", 1), count=2, max_order=1)
    report = check_weak_cd(flat1, triples)
    assert report.ok, report.first_failure()
    assert "courant_jacobi" in report.notes


@pytest.mark.slow
def test_weak_cd_closed_flux():
    cd = from_spec(darboux_spec(3, symbolic_flux(3)))
    triples = random_triples(make_rng(5), cd.spec.generators, coordinates("x", 3), count=2, max_order=1,
                             max_degree=1)
    report = check_weak_cd(cd, triples)
    assert report.ok, report.first_failure()


def test_weak_cd_needs_closed_flux_in_four_dimensions():
    p3 = jet("p3")
    closed = from_spec(darboux_spec(4, symbolic_flux(4, closed=True)))
    report = check_weak_cd(closed, [(p1, p2, p3)], courant=False)
    assert report.ok, report.first_failure()
    assert report.residuals["leibniz[0]"] != 0

    open_ = from_spec(darboux_spec(4, symbolic_flux(4, closed=False)))
    report = check_weak_cd(open_, [(p1, p2, p3)], courant=False)
    assert not report.ok
    assert report.first_failure()[0] == "leibniz[0]"
    assert report.reduced["invariance[0]"] == 0

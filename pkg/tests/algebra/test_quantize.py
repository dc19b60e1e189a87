import pytest
import sympy

from pvalgebra.algebra.diffpoly import coordinates, jet
from pvalgebra.algebra.quantize import (
    HBAR,
    ConformalBasis,
    EnvElement,
    check_confluence,
    check_hbar_divisibility,
    check_idempotence,
    check_lie_algebra,
    check_limit,
    check_quasi_commutativity,
    classical_bracket,
    commutator,
    hbar_family,
    lie_bracket,
    pbw_normal_form,
    quasiclassical_limit,
    word,
)
from pvalgebra.geometry.sigma import constant_flux, darboux_spec, symbolic_flux
from pvalgebra.utils.errors import TruncationError
from pvalgebra.utils.sampling import make_rng, random_samples

k = sympy.Symbol("k")
p1, p2 = jet("p1"), jet("p2")
d2x3 = jet("x3", 2)


@pytest.fixture
def spec():
    return darboux_spec(3, constant_flux(3, {(1, 2, 3): k}))


@pytest.fixture
def basis(spec):
    return ConformalBasis.from_generators(spec, [p1, p2, d2x3], max_dorder=0)


######################
# Lie bracket


def test_lie_bracket_of_momenta(spec):
    assert lie_bracket(p1, p2, spec) == -k * d2x3
    assert lie_bracket(p2, p1, spec) == k * d2x3


def test_lie_bracket_kills_total_derivatives():
    flat = darboux_spec(1)
    assert lie_bracket(jet("p1", 1), jet("x1"), flat) == 0


def test_hbar_family_scales_entries(spec):
    family = hbar_family(spec, 2)
    assert family.entry("x1", "p1") == HBAR**2


######################
# Conformal basis


def test_basis_names_and_order(basis):
    assert [element.name for element in basis.elements] == ["p1", "p2", "d2(x3)"]
    assert basis.index("p2") == 1
    with pytest.raises(KeyError):
        basis.index("p3")


def test_basis_derivatives(spec):
    basis = ConformalBasis.from_generators(spec, [p1], max_dorder=2, names=["a"])
    assert [element.name for element in basis.elements] == ["a", "d(a)", "d2(a)"]
    assert basis.elements[2].value == jet("p1", 2)


def test_decomposition(basis):
    assert basis.bracket(0, 1) == {2: -k}
    assert basis.decompose(3 * p1 + 2) == {0: 3, None: 2}


def test_escape_is_a_truncation_failure(spec):
    basis = ConformalBasis.from_generators(spec, [p1, p2], max_dorder=0)
    with pytest.raises(TruncationError):
        basis.bracket(0, 1)


def test_duplicate_names_rejected(spec):
    with pytest.raises(ValueError):
        ConformalBasis.from_generators(spec, [p1, p2], max_dorder=0, names=["a", "a"])


######################
# PBW rewriting


def test_normal_form_swaps_with_hbar_correction(basis):
    result = pbw_normal_form(word(basis, "p2", "p1"))
    assert result.names() == {("p1", "p2"): 1, ("d2(x3)",): HBAR * k}


def test_ordered_words_are_fixed(basis):
    element = word(basis, "p1", "p2", "d2(x3)")
    assert pbw_normal_form(element) == element


def test_strategies_agree(basis):
    element = word(basis, "d2(x3)", "p2", "p1")
    assert pbw_normal_form(element, strategy="leftmost") == pbw_normal_form(element, strategy="rightmost")


def test_rewrite_limits(basis):
    with pytest.raises(ValueError):
        pbw_normal_form(word(basis, "p2", "p1"), strategy="random")
    with pytest.raises(TruncationError):
        pbw_normal_form(word(basis, "p1", "p1", "p1", "p1"), max_word=3)
    with pytest.raises(TruncationError):
        pbw_normal_form(word(basis, "p2", "p1"), max_hbar=0)


def test_commutator(basis):
    assert commutator(word(basis, "p1"), word(basis, "p2")) == EnvElement(basis, {(2,): -HBAR * k})


def test_hbar_parts(basis):
    result = pbw_normal_form(word(basis, "p2", "p1"))
    assert result.hbar_degree() == 1
    assert result.hbar_part(0).names() == {("p1", "p2"): 1}


######################
# Quasiclassical limit


def test_limit_of_a_product(basis):
    limit = quasiclassical_limit(pbw_normal_form(word(basis, "p2", "p1")))
    assert limit.to_diffpoly() == p1 * p2
    assert limit.bracket_value() == k * d2x3


def test_classical_bracket(basis):
    assert classical_bracket("p1", "p2", basis) == -k * d2x3


######################
# Check suites


def test_heisenberg_suites(basis):
    assert check_lie_algebra(basis).ok
    assert check_confluence(basis).ok
    assert check_idempotence(basis).ok
    assert check_limit(basis).ok


@pytest.mark.parametrize("names", [("p1", "p2", "d2(x3)"), ("p2", "p1", "p1"), ("d2(x3)", "p2", "p2")])
def test_quasi_commutativity(basis, names):
    assert check_quasi_commutativity(*names, basis).ok


def test_hbar_divisibility(spec):
    samples = random_samples(make_rng(2), spec.generators, coordinates("x", 3), count=2, max_order=1,
                             atoms=False)
    report = check_hbar_divisibility(spec, samples)
    assert report.ok, report.first_failure()
    assert "family.jacobi[0]" in report.residuals


def test_hbar_family_must_stay_a_pva():
    open_spec = darboux_spec(4, symbolic_flux(4, closed=False))
    report = check_hbar_divisibility(open_spec, [p1, p2, jet("p3")])
    assert not report.ok
    assert report.failures()
    assert all(label.startswith("family.jacobi") for label in report.failures())

"""Tests for the λ-bracket engine and its check reports."""

import pytest
import sympy

from pvalgebra.algebra.brackets import (
    LAMBDA,
    CheckReport,
    apply_shifted,
    check_axiom_suite,
    check_borcherds,
    check_jacobi_generators,
    check_translation_covariance,
    functional_bracket,
    jacobiator,
    jth_product,
    lambda_bracket,
    lambda_bracket_mu,
    lambda_coefficients,
    lambda_degree,
    skew,
    skew_complete,
)
from pvalgebra.algebra.diffpoly import jet
from pvalgebra.geometry.sigma import darboux_spec, symbolic_flux
from pvalgebra.utils.errors import TruncationError, UnknownGeneratorError
from pvalgebra.utils.sampling import make_rng, random_samples

lam = LAMBDA
x1, p1, p2, p3 = jet("x1"), jet("p1"), jet("p2"), jet("p3")
dx1, dx3 = jet("x1", 1), jet("x3", 1)
L, dL = jet("L"), jet("L", 1)
c = sympy.Symbol("c")


@pytest.fixture
def flat1():
    return darboux_spec(1)


@pytest.fixture
def virasoro():
    return skew_complete(["L"], {("L", "L"): dL + 2 * L * lam + c * lam**3})


######################
# λ-polynomial helpers


def test_lambda_coefficients():
    assert lambda_coefficients(dx1 + 3 * p1 * lam**2) == {0: dx1, 2: 3 * p1}
    assert lambda_degree(sympy.S.Zero) == -1


def test_lambda_coefficients_rejects_non_polynomials():
    with pytest.raises(ValueError):
        lambda_coefficients(1 / lam)


def test_skew_of_constant_and_linear():
    assert skew(sympy.S.One) == -1
    # −(−λ−∂)p1 = λp1 + ∂p1
    assert skew(p1 * lam) == sympy.expand(p1 * lam + jet("p1", 1))


def test_apply_shifted():
    assert apply_shifted(lam, p1) == sympy.expand(lam * p1 + jet("p1", 1))


######################
# Table completion


def test_skew_complete_fills_missing_entries(flat1):
    assert flat1.entry("x1", "p1") == 1
    assert flat1.entry("p1", "x1") == -1
    assert flat1.entry("x1", "x1") == 0


def test_virasoro_table_is_skew_consistent(virasoro):
    assert virasoro.entry("L", "L") == sympy.expand(dL + 2 * L * lam + c * lam**3)


def test_inconsistent_table_rejected():
    u = jet("u")
    with pytest.raises(ValueError):
        skew_complete(["u"], {("u", "u"): u})


def test_undeclared_generator_rejected():
    with pytest.raises(UnknownGeneratorError):
        skew_complete(["u"], {("u", "v"): 1})


######################
# The master formula


def test_generator_brackets():
    spec = darboux_spec(3, symbolic_flux(3))
    H = symbolic_flux(3).component(1, 2, 3)
    assert lambda_bracket(x1, p1, spec) == 1
    assert lambda_bracket(p1, p2, spec) == -H * dx3


def test_leibniz_in_second_slot(flat1):
    assert lambda_bracket(x1, p1**2, flat1) == 2 * p1


def test_first_product(flat1):
    assert lambda_bracket(p1, dx1, flat1) == -lam
    assert jth_product(p1, dx1, 1, flat1) == -1
    assert jth_product(p1, dx1, 0, flat1) == 0


def test_negative_products_use_derivatives(flat1):
    assert jth_product(p1, x1, -2, flat1) == jet("p1", 1) * x1


def test_functional_bracket(flat1):
    assert functional_bracket(x1, p1, flat1) == 1


def test_bracket_in_mu(virasoro):
    mu = sympy.Symbol("mu")
    assert lambda_bracket_mu(L, L, virasoro) == dL + 2 * L * mu + c * mu**3


def test_unknown_generator(flat1):
    with pytest.raises(UnknownGeneratorError):
        lambda_bracket(jet("q1"), p1, flat1)


def test_truncation_cap():
    spec = darboux_spec(1, max_lambda_degree=0)
    with pytest.raises(TruncationError):
        lambda_bracket(p1, dx1, spec)


######################
# Axioms and identities


def test_virasoro_jacobi(virasoro):
    assert jacobiator(L, L, L, virasoro) == 0
    assert check_jacobi_generators(virasoro).ok


def test_axiom_suite_flat_samples():
    spec = darboux_spec(2)
    rng = make_rng(7)
    samples = random_samples(rng, spec.generators, (jet("x1"), jet("x2")), count=3, max_order=1)
    report = check_axiom_suite(spec, samples)
    assert report.ok, report.first_failure()
    assert any(label.startswith("leibniz.right") for label in report.residuals)


def test_closed_flux_jacobi_in_three_dimensions():
    spec = darboux_spec(3, symbolic_flux(3))
    assert check_jacobi_generators(spec, ["p1", "p2", "p3"]).ok


def test_jacobi_obstruction_without_closedness():
    open_spec = darboux_spec(4, symbolic_flux(4, closed=False))
    report = check_jacobi_generators(open_spec, ["p1", "p2", "p3"])
    assert not report.ok

    closed_spec = darboux_spec(4, symbolic_flux(4, closed=True))
    report = check_jacobi_generators(closed_spec, ["p1", "p2", "p3"])
    assert report.ok
    assert any(value != 0 for value in report.residuals.values())


def test_translation_covariance(flat1):
    assert check_translation_covariance(p1 * x1, dx1 * p1, 1, flat1).ok
    with pytest.raises(ValueError):
        check_translation_covariance(p1, x1, -1, flat1)


@pytest.mark.parametrize("m, n, p", [(0, 0, 0), (1, 0, 0), (0, 1, 1)])
def test_borcherds(flat1, m, n, p):
    assert check_borcherds(p1, x1 * p1, dx1, m, n, p, flat1).ok


def test_borcherds_window(flat1):
    with pytest.raises(TruncationError):
        check_borcherds(p1, x1, p1, 20, 0, 0, flat1)
    with pytest.raises(ValueError):
        check_borcherds(p1, x1, p1, -1, 0, 0, flat1)


######################
# Reports


class TestCheckReport:
    """Labels, reduction and serialization of residual reports."""

    def test_failures(self):
        report = CheckReport("demo")
        report.add("a", 0)
        report.add("b", p1)
        assert not report.ok
        assert report.failures() == ["b"]
        assert report.first_failure() == ("b", p1)

    def test_merge_prefixes_labels(self):
        inner = CheckReport("inner", sign=-1)
        inner.add("x", 0)
        outer = CheckReport("outer").merge(inner, prefix="inner")
        assert list(outer.residuals) == ["inner.x"]
        assert outer.sign == -1

    def test_to_dict(self):
        report = CheckReport("demo")
        report.add("a", p1 - p1)
        data = report.to_dict()
        assert data["ok"] is True
        assert data["residuals"]["a"] == {"raw": "0", "reduced": "0", "zero": True}

"""Tests for differential polynomials: canonical form, ∂ and variational derivatives."""

import pytest
import sympy

from pvalgebra.algebra.diffpoly import (
    atom,
    coordinates,
    functional_equal,
    functional_equal_strict,
    jet,
    jet_info,
    jet_name,
    max_order,
    normalize,
    parse_jet_name,
    terms,
    total_derivative,
    variational_derivative,
)
from pvalgebra.utils.errors import NonPolynomialError

x1, x2 = jet("x1"), jet("x2")
p1, p2 = jet("p1"), jet("p2")
dx1, d2x1 = jet("x1", 1), jet("x1", 2)
dp1 = jet("p1", 1)


class TestJets:
    """Interned jet symbols and their names."""

    def test_interned(self):
        assert jet("x1", 2) is jet("x1", 2)
        assert jet_info(jet("x1", 2)) == ("x1", 2)

    def test_names(self):
        assert jet_name("x1") == "x1"
        assert jet_name("x1", 1) == "d(x1)"
        assert jet_name("p2", 3) == "d3(p2)"

    def test_parse_jet_name(self):
        assert parse_jet_name("d2(x1)") == ("x1", 2)
        assert parse_jet_name("d(p1)") == ("p1", 1)
        assert parse_jet_name("p1") == ("p1", 0)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            jet("x1", -1)

    def test_plain_symbols_are_not_jets(self):
        assert jet_info(sympy.Symbol("lambda")) is None


class TestNormalize:
    """Canonical form and the polynomial guard."""

    def test_expands(self):
        assert normalize((x1 + p1) ** 2) == x1**2 + 2 * x1 * p1 + p1**2

    def test_equal_inputs_share_canonical_form(self):
        assert normalize(p1 * (dx1 + x1)) == normalize(x1 * p1 + dx1 * p1)

    def test_rationals_allowed(self):
        assert normalize(sympy.Rational(1, 2) * x1) == x1 / 2

    @pytest.mark.parametrize("expr", [1 / x1, sympy.sin(x1), sympy.Float(0.5) * x1, sympy.sqrt(2) * p1])
    def test_non_polynomial_rejected(self, expr):
        with pytest.raises(NonPolynomialError):
            normalize(expr)

    def test_atom_must_depend_on_coordinates(self):
        with pytest.raises(NonPolynomialError):
            normalize(sympy.Function("f")(dx1))

    def test_non_polynomial_error_is_value_error(self):
        with pytest.raises(ValueError):
            normalize(1 / p1)


class TestTerms:
    def test_split_into_monomials(self):
        f = 3 * p1 * dx1 + 2
        assert terms(f) == [(2, ()), (3, ((p1, 1), (dx1, 1)))]

    def test_atoms_stay_in_coefficients(self):
        coords = coordinates("x", 2)
        f = atom("f", coords) * p1
        assert terms(f) == [(atom("f", coords), ((p1, 1),))]

    def test_max_order(self):
        assert max_order(p1 * d2x1, "x1") == 2
        assert max_order(p1 * d2x1, "x3") == -1


class TestTotalDerivative:
    def test_leibniz(self):
        assert total_derivative(p1 * dx1) == dp1 * dx1 + p1 * d2x1

    def test_chain_rule_on_atoms(self):
        coords = coordinates("x", 2)
        f = atom("f", coords)
        expected = atom("f", coords, [1]) * dx1 + atom("f", coords, [2]) * jet("x2", 1)
        assert total_derivative(f) == expected

    def test_constants_vanish(self):
        assert total_derivative(sympy.Symbol("k") * 5) == 0

    def test_repeated(self):
        assert total_derivative(x1, 3) == jet("x1", 3)


class TestVariationalDerivative:
    def test_euler_lagrange(self):
        assert variational_derivative(p1 * dx1, "x1") == -dp1

    def test_kills_total_derivatives(self):
        coords = coordinates("x", 2)
        f = atom("f", coords) * p1 * jet("x2", 1) + x1**2 * dp1
        df = total_derivative(f)
        for gen in ("x1", "x2", "p1"):
            assert variational_derivative(df, gen) == 0

    def test_functional_equality(self):
        assert functional_equal(dx1 * p1, -x1 * dp1)
        assert not functional_equal(dx1 * p1, x1 * dp1)

    def test_strict_keeps_constants(self):
        assert functional_equal(1, 0)
        assert not functional_equal_strict(1, 0)
        assert functional_equal_strict(dx1 * p1, -x1 * dp1)

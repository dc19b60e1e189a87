"""Tests for the expression language."""

import pytest
import sympy

from pvalgebra.algebra.diffpoly import atom, coordinates, jet
from pvalgebra.geometry.forms import DForm, VectorField, wedge
from pvalgebra.geometry.sigma import GenSection, section, sigma_coframe
from pvalgebra.geometry.tduality import InvariantSection, build_pair
from pvalgebra.integrations.dsl import Scope, evaluate, pair_scope, parse, sigma_scope
from pvalgebra.utils.errors import ParseError

x = coordinates("x", 3)
p1 = jet("p1")


class TestScalars:
    """Differential polynomials, atoms and tables."""

    def test_jets(self):
        assert evaluate("p1 + d(x1)", sigma_scope(1)) == p1 + jet("x1", 1)
        assert evaluate("d3(p2)", sigma_scope(2)) == jet("p2", 3)

    def test_arithmetic(self):
        assert evaluate("(p1 - 2*x1)^2", sigma_scope(1)) == sympy.expand((p1 - 2 * jet("x1")) ** 2)
        assert evaluate("x1/2", sigma_scope(1)) == jet("x1") / 2
        assert evaluate("-p1 + +p1", sigma_scope(1)) == 0

    def test_parameters(self):
        assert evaluate("k*lambda", sigma_scope(1)) == sympy.Symbol("k") * sympy.Symbol("lambda")
        scope = sigma_scope(1, parameters={"c": sympy.Symbol("c")})
        assert evaluate("c*p1", scope) == sympy.Symbol("c") * p1

    def test_table_entries_are_antisymmetric(self):
        H = sympy.Function("H[1,2,3]")(*x)
        assert evaluate("H[2,1,3]", sigma_scope(3)) == -H
        assert evaluate("H[1,1,3]", sigma_scope(3)) == 0

    def test_function_atoms_and_partials(self):
        f = atom("f", x)
        assert evaluate("f[x]*p1", sigma_scope(3)) == f * p1
        assert evaluate("D2 f[x]", sigma_scope(3)) == atom("f", x, [2])
        assert evaluate("D1 D3 f[x]", sigma_scope(3)) == atom("f", x, [1, 3])

    def test_coordinates_of_a_family(self):
        scope = Scope(families={"y": coordinates("y", 2)})
        assert evaluate("y2 * g[y]", scope) == jet("y2") * atom("g", coordinates("y", 2))


class TestErrors:
    """Every failure is a ParseError carrying a position."""

    def test_trailing_operator(self):
        with pytest.raises(ParseError) as info:
            parse("p1 +")
        assert info.value.line == 1
        assert info.value.column == 5
        assert "column 5" in str(info.value)

    def test_division_by_a_variable(self):
        with pytest.raises(ParseError):
            evaluate("x1/x2", sigma_scope(2))

    def test_unknown_identifier(self):
        with pytest.raises(ParseError) as info:
            evaluate("p1 + q1", sigma_scope(1))
        assert info.value.column == 6

    def test_unknown_jet_generator(self):
        with pytest.raises(ParseError):
            evaluate("d(x2)", sigma_scope(1))

    def test_symbolic_exponent(self):
        with pytest.raises(ParseError):
            evaluate("p1^x1", sigma_scope(1))

    def test_table_index_out_of_range(self):
        with pytest.raises(ParseError):
            evaluate("H[1,2,4]", sigma_scope(3))

    def test_is_a_value_error(self):
        with pytest.raises(ValueError):
            evaluate("p1 * * p1", sigma_scope(1))


class TestForms:
    """Coframe scopes: 1-forms, frame fields and sections."""

    def test_wedge(self):
        coframe = sigma_coframe(2)
        scope = sigma_scope(2, coframe=coframe)
        value = evaluate("x2*dx1*dx2", scope)
        assert isinstance(value, DForm)
        assert value == jet("x2") * wedge(coframe.generator("dx1"), coframe.generator("dx2"))
        assert evaluate("dx2 wedge dx1", scope) == -wedge(coframe.generator("dx1"), coframe.generator("dx2"))

    def test_frames(self):
        coframe = sigma_coframe(2)
        value = evaluate("x2*del1", sigma_scope(2, coframe=coframe))
        assert isinstance(value, VectorField)
        assert value.component("del1") == jet("x2")

    def test_sections(self):
        coframe = sigma_coframe(2)
        value = evaluate("sec(xi=x2*del1, alpha=dx2)", sigma_scope(2, coframe=coframe))
        assert isinstance(value, GenSection)
        assert value == section(coframe, [jet("x2"), 0], [0, 1])

    def test_sections_need_a_coframe(self):
        with pytest.raises(ParseError):
            evaluate("sec(xi=0)", sigma_scope(2))

    def test_invariant_sections(self):
        pair = build_pair(2)
        value = evaluate("sec(xi=h1, xiw=y2, alpha=dy2)", pair_scope(pair))
        assert value == InvariantSection.make(2, [1, 0], jet("y2"), [0, 1], 0)

    def test_vertical_components_use_keywords(self):
        pair = build_pair(2)
        with pytest.raises(ParseError):
            evaluate("sec(xi=e)", pair_scope(pair))

    def test_curvature_forms(self):
        pair = build_pair(2)
        value = evaluate("F", pair_scope(pair))
        assert value.component("dy1", "dy2") == pair.F[(1, 2)]

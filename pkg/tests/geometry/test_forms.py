"""Tests for the exterior calculus over declared coframes."""

import pytest
import sympy

from pvalgebra.algebra.diffpoly import atom, coordinates
from pvalgebra.algebra.relations import AtomTable, ClosureRelation
from pvalgebra.geometry.forms import (
    Coframe,
    CoframeGenerator,
    DForm,
    VectorField,
    contract,
    exterior_derivative,
    flat_coframe,
    form_from_components,
    lie_bracket,
    lie_derivative,
    pullback,
    push_vector,
    twisted_derivative,
    wedge,
)
from pvalgebra.geometry.sigma import flux_form, sigma_coframe, symbolic_flux
from pvalgebra.geometry.tduality import build_pair
from pvalgebra.utils.errors import CoframeMismatchError

y = coordinates("y", 2)
F = AtomTable("F", 2, y)


@pytest.fixture
def bundle():
    """A (vertical first), dy1, dy2 with dA = F12 dy1∧dy2."""
    generators = (
        CoframeGenerator("A", "e"),
        CoframeGenerator("dy1", "h1", y[0]),
        CoframeGenerator("dy2", "h2", y[1]),
    )
    return Coframe("bundle", generators, {"A": {(1, 2): F.component(1, 2)}}, (ClosureRelation(F),))


@pytest.fixture
def flat():
    return flat_coframe(y)


######################
# Forms and vector fields


def test_wedge_is_graded_commutative(flat):
    dy1, dy2 = flat.generator("dy1"), flat.generator("dy2")
    assert wedge(dy1, dy2) == -wedge(dy2, dy1)
    assert (dy1 * dy1).is_zero


def test_from_terms_sorts_and_cancels(flat):
    form = DForm.from_terms(flat, [((1, 0), 1), ((0, 1), 1)])
    assert form.is_zero


def test_component_lookup(flat):
    form = wedge(flat.generator("dy1"), flat.generator("dy2")) * y[0]
    assert form.component("dy2", "dy1") == -y[0]


def test_degree(flat):
    assert flat.scalar(3).degree() == 0
    with pytest.raises(ValueError):
        (flat.scalar(1) + flat.generator("dy1")).degree()


def test_coframe_mismatch(flat, bundle):
    with pytest.raises(CoframeMismatchError):
        wedge(flat.generator("dy1"), bundle.generator("dy1"))


def test_duplicate_generators_rejected():
    with pytest.raises(ValueError):
        Coframe("bad", (CoframeGenerator("A", "e"), CoframeGenerator("A", "f")))


def test_unknown_names(flat):
    with pytest.raises(KeyError):
        flat.generator("dz")
    with pytest.raises(KeyError):
        flat.frame("e")


def test_vector_field_applies_partials(flat):
    X = VectorField.from_components(flat, [(0, y[1]), (1, 1)])
    assert X.apply(y[0] * y[1]) == y[1] ** 2 + y[0]


######################
# Cartan calculus


def test_contraction_sign(bundle):
    top = wedge(bundle.generator("A"), bundle.generator("dy1"), bundle.generator("dy2"))
    assert contract(bundle.frame("h1"), top) == -wedge(bundle.generator("A"), bundle.generator("dy2"))


def test_d_of_coefficient(flat):
    assert exterior_derivative(flat.scalar(y[0] * y[1])) == y[1] * flat.generator("dy1") + y[0] * flat.generator("dy2")


def test_d_uses_assigned_differentials(bundle):
    A = bundle.generator("A")
    assert exterior_derivative(A) == F.component(1, 2) * wedge(bundle.generator("dy1"), bundle.generator("dy2"))
    assert all(value.is_zero for value in bundle.check_closed().values())


def test_d_squared_vanishes(bundle):
    f = atom("f", y)
    omega = f * bundle.generator("A")
    assert exterior_derivative(exterior_derivative(omega)).reduce().is_zero


def test_lie_derivative(flat):
    assert lie_derivative(flat.frame("del1"), y[0] * flat.generator("dy2")) == flat.generator("dy2")


def test_frame_bracket_from_structure_functions(bundle):
    assert lie_bracket(bundle.frame("h1"), bundle.frame("h2")) == -F.component(1, 2) * bundle.frame("e")


def test_frame_bracket_of_coordinate_fields(flat):
    X = VectorField.from_components(flat, [(0, y[1])])
    Y = flat.frame("del2")
    assert lie_bracket(X, Y) == -flat.frame("del1")


def test_curvature_wedge_in_four_dimensions():
    pair = build_pair(4)
    E = pair.E
    Fhat = form_from_components(E, pair.Fhat)
    curvature = form_from_components(E, pair.F)
    residual = exterior_derivative(wedge(E.generator("A"), Fhat)) - wedge(curvature, Fhat)
    assert not residual.is_zero
    assert residual.reduce().is_zero


def test_twisted_derivative_squares_to_zero():
    flux = symbolic_flux(4)
    coframe = sigma_coframe(4, flux)
    H = flux_form(flux, coframe)
    f = coframe.scalar(atom("f", coordinates("x", 4)))
    assert twisted_derivative(H, twisted_derivative(H, f)).reduce().is_zero


def test_twisted_derivative_needs_a_three_form(flat):
    with pytest.raises(ValueError):
        twisted_derivative(flat.generator("dy1"), flat.scalar(1))


######################
# Moving between coframes


def test_pullback_and_push(flat, bundle):
    form = wedge(flat.generator("dy1"), flat.generator("dy2")) * y[1]
    moved = pullback(form, bundle)
    assert moved.component("dy1", "dy2") == y[1]
    pushed = push_vector(flat.frame("del2"), bundle, {"del2": "h2"})
    assert pushed == bundle.frame("h2")


def test_as_expr_labels(flat):
    form = flat.generator("dy1") * sympy.Integer(2)
    assert form.as_expr() == 2 * sympy.Symbol("dy1")

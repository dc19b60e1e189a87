"""Tests for loading JSON configuration files."""

from pathlib import Path

import pytest
import sympy

from pvalgebra.algebra.diffpoly import jet
from pvalgebra.geometry.forms import exterior_derivative, wedge
from pvalgebra.integrations.config import (
    load_basis,
    load_bracket,
    load_coframe,
    load_flux,
    load_json,
    load_pair,
)

DATA_DIR = Path(__file__).parent.parent / "test_data"

k = sympy.Symbol("k")


class TestLoadFlux:
    def test_explicit_entries(self):
        flux = load_flux(DATA_DIR / "Hk.json")
        assert flux.dim == 3
        assert flux.entries == {(1, 2, 3): k}
        assert flux.table is None

    def test_symbolic(self):
        flux = load_flux(DATA_DIR / "H4.json")
        assert flux.table is not None
        assert len(flux.relations()) == 1

    def test_inline_mapping(self):
        flux = load_flux({"dim": 3, "entries": {"3,2,1": "x1"}})
        assert flux.entries == {(1, 2, 3): -jet("x1")}

    def test_bad_keys(self):
        with pytest.raises(ValueError):
            load_flux({"dim": 3, "entries": {"a,b,c": "1"}})

    def test_schema_version(self):
        with pytest.raises(ValueError):
            load_json({"schema": 2, "dim": 3})


class TestLoadPair:
    def test_concrete_pair(self):
        pair = load_pair(DATA_DIR / "pair.json")
        assert pair.n == 2
        assert pair.F == {}
        assert pair.Fhat == {(1, 2): k}
        assert pair.parameters == (k,)

    def test_symbolic_pair(self):
        pair = load_pair(DATA_DIR / "pair_symbolic.json")
        assert len(pair.relations) == 3
        assert pair.check().ok

    def test_bad_table(self):
        with pytest.raises(ValueError):
            load_pair({"base_dim": 2, "F": 3})


class TestLoadBasis:
    def test_heisenberg(self):
        basis = load_basis(DATA_DIR / "heisenberg.json")
        assert [element.name for element in basis.elements] == ["p1", "p2", "d2(x3)"]
        assert basis.bracket(0, 1) == {2: -k}

    def test_max_dorder_override(self):
        basis = load_basis(DATA_DIR / "heisenberg.json", max_dorder=1)
        assert len(basis) == 6


class TestLoadBracket:
    def test_virasoro(self):
        spec = load_bracket(DATA_DIR / "virasoro.json")
        L, c, lam = jet("L"), sympy.Symbol("c"), sympy.Symbol("lambda")
        assert spec.generators == ("L",)
        assert spec.entry("L", "L") == sympy.expand(jet("L", 1) + 2 * L * lam + c * lam**3)

    def test_bad_key(self):
        with pytest.raises(ValueError):
            load_bracket({"generators": ["u"], "brackets": {"u": "u"}})


class TestLoadCoframe:
    def test_bundle(self):
        coframe = load_coframe(DATA_DIR / "coframe.json")
        assert coframe.names == ["dy1", "dy2", "A"]
        assert coframe.frames == ["h1", "h2", "e"]
        assert len(coframe.relations) == 2
        F12 = sympy.Function("F[1,2]")(jet("y1"), jet("y2"))
        curvature = F12 * wedge(coframe.generator("dy1"), coframe.generator("dy2"))
        assert exterior_derivative(coframe.generator("A")) == curvature

    def test_non_closed_differential(self):
        data = {
            "coordinates": ["y1", "y2"],
            "generators": [
                {"name": "dy1", "coordinate": "y1"},
                {"name": "dy2", "coordinate": "y2"},
                {"name": "A", "frame": "e", "differential": "y1*dy2"},
            ],
        }
        with pytest.raises(ValueError):
            load_coframe(data)

    def test_undeclared_coordinate(self):
        data = {"coordinates": ["y1"], "generators": [{"name": "dz", "coordinate": "z1"}]}
        with pytest.raises(ValueError):
            load_coframe(data)

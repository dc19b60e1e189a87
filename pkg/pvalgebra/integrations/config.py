"""
JSON configuration files: flux tables, dual pairs, conformal bases, bracket
tables and coframes. Every file carries ``"schema": 1``; values are DSL text.
"""

import json
import logging
from collections.abc import Mapping
from pathlib import Path

import sympy

from ..algebra.brackets import DEFAULT_MAX_LAMBDA_DEGREE, BracketSpec, skew_complete
from ..algebra.diffpoly import coordinates, jet, parse_jet_name
from ..algebra.quantize import DEFAULT_MAX_DORDER, ConformalBasis
from ..algebra.relations import AtomTable, ClosureRelation
from ..geometry.forms import Coframe, CoframeGenerator, DForm
from ..geometry.sigma import Flux, constant_flux, darboux_spec, symbolic_flux
from ..geometry.tduality import SYMBOLIC, DualPair, build_pair
from .dsl import Scope, evaluate, sigma_scope

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def load_json(source) -> dict:
    """Read a configuration from a path or take an already-decoded mapping."""
    if isinstance(source, Mapping):
        data = dict(source)
    else:
        path = Path(source)
        logger.info(f"Loading configuration {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ValueError(f"Unsupported configuration schema {schema!r}, expected {SCHEMA_VERSION}")
    return data


def _indices(key: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in key.split(","))
    except ValueError:
        raise ValueError(f"Table keys are comma-separated indices, got {key!r}") from None


def _parameters(data: Mapping) -> dict[str, sympy.Symbol]:
    return {name: sympy.Symbol(name) for name in data.get("parameters", [])}


def load_flux(source) -> Flux:
    """
    ``{"dim": 3, "symbolic": false, "entries": {"1,2,3": "k"}, "parameters": ["k"], "closed": true}``
    """
    data = load_json(source)
    dim = int(data["dim"])
    name = data.get("name", "H")
    closed = bool(data.get("closed", True))
    if data.get("symbolic", False):
        return symbolic_flux(dim, name, closed)
    scope = sigma_scope(dim, parameters=_parameters(data))
    values = {_indices(key): evaluate(text, scope) for key, text in data.get("entries", {}).items()}
    return constant_flux(dim, values, closed=closed, name=name)


def base_scope(n: int, parameters: Mapping[str, sympy.Symbol] | None = None) -> Scope:
    return Scope({f"y{i}" for i in range(1, n + 1)}, {"y": coordinates("y", n)}, {}, dict(parameters or {}))


def load_pair(source) -> DualPair:
    """``{"base_dim": 2, "F": null, "Fhat": {"1,2": "k"}, "Omega": "symbolic", "parameters": ["k"]}``"""
    data = load_json(source)
    n = int(data["base_dim"])
    parameters = _parameters(data)
    scope = base_scope(n, parameters)
    tables = {}
    for name in ("F", "Fhat", "Omega"):
        value = data.get(name, SYMBOLIC)
        if value is None or value == SYMBOLIC:
            tables[name] = value
        elif isinstance(value, Mapping):
            tables[name] = {_indices(key): evaluate(text, scope) for key, text in value.items()}
        else:
            raise ValueError(f"{name} must be '{SYMBOLIC}', null or a table, got {value!r}")
    return build_pair(n, tables["F"], tables["Fhat"], tables["Omega"], parameters.values())


def load_basis(source, max_dorder: int | None = None) -> ConformalBasis:
    """
    ``{"dim": 1, "flux": {...}, "generators": ["p1", "d(x1)"], "names": [...], "max_dorder": 0}``

    ``max_dorder`` overrides the file.
    """
    data = load_json(source)
    dim = int(data["dim"])
    flux = load_flux(data["flux"]) if data.get("flux") else None
    spec = darboux_spec(dim, flux)
    tables = {flux.name: flux.table} if flux is not None and flux.table is not None else None
    scope = sigma_scope(dim, tables=tables, parameters=_parameters(data))
    generators = [evaluate(text, scope) for text in data["generators"]]
    if max_dorder is None:
        max_dorder = int(data.get("max_dorder", DEFAULT_MAX_DORDER))
    return ConformalBasis.from_generators(spec, generators, max_dorder, data.get("names"))


def _families(names) -> dict[str, tuple[sympy.Symbol, ...]]:
    families: dict[str, list] = {}
    for name in names:
        gen, order = parse_jet_name(name)
        if order:
            raise ValueError(f"Coordinates are order-0 generators, got {name}")
        family = gen.rstrip("0123456789")
        families.setdefault(family, []).append(jet(gen))
    return {family: tuple(symbols) for family, symbols in families.items()}


def load_bracket(source) -> BracketSpec:
    """``{"generators": ["u"], "coordinates": [], "brackets": {"u,u": "2*u*lambda + d(u)"}}``"""
    data = load_json(source)
    generators = list(data["generators"])
    scope = Scope(set(generators), _families(data.get("coordinates", [])), {}, _parameters(data))
    entries = {}
    for key, text in data.get("brackets", {}).items():
        parts = key.split(",")
        if len(parts) != 2:
            raise ValueError(f"Bracket keys are 'left,right', got {key!r}")
        entries[(parts[0].strip(), parts[1].strip())] = evaluate(text, scope)
    return skew_complete(generators, entries,
                         max_lambda_degree=int(data.get("max_lambda_degree", DEFAULT_MAX_LAMBDA_DEGREE)))


def load_coframe(source) -> Coframe:
    """
    ``{"coordinates": ["y1", "y2"], "tables": [{"name": "F", "rank": 2}],
    "generators": [{"name": "dy1", "coordinate": "y1"}, ...,
    {"name": "A", "frame": "e", "differential": "F[1,2]*dy1*dy2"}],
    "relations": [{"closed": "F"}]}``
    """
    data = load_json(source)
    families = _families(data.get("coordinates", []))
    coords = tuple(symbol for symbols in families.values() for symbol in symbols)
    tables = {t["name"]: AtomTable(t["name"], int(t["rank"]), coords) for t in data.get("tables", [])}

    generators = []
    for entry in data["generators"]:
        coordinate = jet(entry["coordinate"]) if entry.get("coordinate") else None
        if coordinate is not None and coordinate not in coords:
            raise ValueError(f"Generator {entry['name']} refers to undeclared coordinate {entry['coordinate']}")
        frame = entry.get("frame") or (f"h{coords.index(coordinate) + 1}" if coordinate is not None else None)
        if frame is None:
            raise ValueError(f"Generator {entry['name']} needs a frame name")
        generators.append(CoframeGenerator(entry["name"], frame, coordinate))
    name = data.get("name", "coframe")
    provisional = Coframe(name, tuple(generators))
    scope = Scope({str(c) for c in coords}, families, tables, _parameters(data), provisional)

    def form(text: str) -> DForm:
        value = evaluate(text, scope)
        return value if isinstance(value, DForm) else provisional.scalar(value)

    differentials = {entry["name"]: dict(form(entry["differential"]).terms)
                     for entry in data["generators"] if entry.get("differential")}

    relations = []
    for entry in data.get("relations", []):
        if "closed" in entry:
            relations.append(ClosureRelation(tables[entry["closed"]]))
            continue
        table = tables[entry["table"]]
        rhs = {}
        for indices, value in form(entry["equals"]).terms.items():
            positions = [provisional.generators[i].coordinate for i in indices]
            if None in positions:
                raise ValueError(f"The right-hand side for {table.name} must be a base form")
            rhs[tuple(coords.index(c) + 1 for c in positions)] = value
        relations.append(ClosureRelation(table, rhs))

    coframe = Coframe(name, tuple(generators), differentials, tuple(relations))
    failures = {key: value for key, value in coframe.check_closed().items() if not value.is_zero}
    if failures:
        raise ValueError(f"Assigned differentials are not closed modulo the relations: {sorted(failures)}")
    return coframe

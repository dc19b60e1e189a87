"""
Command-line surface: every verification suite behind one ``pvalgebra``
command. Exit status 0 when all requested residuals vanish, 1 with the first
failing residual printed otherwise, 2 on bad input.
"""

import argparse
import dataclasses
import functools
import itertools
import json
import logging
import operator
import os
import sys

from .algebra.brackets import (
    CheckReport,
    check_axiom_suite,
    check_jacobi_generators,
    lambda_bracket,
)
from .algebra.cdalg import check_weak_cd, courant_bracket, dorfman, from_spec, pairing
from .algebra.diffpoly import jet
from .algebra.oracle import darboux_distribution, oracle_lambda_bracket
from .algebra.quantize import (
    DEFAULT_MAX_HBAR,
    DEFAULT_MAX_WORD,
    check_confluence,
    check_idempotence,
    check_lie_algebra,
    check_limit,
    check_quasi_commutativity,
)
from .geometry.sigma import (
    Flux,
    GenSection,
    as_function,
    darboux_spec,
    geometric_dorfman,
    geometric_pairing,
    sigma_coframe,
    symbolic_flux,
    verify_correspondence,
)
from .geometry.tduality import (
    DualPair,
    InvariantSection,
    clifford_check,
    derived_bracket_check,
    exhaustive_intertwine,
    exhaustive_theorem_cases,
    invariant_form_basis,
    psi,
    split,
    split_form,
    symbolic_section,
    t_transform,
    to_dual,
    to_total,
    verify_commute,
    verify_intertwine,
    verify_tduality_theorem,
)
from .integrations.config import load_basis, load_bracket, load_flux, load_pair
from .integrations.dsl import evaluate, pair_scope, sigma_scope
from .integrations.pandas import summarize_reports
from .integrations.printing import FORMATS, SCHEMA_VERSION, render, report_text, to_record, to_text
from .utils.errors import ParseError
from .utils.log import force_logging
from .utils.sampling import DEFAULT_SAMPLE_SIZE, DEFAULT_SEED, make_rng, random_samples, random_triples

logger = logging.getLogger(__name__)

FORMAT_VARIABLE = "PVALGEBRA_FORMAT"

TDUALITY_CHECKS = ("intertwine", "commute", "clifford", "derived", "theorem")
QUANTIZE_CHECKS = ("lie", "pbw", "limit", "qcom")


class Output:
    """Collects named values and check reports and renders them in one format."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.values = []
        self.reports = []

    def value(self, label: str, value, **kwargs):
        self.values.append((label, value, kwargs))

    def report(self, report: CheckReport):
        self.reports.append(report)

    @property
    def ok(self) -> bool:
        return all(report.ok for report in self.reports)

    def first_failure(self) -> str | None:
        for report in self.reports:
            failure = report.first_failure()
            if failure is not None:
                label, reduced = failure
                raw = report.residuals[label]
                lines = [f"FAILED {report.name} {label}: {to_text(reduced)}"]
                if raw != reduced:
                    lines.append(f"  raw: {to_text(raw)}")
                lines.extend(f"  {key}: {note}" for key, note in report.notes.items())
                return "\n".join(lines)
        return None

    def render(self) -> str:
        if self.fmt == "json":
            document = {
                "schema": SCHEMA_VERSION,
                "values": [{"label": label, **to_record(value, **kwargs)} for label, value, kwargs in self.values],
                "reports": [report.to_dict(to_text) for report in self.reports],
                "ok": self.ok,
            }
            return json.dumps(document, indent=2)
        lines = [f"{label} = {render(value, self.fmt)}" for label, value, _ in self.values]
        lines.extend(report_text(report) for report in self.reports)
        if self.reports:
            lines.append(summarize_reports(self.reports).to_string(index=False))
        return "\n".join(lines)


# ---------------------------------------------------------------------
# Shared inputs
# ---------------------------------------------------------------------

def _flux(args) -> Flux:
    flux = load_flux(args.flux) if args.flux else symbolic_flux(args.dim)
    if flux.dim != args.dim:
        raise ValueError(f"Flux file is for N = {flux.dim}, but --dim is {args.dim}")
    return flux


def _sigma_scope(flux: Flux):
    tables = {flux.name: flux.table} if flux.table is not None else None
    return sigma_scope(flux.dim, tables=tables, coframe=sigma_coframe(flux.dim, flux))


def _generators(dim: int) -> list[str]:
    return [f"x{i}" for i in range(1, dim + 1)] + [f"p{i}" for i in range(1, dim + 1)]


# ---------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------

def cmd_check_pva(args, out: Output):
    """PVA axioms on seeded samples and the Jacobiator on every generator triple."""
    if args.bracket:
        spec = load_bracket(args.bracket)
        coords = ()
    else:
        if args.dim is None:
            raise ValueError("check-pva needs --dim or --bracket")
        flux = dataclasses.replace(_flux(args), closed=args.closed)
        spec = darboux_spec(args.dim, flux)
        coords = flux.coords
        obstruction = {} if flux.closed else flux.obstruction()
        for indices, value in sorted(obstruction.items()):
            out.value(f"dH[{','.join(map(str, indices))}]", value)
    samples = random_samples(make_rng(args.seed), spec.generators, coords, args.samples, atoms=bool(coords))
    out.report(check_axiom_suite(spec, samples))
    out.report(check_jacobi_generators(spec))


def cmd_derive_cd(args, out: Output):
    """Dorfman bracket, pairing and Courant bracket on the requested pairs."""
    flux = _flux(args)
    cd = from_spec(darboux_spec(args.dim, flux))
    scope = _sigma_scope(flux)
    for index, (left, right) in enumerate(args.pair or []):
        f, g = _function(left, scope), _function(right, scope)
        out.value(f"dorfman[{index}]", dorfman(f, g, cd))
        out.value(f"pairing[{index}]", pairing(f, g, cd))
        out.value(f"courant[{index}]", courant_bracket(f, g, cd))
    if args.check:
        triples = random_triples(make_rng(args.seed), _generators(args.dim), flux.coords, args.samples)
        out.report(check_weak_cd(cd, triples))


def _function(text: str, scope):
    value = evaluate(text, scope)
    return as_function(value) if isinstance(value, GenSection) else value


def _section(text: str, scope) -> GenSection:
    value = evaluate(text, scope)
    if not isinstance(value, GenSection):
        raise ValueError(f"{text!r} is not a section literal sec(xi=..., alpha=...)")
    return value


def cmd_as_bracket(args, out: Output):
    """λ-bracket of section currents against the twisted Dorfman bracket of the sections."""
    flux = _flux(args)
    scope = _sigma_scope(flux)
    s, t = _section(args.left, scope), _section(args.right, scope)
    spec = darboux_spec(args.dim, flux)
    f, g = as_function(s), as_function(t)
    out.value("f_s", f)
    out.value("f_t", g)
    out.value("lambda_bracket", spec.reduce(lambda_bracket(f, g, spec)), as_lambda=True)
    bracket = geometric_dorfman(s, t, flux)
    out.value("dorfman", bracket)
    out.value("f_dorfman", as_function(bracket))
    out.value("pairing", geometric_pairing(s, t))
    out.report(verify_correspondence(s, t, flux, args.j_max))


def _invariant_section(text: str | None, pair: DualPair, label: str) -> InvariantSection:
    if text is None:
        return symbolic_section(pair, label)
    value = evaluate(text, pair_scope(pair))
    if not isinstance(value, InvariantSection):
        raise ValueError(f"{text!r} is not a section literal")
    return value


def _invariant_form(text: str | None, pair: DualPair):
    if text is None:
        forms = [form for degree in range(pair.n + 2) for form in invariant_form_basis(pair, degree)]
        return functools.reduce(operator.add, forms)
    value = evaluate(text, pair_scope(pair))
    if not hasattr(value, "terms"):
        value = pair.E.scalar(value)
    return split_form(value, pair.base)


def cmd_tdualize(args, out: Output):
    """T-duality suites on a dual pair of circle bundles."""
    pair = load_pair(args.pair)
    if args.base_dim is not None and args.base_dim != pair.n:
        raise ValueError(f"Pair file has base dimension {pair.n}, but --base-dim is {args.base_dim}")
    out.report(pair.check())
    checks = TDUALITY_CHECKS if args.check == "all" else (args.check,)
    explicit = args.left is not None or args.right is not None
    s = _invariant_section(args.left, pair, "s")
    t = _invariant_section(args.right, pair, "t")
    omega = _invariant_form(args.omega, pair)

    if "intertwine" in checks:
        out.report(verify_intertwine(pair, omega) if args.omega else exhaustive_intertwine(pair))
    if "commute" in checks:
        out.report(verify_commute(pair, s, omega))
    if "clifford" in checks:
        report = clifford_check(s, to_total(omega, pair))
        report.merge(clifford_check(psi(s), to_dual(t_transform(omega), pair)), prefix="dual")
        out.report(report)
    if "derived" in checks:
        report = derived_bracket_check(pair, s, t, to_total(omega, pair))
        report.merge(derived_bracket_check(pair, psi(s), psi(t), to_dual(t_transform(omega), pair)), prefix="dual")
        out.report(report)
    if "theorem" in checks:
        if explicit:
            out.value("bracket_H", split(geometric_dorfman(to_total(s, pair), to_total(t, pair), pair.H), pair))
            dual = geometric_dorfman(to_dual(psi(s), pair), to_dual(psi(t), pair), pair.Hhat)
            out.value("bracket_Hhat", split(dual, pair))
            out.report(verify_tduality_theorem(pair, s, t))
        else:
            out.report(exhaustive_theorem_cases(pair))


def cmd_quantize(args, out: Output):
    """Truncated enveloping-algebra suites on a conformal basis."""
    basis = load_basis(args.basis, args.max_dorder)
    checks = QUANTIZE_CHECKS if args.check == "all" else (args.check,)
    if "lie" in checks:
        out.report(check_lie_algebra(basis))
    if "pbw" in checks:
        out.report(check_confluence(basis, args.max_word, args.max_hbar))
        out.report(check_idempotence(basis, args.max_word))
    if "limit" in checks:
        out.report(check_limit(basis))
    if "qcom" in checks:
        report = CheckReport("quasi_commutativity")
        names = [element.name for element in basis.elements]
        for a, b, c in itertools.product(names, repeat=3):
            report.merge(check_quasi_commutativity(a, b, c, basis, max_hbar=args.max_hbar))
        out.report(report)


def cmd_oracle(args, out: Output):
    """δ-calculus brackets against the master formula."""
    flux = _flux(args)
    spec = darboux_spec(args.dim, flux)
    table = darboux_distribution(args.dim, flux.component)
    scope = _sigma_scope(flux)
    if args.left is not None or args.right is not None:
        if args.left is None or args.right is None:
            raise ValueError("oracle needs both --left and --right")
        pairs = [(evaluate(args.left, scope), evaluate(args.right, scope))]
    else:
        generators = _generators(args.dim)
        pairs = [(jet(a), jet(b)) for a, b in itertools.product(generators, repeat=2)]
        samples = random_samples(make_rng(args.seed), generators, flux.coords, 2 * args.samples)
        pairs.extend(zip(samples[::2], samples[1::2]))
    report = CheckReport("oracle")
    for index, (f, g) in enumerate(pairs):
        expected = oracle_lambda_bracket(f, g, table)
        if len(pairs) == 1:
            out.value("oracle", spec.reduce(expected), as_lambda=True)
        report.add(f"oracle[{index}]", lambda_bracket(f, g, spec) - expected, spec.relations)
    out.report(report)


# ---------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    default_format = os.environ.get(FORMAT_VARIABLE, "text")

    parser = argparse.ArgumentParser(prog="pvalgebra", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--format", choices=FORMATS, default=default_format,
                        help=f"output format (default from ${FORMAT_VARIABLE}, else text)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the random samples")
    parser.add_argument("--samples", type=int, default=DEFAULT_SAMPLE_SIZE, help="number of random samples")
    parser.add_argument("--verbose", action="store_true", help="log every check")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_flux(p, required_dim=True):
        p.add_argument("--dim", type=int, required=required_dim, help="number of target coordinates N")
        p.add_argument("--flux", help="flux JSON file (default: fully symbolic H)")

    p = sub.add_parser("check-pva", help="PVA axioms and Jacobi identity of the twisted bracket")
    with_flux(p, required_dim=False)
    p.add_argument("--closed", action="store_true", help="impose dH = 0")
    p.add_argument("--bracket", help="bracket-table JSON file instead of the phase-space bracket")
    p.set_defaults(handler=cmd_check_pva)

    p = sub.add_parser("derive-cd", help="derived Dorfman bracket, pairing and Courant bracket")
    with_flux(p)
    p.add_argument("--pair", nargs=2, action="append", metavar=("LEFT", "RIGHT"), help="expressions to combine")
    p.add_argument("--check", action="store_true", help="run the weak Courant-Dorfman axioms")
    p.set_defaults(handler=cmd_derive_cd)

    p = sub.add_parser("as-bracket", help="λ-brackets of sections against the geometric Dorfman bracket")
    with_flux(p)
    p.add_argument("--left", required=True, help="section literal")
    p.add_argument("--right", required=True, help="section literal")
    p.add_argument("--j-max", type=int, default=6, help="highest product checked to vanish")
    p.set_defaults(handler=cmd_as_bracket)

    p = sub.add_parser("tdualize", help="T-duality suites on a dual pair")
    p.add_argument("--pair", required=True, help="dual-pair JSON file")
    p.add_argument("--base-dim", type=int, help="expected base dimension")
    p.add_argument("--check", choices=TDUALITY_CHECKS + ("all",), default="all")
    p.add_argument("--left", help="section literal on E (default: symbolic)")
    p.add_argument("--right", help="section literal on E (default: symbolic)")
    p.add_argument("--omega", help="form on E (default: general symbolic form)")
    p.set_defaults(handler=cmd_tdualize)

    p = sub.add_parser("quantize", help="truncated quantization suites on a conformal basis")
    p.add_argument("--basis", required=True, help="basis JSON file")
    p.add_argument("--check", choices=QUANTIZE_CHECKS + ("all",), default="all")
    p.add_argument("--max-word", type=int, default=DEFAULT_MAX_WORD)
    p.add_argument("--max-dorder", type=int, help="override the basis file")
    p.add_argument("--max-hbar", type=int, default=DEFAULT_MAX_HBAR)
    p.set_defaults(handler=cmd_quantize)

    p = sub.add_parser("oracle", help="δ-calculus cross-check of the λ-bracket")
    with_flux(p)
    p.add_argument("--left", help="expression (default: all generator pairs and random pairs)")
    p.add_argument("--right", help="expression")
    p.set_defaults(handler=cmd_oracle)

    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if args.format not in FORMATS:
        print(f"error: ${FORMAT_VARIABLE} must be one of {FORMATS}, got {args.format!r}", file=stderr)
        return 2
    force_logging(logging.getLogger("pvalgebra"), logging.INFO if args.verbose else logging.WARNING)

    out = Output(args.format)
    try:
        args.handler(args, out)
    except (ParseError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2

    print(out.render(), file=stdout)
    failure = out.first_failure()
    if failure is not None:
        print(failure, file=stdout)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

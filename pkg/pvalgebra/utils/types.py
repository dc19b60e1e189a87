from collections.abc import Mapping

import sympy

# A differential polynomial: a sympy expression in jet symbols with
# coefficients built from function atoms of the base coordinates.
DiffPoly = sympy.Expr

# A polynomial in the formal parameter lambda (and mu) with DiffPoly coefficients
LambdaPoly = sympy.Expr
LambdaMuPoly = sympy.Expr

# Increasing tuple of indices into an antisymmetric table or a coframe
IndexTuple = tuple[int, ...]

# Generator table entries keyed by (left generator, right generator)
BracketTable = Mapping[tuple[str, str], LambdaPoly]

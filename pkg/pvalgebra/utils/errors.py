"""Exceptions raised by pvalgebra.

All of them derive from the built-in exception a caller would already catch
for the same kind of mistake, so ``except ValueError`` keeps working.
"""


class NonPolynomialError(ValueError):
    """An expression is not a polynomial in the jet variables."""


class UnknownGeneratorError(KeyError):
    """A jet variable refers to a generator the bracket table does not know."""


class TruncationError(ValueError):
    """A computation would leave the configured truncation window."""


class RelationError(ValueError):
    """Explicit data violates a declared closedness relation."""


class CoframeMismatchError(ValueError):
    """Two forms or vector fields live over different coframes."""


class ParseError(ValueError):
    """A DSL text could not be parsed or resolved."""

    def __init__(self, message, *, line=None, column=None, text=None):
        self.line = line
        self.column = column
        self.text = text
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")

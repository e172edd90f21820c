"""Exception types shared across the package.

The hierarchy mirrors how failures are reported at the command line:
configuration problems, expression-evaluation problems, and domain
problems (argument outside the convergence disk) are distinct, because
they map to distinct process exit codes.
"""

from __future__ import annotations


class DefoscError(Exception):
    """Base class for all package-specific errors."""


class ExprError(DefoscError):
    """Problem with an expression source text."""


class ExprSyntaxError(ExprError):
    """Source text does not match the grammar.

    Attributes
    ----------
    offset : int
        Byte offset into the UTF-8 encoded source where parsing failed.
    expected : tuple[str, ...]
        Token descriptions that would have been accepted at that point.
    found : str
        Short description of what was actually there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = (), found: str = ""):
        super().__init__(message)
        self.offset = offset
        self.expected = expected
        self.found = found

    def __str__(self) -> str:
        base = super().__str__()
        parts = [f"{base} (byte offset {self.offset}"]
        if self.found:
            parts.append(f", found {self.found}")
        if self.expected:
            parts.append(f", expected one of: {', '.join(self.expected)}")
        parts.append(")")
        return "".join(parts)


class UnknownFunctionError(ExprSyntaxError):
    """A call names a function that is not built in."""


class EvalError(DefoscError):
    """Expression evaluation failed."""


class UnboundParameterError(EvalError):
    """A parameter appearing in the expression has no bound value."""

    def __init__(self, name: str):
        super().__init__(f"parameter {name!r} is not bound")
        self.name = name


class EvalDomainError(EvalError):
    """Arithmetic left the function's domain (division by zero, ln 0, overflow)."""


class ClosedFormInapplicableError(DefoscError):
    """The product-form evaluation of phi divides by a vanishing factor.

    Raised when F(k) = 0 for some 1 <= k <= n-1; callers fall back to the
    recurrence, which needs no division.
    """

    def __init__(self, k: int):
        super().__init__(f"closed form inapplicable: F({k}) = 0")
        self.k = k


class StructureOverflowError(DefoscError):
    """phi(n) exceeded double-precision range while extending a table."""

    def __init__(self, n: int):
        super().__init__(f"|phi(n)| overflowed double precision at n = {n}")
        self.n = n


class OutsideDomainError(DefoscError):
    """Argument lies outside the convergence disk of the deformed exponential."""

    def __init__(self, message: str, radius: float | None = None):
        super().__init__(message)
        self.radius = radius


class NonconvergenceError(DefoscError):
    """An iterative summation or quadrature exhausted its budget."""


class TableMismatchError(DefoscError):
    """Two objects built over different structure tables were combined."""


class DimensionMismatchError(DefoscError):
    """Matrix/vector dimensions do not agree."""


class WeightError(DefoscError):
    """A candidate weight failed validation or evaluation."""


class ConfigError(DefoscError):
    """A configuration file or command-line option is malformed."""

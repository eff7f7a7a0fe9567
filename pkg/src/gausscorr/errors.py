"""Exception hierarchy.

Two families map onto the CLI exit taxonomy: :class:`PreconditionError`
(bad input, exit 1) and :class:`DegeneracyError` (a numerically degenerate
quantity, exit 2).
"""


class GausscorrError(Exception):
    """Base class for all package errors."""


class PreconditionError(GausscorrError, ValueError):
    """An argument violates an operation's precondition."""


class ParseError(PreconditionError):
    """A function description could not be parsed.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message, text, position):
        self.text = text
        self.position = position
        super().__init__(f"{message} (at position {position} in {text!r})")


class ParityError(PreconditionError):
    """Parity requirements of the even/odd extension are not met."""


class ChannelError(PreconditionError):
    """A finite channel or value table is malformed."""


class DegeneracyError(GausscorrError, ArithmeticError):
    """A computed quantity is numerically degenerate."""


class NonIntegrableError(DegeneracyError):
    """A projection produced a non-finite coefficient."""

    def __init__(self, n, label):
        self.n = n
        super().__init__(
            f"coefficient a_{n} of {label} is not finite; the function grows "
            f"too fast for the quadrature rule"
        )

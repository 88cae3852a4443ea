"""Exception hierarchy shared by every module."""


class FieldGeomError(Exception):
    """Base class for all package errors."""


class InvalidDataError(FieldGeomError, ValueError):
    """Non-finite or badly shaped numeric input."""


class InvalidRegionError(FieldGeomError, ValueError):
    """A coordinate window that cannot be reduced into [0, 2pi)."""


class DegreeError(FieldGeomError, ValueError):
    """Form degree does not fit the requested operation."""


class UnsupportedDegreeError(DegreeError):
    """Field-space form degree beyond what the Koszul evaluator handles."""


class NearSingularDiffeoError(FieldGeomError, ArithmeticError):
    """Jacobian bound violated or Newton inversion did not converge."""


class FlowTooLargeError(NearSingularDiffeoError):
    """Flow time too large for the displacement representation."""


class DifferentiationError(FieldGeomError, ArithmeticError):
    """Directional derivative could not be formed along the requested ray."""


class DressingDegenerateError(FieldGeomError, ValueError):
    """Clock fields are not monotone, so no dressing exists."""


class ParseError(FieldGeomError, ValueError):
    """Syntax error in a Lagrangian source, with a 1-based position."""

    def __init__(self, message, line=1, col=1):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownSymbolError(ParseError):
    pass


class NestedDerivativeError(ParseError):
    pass


class ConfigError(FieldGeomError, ValueError):
    """Malformed scenario file."""

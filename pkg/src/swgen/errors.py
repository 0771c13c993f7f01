"""Exception types shared across the package."""


class SwgenError(Exception):
    """Base class for all package errors."""


class ValidationError(SwgenError):
    """Input violates a structural precondition (bad index, undeclared symbol, ...)."""


class ParseError(SwgenError):
    """Malformed expression or model file.

    Carries ``line`` and ``column`` (1-based) when the location is known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ZeroDenominator(SwgenError):
    """Attempt to invert the zero polynomial (an exact resonance)."""


class EvalSingular(SwgenError):
    """A denominator factor evaluated below the configured epsilon."""


class NotDiagonal(SwgenError):
    """Operator expected to be diagonal (bra = ket, delta = 0, harmonic = 0) is not."""


class Resonance(SwgenError):
    """A selected channel has an identically vanishing generator denominator."""

    def __init__(self, channel, denominator, order=None):
        self.channel = channel
        self.denominator = denominator
        self.order = order
        where = f" at order {order}" if order is not None else ""
        super().__init__(
            f"resonant channel {channel}{where}: denominator {denominator} is identically zero"
        )


class FockSingular(SwgenError):
    """A generator denominator vanishes identically on specific number states."""

    def __init__(self, channel, denominator, levels, order=None):
        self.channel = channel
        self.denominator = denominator
        self.levels = list(levels)
        self.order = order
        where = f" at order {order}" if order is not None else ""
        super().__init__(
            f"channel {channel}{where}: denominator {denominator} vanishes on Fock levels {self.levels}"
        )


class StaticComponent(SwgenError):
    """Fast-drive solver received a channel with zero harmonic."""


class NotTwoLevel(SwgenError):
    """Operation requires a single two-dimensional finite subspace."""


class NotCoRotating(SwgenError):
    """Term violates the co-rotating condition (harmonic = total signed ladder power)."""


class AssignmentAmbiguous(SwgenError):
    """Eigenstate overlap with its unperturbed label fell below 0.5."""

    def __init__(self, label, overlap):
        self.label = label
        self.overlap = overlap
        super().__init__(
            f"state {label}: best overlap {overlap:.3f} <= 0.5; outside the perturbative regime"
        )


class DegenerateSpectrum(SwgenError):
    """Unperturbed spectrum has (near-)colliding levels where a gap is required."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"degenerate level pairs: {self.pairs[:8]}"
                         + ("..." if len(self.pairs) > 8 else ""))


class ShapeMismatch(SwgenError):
    """Matrix shape does not match the basis implied by signature and truncation."""

"""Exception types shared across the package.

The CLI maps these onto process exit codes: validation problems exit 2,
feasibility problems exit 3, diverged training exits 4.
"""


class GecProbeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GecProbeError):
    """Bad configuration, malformed input file, or violated precondition."""


class GrammarFormatError(ValidationError):
    """A grammar file could not be parsed or failed a structural check."""


class GrammarIncomplete(ValidationError):
    """The grammar has no error-variant rule for the requested error type."""


class MissingForm(GecProbeError):
    """A lexical entry lacks the surface form a rule slot asked for."""


class NonFiniteGrammar(GecProbeError):
    """Enumeration was requested but the grammar contains a reachable cycle."""


class CapacityExceeded(GecProbeError):
    """The grammar cannot produce as many distinct pairs as requested."""


class MalformedM2(ValidationError):
    """An M2 file violated the format; carries the 1-based source line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LengthMismatch(ValidationError):
    """Parallel lists (e.g. hypotheses vs. test pairs) differ in length."""


class InfeasibleSplit(GecProbeError):
    """The corpus cannot satisfy the requested split sizes or setting."""


class InsufficientDonors(GecProbeError):
    """Fewer injectable donor pairs carry the pattern than were requested."""


class DivergenceDetected(GecProbeError):
    """Training produced a non-finite loss."""


class GradientMismatch(GecProbeError):
    """Analytic and finite-difference gradients disagree beyond tolerance."""

"""Error types raised by the toolkit.

Scenario-file invariant violations use Django's ``ValidationError`` directly;
everything below is specific to parsing and to the numerics.
"""


class NadsError(Exception):
    """Base class for every toolkit error."""


class ParseError(NadsError):
    """Malformed scenario file (bad JSON, unknown key, wrong structure)."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field


class NumericalError(NadsError):
    """A numerical evaluation could not produce a meaningful value."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.message = message
        self.index = index

    def at(self, index):
        """Attach the offending grid index (keeps an index already set)."""
        if self.index is None:
            self.index = index
        return self

    def __str__(self):
        if self.index is None:
            return self.message
        return f'{self.message} (grid index {self.index})'


class EnvelopeUnderflow(NumericalError):
    """Rabi envelope below the configured floor."""


class BranchAmbiguity(NumericalError):
    """Both square-root branches are equally close to the previous sample."""


class DegenerateRabi(NumericalError):
    """Nonadiabatic Rabi frequency too close to zero to divide by."""


class RatioUndefined(NumericalError):
    """Amplitude ratio overflows because the denominator amplitude vanishes."""


class StepUnderflow(NumericalError):
    """Integrator substep controller went below the minimum substep."""

"""Exception and warning types shared across the package."""


class CodetrackError(Exception):
    """Base class for all package errors."""


class GridMismatch(CodetrackError):
    """Two planes that must share a grid have different shapes."""


class GridTooSmall(CodetrackError):
    """Grid below the minimum size an operation supports."""


class NonPositiveSigma(CodetrackError):
    """Gaussian label bandwidth must be > 0."""


class ImaginaryResidue(CodetrackError):
    """Inverse transform of a supposedly Hermitian spectrum came out complex.

    Almost always indicates a conjugate-symmetry bug upstream (e.g. a
    spectrum product missing a conjugation), not a numerical issue.
    """


class DimensionMismatch(CodetrackError):
    """Array dimensions inconsistent with the operation's contract."""


class NonFinite(CodetrackError):
    """A solver iterate left the finite range (step size / penalty blow-up)."""


class EmptyWindow(CodetrackError):
    """Requested search window lies fully outside the image."""


class LengthMismatch(CodetrackError):
    """Prediction and ground-truth lists have different lengths."""


class ConfigError(CodetrackError):
    """Invalid or inconsistent run configuration."""


class DegenerateInputWarning(UserWarning):
    """Input too degenerate for the requested operation; a repair was applied."""

"""Exception types for the whole package.

Every error that a decision procedure can raise derives from MumfordError,
so callers (and the CLI) can distinguish "inconclusive at this precision or
truncation" from "bad input" without string matching.
"""


class MumfordError(Exception):
    """Base class for all package errors."""


class InputError(MumfordError):
    """Malformed literal, group file, or argument."""


# -- scalars ---------------------------------------------------------------

class DivisionByZero(MumfordError):
    pass


class PrecisionExhausted(MumfordError):
    """A quantity was needed below the tracked digit window."""


class NotASquare(MumfordError):
    pass


class ResidueChar2Unsupported(MumfordError):
    """Hensel square root over Q_2 is not provided."""


class NegativeValuation(MumfordError):
    pass


# -- matrices / tree -------------------------------------------------------

class SingularMatrix(MumfordError):
    pass


class NotHyperbolic(MumfordError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class CoincidentPoints(MumfordError):
    pass


class CoincidentEnds(MumfordError):
    pass


class NotPairwiseDistinct(MumfordError):
    pass


# -- groups ----------------------------------------------------------------

class NoCertificateFound(MumfordError):
    """Ping-pong search failed inside the radius; not a disproof."""


class UncertifiedGroup(MumfordError):
    pass


class WindowTooSmall(MumfordError):
    pass


class DegenerateRank(MumfordError):
    pass


# -- measures --------------------------------------------------------------

class DegenerateSpectrum(MumfordError):
    pass


class NotConverged(MumfordError):
    pass


# -- rigidity --------------------------------------------------------------

class GenusMismatch(MumfordError):
    pass


class LiftFailure(MumfordError):
    pass


class CrossRatioViolation(MumfordError):
    pass


class InsufficientSamples(MumfordError):
    pass


# -- forms / kernels -------------------------------------------------------

class PoleOnBoundary(MumfordError):
    """A pole cannot be placed on either side of an edge annulus at the
    available precision; choose an adjacent edge or raise precision."""


class TruncationNotConverged(MumfordError):
    pass


class RankAmbiguous(MumfordError):
    """A pivot sits too close to the truncation floor to call the rank."""


class HyperellipticUnsupported(MumfordError):
    pass


class CombinatorialBudgetExceeded(MumfordError):
    pass


INCONCLUSIVE_ERRORS = (
    PrecisionExhausted,
    NoCertificateFound,
    WindowTooSmall,
    NotConverged,
    TruncationNotConverged,
    RankAmbiguous,
    InsufficientSamples,
)

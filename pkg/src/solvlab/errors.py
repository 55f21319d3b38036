"""Exception types raised across solvlab."""


class SolvlabError(Exception):
    """Base class for all library errors."""


# spectral
class SingularMatrix(SolvlabError):
    pass


class EigenvalueOnUnitCircle(SolvlabError):
    pass


class NotDiagonalizable(SolvlabError):
    pass


class NonIntegralDeterminantPower(SolvlabError):
    pass


class EmptyBlock(SolvlabError):
    pass


# spaces / horoprod
class BranchingMismatch(SolvlabError):
    pass


class TruncationTooSmall(SolvlabError):
    pass


class HeightMismatch(SolvlabError):
    pass


class HeightConstraintViolated(SolvlabError):
    pass


class MalformedCoordinates(SolvlabError):
    pass


class RadiusExceeded(SolvlabError):
    pass


# boundary
class PrecisionExhausted(SolvlabError):
    pass


class BlockMismatch(SolvlabError):
    pass


class NotComparable(SolvlabError):
    pass


# groups
class DepthExceeded(SolvlabError):
    pass


class RelationViolated(SolvlabError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SearchBudgetExceeded(SolvlabError):
    pass


# qimaps
class DegenerateSamples(SolvlabError):
    pass


class NotHeightRespecting(SolvlabError):
    pass


class DomainMismatch(SolvlabError):
    pass


# modelcount
class ProperPowerBase(SolvlabError):
    pass

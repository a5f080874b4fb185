"""Exception hierarchy shared by every module."""


class BosonMomentsError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BosonMomentsError, ValueError):
    pass


class NonUnitaryInput(BosonMomentsError, ValueError):
    pass


class NotSymmetric(BosonMomentsError, ValueError):
    pass


class NotPositiveDefinite(BosonMomentsError, ValueError):
    pass


class NotSymplectic(BosonMomentsError, ValueError):
    pass


class WordTooLong(BosonMomentsError, ValueError):
    pass


class NonHermitianInput(BosonMomentsError, ValueError):
    pass


class LearnerFailure(BosonMomentsError):
    """Raised when a learning routine cannot certify its output.

    ``diagnostics`` carries whatever partial information was gathered
    before the failure so callers can still report it.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientColumns(LearnerFailure):
    pass


class RoundingAmbiguous(LearnerFailure):
    pass


class NegativeOccupation(LearnerFailure):
    pass


class NotACovariance(LearnerFailure):
    pass


class TooLarge(BosonMomentsError, ValueError):
    pass


class PhotonNumberMismatch(BosonMomentsError, ValueError):
    pass


class TooManyPhotons(BosonMomentsError, ValueError):
    pass


class PreconditionViolated(BosonMomentsError, ValueError):
    pass


class CutoffTooSmall(BosonMomentsError):
    pass


class MissingMoment(BosonMomentsError, KeyError):
    pass


class OddTotalDegree(BosonMomentsError, ValueError):
    pass


class DegreeMismatch(BosonMomentsError, ValueError):
    pass


class IncompleteMoments(BosonMomentsError, ValueError):
    pass


class RankDeficient(BosonMomentsError, ValueError):
    pass

"""Exception hierarchy. Every error the library raises derives from FamedError."""


class FamedError(Exception):
    pass


# input
class MalformedInput(FamedError):
    pass


class UnpairedFace(FamedError):
    pass


class OrderViolation(FamedError):
    pass


class UnknownEdge(FamedError):
    pass


# exact linear algebra / NZ data
class DimensionMismatch(FamedError):
    pass


class NoRationalSolution(FamedError):
    pass


class NoIntegerSolution(FamedError):
    pass


class RankDeficient(FamedError):
    pass


class DependentRowViolation(FamedError):
    pass


class SymplecticViolation(FamedError):
    pass


class NotAGeneratorPair(SymplecticViolation):
    pass


class NotFamed(FamedError):
    pass


# numerics
class OnBranchCut(FamedError):
    pass


class TooCloseToCut(FamedError):
    pass


class CutProximity(FamedError):
    pass


class PoleProximity(FamedError):
    pass


class NoConvergence(FamedError):
    pass


class DegenerateShape(FamedError):
    pass


class SingularShape(FamedError):
    pass


class ContinuationBreakdown(FamedError):
    pass


class BranchJump(FamedError):
    pass


class DegeneratePivot(FamedError):
    pass


class BandViolation(FamedError):
    pass


# asymptotics
class DimensionTooLarge(FamedError):
    pass


class TailBoundExceeded(FamedError):
    pass


class InsufficientSamples(FamedError):
    pass

"""Exception hierarchy.

Errors flagged ``numerical = True`` signal a numerical failure (CLI exit code 4);
the rest are configuration or precondition errors (exit code 2).
"""


class ImchaosError(Exception):
    numerical = False


class ConfigError(ImchaosError):
    pass


class CoincidentPoints(ImchaosError):
    pass


class OutsideDomain(ImchaosError):
    pass


class NotComparable(ImchaosError):
    pass


class NonUniformGrid(ImchaosError):
    pass


class BetaOutOfRange(ImchaosError):
    pass


class UnresolvedSupport(ImchaosError):
    pass


class UncoupledSchemes(ImchaosError):
    pass


class NotMeanZero(ImchaosError):
    pass


class NotEven(ImchaosError):
    pass


class ChargeConfigInvalid(ImchaosError):
    pass


class SizeMismatch(ImchaosError):
    pass


class PointsTooClose(ImchaosError):
    pass


class GridHitsEigenangle(ImchaosError):
    pass


class FactorizationFailure(ImchaosError):
    numerical = True


class DegenerateWeights(ImchaosError):
    numerical = True


class VarianceBlowup(ImchaosError):
    numerical = True


class InsufficientTail(ImchaosError):
    numerical = True


class InsufficientSamples(ImchaosError):
    numerical = True


class QuadratureDivergence(ImchaosError):
    numerical = True


class NormalizerTooSmall(ImchaosError):
    numerical = True


class BudgetExceeded(ImchaosError):
    numerical = True

    def __init__(self, message: str, partial: float | None = None):
        super().__init__(message)
        self.partial = partial

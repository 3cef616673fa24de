"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI reports
verbatim in its stderr JSON.
"""


class BonnetlabError(Exception):
    code = "ERROR"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


# fieldcore
class StencilError(BonnetlabError):
    code = "STENCIL"


class CapacityError(BonnetlabError):
    code = "CAPACITY"


class DomainError(BonnetlabError):
    code = "DOMAIN"


class ShapeError(BonnetlabError):
    code = "SHAPE"


# framegeom / tensorlab / bonnet
class InvariantError(BonnetlabError):
    code = "INVARIANT"


class UmbilicError(InvariantError):
    code = "INVARIANT_UMBILIC"


class VanishingT(InvariantError):
    code = "INVARIANT_T_ZERO"


class MetricError(BonnetlabError):
    code = "METRIC"


class DegenerateMetric(MetricError):
    code = "METRIC_DEGENERATE"


class RatioError(BonnetlabError):
    code = "RATIO"


class PositivityError(BonnetlabError):
    code = "POSITIVITY"


# solver
class IncompatibleGradient(BonnetlabError):
    code = "INCOMPATIBLE_GRADIENT"


class ConfigError(BonnetlabError):
    code = "CONFIG"


class NoProgress(BonnetlabError):
    code = "NO_PROGRESS"

    def __init__(self, message, result=None, code=None):
        super().__init__(message, code)
        self.result = result


class InvariantBreach(NoProgress):
    code = "INVARIANT_BREACH"

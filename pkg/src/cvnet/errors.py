"""Exception hierarchy.  Every domain error derives from :class:`CVError`."""


class CVError(ValueError):
    """Base class; the CLI maps it to exit code 1."""

    code = "CVError"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class WrongShape(CVError):
    code = "WrongShape"


class NotSymmetric(CVError):
    code = "NotSymmetric"


class NotBonaFide(CVError):
    code = "NotBonaFide"

    def __init__(self, message, nu=None):
        super().__init__(message)
        self.nu = nu

    def to_dict(self):
        out = super().to_dict()
        if self.nu is not None:
            out["nu"] = float(self.nu)
        return out


class DimensionMismatch(CVError):
    code = "DimensionMismatch"


class IndexOutOfRange(CVError):
    code = "IndexOutOfRange"


class NumericalFailure(CVError):
    code = "NumericalFailure"


class NegativeDiscriminant(CVError):
    code = "NegativeDiscriminant"


class DegenerateBlock(CVError):
    code = "DegenerateBlock"


class NegativeSqueezing(CVError):
    code = "NegativeSqueezing"


class InvalidInput(CVError):
    code = "InvalidInput"


class GOutOfRange(CVError):
    code = "GOutOfRange"


class GridTooSmall(CVError):
    code = "GridTooSmall"


class NegativeProbability(CVError):
    code = "NegativeProbability"

"""Exception and warning types raised across the package."""


class SurvivalError(Exception):
    """Base class for all errors raised by survbench."""


class DatasetError(SurvivalError, ValueError):
    """A survival dataset violates one of its invariants."""


class EmptyDataset(DatasetError):
    pass


class LengthMismatch(DatasetError):
    pass


class NonFiniteFeature(DatasetError):
    def __init__(self, row, col):
        self.row, self.col = row, col
        super().__init__(f"non-finite feature value at row {row}, column {col}")


class NonPositiveTime(DatasetError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"time at index {index} is not a positive finite number")


class NoEventsObserved(SurvivalError, ValueError):
    pass


class DimensionMismatch(SurvivalError, ValueError):
    pass


class OverflowGuard(SurvivalError, FloatingPointError):
    """Exponentiated risk scores are not representable."""


class SingularHessian(SurvivalError, ArithmeticError):
    """Newton system is singular; features are collinear or constant."""


class NotConverged(SurvivalError, RuntimeError):
    pass


class DegenerateSplit(SurvivalError, ValueError):
    pass


class NoComparablePairs(SurvivalError, ValueError):
    pass


class NoCasesOrControls(SurvivalError, ValueError):
    pass


class ZeroVariance(SurvivalError, ValueError):
    pass


class CalibrationFailed(SurvivalError, RuntimeError):
    pass


class InsufficientStratum(SurvivalError, ValueError):
    pass


class TooFewSubjects(SurvivalError, ValueError):
    pass


class AllCandidatesFailed(SurvivalError, RuntimeError):
    pass


class EmptySweep(SurvivalError, ValueError):
    pass


class ConfigError(SurvivalError, ValueError):
    pass


class MissingColumn(SurvivalError, KeyError):
    pass


class UnparseableValue(SurvivalError, ValueError):
    def __init__(self, row, col, value):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"cannot parse {value!r} at row {row}, column {col!r}")


class AllRowsDropped(SurvivalError, ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


class ZeroWeightWarning(UserWarning):
    """An IPCW weight was undefined (censoring survival of zero)."""


class GridClampWarning(UserWarning):
    """An evaluation time fell beyond the prediction grid."""

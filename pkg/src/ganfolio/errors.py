"""Exception types shared across the package."""


class GanfolioError(Exception):
    """Base class for all package errors."""


class ShapeError(GanfolioError):
    """Operand shapes are incompatible for the requested operation."""


class NonFiniteError(GanfolioError):
    """A forward or backward pass produced an infinity or NaN."""


class DataError(GanfolioError):
    """A price file or price matrix violates its invariants."""


class ConfigError(GanfolioError):
    """A configuration value is out of range or inconsistent."""


class UndefinedStatisticError(GanfolioError):
    """The requested statistic is undefined on this input (e.g. zero variance)."""


class InsufficientDataError(GanfolioError):
    """Not enough observations to estimate the requested quantity."""


class DegenerateRiskError(GanfolioError):
    """Portfolio risk is numerically zero along the optimal direction."""


class CheckpointError(GanfolioError):
    """A checkpoint file is corrupt, truncated, or has the wrong version."""


class ModeError(CheckpointError):
    """A checkpoint or bundle is in the wrong generator mode for the operation."""


class TrainingAborted(GanfolioError):
    """Training stopped because a loss became non-finite."""

    def __init__(self, message, epoch=None, index=None):
        super().__init__(message)
        self.epoch = epoch
        self.index = index

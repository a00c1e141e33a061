"""Exception hierarchy shared by every module of the package."""


class PanelCPError(Exception):
    """Base class for all errors raised by :mod:`panelcp`."""


class InvalidDataError(PanelCPError, ValueError):
    """Input values are malformed (wrong shape, non-finite entries)."""


class InputError(InvalidDataError):
    """A panel file could not be parsed into a complete N x T matrix."""


class UnsupportedHorizonError(PanelCPError, ValueError):
    """The panel length is too short for the requested statistic."""


class ParameterError(PanelCPError, ValueError):
    """A tuning parameter or configuration value is out of range."""


class DegenerateDataError(PanelCPError, ArithmeticError):
    """The data carry no variation the requested quantity can use."""


class EstimationError(PanelCPError, ArithmeticError):
    """An estimated covariance is too far from positive semidefinite to repair."""

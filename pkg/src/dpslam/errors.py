"""Exception types raised by the simulator and estimators."""


class DPSlamError(Exception):
    """Base class for all package errors."""


class DegenerateGeometry(DPSlamError, ValueError):
    """Geometry for which an angle, a Jacobian or an intersection is undefined."""


class NegativeRange(DPSlamError, ValueError):
    """Measured TOA does not exceed the predicted clock bias."""


class SingularInnovation(DPSlamError, ArithmeticError):
    """EKF innovation covariance is numerically singular."""


class SingularCovariance(DPSlamError, ArithmeticError):
    """A cluster or birth covariance could not be inverted."""


class ConfigError(DPSlamError, ValueError):
    """Invalid scenario configuration."""

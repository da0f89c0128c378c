"""Exception hierarchy. Each class carries the CLI exit code for its failure mode."""


class AMBError(Exception):
    exit_code = 1


class ConfigError(AMBError):
    """Configuration does not conform to the schema."""

    exit_code = 2

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ContactError(AMBError):
    """A pose puts the flywheel in contact with (or through) a pole face."""

    exit_code = 3

    def __init__(self, message, pole=None):
        self.pole = pole
        super().__init__(message)


class AmplifierLimitError(AMBError):
    """A coil MMF exceeds turns * max_current."""

    exit_code = 4

    def __init__(self, message, coil=None):
        self.coil = coil
        super().__init__(message)


class NumericalError(AMBError):
    exit_code = 5


class RegressionError(NumericalError):
    pass


class CalibrationError(NumericalError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)

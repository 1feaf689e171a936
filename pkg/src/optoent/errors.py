"""Exception hierarchy. ``exit_code`` is the CLI contract."""


class OptoEntError(Exception):
    exit_code = 1


class ConfigError(OptoEntError, ValueError):
    exit_code = 2


class BracketInvalid(ConfigError):
    pass


class StepTooLarge(ConfigError):
    pass


class UnstableSystem(OptoEntError):
    exit_code = 3


class RegimeViolation(OptoEntError):
    exit_code = 4


class NumericalFailure(OptoEntError):
    exit_code = 5


class NonConvergence(NumericalFailure):
    pass


class UnphysicalState(NumericalFailure):
    pass


class PathDisagreementWarning(RuntimeWarning):
    """Closed-form and spectral entanglement paths disagree."""

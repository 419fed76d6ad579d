"""Exception taxonomy. Each class carries the CLI exit code it maps to."""


class NeutralPAPError(Exception):
    exit_code = 1


class ConfigError(NeutralPAPError):
    exit_code = 1


class NotHyperbolic(NeutralPAPError):
    exit_code = 2


class ThetaNotContractive(NeutralPAPError):
    exit_code = 3


class MaxIterExceeded(NeutralPAPError):
    exit_code = 4


class SpectrumInSector(NeutralPAPError):
    exit_code = 5


class DomainError(NeutralPAPError, ValueError):
    exit_code = 6


class ZeroGap(NeutralPAPError):
    exit_code = 7


class QuadratureFail(NeutralPAPError):
    exit_code = 8


class SearchExhausted(NeutralPAPError):
    exit_code = 9


class WindowTooSmall(NeutralPAPError):
    exit_code = 10

"""Exception hierarchy. Each class carries a short machine-readable category
that the CLI reports alongside its exit code."""


class OffloadError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(OffloadError, ValueError):
    category = "config"
    exit_code = 2


class ScenarioError(OffloadError, ValueError):
    category = "scenario"
    exit_code = 3


class CheckpointError(OffloadError, ValueError):
    category = "checkpoint"
    exit_code = 4


class NumericalError(OffloadError, ArithmeticError):
    category = "numerical"
    exit_code = 5


class ReportIOError(OffloadError, OSError):
    category = "io"
    exit_code = 6

"""Error types shared by the library and the CLI.

Each class carries the process exit code the CLI reports for it.
"""


class FractennaError(Exception):
    exit_code = 1


class ConfigError(FractennaError, ValueError):
    exit_code = 2


class DimensionConflictError(FractennaError, ValueError):
    exit_code = 4


class DisconnectedIslandError(FractennaError, ValueError):
    exit_code = 4


class GridFitError(FractennaError, ValueError):
    exit_code = 4


class PoleError(FractennaError, ValueError):
    exit_code = 2


class NonPhysicalError(FractennaError, ValueError):
    exit_code = 2


class SolverDivergenceError(FractennaError, RuntimeError):
    exit_code = 3


class DegenerateSpectrumError(FractennaError, ValueError):
    exit_code = 3


class OutOfRangeError(FractennaError, ValueError):
    exit_code = 2


class CheckpointError(FractennaError, ValueError):
    exit_code = 2


class MissingArtifactError(FractennaError, FileNotFoundError):
    exit_code = 5

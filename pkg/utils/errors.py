"""
Error types shared by every tool in the repo.

The command-line front end maps these onto exit codes:
configuration problems exit with 2, numeric failures with 3.
"""


class EchoSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(EchoSimError, ValueError):
    """A config file or preset failed validation."""


class SequenceError(EchoSimError, ValueError):
    """A pulse sequence is mis-ordered, overlapping or outside its window."""


class StepSizeError(EchoSimError, ValueError):
    """An integration step is too coarse for the drive or detuning."""


class PropagationError(EchoSimError, ArithmeticError):
    """
    A density matrix became non-finite during propagation.

    Carries the detuning of the first failing atom so the run can report it.
    """

    def __init__(self, message: str, delta_opt: float = float("nan"), delta_spin: float = 0.0):
        super().__init__(message)
        self.delta_opt = delta_opt
        self.delta_spin = delta_spin

    def __reduce__(self):
        return (type(self), (str(self), self.delta_opt, self.delta_spin))

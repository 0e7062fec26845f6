# Shared utilities module
from .errors import (
    EchoSimError,
    ConfigError,
    SequenceError,
    StepSizeError,
    PropagationError
)
from .io_helpers import safe_name, write_table, write_json, write_workbook
from .logs import configure_logging

__all__ = [
    'EchoSimError',
    'ConfigError',
    'SequenceError',
    'StepSizeError',
    'PropagationError',
    'safe_name',
    'write_table',
    'write_json',
    'write_workbook',
    'configure_logging'
]

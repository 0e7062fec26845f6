# Ensemble runs and parameter scans
from .runner import (
    RK4,
    EXPM,
    PURE_RK4,
    INTEGRATORS,
    BLOCK_SIZE,
    Sampling,
    RunConfig,
    RunResult,
    AtomHistory,
    sample_times,
    effective_rates,
    run,
    echo_window,
    measure_echo
)
from .scans import STORAGE, B2_AREA, SCAN_COLUMNS, ScanResult, scan_storage, scan_b2_area

__all__ = [
    'RK4',
    'EXPM',
    'PURE_RK4',
    'INTEGRATORS',
    'BLOCK_SIZE',
    'Sampling',
    'RunConfig',
    'RunResult',
    'AtomHistory',
    'sample_times',
    'effective_rates',
    'run',
    'echo_window',
    'measure_echo',
    'STORAGE',
    'B2_AREA',
    'SCAN_COLUMNS',
    'ScanResult',
    'scan_storage',
    'scan_b2_area'
]

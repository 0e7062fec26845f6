# Inhomogeneous broadening grids and ensemble observables
from .broadening import (
    SPIN_OFF,
    SPIN_EFFECTIVE,
    SPIN_EXPLICIT,
    SPIN_MODES,
    EnsembleSpec,
    DetuningGrid,
    build_grid
)
from .signals import Signal, AtomTraces, SpectralSnapshot, aggregate, spectral_snapshot

__all__ = [
    'SPIN_OFF',
    'SPIN_EFFECTIVE',
    'SPIN_EXPLICIT',
    'SPIN_MODES',
    'EnsembleSpec',
    'DetuningGrid',
    'build_grid',
    'Signal',
    'AtomTraces',
    'SpectralSnapshot',
    'aggregate',
    'spectral_snapshot'
]

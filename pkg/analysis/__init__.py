# Echo detection, decay fits, gratings and Bloch vectors
from .echoes import (
    NO_ECHO,
    NO_GRATING,
    EchoMeasurement,
    GratingMeasurement,
    BlochPoint,
    detect_echo,
    amplitude_ratio,
    intensity_ratio,
    grating_period,
    bloch_trajectory
)
from .fitting import EXP, EXP_OFFSET, MODELS, DecayFit, fit_decay

__all__ = [
    'NO_ECHO',
    'NO_GRATING',
    'EchoMeasurement',
    'GratingMeasurement',
    'BlochPoint',
    'detect_echo',
    'amplitude_ratio',
    'intensity_ratio',
    'grating_period',
    'bloch_trajectory',
    'EXP',
    'EXP_OFFSET',
    'MODELS',
    'DecayFit',
    'fit_decay'
]

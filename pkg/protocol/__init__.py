# Pulse and sequence construction for the echo protocols
from .sequences import (
    CHANNEL_A,
    CHANNEL_B,
    DATA,
    WRITE,
    READ,
    B1,
    B2,
    PI,
    TWO_PULSE,
    THREE_PULSE,
    LOCKED,
    PHASE_LOCKED,
    PROTOCOLS,
    Pulse,
    Sequence,
    area_to_duration,
    build_two_pulse,
    build_three_pulse,
    build_locked,
    build_phase_locked,
    build_fig4_like,
    rebuild,
    with_t_b2,
    with_b2_area,
    expected_echo_time,
    validate
)

__all__ = [
    'CHANNEL_A',
    'CHANNEL_B',
    'DATA',
    'WRITE',
    'READ',
    'B1',
    'B2',
    'PI',
    'TWO_PULSE',
    'THREE_PULSE',
    'LOCKED',
    'PHASE_LOCKED',
    'PROTOCOLS',
    'Pulse',
    'Sequence',
    'area_to_duration',
    'build_two_pulse',
    'build_three_pulse',
    'build_locked',
    'build_phase_locked',
    'build_fig4_like',
    'rebuild',
    'with_t_b2',
    'with_b2_area',
    'expected_echo_time',
    'validate'
]

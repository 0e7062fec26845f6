# Per-atom state, Hamiltonian, relaxation and propagation
from .dynamics import (
    RATE_MULTIPLIER,
    TRACE_PRESERVING,
    LITERAL,
    RELAXATION_MODES,
    STEPS_PER_CYCLE,
    Drive,
    NO_DRIVE,
    Detunings,
    DecayConstants,
    RelaxationRates,
    NO_DECAY,
    ground_state,
    hermitize,
    purity,
    check_density_matrix,
    build_hamiltonian,
    master_rhs,
    step_rk4,
    evolve_rk4,
    propagate_free,
    liouvillian,
    propagate_exact
)

__all__ = [
    'RATE_MULTIPLIER',
    'TRACE_PRESERVING',
    'LITERAL',
    'RELAXATION_MODES',
    'STEPS_PER_CYCLE',
    'Drive',
    'NO_DRIVE',
    'Detunings',
    'DecayConstants',
    'RelaxationRates',
    'NO_DECAY',
    'ground_state',
    'hermitize',
    'purity',
    'check_density_matrix',
    'build_hamiltonian',
    'master_rhs',
    'step_rk4',
    'evolve_rk4',
    'propagate_free',
    'liouvillian',
    'propagate_exact'
]

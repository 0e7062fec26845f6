"""
Per-atom dynamics of the three-level Lambda system.

Levels are indexed 1, 2, 3 in the physics and 0, 1, 2 in the arrays:
|1> and |2> are the ground (spin) states, |3> is the excited state.
Channel A drives |1> <-> |3>, channel B drives |2> <-> |3>.

All user-facing frequencies are cyclic (Hz). The Hamiltonian is returned
as H/hbar in rad/s. Relaxation constants are quoted in kHz and turned into
rates with r = RATE_MULTIPLIER * X * 1e3 s^-1, which reproduces
T1 = 1/(pi * Gamma).

Every function accepts a single density matrix of shape (3, 3) or a stack
of shape (..., 3, 3); detunings broadcast against the leading axes. Each
atom's result depends only on its own inputs.
"""
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm

from utils.errors import StepSizeError

RATE_MULTIPLIER = math.pi

TRACE_PRESERVING = "trace-preserving"
LITERAL = "literal"
RELAXATION_MODES = (TRACE_PRESERVING, LITERAL)

# Resolution guard: dt must not exceed 1 / (GUARD_CYCLES * f_max)
GUARD_CYCLES = 50

# Default RK4 resolution; keeps a 5 us driven segment within 1e-8 of the matrix exponential
STEPS_PER_CYCLE = 600

TWO_PI = 2.0 * math.pi

ArrayLike = Union[float, np.ndarray]


def _check_mode(mode: str) -> str:
    if mode not in RELAXATION_MODES:
        raise ValueError(f"Unknown relaxation mode {mode!r}; expected one of {RELAXATION_MODES}")
    return mode


@dataclass(frozen=True)
class Drive:
    """Constant drive on both channels. Rabi frequencies in Hz (cyclic), phases in radians."""

    omega_a: float = 0.0
    omega_b: float = 0.0
    phase_a: float = 0.0
    phase_b: float = 0.0

    def __post_init__(self):
        for name in ("omega_a", "omega_b", "phase_a", "phase_b"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Drive.{name} must be finite, got {value}")
        if self.omega_a < 0 or self.omega_b < 0:
            raise ValueError("Rabi frequencies must be >= 0")

    @property
    def active(self) -> bool:
        return self.omega_a > 0 or self.omega_b > 0


NO_DRIVE = Drive()


@dataclass(frozen=True)
class Detunings:
    """
    Optical detuning (shared by both optical transitions) and two-photon
    spin detuning, both in Hz. Either may be an array for a block of atoms.
    """

    delta_opt: ArrayLike = 0.0
    delta_spin: ArrayLike = 0.0

    def __post_init__(self):
        for name in ("delta_opt", "delta_spin"):
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(value)):
                raise ValueError(f"Detunings.{name} must be finite")
            object.__setattr__(self, name, value if value.ndim else float(value))

    @property
    def max_abs(self) -> float:
        d = np.abs(np.asarray(self.delta_opt))
        s = np.abs(np.asarray(self.delta_spin))
        ds = np.abs(np.asarray(self.delta_opt) - np.asarray(self.delta_spin))
        return float(max(d.max(initial=0.0), s.max(initial=0.0), ds.max(initial=0.0)))


@dataclass(frozen=True)
class DecayConstants:
    """Relaxation rates in s^-1, already converted from the quoted kHz values."""

    pop31: float
    pop32: float
    pop12: float
    coh13: float
    coh23: float
    coh12: float
    eff12: float = 0.0


@dataclass(frozen=True)
class RelaxationRates:
    """Decay constants as quoted (kHz). gamma_12_eff is extra spin dephasing on rho_12."""

    gamma_pop_31: float = 0.0
    gamma_pop_32: float = 0.0
    gamma_pop_12: float = 0.0
    gamma_coh_13: float = 0.0
    gamma_coh_23: float = 0.0
    gamma_coh_12: float = 0.0
    gamma_12_eff: float = 0.0
    multiplier: float = RATE_MULTIPLIER

    def __post_init__(self):
        for name in ("gamma_pop_31", "gamma_pop_32", "gamma_pop_12", "gamma_coh_13",
                     "gamma_coh_23", "gamma_coh_12", "gamma_12_eff", "multiplier"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"RelaxationRates.{name} must be finite and >= 0, got {value}")

    def per_second(self) -> DecayConstants:
        scale = self.multiplier * 1e3
        return DecayConstants(
            pop31=scale * self.gamma_pop_31,
            pop32=scale * self.gamma_pop_32,
            pop12=scale * self.gamma_pop_12,
            coh13=scale * self.gamma_coh_13,
            coh23=scale * self.gamma_coh_23,
            coh12=scale * (self.gamma_coh_12 + self.gamma_12_eff),
            eff12=scale * self.gamma_12_eff,
        )

    def without_effective(self) -> "RelaxationRates":
        return replace(self, gamma_12_eff=0.0)

    @property
    def is_zero(self) -> bool:
        k = self.per_second()
        return not any((k.pop31, k.pop32, k.pop12, k.coh13, k.coh23, k.coh12))


NO_DECAY = RelaxationRates()


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

def ground_state(populations: Sequence[float] = (1.0, 0.0, 0.0)) -> np.ndarray:
    """
    Diagonal density matrix from level populations (rho_11, rho_22, rho_33).

    Raises:
        ValueError: If populations are negative or do not sum to 1
    """
    p = np.asarray(populations, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"Need three populations, got shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"Populations must be >= 0 and sum to 1, got {populations}")
    return np.diag(p).astype(complex)


def hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))


def purity(rho: np.ndarray) -> np.ndarray:
    """trace(rho^2) per atom."""
    return np.real(np.einsum("...ij,...ji->...", rho, rho))


def check_density_matrix(rho: np.ndarray) -> dict:
    """
    Numerical health of a (stack of) density matrices.

    Returns:
        Dict with the worst Hermiticity error, trace error and the smallest
        eigenvalue over the stack
    """
    rho = np.asarray(rho)
    herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max()
    trace = np.real(np.trace(rho, axis1=-2, axis2=-1))
    eigenvalues = np.linalg.eigvalsh(hermitize(rho))
    return {
        "hermiticity_error": float(herm),
        "trace_error": float(np.abs(trace - 1.0).max()),
        "min_eigenvalue": float(eigenvalues.min()),
    }


# ---------------------------------------------------------------------------
# Generator of the motion
# ---------------------------------------------------------------------------

def build_hamiltonian(drive: Drive, det: Detunings) -> np.ndarray:
    """
    RWA Hamiltonian H/hbar in rad/s.

    H13 = pi*Omega_A*exp(i*phi_A), H23 = pi*Omega_B*exp(i*phi_B),
    H33 = 2*pi*delta_opt, H22 = 2*pi*delta_spin, H11 = 0.

    Args:
        drive: Rabi frequencies (Hz) and phases
        det: Detunings (Hz), scalars or arrays

    Returns:
        Array of shape (..., 3, 3), leading axes from the detunings
    """
    if not isinstance(drive, Drive) or not isinstance(det, Detunings):
        raise TypeError("build_hamiltonian expects a Drive and a Detunings")
    d = np.asarray(det.delta_opt, dtype=float)
    s = np.asarray(det.delta_spin, dtype=float)
    shape = np.broadcast_shapes(d.shape, s.shape)
    H = np.zeros(shape + (3, 3), dtype=complex)
    h13 = math.pi * drive.omega_a * complex(math.cos(drive.phase_a), math.sin(drive.phase_a))
    h23 = math.pi * drive.omega_b * complex(math.cos(drive.phase_b), math.sin(drive.phase_b))
    H[..., 0, 2] = h13
    H[..., 2, 0] = np.conj(h13)
    H[..., 1, 2] = h23
    H[..., 2, 1] = np.conj(h23)
    H[..., 1, 1] = TWO_PI * s
    H[..., 2, 2] = TWO_PI * d
    return H


class _Generator:
    """d(rho)/dt for a fixed Hamiltonian and fixed rates."""

    def __init__(self, H: np.ndarray, rates: RelaxationRates, mode: str):
        self.H = H
        self.mode = _check_mode(mode)
        k = rates.per_second()
        self.k = k
        if mode == TRACE_PRESERVING:
            K = np.array([
                [k.pop12, k.coh12, k.coh13],
                [k.coh12, k.pop12, k.coh23],
                [k.coh13, k.coh23, k.pop31 + k.pop32],
            ])
        else:
            G = np.array([0.0, k.pop12, k.pop31 + k.pop32])
            K = 0.5 * (G[:, None] + G[None, :])
            # effective spin dephasing is an ensemble effect and applies in both modes
            K[0, 1] += k.eff12
            K[1, 0] += k.eff12
        self.K = K

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.H @ rho - rho @ self.H) - self.K * rho
        if self.mode == TRACE_PRESERVING:
            k = self.k
            p3 = rho[..., 2, 2]
            out[..., 0, 0] += k.pop31 * p3 + k.pop12 * rho[..., 1, 1]
            out[..., 1, 1] += k.pop32 * p3 + k.pop12 * rho[..., 0, 0]
        return out


def master_rhs(rho: np.ndarray, drive: Drive, det: Detunings, rates: RelaxationRates,
               mode: str = TRACE_PRESERVING) -> np.ndarray:
    """
    Time derivative of the density matrix.

    Trace-preserving mode feeds the ground states from |3> with branching
    Gamma31:Gamma32 and exchanges rho_11/rho_22 at Gamma12; coherences decay
    at their gamma. Literal mode applies exactly -1/2 {Gamma, rho} with
    Gamma = diag(0, Gamma12, Gamma31 + Gamma32), plus the effective rho_12
    dephasing of the spin ensemble.
    """
    _check_mode(mode)
    return _Generator(build_hamiltonian(drive, det), rates, mode)(np.asarray(rho, dtype=complex))


def max_frequency(drive: Drive, det: Detunings) -> float:
    return max(drive.omega_a, drive.omega_b, det.max_abs)


def _check_step(dt: float, drive: Drive, det: Detunings) -> None:
    if not dt > 0:
        raise StepSizeError(f"Step size must be > 0, got {dt}")
    f_max = max_frequency(drive, det)
    if f_max > 0 and dt > 1.0 / (GUARD_CYCLES * f_max):
        raise StepSizeError(
            f"Step {dt:.3e} s too coarse for {f_max:.3e} Hz (limit {1.0 / (GUARD_CYCLES * f_max):.3e} s)"
        )


def _rk4(gen: _Generator, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = gen(rho)
    k2 = gen(rho + 0.5 * dt * k1)
    k3 = gen(rho + 0.5 * dt * k2)
    k4 = gen(rho + dt * k3)
    return hermitize(rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def step_rk4(rho: np.ndarray, drive: Drive, det: Detunings, rates: RelaxationRates, dt: float,
             mode: str = TRACE_PRESERVING) -> np.ndarray:
    """
    One classical Runge-Kutta step, re-symmetrized afterwards.

    Raises:
        StepSizeError: If dt <= 0 or dt > 1/(50 * max(Omega, |delta|))
    """
    _check_step(dt, drive, det)
    gen = _Generator(build_hamiltonian(drive, det), rates, mode)
    return _rk4(gen, np.asarray(rho, dtype=complex), dt)


def evolve_rk4(rho: np.ndarray, drive: Drive, det: Detunings, rates: RelaxationRates, duration: float,
               steps_per_cycle: int = STEPS_PER_CYCLE, max_step: float = 1e-8,
               mode: str = TRACE_PRESERVING, frequency_bound: Optional[float] = None) -> np.ndarray:
    """
    Propagate over a constant-coefficient interval with equal RK4 steps
    no longer than 1/(steps_per_cycle * f_max) and max_step.

    frequency_bound, when given, replaces the detuning part of f_max so that
    every block of a grid gets the same step whatever atoms it holds.
    """
    if duration < 0:
        raise ValueError(f"Duration must be >= 0, got {duration}")
    rho = np.asarray(rho, dtype=complex)
    if duration == 0:
        return rho.copy()
    if steps_per_cycle < GUARD_CYCLES:
        raise StepSizeError(f"steps_per_cycle must be >= {GUARD_CYCLES}, got {steps_per_cycle}")
    f_max = max_frequency(drive, det)
    if frequency_bound is not None:
        if frequency_bound < det.max_abs:
            raise ValueError(f"frequency_bound {frequency_bound} is below the largest detuning {det.max_abs}")
        f_max = max(drive.omega_a, drive.omega_b, frequency_bound)
    target = max_step if f_max == 0 else min(max_step, 1.0 / (steps_per_cycle * f_max))
    n_steps = max(1, math.ceil(duration / target - 1e-9))
    dt = duration / n_steps
    _check_step(dt, drive, det)
    gen = _Generator(build_hamiltonian(drive, det), rates, mode)
    for _ in range(n_steps):
        rho = _rk4(gen, rho, dt)
    return rho


# ---------------------------------------------------------------------------
# Closed-form free evolution
# ---------------------------------------------------------------------------

def _relax_kernel(a: float, b: float, t: float) -> float:
    """(exp(-a t) - exp(-b t)) / (b - a), with its limit when a == b."""
    gap = b - a
    if abs(gap) * t < 1e-8:
        return t * math.exp(-a * t) * (1.0 - 0.5 * gap * t)
    return (math.exp(-a * t) - math.exp(-b * t)) / gap


def propagate_free(rho: np.ndarray, det: Detunings, rates: RelaxationRates, dt: float,
                   mode: str = TRACE_PRESERVING, drive: Optional[Drive] = None) -> np.ndarray:
    """
    Exact evolution over a drive-free interval.

    Args:
        rho: Density matrix or stack
        det: Detunings (Hz)
        rates: Relaxation rates
        dt: Interval length (s), >= 0
        mode: Relaxation mode
        drive: The drive during the interval, if known; must be inactive

    Raises:
        ValueError: If a drive is active or dt < 0
    """
    _check_mode(mode)
    if drive is not None and drive.active:
        raise ValueError("propagate_free called while a pulse is active")
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    rho = np.asarray(rho, dtype=complex)
    if dt == 0:
        return rho.copy()

    k = rates.per_second()
    d = np.asarray(det.delta_opt, dtype=float)
    s = np.asarray(det.delta_spin, dtype=float)
    shape = np.broadcast_shapes(rho.shape[:-2], d.shape, s.shape)
    out = np.empty(shape + (3, 3), dtype=complex)

    p1 = np.real(rho[..., 0, 0])
    p2 = np.real(rho[..., 1, 1])
    p3 = np.real(rho[..., 2, 2])
    g3 = k.pop31 + k.pop32
    e3 = math.exp(-g3 * dt)
    if mode == TRACE_PRESERVING:
        exchange = 2.0 * k.pop12
        total = p1 + p2 + p3 * (1.0 - e3)
        diff = (p1 - p2) * math.exp(-exchange * dt) + (k.pop31 - k.pop32) * p3 * _relax_kernel(g3, exchange, dt)
        out[..., 0, 0] = 0.5 * (total + diff)
        out[..., 1, 1] = 0.5 * (total - diff)
        out[..., 2, 2] = p3 * e3
        c13, c23, c12 = k.coh13, k.coh23, k.coh12
    else:
        out[..., 0, 0] = p1
        out[..., 1, 1] = p2 * math.exp(-k.pop12 * dt)
        out[..., 2, 2] = p3 * e3
        c13 = 0.5 * g3
        c23 = 0.5 * (k.pop12 + g3)
        c12 = 0.5 * k.pop12 + k.eff12

    out[..., 0, 2] = rho[..., 0, 2] * np.exp((1j * TWO_PI * d - c13) * dt)
    out[..., 1, 2] = rho[..., 1, 2] * np.exp((1j * TWO_PI * (d - s) - c23) * dt)
    out[..., 0, 1] = rho[..., 0, 1] * np.exp((1j * TWO_PI * s - c12) * dt)
    out[..., 2, 0] = np.conj(out[..., 0, 2])
    out[..., 2, 1] = np.conj(out[..., 1, 2])
    out[..., 1, 0] = np.conj(out[..., 0, 1])
    return out


# ---------------------------------------------------------------------------
# Matrix-exponential propagator
# ---------------------------------------------------------------------------

def liouvillian(drive: Drive, det: Detunings, rates: RelaxationRates,
                mode: str = TRACE_PRESERVING) -> np.ndarray:
    """
    9x9 superoperator L with vec(d rho/dt) = L vec(rho), vec in row-major order.
    Single atom only (scalar detunings).
    """
    if np.ndim(det.delta_opt) or np.ndim(det.delta_spin):
        raise ValueError("liouvillian needs scalar detunings")
    gen = _Generator(build_hamiltonian(drive, det), rates, mode)
    L = np.empty((9, 9), dtype=complex)
    for column in range(9):
        basis = np.zeros(9, dtype=complex)
        basis[column] = 1.0
        L[:, column] = gen(basis.reshape(3, 3)).reshape(9)
    return L


def propagate_exact(rho: np.ndarray, drive: Drive, det: Detunings, rates: RelaxationRates, dt: float,
                    mode: str = TRACE_PRESERVING) -> np.ndarray:
    """
    Constant-coefficient propagation through expm(L dt). Stacks are handled
    atom by atom.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    rho = np.asarray(rho, dtype=complex)
    d = np.asarray(det.delta_opt, dtype=float)
    s = np.asarray(det.delta_spin, dtype=float)
    shape = np.broadcast_shapes(rho.shape[:-2], d.shape, s.shape)
    rho_b = np.broadcast_to(rho, shape + (3, 3)).reshape(-1, 3, 3)
    d_b = np.broadcast_to(d, shape).reshape(-1)
    s_b = np.broadcast_to(s, shape).reshape(-1)
    out = np.empty_like(rho_b)
    for index in range(rho_b.shape[0]):
        L = liouvillian(drive, Detunings(float(d_b[index]), float(s_b[index])), rates, mode)
        out[index] = (expm(L * dt) @ rho_b[index].reshape(9)).reshape(3, 3)
    return hermitize(out.reshape(shape + (3, 3)))

"""
Full protocol runs over a broadened ensemble.

Each run walks one shared timeline of events (sample instants, pulse edges,
snapshot instants, gate edges). Drive-free intervals use the closed-form
propagator; intervals inside a pulse are integrated with RK4 (or expm).
Atoms are propagated in fixed-size blocks so the per-atom arithmetic never
depends on how many workers took part, and the blocks are folded back in
grid order.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence as Seq, Tuple

import numpy as np

from blochCore.dynamics import (
    NO_DRIVE,
    RELAXATION_MODES,
    STEPS_PER_CYCLE,
    TRACE_PRESERVING,
    Detunings,
    Drive,
    RelaxationRates,
    evolve_rk4,
    ground_state,
    propagate_exact,
    propagate_free,
)
from ensemble.broadening import SPIN_EFFECTIVE, DetuningGrid, EnsembleSpec, build_grid
from ensemble.signals import AtomTraces, Signal, SpectralSnapshot, aggregate, spectral_snapshot
from protocol.sequences import B1, B2, CHANNEL_A, Sequence, expected_echo_time
from analysis.echoes import EchoMeasurement, detect_echo
from utils.errors import PropagationError

log = logging.getLogger(__name__)

RK4 = "rk4"
EXPM = "expm"
PURE_RK4 = "pure_rk4"
INTEGRATORS = (RK4, EXPM, PURE_RK4)

BLOCK_SIZE = 64
# Events closer than this are merged into one
EVENT_TOLERANCE = 1e-15


@dataclass(frozen=True)
class Sampling:
    """
    Two-resolution sample grid. Every sample is an integer multiple of
    fine_step; coarse_step must be a whole number of fine steps.
    """

    fine_step: float = 10e-9
    coarse_step: float = 1e-6
    pulse_before: float = 0.5e-6
    pulse_after: float = 3e-6
    echo_half_width: float = 3e-6

    def __post_init__(self):
        for name in ("fine_step", "coarse_step"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"Sampling.{name} must be > 0, got {value}")
        for name in ("pulse_before", "pulse_after", "echo_half_width"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"Sampling.{name} must be >= 0, got {value}")
        ratio = self.coarse_step / self.fine_step
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-6:
            raise ValueError("coarse_step must be a whole multiple of fine_step")

    @property
    def coarse_ratio(self) -> int:
        return int(round(self.coarse_step / self.fine_step))


def _index_range(t_lo: float, t_hi: float, step: float) -> np.ndarray:
    lo = max(0, math.ceil(t_lo / step - 1e-9))
    hi = math.floor(t_hi / step + 1e-9)
    if hi < lo:
        return np.empty(0, dtype=np.int64)
    return np.arange(lo, hi + 1, dtype=np.int64)


def sample_times(seq: Sequence, sampling: Sampling = Sampling()) -> np.ndarray:
    """
    Signal sample instants: coarse everywhere, fine around every pulse and
    around the predicted echo, always including 0 and record_until.

    Args:
        seq: Pulse sequence
        sampling: Sample spacing and pulse padding

    Returns:
        Strictly increasing array of times (s)
    """
    end = seq.record_until
    if not (math.isfinite(end) and end > 0):
        raise ValueError(f"record_until must be finite and > 0, got {end}")
    fine = sampling.fine_step
    pieces = [np.arange(0, math.floor(end / fine + 1e-9) + 1, sampling.coarse_ratio, dtype=np.int64)]
    for pulse in seq.pulses:
        pieces.append(_index_range(pulse.t_start - sampling.pulse_before, pulse.t_end + sampling.pulse_after, fine))
    if seq.pulses:
        echo = expected_echo_time(seq)
        pieces.append(_index_range(echo - sampling.echo_half_width, echo + sampling.echo_half_width, fine))
    indices = np.unique(np.concatenate(pieces))
    times = indices * fine
    times = times[times <= end * (1 + 1e-12)]
    if end - times[-1] > EVENT_TOLERANCE:
        times = np.append(times, end)
    return times


@dataclass
class RunConfig:
    """Everything a single run needs. Times in s, frequencies in Hz, rates in kHz."""

    sequence: Sequence
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    rates: RelaxationRates = field(default_factory=RelaxationRates)
    initial_populations: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    relaxation_mode: str = TRACE_PRESERVING
    sampling: Sampling = field(default_factory=Sampling)
    worker_count: int = 1
    integrator: str = RK4
    steps_per_cycle: int = STEPS_PER_CYCLE
    max_step: float = 10e-9
    snapshot_times: Tuple[float, ...] = ()
    bloch_detunings: Tuple[float, ...] = ()

    def __post_init__(self):
        ground_state(self.initial_populations)
        if self.relaxation_mode not in RELAXATION_MODES:
            raise ValueError(f"Unknown relaxation mode {self.relaxation_mode!r}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"Unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")
        if int(self.worker_count) != self.worker_count or self.worker_count < 1:
            raise ValueError(f"worker_count must be a positive integer, got {self.worker_count}")
        if not (math.isfinite(self.sequence.record_until) and self.sequence.record_until > 0):
            raise ValueError("Sequence needs a finite record_until > 0")
        for t in self.snapshot_times:
            if not 0 <= t <= self.sequence.record_until:
                raise ValueError(f"Snapshot time {t} outside [0, {self.sequence.record_until}]")
        if self.ensemble.gate_effective:
            labels = {p.label for p in self.sequence.pulses}
            if self.ensemble.spin_mode != SPIN_EFFECTIVE or not {B1, B2} <= labels:
                raise ValueError("gate_effective needs EFFECTIVE spin mode and a sequence with B1 and B2")


@dataclass(frozen=True)
class _Segment:
    duration: float
    drive: Drive
    rates: RelaxationRates


@dataclass(frozen=True)
class _Timeline:
    """
    Event instants plus the interval between each consecutive pair.
    sample_events[j] / snapshot_events[k] give the event index to record at.
    """

    events: np.ndarray
    segments: Tuple[_Segment, ...]
    sample_events: np.ndarray
    snapshot_events: np.ndarray


def _merge_events(times: np.ndarray) -> np.ndarray:
    ordered = np.sort(times)
    keep = [ordered[0]]
    for t in ordered[1:]:
        if t - keep[-1] > EVENT_TOLERANCE:
            keep.append(t)
    return np.asarray(keep)


def _locate(events: np.ndarray, times: Seq[float]) -> np.ndarray:
    index = np.searchsorted(events, np.asarray(times, dtype=float))
    index = np.clip(index, 0, events.size - 1)
    below = np.clip(index - 1, 0, events.size - 1)
    times = np.asarray(times, dtype=float)
    closer = np.abs(events[below] - times) < np.abs(events[index] - times)
    return np.where(closer, below, index)


def _drive_at(seq: Sequence, t: float) -> Drive:
    omega_a = omega_b = phase_a = phase_b = 0.0
    for pulse in seq.pulses:
        if pulse.t_start < t < pulse.t_end:
            if pulse.channel == CHANNEL_A:
                omega_a, phase_a = pulse.rabi, pulse.phase
            else:
                omega_b, phase_b = pulse.rabi, pulse.phase
    if omega_a == 0 and omega_b == 0:
        return NO_DRIVE
    return Drive(omega_a=omega_a, omega_b=omega_b, phase_a=phase_a, phase_b=phase_b)


def effective_rates(config: RunConfig) -> Tuple[RelaxationRates, Optional[Tuple[float, float]]]:
    """
    Rates including the EFFECTIVE spin dephasing, and the interval it is
    gated to (None when it applies throughout).
    """
    extra = config.ensemble.effective_rate_khz
    rates = replace(config.rates, gamma_12_eff=config.rates.gamma_12_eff + extra)
    if not config.ensemble.gate_effective:
        return rates, None
    seq = config.sequence
    return rates, (seq.first(B1).t_end, seq.first(B2).t_start)


def build_timeline(config: RunConfig, times: np.ndarray) -> _Timeline:
    seq = config.sequence
    storage_rates, gate = effective_rates(config)
    outside_rates = storage_rates if gate is None else replace(storage_rates, gamma_12_eff=config.rates.gamma_12_eff)

    edges = [t for p in seq.pulses for t in (p.t_start, p.t_end) if 0 < t < seq.record_until]
    if gate is not None:
        edges.extend(gate)
    events = _merge_events(np.concatenate([times, np.asarray(edges, dtype=float),
                                           np.asarray(config.snapshot_times, dtype=float)]))
    segments = []
    for t0, t1 in zip(events[:-1], events[1:]):
        middle = 0.5 * (t0 + t1)
        in_gate = gate is None or gate[0] <= middle <= gate[1]
        segments.append(_Segment(duration=float(t1 - t0), drive=_drive_at(seq, middle),
                                 rates=storage_rates if in_gate else outside_rates))
    return _Timeline(events=events, segments=tuple(segments), sample_events=_locate(events, times),
                     snapshot_events=_locate(events, config.snapshot_times))


@dataclass(frozen=True)
class _BlockJob:
    start: int
    delta_opt: np.ndarray
    delta_spin: np.ndarray
    timeline: _Timeline
    initial_populations: Tuple[float, float, float]
    mode: str
    integrator: str
    steps_per_cycle: int
    max_step: float
    frequency_bound: float
    keep_states: bool = False


@dataclass
class _BlockResult:
    traces: AtomTraces
    snapshots: np.ndarray
    states: Optional[np.ndarray] = None


def _check_finite(rho: np.ndarray, job: _BlockJob, t: float) -> None:
    finite = np.all(np.isfinite(rho), axis=(-2, -1))
    if finite.all():
        return
    bad = int(np.argmin(finite))
    delta_opt, delta_spin = float(job.delta_opt[bad]), float(job.delta_spin[bad])
    raise PropagationError(
        f"Non-finite density matrix at t={t:.9g} s for atom delta_opt={delta_opt:.6g} Hz, "
        f"delta_spin={delta_spin:.6g} Hz",
        delta_opt=delta_opt,
        delta_spin=delta_spin,
    )


def _advance(rho: np.ndarray, segment: _Segment, det: Detunings, job: _BlockJob) -> np.ndarray:
    if not segment.drive.active and job.integrator != PURE_RK4:
        return propagate_free(rho, det, segment.rates, segment.duration, mode=job.mode)
    if segment.drive.active and job.integrator == EXPM:
        return propagate_exact(rho, segment.drive, det, segment.rates, segment.duration, mode=job.mode)
    return evolve_rk4(rho, segment.drive, det, segment.rates, segment.duration,
                      steps_per_cycle=job.steps_per_cycle, max_step=job.max_step, mode=job.mode,
                      frequency_bound=job.frequency_bound)


def _propagate_block(job: _BlockJob) -> _BlockResult:
    """Run one block of atoms through the whole timeline."""
    timeline = job.timeline
    n_atoms = job.delta_opt.size
    n_samples = timeline.sample_events.size
    det = Detunings(job.delta_opt, job.delta_spin)
    rho = np.broadcast_to(ground_state(job.initial_populations), (n_atoms, 3, 3)).copy()

    coherence = np.empty((n_atoms, n_samples), dtype=complex)
    populations = np.empty((n_atoms, n_samples, 3))
    snapshots = np.empty((timeline.snapshot_events.size, n_atoms, 3, 3), dtype=complex)
    states = np.empty((n_samples, n_atoms, 3, 3), dtype=complex) if job.keep_states else None

    sample_at: Dict[int, List[int]] = {}
    for j, event in enumerate(timeline.sample_events):
        sample_at.setdefault(int(event), []).append(j)
    snapshot_at: Dict[int, List[int]] = {}
    for k, event in enumerate(timeline.snapshot_events):
        snapshot_at.setdefault(int(event), []).append(k)

    for event in range(timeline.events.size):
        if event > 0:
            rho = _advance(rho, timeline.segments[event - 1], det, job)
            _check_finite(rho, job, float(timeline.events[event]))
        for j in sample_at.get(event, ()):
            coherence[:, j] = rho[:, 0, 2]
            populations[:, j, :] = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
            if states is not None:
                states[j] = rho
        for k in snapshot_at.get(event, ()):
            snapshots[k] = rho

    times = timeline.events[timeline.sample_events]
    traces = AtomTraces(start=job.start, times=times, coherence13=coherence, populations=populations)
    return _BlockResult(traces=traces, snapshots=snapshots, states=states)


@dataclass
class AtomHistory:
    """Full density-matrix history of one atom on the signal sample grid."""

    delta_opt: float
    delta_spin: float
    times: np.ndarray
    states: np.ndarray


@dataclass
class RunResult:
    config: RunConfig
    signal: Signal
    grid: DetuningGrid
    snapshots: List[SpectralSnapshot] = field(default_factory=list)
    histories: List[AtomHistory] = field(default_factory=list)


def _jobs(config: RunConfig, grid: DetuningGrid, timeline: _Timeline, bound: float) -> Iterator[_BlockJob]:
    for start in range(0, len(grid), BLOCK_SIZE):
        stop = min(start + BLOCK_SIZE, len(grid))
        yield _BlockJob(
            start=start,
            delta_opt=grid.delta_opt[start:stop],
            delta_spin=grid.delta_spin[start:stop],
            timeline=timeline,
            initial_populations=tuple(config.initial_populations),
            mode=config.relaxation_mode,
            integrator=config.integrator,
            steps_per_cycle=config.steps_per_cycle,
            max_step=config.max_step,
            frequency_bound=bound,
        )


def _history_job(config: RunConfig, timeline: _Timeline, delta_opt: float, bound: float) -> _BlockJob:
    return _BlockJob(
        start=0,
        delta_opt=np.array([float(delta_opt)]),
        delta_spin=np.zeros(1),
        timeline=timeline,
        initial_populations=tuple(config.initial_populations),
        mode=config.relaxation_mode,
        integrator=config.integrator,
        steps_per_cycle=config.steps_per_cycle,
        max_step=config.max_step,
        frequency_bound=max(bound, abs(float(delta_opt))),
        keep_states=True,
    )


def run(config: RunConfig) -> RunResult:
    """
    Propagate every grid atom through the sequence and build the ensemble signal.

    Args:
        config: Validated run configuration

    Returns:
        RunResult with the Signal, the grid, requested snapshots and histories

    Raises:
        PropagationError: If any atom's state becomes non-finite
        StepSizeError: If the numerics settings cannot resolve a pulse
    """
    seq = config.sequence
    grid = build_grid(config.ensemble)
    times = sample_times(seq, config.sampling)
    timeline = build_timeline(config, times)
    n_blocks = math.ceil(len(grid) / BLOCK_SIZE)
    log.info("%s run: %d pulses, %d atoms in %d blocks, %d samples, %d worker(s)",
             seq.protocol, len(seq.pulses), len(grid), n_blocks, times.size, config.worker_count)

    snapshot_states = np.empty((len(config.snapshot_times), len(grid), 3, 3), dtype=complex)

    def collect(results) -> Iterator[AtomTraces]:
        for result in results:
            stop = result.traces.start + len(result.traces)
            snapshot_states[:, result.traces.start:stop] = result.snapshots
            yield result.traces

    bound = Detunings(grid.delta_opt, grid.delta_spin).max_abs
    jobs = _jobs(config, grid, timeline, bound)
    if config.worker_count > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=min(config.worker_count, n_blocks)) as pool:
            signal = aggregate(collect(pool.map(_propagate_block, jobs)), grid)
    else:
        signal = aggregate(collect(map(_propagate_block, jobs)), grid)

    window = (0.0, seq.record_until)
    snapshots = [spectral_snapshot(snapshot_states[k], grid, float(t), window)
                 for k, t in enumerate(config.snapshot_times)]

    histories = []
    for delta in config.bloch_detunings:
        result = _propagate_block(_history_job(config, timeline, delta, bound))
        histories.append(AtomHistory(delta_opt=float(delta), delta_spin=0.0,
                                     times=result.traces.times, states=result.states[:, 0]))
    return RunResult(config=config, signal=signal, grid=grid, snapshots=snapshots, histories=histories)


def echo_window(seq: Sequence, half_width: float = Sampling.echo_half_width) -> Tuple[float, float]:
    """
    Search window around the predicted echo, clipped so that it contains no
    pulse and stays inside the recorded range.
    """
    echo = expected_echo_time(seq)
    lo, hi = echo - half_width, min(echo + half_width, seq.record_until)
    for pulse in seq.pulses:
        if pulse.t_end <= echo:
            lo = max(lo, pulse.t_end)
        elif pulse.t_start >= echo:
            hi = min(hi, pulse.t_start)
    return max(lo, 0.0), hi


def measure_echo(result: RunResult, half_width: Optional[float] = None) -> EchoMeasurement:
    """Detect the echo of a finished run around its predicted time."""
    width = result.config.sampling.echo_half_width if half_width is None else half_width
    echo = detect_echo(result.signal, echo_window(result.config.sequence, width))
    log.info("Echo at %.6g s, amplitude %.6g, fwhm %.3g s %s", echo.t_peak, echo.amplitude, echo.fwhm,
             list(echo.flags) if echo.flags else "")
    return echo

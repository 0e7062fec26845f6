"""
Reading echoes, gratings and Bloch vectors off simulated data.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ensemble.signals import Signal, SpectralSnapshot

NO_ECHO = "no echo"
WIDTH_UNRESOLVED = "width unresolved"
NO_GRATING = "no grating"
LOW_CONFIDENCE = "low confidence"

# Peaks below this are treated as numerically zero
NO_ECHO_FLOOR = 1e-12
FLAT_PROFILE = 1e-9
LOW_POPULATION = 1e-6


@dataclass(frozen=True)
class EchoMeasurement:
    t_peak: float
    amplitude: float
    fwhm: float
    window: Tuple[float, float]
    flags: Tuple[str, ...] = ()

    @property
    def found(self) -> bool:
        return NO_ECHO not in self.flags

    @property
    def intensity(self) -> float:
        return self.amplitude ** 2

    def to_dict(self) -> dict:
        return {
            "t_peak": self.t_peak,
            "amplitude": self.amplitude,
            "intensity": self.intensity,
            "fwhm": self.fwhm,
            "window": list(self.window),
            "flags": list(self.flags),
        }


def _parabola_vertex(x: np.ndarray, y: np.ndarray) -> Optional[Tuple[float, float]]:
    origin = x[1]
    a, b, c = np.polyfit(x - origin, y, 2)
    if not a < 0:
        return None
    shift = -b / (2.0 * a)
    if not (x[0] - origin) <= shift <= (x[2] - origin):
        return None
    return origin + shift, c - b * b / (4.0 * a)


def _half_crossing(t: np.ndarray, mag: np.ndarray, peak: int, half: float, step: int) -> Optional[float]:
    index = peak
    while 0 <= index + step < mag.size:
        nxt = index + step
        if mag[nxt] < half:
            # linear interpolation between index and nxt
            frac = (mag[index] - half) / (mag[index] - mag[nxt])
            return t[index] + frac * (t[nxt] - t[index])
        index = nxt
    return None


def detect_echo(signal: Signal, window: Tuple[float, float]) -> EchoMeasurement:
    """
    Find the echo as the peak of |P| inside a window.

    The peak time and height are refined with a parabola through the three
    samples around the maximum; the FWHM comes from half-height crossings.

    Args:
        signal: Ensemble signal
        window: (t_lo, t_hi) in seconds, inside the signal and free of pulses

    Returns:
        EchoMeasurement; an all-zero window gives amplitude 0 at the window
        center, flagged "no echo"
    """
    t_lo, t_hi = float(window[0]), float(window[1])
    times = np.asarray(signal.times)
    if not t_lo < t_hi:
        raise ValueError(f"Empty echo window {window}")
    if t_lo < times[0] or t_hi > times[-1]:
        raise ValueError(f"Echo window {window} outside signal [{times[0]}, {times[-1]}]")
    inside = np.nonzero((times >= t_lo) & (times <= t_hi))[0]
    if inside.size == 0:
        raise ValueError(f"No samples inside echo window {window}")

    t = times[inside]
    mag = np.abs(np.asarray(signal.polarization)[inside])
    peak = int(np.argmax(mag))
    amplitude = float(mag[peak])
    if amplitude <= NO_ECHO_FLOOR:
        return EchoMeasurement(t_peak=0.5 * (t_lo + t_hi), amplitude=0.0, fwhm=math.nan,
                               window=(t_lo, t_hi), flags=(NO_ECHO,))

    t_peak = float(t[peak])
    if 0 < peak < mag.size - 1:
        vertex = _parabola_vertex(t[peak - 1:peak + 2], mag[peak - 1:peak + 2])
        if vertex is not None:
            t_peak, amplitude = float(vertex[0]), max(amplitude, float(vertex[1]))

    flags = []
    left = _half_crossing(t, mag, peak, 0.5 * amplitude, -1)
    right = _half_crossing(t, mag, peak, 0.5 * amplitude, +1)
    if left is None or right is None:
        fwhm = math.nan
        flags.append(WIDTH_UNRESOLVED)
    else:
        fwhm = float(right - left)
    return EchoMeasurement(t_peak=t_peak, amplitude=amplitude, fwhm=fwhm, window=(t_lo, t_hi), flags=tuple(flags))


def amplitude_ratio(echo: EchoMeasurement, reference: EchoMeasurement) -> float:
    """Retrieval efficiency in amplitude relative to a reference echo."""
    if reference.amplitude <= 0:
        raise ValueError("Reference echo has zero amplitude")
    return echo.amplitude / reference.amplitude


def intensity_ratio(echo: EchoMeasurement, reference: EchoMeasurement) -> float:
    """Retrieval efficiency in intensity (amplitude squared)."""
    return amplitude_ratio(echo, reference) ** 2


@dataclass(frozen=True)
class GratingMeasurement:
    period: float
    delay: float
    bin: int
    bin_width: float
    flags: Tuple[str, ...] = ()

    @property
    def found(self) -> bool:
        return NO_GRATING not in self.flags


def grating_period(snapshot: Union[SpectralSnapshot, Tuple[np.ndarray, np.ndarray]],
                   population: str = "rho33") -> GratingMeasurement:
    """
    Dominant spectral period of a population profile versus detuning.

    Args:
        snapshot: SpectralSnapshot, or (detuning axis, profile) arrays
        population: "rho33" or "rho11" when a snapshot is given

    Returns:
        GratingMeasurement with the period (Hz), the equivalent pulse
        separation (s), the DFT bin and the bin width (s)
    """
    if isinstance(snapshot, SpectralSnapshot):
        if population not in ("rho33", "rho11"):
            raise ValueError(f"Grating population must be rho33 or rho11, got {population!r}")
        delta, profile = snapshot.delta_opt, getattr(snapshot, population)
    else:
        delta, profile = (np.asarray(a, dtype=float) for a in snapshot)
    if delta.size < 4 or delta.shape != profile.shape:
        raise ValueError("Grating needs matching detuning and profile arrays of at least 4 points")
    spacing = float(delta[1] - delta[0])
    if not np.allclose(np.diff(delta), spacing, rtol=1e-9, atol=0.0):
        raise ValueError("Detuning axis must be uniformly spaced")

    n = delta.size
    bin_width = 1.0 / (n * spacing)
    if np.ptp(profile) < FLAT_PROFILE:
        return GratingMeasurement(period=math.nan, delay=math.nan, bin=0, bin_width=bin_width, flags=(NO_GRATING,))

    spectrum = np.abs(np.fft.rfft(profile - profile.mean()))
    k = int(np.argmax(spectrum[1:])) + 1
    return GratingMeasurement(period=n * spacing / k, delay=k * bin_width, bin=k, bin_width=bin_width)


@dataclass(frozen=True)
class BlochPoint:
    t: float
    u: float
    v: float
    w: float
    low_confidence: bool = False

    @property
    def transverse(self) -> float:
        return math.hypot(self.u, self.v)

    @property
    def length(self) -> float:
        return math.sqrt(self.u ** 2 + self.v ** 2 + self.w ** 2)


SUBSPACES = {"13": (1, 3), "23": (2, 3), "12": (1, 2)}


def bloch_trajectory(history, subspace: str = "13", times: Optional[Sequence[float]] = None) -> List[BlochPoint]:
    """
    Bloch vector of one atom in a two-level subspace (i, j).

    u = 2 Re rho_ij, v = 2 Im rho_ij, w = rho_jj - rho_ii. Points whose
    subspace population is ~0 are marked low-confidence.

    Args:
        history: Object with `times` (S,) and `states` (S, 3, 3)
        subspace: "13", "23" or "12"
        times: Instants to report (nearest samples); all samples if None
    """
    if subspace not in SUBSPACES:
        raise ValueError(f"Unknown subspace {subspace!r}; expected one of {sorted(SUBSPACES)}")
    i, j = (level - 1 for level in SUBSPACES[subspace])
    all_times = np.asarray(history.times)
    states = np.asarray(history.states)
    if times is None:
        indices = range(all_times.size)
    else:
        indices = []
        for t in times:
            if not all_times[0] <= t <= all_times[-1]:
                raise ValueError(f"Time {t} outside the recorded history")
            indices.append(int(np.argmin(np.abs(all_times - t))))

    points = []
    for index in indices:
        rho = states[index]
        coherence = rho[i, j]
        population = float(np.real(rho[i, i] + rho[j, j]))
        points.append(BlochPoint(
            t=float(all_times[index]),
            u=float(2.0 * np.real(coherence)),
            v=float(2.0 * np.imag(coherence)),
            w=float(np.real(rho[j, j] - rho[i, i])),
            low_confidence=population < LOW_POPULATION,
        ))
    return points

"""
Macroscopic observables built from per-atom results.

The engine hands over per-atom traces block by block in grid order; the
weighted sums are folded atom by atom in that order so the result does not
depend on how the atoms were distributed over workers.
"""
from dataclasses import dataclass
from typing import Iterable, Tuple, Union

import numpy as np
import pandas as pd

from .broadening import DetuningGrid


@dataclass
class Signal:
    times: np.ndarray
    polarization: np.ndarray
    populations: np.ndarray

    @property
    def absorption(self) -> np.ndarray:
        return np.imag(self.polarization)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.polarization)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "re_P": np.real(self.polarization),
            "im_P": np.imag(self.polarization),
            "abs_P": np.abs(self.polarization),
            "rho11": self.populations[:, 0],
            "rho22": self.populations[:, 1],
            "rho33": self.populations[:, 2],
        })


@dataclass
class AtomTraces:
    """Per-atom records for a contiguous slice of the grid starting at `start`."""

    start: int
    times: np.ndarray
    coherence13: np.ndarray
    populations: np.ndarray

    def __len__(self) -> int:
        return int(self.coherence13.shape[0])


def aggregate(per_atom_traces: Union[AtomTraces, Iterable[AtomTraces]], grid: DetuningGrid) -> Signal:
    """
    Weighted ensemble sums P(t) = sum w * rho_13 and the weighted populations.

    Args:
        per_atom_traces: One AtomTraces or an iterable of them, in grid order
        grid: The grid whose weights apply

    Returns:
        Signal on the shared sample grid

    Raises:
        ValueError: If sample grids differ, blocks are out of order, or the
            blocks do not cover the grid exactly
    """
    if isinstance(per_atom_traces, AtomTraces):
        per_atom_traces = [per_atom_traces]

    times = None
    polarization = None
    populations = None
    expected_start = 0
    for block in per_atom_traces:
        if times is None:
            times = np.asarray(block.times)
            polarization = np.zeros(times.shape, dtype=complex)
            populations = np.zeros(times.shape + (3,))
        elif not np.array_equal(block.times, times):
            raise ValueError("Traces do not share one sample grid")
        if block.start != expected_start:
            raise ValueError(f"Trace block starts at atom {block.start}, expected {expected_start}")
        if block.coherence13.shape != (len(block), times.size) or block.populations.shape != (len(block), times.size, 3):
            raise ValueError("Trace block arrays do not match the sample grid")
        for offset in range(len(block)):
            weight = grid.weights[block.start + offset]
            polarization += weight * block.coherence13[offset]
            populations += weight * block.populations[offset]
        expected_start += len(block)

    if times is None:
        raise ValueError("No traces to aggregate")
    if expected_start != len(grid):
        raise ValueError(f"Traces cover {expected_start} atoms, grid has {len(grid)}")
    return Signal(times=times, polarization=polarization, populations=populations)


@dataclass
class SpectralSnapshot:
    t: float
    delta_opt: np.ndarray
    im13: np.ndarray
    rho33: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "delta": self.delta_opt,
            "im_rho13": self.im13,
            "rho33": self.rho33,
            "rho11": self.rho11,
            "rho22": self.rho22,
        })


def spectral_snapshot(states: np.ndarray, grid: DetuningGrid, t: float,
                      window: Tuple[float, float]) -> SpectralSnapshot:
    """
    Per-detuning slices of the ensemble at one instant.

    With an explicit spin grid each optical detuning gets the weighted mean
    over its spin sub-grid.

    Args:
        states: Per-atom density matrices, shape (len(grid), 3, 3)
        grid: Detuning grid the states belong to
        t: Instant of the snapshot (s)
        window: Simulated time window (t_start, t_end)

    Raises:
        ValueError: If t is outside the window or shapes do not match
    """
    if not window[0] <= t <= window[1]:
        raise ValueError(f"Snapshot time {t} outside simulated window {window}")
    states = np.asarray(states)
    if states.shape != (len(grid), 3, 3):
        raise ValueError(f"Expected states of shape {(len(grid), 3, 3)}, got {states.shape}")

    columns = np.stack([
        np.imag(states[:, 0, 2]),
        np.real(states[:, 2, 2]),
        np.real(states[:, 0, 0]),
        np.real(states[:, 1, 1]),
    ], axis=1)
    if grid.n_spin > 1:
        w = grid.weights.reshape(grid.n_optical, grid.n_spin)
        w = w / w.sum(axis=1, keepdims=True)
        columns = np.einsum("os,osk->ok", w, columns.reshape(grid.n_optical, grid.n_spin, 4))
    return SpectralSnapshot(
        t=float(t),
        delta_opt=grid.optical_axis.copy(),
        im13=columns[:, 0],
        rho33=columns[:, 1],
        rho11=columns[:, 2],
        rho22=columns[:, 3],
    )

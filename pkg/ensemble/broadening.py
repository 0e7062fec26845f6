"""
Discretized inhomogeneous broadening.

The optical line is a Gaussian sampled on a uniform grid that is truncated
at the stated span; the optional spin broadening is either folded into an
effective rho_12 decay (EFFECTIVE) or sampled explicitly on its own grid
(EXPLICIT), giving a tensor-product grid ordered by optical detuning first,
spin detuning second.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

SPIN_OFF = "off"
SPIN_EFFECTIVE = "effective"
SPIN_EXPLICIT = "explicit"
SPIN_MODES = (SPIN_OFF, SPIN_EFFECTIVE, SPIN_EXPLICIT)

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class EnsembleSpec:
    """Frequencies in Hz; gamma_12_eff in kHz like the other decay constants."""

    optical_fwhm: float = 680e3
    optical_span: float = 1.6e6
    optical_segments: int = 161
    spin_mode: str = SPIN_OFF
    spin_fwhm: float = 0.0
    spin_segments: int = 21
    gamma_12_eff: Optional[float] = None
    gate_effective: bool = False
    spin_span_sigmas: float = 2.5

    def __post_init__(self):
        if self.spin_mode not in SPIN_MODES:
            raise ValueError(f"Unknown spin mode {self.spin_mode!r}; expected one of {SPIN_MODES}")
        if not (self.optical_fwhm > 0 and self.optical_span > 0):
            raise ValueError("optical_fwhm and optical_span must be > 0")
        for name in ("optical_segments", "spin_segments"):
            count = getattr(self, name)
            if int(count) != count or count < 1 or count % 2 == 0:
                raise ValueError(f"{name} must be a positive odd integer, got {count}")
        if self.spin_fwhm < 0:
            raise ValueError("spin_fwhm must be >= 0")
        if self.spin_mode == SPIN_EXPLICIT and self.spin_fwhm <= 0:
            raise ValueError("EXPLICIT spin mode needs spin_fwhm > 0")
        if self.gamma_12_eff is not None:
            if self.spin_mode != SPIN_EFFECTIVE:
                raise ValueError("gamma_12_eff only applies to the EFFECTIVE spin mode")
            if self.gamma_12_eff < 0:
                raise ValueError("gamma_12_eff must be >= 0")

    @property
    def effective_rate_khz(self) -> float:
        """Extra rho_12 decay in kHz; defaults to the spin FWHM quoted in kHz."""
        if self.spin_mode != SPIN_EFFECTIVE:
            return 0.0
        if self.gamma_12_eff is not None:
            return float(self.gamma_12_eff)
        return self.spin_fwhm / 1e3


@dataclass(frozen=True)
class DetuningGrid:
    delta_opt: np.ndarray
    delta_spin: np.ndarray
    weights: np.ndarray
    n_optical: int
    n_spin: int = 1

    def __post_init__(self):
        if not (self.delta_opt.shape == self.delta_spin.shape == self.weights.shape):
            raise ValueError("Grid arrays must share one shape")
        if self.delta_opt.size != self.n_optical * self.n_spin:
            raise ValueError("Grid size does not match n_optical * n_spin")
        if np.any(self.weights < 0):
            raise ValueError("Grid weights must be >= 0")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"Grid weights must sum to 1, got {self.weights.sum()!r}")

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def points(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.delta_opt.tolist(), self.delta_spin.tolist(), self.weights.tolist()))

    @property
    def optical_axis(self) -> np.ndarray:
        return self.delta_opt[:: self.n_spin]

    @property
    def optical_spacing(self) -> float:
        axis = self.optical_axis
        return float(axis[1] - axis[0]) if axis.size > 1 else 0.0


def _symmetric_axis(count: int, half_width: float) -> np.ndarray:
    if count == 1:
        return np.zeros(1)
    step = 2.0 * half_width / (count - 1)
    return (np.arange(count) - (count - 1) // 2) * step


def build_grid(spec: EnsembleSpec) -> DetuningGrid:
    """
    Sample the broadening profile.

    Optical points are uniformly spaced over [-span/2, +span/2] with
    Gaussian weights of the given FWHM; EXPLICIT mode multiplies in a spin
    grid spanning +-2.5 sigma. Weights are renormalized to sum 1.

    Args:
        spec: Ensemble description

    Returns:
        DetuningGrid ordered by ascending optical, then spin detuning
    """
    optical = _symmetric_axis(spec.optical_segments, 0.5 * spec.optical_span)
    optical_w = np.exp(-4.0 * math.log(2.0) * (optical / spec.optical_fwhm) ** 2)

    if spec.spin_mode == SPIN_EXPLICIT:
        sigma = spec.spin_fwhm * FWHM_TO_SIGMA
        spin = _symmetric_axis(spec.spin_segments, spec.spin_span_sigmas * sigma)
        spin_w = np.exp(-0.5 * (spin / sigma) ** 2)
    else:
        spin = np.zeros(1)
        spin_w = np.ones(1)

    n_spin = spin.size
    delta_opt = np.repeat(optical, n_spin)
    delta_spin = np.tile(spin, optical.size)
    weights = np.repeat(optical_w, n_spin) * np.tile(spin_w, optical.size)
    weights = weights / weights.sum()
    return DetuningGrid(delta_opt=delta_opt, delta_spin=delta_spin, weights=weights,
                        n_optical=int(optical.size), n_spin=int(n_spin))

"""
Parameter scans: one full run per storage delay or per B2 area.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence as Seq

import pandas as pd

from analysis.echoes import EchoMeasurement
from ensemble.signals import Signal
from protocol.sequences import B1, Sequence, with_b2_area, with_t_b2
from utils.errors import SequenceError
from .runner import RunConfig, measure_echo, run

log = logging.getLogger(__name__)

STORAGE = "storage"
B2_AREA = "b2_area"

# storage is t_B2 - t_B1 for storage scans and empty for area scans
SCAN_COLUMNS = ["axis", "storage", "echo_time", "amplitude", "amplitude_sq"]


@dataclass
class ScanResult:
    """
    One entry per axis value. Points whose derived sequence was invalid
    keep a None echo and add a line to `warnings`.
    """

    kind: str
    axis: List[float]
    echoes: List[Optional[EchoMeasurement]]
    storage: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    raw_signals: List[Optional[Signal]] = field(default_factory=list)

    def points(self, storage_axis: bool = True):
        """(x, amplitude) pairs of the valid points, x = storage time when known."""
        xs = self.storage if storage_axis and self.storage else self.axis
        return [(x, echo.amplitude) for x, echo in zip(xs, self.echoes) if echo is not None]

    def to_frame(self) -> pd.DataFrame:
        storage = self.storage if self.storage else [math.nan] * len(self.axis)
        rows = []
        for value, held, echo in zip(self.axis, storage, self.echoes):
            rows.append({
                "axis": value,
                "storage": held,
                "echo_time": echo.t_peak if echo is not None else math.nan,
                "amplitude": echo.amplitude if echo is not None else math.nan,
                "amplitude_sq": echo.intensity if echo is not None else math.nan,
            })
        return pd.DataFrame(rows, columns=SCAN_COLUMNS)


def _scan(base: RunConfig, kind: str, axis: Seq[float], derive: Callable[[Sequence, float], Sequence],
          keep_signals: bool) -> ScanResult:
    result = ScanResult(kind=kind, axis=[float(x) for x in axis], echoes=[])
    for step, value in enumerate(result.axis, start=1):
        log.info("[STEP %d/%d] %s = %.6g", step, len(result.axis), kind, value)
        try:
            sequence = derive(base.sequence, value)
        except SequenceError as exc:
            message = f"{kind} = {value:.6g}: {exc}"
            log.warning("Skipping scan point, %s", message)
            result.warnings.append(message)
            result.echoes.append(None)
            result.raw_signals.append(None)
            continue
        outcome = run(replace(base, sequence=sequence, snapshot_times=(), bloch_detunings=()))
        result.echoes.append(measure_echo(outcome))
        result.raw_signals.append(outcome.signal if keep_signals else None)
    return result


def scan_storage(base: RunConfig, t_b2_list: Seq[float], keep_signals: bool = False) -> ScanResult:
    """
    Echo amplitude versus B2 position.

    Args:
        base: Run config whose sequence is LOCKED or PHASE_LOCKED
        t_b2_list: B2 center times (s), strictly increasing
        keep_signals: Keep every run's Signal in raw_signals

    Returns:
        ScanResult; `storage` holds t_B2 - t_B1 for each point
    """
    if not t_b2_list:
        raise ValueError("Storage scan needs at least one B2 time")
    if any(b <= a for a, b in zip(t_b2_list, t_b2_list[1:])):
        raise ValueError("Storage scan B2 times must be strictly increasing")
    t_b1 = base.sequence.first(B1).t_center
    result = _scan(base, STORAGE, t_b2_list, with_t_b2, keep_signals)
    result.storage = [t - t_b1 for t in result.axis]
    return result


def scan_b2_area(base: RunConfig, areas: Seq[float], keep_signals: bool = False) -> ScanResult:
    """
    Echo amplitude versus B2 area (radians) with B1 unchanged. Repeated
    areas are allowed and give identical measurements.
    """
    if not areas:
        raise ValueError("Area scan needs at least one area")
    if any(not (math.isfinite(a) and a > 0) for a in areas):
        raise ValueError("B2 areas must be finite and > 0")
    return _scan(base, B2_AREA, areas, with_b2_area, keep_signals)

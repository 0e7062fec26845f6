"""
Pulse sequences for the four echo protocols.

Pulse times are pulse centers. Rectangular pulses only: the area is set by
the duration at a fixed Rabi frequency, area = 2*pi*rabi*duration.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from blochCore.dynamics import Drive
from utils.errors import SequenceError

log = logging.getLogger(__name__)

CHANNEL_A = "A"
CHANNEL_B = "B"
CHANNELS = (CHANNEL_A, CHANNEL_B)

DATA, WRITE, READ, B1, B2, PI = "DATA", "WRITE", "READ", "B1", "B2", "PI"
LABELS = (DATA, WRITE, READ, B1, B2, PI)

TWO_PULSE = "TWO_PULSE"
THREE_PULSE = "THREE_PULSE"
LOCKED = "LOCKED"
PHASE_LOCKED = "PHASE_LOCKED"
PROTOCOLS = (TWO_PULSE, THREE_PULSE, LOCKED, PHASE_LOCKED)

RECORD_MARGIN = 5e-6
# Two pulse edges closer than this count as touching, not overlapping
EDGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Pulse:
    channel: str
    t_center: float
    duration: float
    rabi: float
    label: str
    phase: float = 0.0

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise SequenceError(f"Unknown channel {self.channel!r}")
        if self.label not in LABELS:
            raise SequenceError(f"Unknown pulse label {self.label!r}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise SequenceError(f"{self.label} duration must be > 0, got {self.duration}")
        if not (self.rabi > 0 and math.isfinite(self.rabi)):
            raise SequenceError(f"{self.label} Rabi frequency must be > 0, got {self.rabi}")
        if not (math.isfinite(self.t_center) and math.isfinite(self.phase)):
            raise SequenceError(f"{self.label} timing and phase must be finite")

    @property
    def t_start(self) -> float:
        return self.t_center - 0.5 * self.duration

    @property
    def t_end(self) -> float:
        return self.t_center + 0.5 * self.duration

    @property
    def area(self) -> float:
        return 2.0 * math.pi * self.rabi * self.duration

    def drive(self) -> Drive:
        if self.channel == CHANNEL_A:
            return Drive(omega_a=self.rabi, phase_a=self.phase)
        return Drive(omega_b=self.rabi, phase_b=self.phase)


@dataclass(frozen=True)
class Sequence:
    """
    Time-ordered pulses plus the recording horizon. `params` keeps the
    builder arguments so scans can derive variants of the same sequence.
    """

    pulses: Tuple[Pulse, ...]
    record_until: float
    protocol: str
    params: Dict = field(default_factory=dict, compare=False)

    def first(self, label: str) -> Pulse:
        for pulse in self.pulses:
            if pulse.label == label:
                return pulse
        raise SequenceError(f"{self.protocol} sequence has no {label} pulse")

    def on_channel(self, channel: str) -> List[Pulse]:
        return [p for p in self.pulses if p.channel == channel]

    @property
    def max_duration(self) -> float:
        return max((p.duration for p in self.pulses), default=0.0)


def area_to_duration(rabi: float, area: float) -> float:
    """
    Pulse duration that gives the requested area at a fixed Rabi frequency.

    Args:
        rabi: Rabi frequency (Hz), > 0
        area: Pulse area (radians), > 0

    Returns:
        Duration in seconds, area / (2*pi*rabi)
    """
    if not (math.isfinite(rabi) and rabi > 0):
        raise ValueError(f"Rabi frequency must be > 0, got {rabi}")
    if not (math.isfinite(area) and area > 0):
        raise ValueError(f"Pulse area must be > 0, got {area}")
    return area / (2.0 * math.pi * rabi)


def _pulse(channel: str, label: str, t_center: float, rabi: float, area: float) -> Pulse:
    return Pulse(channel=channel, t_center=t_center, duration=area_to_duration(rabi, area), rabi=rabi, label=label)


def _finish(protocol: str, pulses: List[Pulse], params: dict, record_margin: float) -> Sequence:
    draft = Sequence(pulses=tuple(pulses), record_until=math.inf, protocol=protocol, params=params)
    record_until = expected_echo_time(draft) + record_margin
    sequence = Sequence(pulses=tuple(pulses), record_until=record_until, protocol=protocol, params=params)
    for warning in validate(sequence):
        log.warning(warning)
    return sequence


def build_two_pulse(t_data: float, t_pi: float, rabi: float, data_area: float = math.pi / 2,
                    pi_area: float = math.pi, record_margin: float = RECORD_MARGIN) -> Sequence:
    """DATA (pi/2) then a PI rephasing pulse, both on channel A."""
    if not t_pi > t_data:
        raise SequenceError(f"PI pulse at {t_pi} must follow DATA at {t_data}")
    params = dict(t_data=t_data, t_pi=t_pi, rabi=rabi, data_area=data_area, pi_area=pi_area,
                  record_margin=record_margin)
    pulses = [
        _pulse(CHANNEL_A, DATA, t_data, rabi, data_area),
        _pulse(CHANNEL_A, PI, t_pi, rabi, pi_area),
    ]
    return _finish(TWO_PULSE, pulses, params, record_margin)


def build_three_pulse(t_data: float, t_write: float, t_read: float, rabi: float,
                      area: float = math.pi / 2, record_margin: float = RECORD_MARGIN) -> Sequence:
    """Stimulated echo: DATA, WRITE, READ, all pi/2 on channel A."""
    if not t_data < t_write < t_read:
        raise SequenceError(f"Need t_data < t_write < t_read, got {t_data}, {t_write}, {t_read}")
    params = dict(t_data=t_data, t_write=t_write, t_read=t_read, rabi=rabi, area=area,
                  record_margin=record_margin)
    pulses = [
        _pulse(CHANNEL_A, DATA, t_data, rabi, area),
        _pulse(CHANNEL_A, WRITE, t_write, rabi, area),
        _pulse(CHANNEL_A, READ, t_read, rabi, area),
    ]
    return _finish(THREE_PULSE, pulses, params, record_margin)


def build_locked(t_data: float, t_write: float, t_b1: float, t_b2: float, read_delay: float,
                 rabi_a: float, rabi_b: float, b1_area: float = math.pi, b2_area: float = 3 * math.pi,
                 area: float = math.pi / 2, record_margin: float = RECORD_MARGIN) -> Sequence:
    """
    Optically locked echo: DATA, WRITE on A; B1, B2 on B; READ on A.

    READ starts read_delay after B2 ends. B1 + B2 = 4*pi by default; the
    areas can be overridden for area scans.
    """
    if not t_data < t_write < t_b1 < t_b2:
        raise SequenceError(f"Need t_data < t_write < t_b1 < t_b2, got {t_data}, {t_write}, {t_b1}, {t_b2}")
    if not read_delay >= 0:
        raise SequenceError(f"read_delay must be >= 0, got {read_delay}")
    params = dict(t_data=t_data, t_write=t_write, t_b1=t_b1, t_b2=t_b2, read_delay=read_delay,
                  rabi_a=rabi_a, rabi_b=rabi_b, b1_area=b1_area, b2_area=b2_area, area=area,
                  record_margin=record_margin)
    b2_duration = area_to_duration(rabi_b, b2_area)
    read_duration = area_to_duration(rabi_a, area)
    t_read = t_b2 + 0.5 * b2_duration + read_delay + 0.5 * read_duration
    pulses = [
        _pulse(CHANNEL_A, DATA, t_data, rabi_a, area),
        _pulse(CHANNEL_A, WRITE, t_write, rabi_a, area),
        _pulse(CHANNEL_B, B1, t_b1, rabi_b, b1_area),
        _pulse(CHANNEL_B, B2, t_b2, rabi_b, b2_area),
        _pulse(CHANNEL_A, READ, t_read, rabi_a, area),
    ]
    return _finish(LOCKED, pulses, params, record_margin)


def build_phase_locked(t_data: float, t_b1: float, t_b2: float, t_pi: float, rabi_a: float, rabi_b: float,
                       b1_area: float = math.pi, b2_area: float = math.pi, data_area: float = math.pi / 2,
                       pi_area: float = math.pi, record_margin: float = RECORD_MARGIN) -> Sequence:
    """
    Phase locked echo: DATA on A, B1 and B2 (both pi) on B, PI rephasing on A.
    The optical coherence rides on rho_12 between B1 and B2.
    """
    if not t_data < t_b1 < t_b2 < t_pi:
        raise SequenceError(f"Need t_data < t_b1 < t_b2 < t_pi, got {t_data}, {t_b1}, {t_b2}, {t_pi}")
    params = dict(t_data=t_data, t_b1=t_b1, t_b2=t_b2, t_pi=t_pi, rabi_a=rabi_a, rabi_b=rabi_b,
                  b1_area=b1_area, b2_area=b2_area, data_area=data_area, pi_area=pi_area,
                  record_margin=record_margin)
    pulses = [
        _pulse(CHANNEL_A, DATA, t_data, rabi_a, data_area),
        _pulse(CHANNEL_B, B1, t_b1, rabi_b, b1_area),
        _pulse(CHANNEL_B, B2, t_b2, rabi_b, b2_area),
        _pulse(CHANNEL_A, PI, t_pi, rabi_a, pi_area),
    ]
    return _finish(PHASE_LOCKED, pulses, params, record_margin)


def build_fig4_like(t_b2: float, t_data: float = 5e-6, rabi_a: float = 2.5e6, rabi_b: float = 5e6,
                    write_delay: float = 10e-6, b1_delay: float = 5e-6, read_delay: float = 3e-6,
                    record_margin: float = RECORD_MARGIN) -> Sequence:
    """Locked sequence with the experimental delays: D->W 10 us, W->B1 5 us, B2->R 3 us."""
    t_write = t_data + write_delay
    return build_locked(t_data, t_write, t_write + b1_delay, t_b2, read_delay, rabi_a, rabi_b,
                        record_margin=record_margin)


_BUILDERS = {
    TWO_PULSE: build_two_pulse,
    THREE_PULSE: build_three_pulse,
    LOCKED: build_locked,
    PHASE_LOCKED: build_phase_locked,
}


def rebuild(seq: Sequence, **overrides) -> Sequence:
    """Re-run the sequence's builder with some arguments replaced."""
    if seq.protocol not in _BUILDERS:
        raise ValueError(f"Unknown protocol {seq.protocol!r}")
    params = dict(seq.params)
    unknown = set(overrides) - set(params)
    if unknown:
        raise ValueError(f"{seq.protocol} builder has no parameters {sorted(unknown)}")
    params.update(overrides)
    return _BUILDERS[seq.protocol](**params)


def _pi_gap_after_b2(seq: Sequence) -> float:
    return seq.first(PI).t_start - seq.first(B2).t_end


def with_t_b2(seq: Sequence, t_b2: float) -> Sequence:
    """
    Same sequence with B2 moved. LOCKED re-anchors READ through read_delay;
    PHASE_LOCKED keeps the B2-end to PI-start gap.
    """
    if seq.protocol == LOCKED:
        return rebuild(seq, t_b2=t_b2)
    if seq.protocol == PHASE_LOCKED:
        gap = _pi_gap_after_b2(seq)
        b2_duration = seq.first(B2).duration
        pi_duration = seq.first(PI).duration
        return rebuild(seq, t_b2=t_b2, t_pi=t_b2 + 0.5 * b2_duration + gap + 0.5 * pi_duration)
    raise SequenceError(f"{seq.protocol} sequences have no B2 pulse to move")


def with_b2_area(seq: Sequence, area: float) -> Sequence:
    """Same sequence with another B2 area; the pulse after B2 is re-anchored."""
    if seq.protocol == LOCKED:
        return rebuild(seq, b2_area=area)
    if seq.protocol == PHASE_LOCKED:
        gap = _pi_gap_after_b2(seq)
        b2 = seq.first(B2)
        new_duration = area_to_duration(b2.rabi, area)
        pi_duration = seq.first(PI).duration
        return rebuild(seq, b2_area=area, t_pi=b2.t_center + 0.5 * new_duration + gap + 0.5 * pi_duration)
    raise SequenceError(f"{seq.protocol} sequences have no B2 pulse")


def expected_echo_time(seq: Sequence) -> float:
    """
    Center-to-center echo prediction.

    TWO_PULSE: 2*t_pi - t_D; THREE_PULSE and LOCKED: t_R + (t_W - t_D);
    PHASE_LOCKED: 2*t_pi - t_D - (t_B2 - t_B1).
    """
    if seq.protocol == TWO_PULSE:
        return 2.0 * seq.first(PI).t_center - seq.first(DATA).t_center
    if seq.protocol in (THREE_PULSE, LOCKED):
        return seq.first(READ).t_center + seq.first(WRITE).t_center - seq.first(DATA).t_center
    if seq.protocol == PHASE_LOCKED:
        storage = seq.first(B2).t_center - seq.first(B1).t_center
        return 2.0 * seq.first(PI).t_center - seq.first(DATA).t_center - storage
    raise ValueError(f"Unknown protocol {seq.protocol!r}")


_REQUIRED_LABELS = {
    TWO_PULSE: (DATA, PI),
    THREE_PULSE: (DATA, WRITE, READ),
    LOCKED: (DATA, WRITE, B1, B2, READ),
    PHASE_LOCKED: (DATA, B1, B2, PI),
}


def validate(seq: Sequence) -> List[str]:
    """
    Check ordering, same-channel overlaps and protocol structure.

    Returns:
        List of warnings (e.g. an unwanted echo landing on the wanted one)

    Raises:
        SequenceError: On any violation
    """
    if seq.protocol not in PROTOCOLS:
        raise SequenceError(f"Unknown protocol {seq.protocol!r}")
    centers = [p.t_center for p in seq.pulses]
    if centers != sorted(centers):
        raise SequenceError("Pulses are not time-ordered")
    for channel in CHANNELS:
        pulses = seq.on_channel(channel)
        for earlier, later in zip(pulses, pulses[1:]):
            if later.t_start < earlier.t_end - EDGE_TOLERANCE:
                raise SequenceError(
                    f"{earlier.label} and {later.label} overlap on channel {channel} "
                    f"({earlier.t_end:.9g} s > {later.t_start:.9g} s)"
                )

    labels = [p.label for p in seq.pulses]
    for label in _REQUIRED_LABELS[seq.protocol]:
        if labels.count(label) != 1:
            raise SequenceError(f"{seq.protocol} needs exactly one {label} pulse, found {labels.count(label)}")
    if seq.pulses and seq.pulses[0].t_start < 0:
        raise SequenceError("Pulses must start at t >= 0")

    if seq.protocol == LOCKED:
        if [p.label for p in seq.on_channel(CHANNEL_B)] != [B1, B2]:
            raise SequenceError("LOCKED needs exactly B1 then B2 on channel B")
        write, read = seq.first(WRITE), seq.first(READ)
        if not (write.t_center < seq.first(B1).t_center and seq.first(B2).t_end <= read.t_start + EDGE_TOLERANCE):
            raise SequenceError("B1 and B2 must lie between WRITE and READ")
    if seq.protocol == PHASE_LOCKED:
        if [p.label for p in seq.on_channel(CHANNEL_B)] != [B1, B2]:
            raise SequenceError("PHASE_LOCKED needs exactly B1 then B2 on channel B")

    echo = expected_echo_time(seq)
    if not seq.record_until > echo:
        raise SequenceError(f"record_until {seq.record_until} does not reach the echo at {echo}")
    last_end = max(p.t_end for p in seq.pulses)
    if echo <= last_end:
        raise SequenceError(f"Predicted echo at {echo} falls before the last pulse ends ({last_end})")

    warnings = []
    if seq.protocol in (THREE_PULSE, LOCKED):
        t_d, t_w, t_r = (seq.first(x).t_center for x in (DATA, WRITE, READ))
        if abs((t_r - t_w) - (t_w - t_d)) < seq.max_duration:
            warnings.append(
                f"Two-pulse echo of WRITE/READ at {2 * t_r - t_w:.9g} s collides with the stimulated echo at {echo:.9g} s"
            )
    return warnings

import math

import pytest

from protocol.sequences import (
    B1,
    B2,
    DATA,
    LOCKED,
    PHASE_LOCKED,
    PI,
    READ,
    WRITE,
    Pulse,
    Sequence,
    area_to_duration,
    build_fig4_like,
    build_phase_locked,
    build_three_pulse,
    build_two_pulse,
    expected_echo_time,
    rebuild,
    validate,
    with_b2_area,
    with_t_b2,
)
from utils.errors import SequenceError

from conftest import US


def test_area_to_duration():
    assert area_to_duration(2.5e6, math.pi / 2) == pytest.approx(0.1 * US)
    assert area_to_duration(5e6, 3 * math.pi) == pytest.approx(0.3 * US)
    assert area_to_duration(10e6, math.pi) == pytest.approx(0.05 * US)
    with pytest.raises(ValueError):
        area_to_duration(0.0, math.pi)
    with pytest.raises(ValueError):
        area_to_duration(1e6, -1.0)


def test_pulse_area_round_trips_through_duration():
    pulse = Pulse(channel="B", t_center=1 * US, duration=area_to_duration(5e6, 3 * math.pi), rabi=5e6, label=B2)
    assert pulse.area == pytest.approx(3 * math.pi)
    assert pulse.t_start == pytest.approx(0.85 * US)
    assert pulse.drive().omega_b == 5e6 and pulse.drive().omega_a == 0.0


@pytest.mark.parametrize("kwargs", [
    {"channel": "C", "t_center": 0.0, "duration": 1e-7, "rabi": 1e6, "label": DATA},
    {"channel": "A", "t_center": 0.0, "duration": 1e-7, "rabi": 1e6, "label": "PROBE"},
    {"channel": "A", "t_center": 0.0, "duration": 0.0, "rabi": 1e6, "label": DATA},
    {"channel": "A", "t_center": 0.0, "duration": 1e-7, "rabi": -1.0, "label": DATA},
    {"channel": "A", "t_center": math.nan, "duration": 1e-7, "rabi": 1e6, "label": DATA},
])
def test_bad_pulses_rejected(kwargs):
    with pytest.raises(SequenceError):
        Pulse(**kwargs)


def test_two_pulse_echo_time(two_pulse):
    assert expected_echo_time(two_pulse) == pytest.approx(15 * US)
    assert two_pulse.record_until == pytest.approx(20 * US)
    assert two_pulse.first(PI).duration == pytest.approx(0.2 * US)


def test_three_pulse_echo_time(three_pulse):
    assert expected_echo_time(three_pulse) == pytest.approx(55.4 * US)
    assert [p.label for p in three_pulse.pulses] == [DATA, WRITE, READ]


def test_locked_read_follows_b2(locked):
    read = locked.first(READ)
    assert read.t_start == pytest.approx(locked.first(B2).t_end)
    assert read.t_center == pytest.approx(50.4 * US)
    assert expected_echo_time(locked) == pytest.approx(55.4 * US)
    assert locked.first(B1).area + locked.first(B2).area == pytest.approx(4 * math.pi)


def test_phase_locked_echo_time_subtracts_storage():
    seq = build_phase_locked(5 * US, 10.1 * US, 10.2 * US, 10.325 * US, 2.5e6, 10e6)
    assert expected_echo_time(seq) == pytest.approx(15.55 * US)
    assert seq.protocol == PHASE_LOCKED


def test_fig4_like_timing():
    seq = build_fig4_like(20.2 * US)
    assert seq.protocol == LOCKED
    assert seq.first(WRITE).t_center == pytest.approx(15 * US)
    assert seq.first(B1).t_center == pytest.approx(20 * US)
    assert seq.first(READ).t_center == pytest.approx(23.4 * US)
    assert expected_echo_time(seq) == pytest.approx(33.4 * US)


def test_overlapping_pulses_rejected():
    with pytest.raises(SequenceError):
        build_two_pulse(5 * US, 5.1 * US, 2.5e6)


def test_wrong_order_rejected():
    with pytest.raises(SequenceError):
        build_two_pulse(10 * US, 5 * US, 2.5e6)
    with pytest.raises(SequenceError):
        build_three_pulse(5 * US, 50 * US, 10 * US, 2.5e6)


def test_hand_built_sequence_validation(two_pulse):
    reversed_seq = Sequence(pulses=two_pulse.pulses[::-1], record_until=two_pulse.record_until,
                            protocol=two_pulse.protocol)
    with pytest.raises(SequenceError):
        validate(reversed_seq)
    short = Sequence(pulses=two_pulse.pulses, record_until=14 * US, protocol=two_pulse.protocol)
    with pytest.raises(SequenceError):
        validate(short)
    with pytest.raises(SequenceError):
        validate(Sequence(pulses=two_pulse.pulses, record_until=20 * US, protocol="FOUR_PULSE"))
    with pytest.raises(SequenceError):
        two_pulse.first(B1)


def test_echo_collision_warning():
    seq = build_three_pulse(5 * US, 10 * US, 15 * US, 2.5e6)
    warnings = validate(seq)
    assert len(warnings) == 1
    assert "collides" in warnings[0]


def test_no_warning_for_separated_echoes(three_pulse):
    assert validate(three_pulse) == []


def test_with_t_b2_moves_read_for_locked(locked):
    moved = with_t_b2(locked, 30 * US)
    assert moved.first(B2).t_center == pytest.approx(30 * US)
    assert moved.first(READ).t_start == pytest.approx(moved.first(B2).t_end)
    assert expected_echo_time(moved) == pytest.approx(35.2 * US)
    assert moved.first(B1) == locked.first(B1)


def test_with_t_b2_keeps_pi_gap_for_phase_locked():
    seq = build_phase_locked(5 * US, 10.1 * US, 10.2 * US, 10.325 * US, 2.5e6, 10e6)
    moved = with_t_b2(seq, 55 * US)
    assert moved.first(PI).t_center == pytest.approx(55.125 * US)
    assert expected_echo_time(moved) == pytest.approx(60.35 * US)


def test_with_t_b2_needs_a_b2_pulse(two_pulse):
    with pytest.raises(SequenceError):
        with_t_b2(two_pulse, 30 * US)


def test_with_b2_area_reanchors_read(locked):
    pi_b2 = with_b2_area(locked, math.pi)
    assert pi_b2.first(B2).area == pytest.approx(math.pi)
    assert pi_b2.first(B2).t_center == locked.first(B2).t_center
    assert pi_b2.first(READ).t_start == pytest.approx(pi_b2.first(B2).t_end)
    assert pi_b2.first(B1).area == pytest.approx(math.pi)


def test_rebuild_rejects_unknown_parameters(locked):
    assert rebuild(locked) == locked
    with pytest.raises(ValueError):
        rebuild(locked, t_pi=1 * US)

import math
from types import SimpleNamespace

import numpy as np
import pytest

from analysis.echoes import (
    NO_ECHO,
    NO_GRATING,
    WIDTH_UNRESOLVED,
    EchoMeasurement,
    amplitude_ratio,
    bloch_trajectory,
    detect_echo,
    grating_period,
    intensity_ratio,
)
from ensemble.signals import Signal

from conftest import US


def _gaussian_signal(center=5.003 * US, fwhm=0.4 * US, height=0.3):
    times = np.arange(1001) * 10e-9
    envelope = height * np.exp(-4.0 * math.log(2.0) * ((times - center) / fwhm) ** 2)
    return Signal(times=times, polarization=envelope * np.exp(1j * 0.7), populations=np.zeros((times.size, 3)))


def test_gaussian_echo_peak_and_width():
    echo = detect_echo(_gaussian_signal(), (3 * US, 7 * US))
    assert echo.found
    assert echo.flags == ()
    assert echo.t_peak == pytest.approx(5.003 * US, abs=1e-9)
    assert echo.amplitude == pytest.approx(0.3, rel=1e-4)
    assert echo.fwhm == pytest.approx(0.4 * US, rel=1e-2)
    assert echo.intensity == pytest.approx(0.09, rel=1e-3)


def test_echo_ignores_global_phase():
    signal = _gaussian_signal()
    rotated = Signal(times=signal.times, polarization=signal.polarization * np.exp(1j * 2.1),
                     populations=signal.populations)
    a = detect_echo(signal, (3 * US, 7 * US))
    b = detect_echo(rotated, (3 * US, 7 * US))
    assert b.amplitude == pytest.approx(a.amplitude, rel=1e-12)
    assert b.t_peak == pytest.approx(a.t_peak, rel=1e-12)


def test_zero_window_reports_no_echo():
    times = np.linspace(0, 10 * US, 101)
    signal = Signal(times=times, polarization=np.zeros(101, dtype=complex), populations=np.zeros((101, 3)))
    echo = detect_echo(signal, (2 * US, 4 * US))
    assert not echo.found
    assert echo.flags == (NO_ECHO,)
    assert echo.amplitude == 0.0
    assert echo.t_peak == pytest.approx(3 * US)
    assert math.isnan(echo.fwhm)


def test_truncated_peak_flags_unresolved_width():
    echo = detect_echo(_gaussian_signal(), (4.9 * US, 5.1 * US))
    assert echo.found
    assert WIDTH_UNRESOLVED in echo.flags
    assert math.isnan(echo.fwhm)


@pytest.mark.parametrize("window", [(5 * US, 5 * US), (6 * US, 4 * US), (-1 * US, 4 * US), (8 * US, 12 * US)])
def test_bad_windows_rejected(window):
    with pytest.raises(ValueError):
        detect_echo(_gaussian_signal(), window)


def test_echo_ratios():
    reference = EchoMeasurement(t_peak=1.0, amplitude=0.4, fwhm=0.1, window=(0.0, 2.0))
    echo = EchoMeasurement(t_peak=1.0, amplitude=0.1, fwhm=0.1, window=(0.0, 2.0))
    assert amplitude_ratio(echo, reference) == pytest.approx(0.25)
    assert intensity_ratio(echo, reference) == pytest.approx(0.0625)
    with pytest.raises(ValueError):
        amplitude_ratio(reference, EchoMeasurement(t_peak=1.0, amplitude=0.0, fwhm=math.nan, window=(0.0, 2.0)))


def test_echo_to_dict():
    payload = EchoMeasurement(t_peak=1.0, amplitude=0.5, fwhm=0.1, window=(0.0, 2.0)).to_dict()
    assert payload["intensity"] == 0.25
    assert payload["window"] == [0.0, 2.0]
    assert payload["flags"] == []


@pytest.mark.parametrize("separation", [2 * US, 5 * US, 10 * US])
def test_grating_delay_matches_pulse_separation(separation):
    delta = (np.arange(161) - 80) * 10e3
    grating = grating_period((delta, np.cos(2 * math.pi * delta * separation)))
    assert grating.delay == pytest.approx(separation, abs=grating.bin_width)


def test_grating_period_of_five_microsecond_separation():
    delta = (np.arange(161) - 80) * 10e3
    profile = 0.25 * (1 - np.cos(2 * math.pi * delta * 5 * US))
    grating = grating_period((delta, profile))
    assert grating.found
    assert grating.bin == 8
    assert grating.bin_width == pytest.approx(1 / 1.61e6)
    assert grating.period == pytest.approx(200e3, abs=grating.period / grating.bin)
    assert grating.delay == pytest.approx(5 * US, abs=grating.bin_width)


def test_flat_profile_has_no_grating():
    delta = (np.arange(161) - 80) * 10e3
    grating = grating_period((delta, np.full(161, 0.5)))
    assert not grating.found
    assert grating.flags == (NO_GRATING,)
    assert math.isnan(grating.period)


def test_grating_input_checks():
    with pytest.raises(ValueError):
        grating_period((np.arange(3.0), np.arange(3.0)))
    with pytest.raises(ValueError):
        grating_period((np.array([0.0, 1.0, 3.0, 4.0, 5.0]), np.arange(5.0)))


def _history():
    ground = np.diag([1.0, 0.0, 0.0]).astype(complex)
    superposition = np.zeros((3, 3), dtype=complex)
    superposition[0, 0] = superposition[2, 2] = 0.5
    superposition[0, 2] = 0.5
    superposition[2, 0] = 0.5
    excited = np.diag([0.0, 0.0, 1.0]).astype(complex)
    return SimpleNamespace(times=np.array([0.0, 1.0, 2.0]), states=np.array([ground, superposition, excited]))


def test_bloch_trajectory_components():
    points = bloch_trajectory(_history(), "13")
    assert [p.w for p in points] == pytest.approx([-1.0, 0.0, 1.0])
    assert points[1].u == pytest.approx(1.0)
    assert points[1].v == pytest.approx(0.0)
    assert all(p.length == pytest.approx(1.0) for p in points)
    assert not any(p.low_confidence for p in points)


def test_bloch_trajectory_nearest_samples_and_confidence():
    points = bloch_trajectory(_history(), "12", times=[1.2, 2.0])
    assert [p.t for p in points] == [1.0, 2.0]
    assert points[1].low_confidence
    assert points[0].transverse == 0.0


def test_bloch_trajectory_rejects_bad_requests():
    with pytest.raises(ValueError):
        bloch_trajectory(_history(), "31")
    with pytest.raises(ValueError):
        bloch_trajectory(_history(), "13", times=[3.0])

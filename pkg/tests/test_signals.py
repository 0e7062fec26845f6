import numpy as np
import pytest

from blochCore.dynamics import Detunings, RelaxationRates, propagate_free
from ensemble.broadening import SPIN_EXPLICIT, DetuningGrid, EnsembleSpec, build_grid
from ensemble.signals import AtomTraces, aggregate, spectral_snapshot


def _traces(times, start, stop):
    n = stop - start
    coherence = np.outer(np.arange(start, stop) + 1.0, np.ones(times.size)) * (1 + 1j)
    populations = np.zeros((n, times.size, 3))
    populations[..., 0] = 1.0
    return AtomTraces(start=start, times=times, coherence13=coherence, populations=populations)


def test_aggregate_weights_per_atom_traces():
    grid = build_grid(EnsembleSpec(optical_segments=5, optical_span=400e3))
    times = np.linspace(0, 1e-6, 4)
    signal = aggregate([_traces(times, 0, 2), _traces(times, 2, 5)], grid)
    expected = np.sum(grid.weights * (np.arange(5) + 1.0)) * (1 + 1j)
    np.testing.assert_allclose(signal.polarization, expected)
    np.testing.assert_allclose(signal.populations[:, 0], 1.0)
    np.testing.assert_allclose(signal.absorption, expected.imag)


def test_aggregate_single_block_equals_split_blocks():
    grid = build_grid(EnsembleSpec(optical_segments=7, optical_span=600e3))
    times = np.linspace(0, 1e-6, 3)
    whole = aggregate(_traces(times, 0, 7), grid)
    split = aggregate([_traces(times, 0, 3), _traces(times, 3, 7)], grid)
    np.testing.assert_array_equal(whole.polarization, split.polarization)


def test_aggregate_rejects_bad_blocks():
    grid = build_grid(EnsembleSpec(optical_segments=5, optical_span=400e3))
    times = np.linspace(0, 1e-6, 4)
    with pytest.raises(ValueError):
        aggregate([_traces(times, 2, 5), _traces(times, 0, 2)], grid)
    with pytest.raises(ValueError):
        aggregate([_traces(times, 0, 2), _traces(times[:3], 2, 5)], grid)
    with pytest.raises(ValueError):
        aggregate([_traces(times, 0, 4)], grid)
    with pytest.raises(ValueError):
        aggregate([], grid)


def test_signal_frame_columns():
    grid = build_grid(EnsembleSpec(optical_segments=3, optical_span=200e3))
    times = np.linspace(0, 1e-6, 2)
    frame = aggregate(_traces(times, 0, 3), grid).to_frame()
    assert list(frame.columns) == ["t", "re_P", "im_P", "abs_P", "rho11", "rho22", "rho33"]
    assert len(frame) == 2


def test_snapshot_marginalizes_spin_subgrid():
    grid = build_grid(EnsembleSpec(optical_segments=3, optical_span=200e3, spin_mode=SPIN_EXPLICIT,
                                   spin_fwhm=10e3, spin_segments=5))
    states = np.zeros((len(grid), 3, 3), dtype=complex)
    states[:, 2, 2] = np.repeat([0.1, 0.2, 0.3], 5)
    states[:, 0, 0] = 1.0 - states[:, 2, 2]
    states[:, 0, 2] = 0.25j
    snapshot = spectral_snapshot(states, grid, 5e-6, (0.0, 10e-6))
    np.testing.assert_allclose(snapshot.delta_opt, [-100e3, 0.0, 100e3])
    np.testing.assert_allclose(snapshot.rho33, [0.1, 0.2, 0.3])
    np.testing.assert_allclose(snapshot.im13, 0.25)
    assert list(snapshot.to_frame().columns) == ["delta", "im_rho13", "rho33", "rho11", "rho22"]


def test_snapshot_outside_window_rejected():
    grid = build_grid(EnsembleSpec(optical_segments=3, optical_span=200e3))
    states = np.zeros((3, 3, 3), dtype=complex)
    with pytest.raises(ValueError):
        spectral_snapshot(states, grid, 11e-6, (0.0, 10e-6))
    with pytest.raises(ValueError):
        spectral_snapshot(states[:2], grid, 1e-6, (0.0, 10e-6))


def _random_traces(rng, n_atoms, times):
    coherence = rng.normal(size=(n_atoms, times.size)) + 1j * rng.normal(size=(n_atoms, times.size))
    populations = rng.uniform(size=(n_atoms, times.size, 3))
    return AtomTraces(start=0, times=times, coherence13=coherence, populations=populations)


def _grid_with_weights(weights):
    weights = np.asarray(weights, dtype=float)
    n = weights.size
    axis = np.linspace(-1e5, 1e5, n)
    return DetuningGrid(delta_opt=axis, delta_spin=np.zeros(n), weights=weights / weights.sum(), n_optical=n)


def test_aggregate_is_linear_in_traces():
    rng = np.random.default_rng(7)
    times = np.linspace(0, 2e-6, 6)
    grid = build_grid(EnsembleSpec(optical_segments=5, optical_span=400e3))
    x, y = _random_traces(rng, 5, times), _random_traces(rng, 5, times)
    a, b = 0.7 - 0.2j, -1.3
    mixed = AtomTraces(start=0, times=times, coherence13=a * x.coherence13 + b * y.coherence13,
                       populations=2.0 * x.populations + 0.5 * y.populations)
    combined = aggregate(mixed, grid)
    np.testing.assert_allclose(combined.polarization,
                               a * aggregate(x, grid).polarization + b * aggregate(y, grid).polarization,
                               rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(combined.populations,
                               2.0 * aggregate(x, grid).populations + 0.5 * aggregate(y, grid).populations,
                               rtol=1e-12, atol=1e-14)


def test_aggregate_is_linear_in_weights():
    rng = np.random.default_rng(11)
    times = np.linspace(0, 2e-6, 6)
    traces = _random_traces(rng, 5, times)
    first = _grid_with_weights(rng.uniform(size=5))
    second = _grid_with_weights(rng.uniform(size=5))
    blend = DetuningGrid(delta_opt=first.delta_opt, delta_spin=first.delta_spin,
                         weights=0.3 * first.weights + 0.7 * second.weights, n_optical=5)
    np.testing.assert_allclose(aggregate(traces, blend).polarization,
                               0.3 * aggregate(traces, first).polarization
                               + 0.7 * aggregate(traces, second).polarization,
                               rtol=1e-12, atol=1e-14)


def test_aggregate_one_hot_weights_pick_a_single_atom():
    rng = np.random.default_rng(3)
    times = np.linspace(0, 2e-6, 6)
    traces = _random_traces(rng, 5, times)
    signal = aggregate(traces, _grid_with_weights([0.0, 0.0, 1.0, 0.0, 0.0]))
    np.testing.assert_array_equal(signal.polarization, traces.coherence13[2])
    np.testing.assert_array_equal(signal.populations, traces.populations[2])


def test_conjugate_detuning_pair_gives_real_polarization():
    grid = build_grid(EnsembleSpec(optical_segments=3, optical_span=400e3))
    assert grid.weights[0] == grid.weights[2]
    det = Detunings(grid.delta_opt, grid.delta_spin)
    rates = RelaxationRates(gamma_pop_31=10.0, gamma_pop_32=10.0, gamma_coh_13=10.0, gamma_coh_23=10.0)
    start = np.zeros((3, 3), dtype=complex)
    start[0, 0] = start[2, 2] = 0.5
    start[0, 2] = start[2, 0] = 0.3
    start = np.broadcast_to(start, (3, 3, 3))
    times = np.linspace(0, 20e-6, 41)
    states = np.stack([propagate_free(start, det, rates, t) for t in times], axis=1)
    traces = AtomTraces(start=0, times=times, coherence13=states[..., 0, 2],
                        populations=np.real(np.diagonal(states, axis1=-2, axis2=-1)))
    signal = aggregate(traces, grid)
    np.testing.assert_allclose(signal.absorption, 0.0, atol=1e-15)
    assert np.abs(signal.polarization).max() > 0.05

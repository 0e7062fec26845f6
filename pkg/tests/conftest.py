import sys
from pathlib import Path

import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from blochCore.dynamics import RelaxationRates
from ensemble.broadening import EnsembleSpec
from protocol.sequences import build_locked, build_three_pulse, build_two_pulse

US = 1e-6


@pytest.fixture
def small_ensemble():
    """41 optical points at 40 kHz spacing; fast enough for unit tests."""
    return EnsembleSpec(optical_fwhm=680e3, optical_span=1.6e6, optical_segments=41)


@pytest.fixture
def fig2_rates():
    return RelaxationRates(gamma_pop_31=10.0, gamma_pop_32=10.0, gamma_coh_13=10.0, gamma_coh_23=10.0)


@pytest.fixture
def two_pulse():
    return build_two_pulse(5 * US, 10 * US, 2.5e6)


@pytest.fixture
def three_pulse():
    return build_three_pulse(5 * US, 10 * US, 50.4 * US, 2.5e6)


@pytest.fixture
def locked():
    return build_locked(5 * US, 10 * US, 10.1 * US, 50.2 * US, 0.0, 2.5e6, 5e6)

import numpy as np
import pytest

from mimo_crb.channel import ChannelRealization, SystemConfig

from . import acceptance_log


def random_realization(rng, Z, eta_scale=0.05):
    return ChannelRealization.from_arrays(
        (rng.standard_normal(Z) + 1j * rng.standard_normal(Z)) / np.sqrt(2),
        rng.uniform(-np.pi, np.pi, Z),
        rng.uniform(-np.pi, np.pi, Z),
        rng.uniform(-1.2, 1.2, Z),
        rng.uniform(-eta_scale, eta_scale, Z),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_config():
    # U_t = 3, U_f = 4
    return SystemConfig(n_rx=2, n_tx=3, n_sc=20, bandwidth=1e6, n_train=12,
                        n_time_pilots=4, n_freq_pilots=5)


@pytest.fixture
def fig1_config():
    return SystemConfig()


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines():
            terminalreporter.write_line(line)

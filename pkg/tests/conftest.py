import numpy as np
import pytest

from grassforecast.data import SyntheticSpec, generate_synthetic, split

ACCEPTANCE_LINES = []


def jitter_params(net, rng, scale=0.3):
    """Move every parameter (biases included) off its initial value.

    Zero-initialised biases can leave ReLU pre-activations exactly on the kink,
    where a central difference and the one-sided analytic derivative disagree.
    """
    for value in net.params.values():
        value += rng.normal(scale=scale, size=value.shape)
    return net


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def seasonal_series():
    return generate_synthetic(SyntheticSpec(length=1757, seed=7))


@pytest.fixture(scope="session")
def seasonal_splits(seasonal_series):
    return split(seasonal_series)


@pytest.fixture(scope="session")
def short_series():
    return generate_synthetic(SyntheticSpec(length=160, seed=3))


@pytest.fixture(scope="session")
def short_splits(short_series):
    return split(short_series, min_length=5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)

import numpy as np
import pytest

from deconviv import simulation
from deconviv.charfn import Sample
from deconviv.density import BandwidthSet, EstimationContext

PUBLISHED_BW = BandwidthSet(1.0, 1.05, 2.92)


@pytest.fixture(scope="session")
def design1():
    return simulation.MCDesign.design1()


@pytest.fixture(scope="session")
def sample500(design1):
    return simulation.generate(design1, 500, simulation.substream(2024, 0))[0]


@pytest.fixture(scope="session")
def ctx500(sample500):
    return EstimationContext(sample500, PUBLISHED_BW)


@pytest.fixture(scope="session")
def sample10k(design1):
    return simulation.generate(design1, 10_000, simulation.substream(2024, 1))[0]


@pytest.fixture(scope="session")
def ctx10k(sample10k):
    return EstimationContext(sample10k, PUBLISHED_BW)


@pytest.fixture(scope="session")
def noiseless10k(design1):
    """Linear-design sample with both measurements equal to the latent instrument."""
    _, lat = simulation.generate(design1, 10_000, simulation.substream(2024, 2))
    y, x = design1.structural(lat.wstar, lat.eps, lat.eta)
    return Sample(y, x, lat.wstar, lat.wstar)


@pytest.fixture
def toy_sample():
    rng = np.random.default_rng(3)
    return Sample(*rng.normal(size=(4, 50)))

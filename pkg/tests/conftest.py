import numpy as np
import pytest

from satprecode.channel import ChannelSet
from oracles import random_channels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_channels(rng):
    return ChannelSet.from_matrices(random_channels(rng, 2, 3, 4))

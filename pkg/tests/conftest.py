import math

import numpy as np
import pytest

from estimkit import AnalyticCDF


def std_normal_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.vectorize(math.erf)(x / math.sqrt(2.0)))


def uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


@pytest.fixture
def gaussian_cdf():
    return AnalyticCDF.independent(std_normal_cdf)


@pytest.fixture
def uniform_square_cdf():
    return AnalyticCDF.independent(uniform_cdf)

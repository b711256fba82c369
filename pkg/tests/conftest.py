import os
from unittest import mock

import numpy as np
import pytest

from nilpotent_commutator.linalg import Tolerances
from nilpotent_commutator.testgen import GenSpec, gen_nilpotent


@pytest.fixture(autouse=True)
def isolated_environment():
    with mock.patch.dict(
        os.environ, {"NILCOMM_SCAN_WORKERS": "2", "NILCOMM_LOG_LEVEL": "WARNING"}
    ):
        for key in [k for k in os.environ if k.startswith("NILCOMM_TOL_")]:
            del os.environ[key]
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tolerances():
    return Tolerances()


@pytest.fixture
def jordan4():
    return gen_nilpotent(GenSpec(jordan_sizes=(4,)))

import numpy as np
import pytest

from pseudophase.fields import OpticalField
from pseudophase.sequences import builtin_table

# independent transcription of the sequence table, "p" = pi/2
GOLDEN_ROWS = [
    "0 0 0 0 0 0 0 0",
    "p 0 0 p 0 p p 0",
    "p p 0 0 p 0 p 0",
    "p p p 0 0 p 0 0",
    "0 p p p 0 0 p 0",
    "p 0 p p p 0 0 0",
    "0 p 0 p p p 0 0",
    "0 0 p 0 p p p 0",
]


def golden_phases(j):
    return np.array([np.pi / 2 if t == "p" else 0.0 for t in GOLDEN_ROWS[j].split()])


@pytest.fixture(scope="session")
def family():
    return builtin_table()


def random_field(rng, L=8, label="f"):
    amps = rng.normal(size=(L, 2)) + 1j * rng.normal(size=(L, 2))
    return OpticalField(label, amps)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)

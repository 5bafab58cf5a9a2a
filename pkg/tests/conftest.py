import csv
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def _rows(name):
    with open(DATA / name, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


@pytest.fixture(scope="session")
def published_models():
    return _rows("published_models.csv")


@pytest.fixture(scope="session")
def decorrelation_times():
    return _rows("decorrelation_times.csv")

import os
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
ITALY = DATA / "italy_total_deaths.csv"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def italy_csv():
    """Vendored OWID snapshot of Italy cumulative deaths; the test fails when it was not shipped."""
    path = Path(os.environ.get("LOGIWAVE_ITALY_CSV", ITALY))
    if not path.is_file():
        pytest.fail(f"Italy fixture missing: expected an OWID-format CSV "
                    f"(columns location,date,total_deaths) at {path}", pytrace=False)
    return path

# tests/conftest.py

import pytest

from app.utils.logger_service import configure_logging
from tests.helpers import triangle_cut as _triangle_cut


@pytest.fixture(autouse = True, scope = "session")
def quiet_logs():
    configure_logging("WARNING")


@pytest.fixture
def triangle_cut():
    return _triangle_cut()


@pytest.fixture
def seeds():
    return list(range(25))

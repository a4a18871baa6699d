import json
import sys
from pathlib import Path

import pytest
import pytest_asyncio
from httpx import AsyncClient


# Ensure project root is on sys.path so `services.*` and `tests.*` imports work
ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

DATA_DIR = ROOT_DIR / "data"


# Explicitly enable pytest-asyncio plugin for async tests/fixtures
pytest_plugins = ("pytest_asyncio",)


from api.app import app as solver_app  # noqa: E402
from core.logging import configure_logging  # noqa: E402
from models.instance import Instance, Schedule  # noqa: E402
from services.switching import spaces  # noqa: E402

configure_logging(level="WARNING", json_logs=False)


def load_json(name: str):
    with open(DATA_DIR / name, "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture()
def example1_payload():
    """Flat JSON form of the three-job NOSBY example (h = 20)."""
    return load_json("example1.json")


@pytest.fixture()
def example1(example1_payload) -> Instance:
    return Instance.model_validate(example1_payload)


@pytest.fixture()
def example1_schedule(example1) -> Schedule:
    """Hand-built feasible schedule with TEC 342 (starts 14, 7, 15)."""
    return Schedule.from_payload(load_json("example1_schedule.json"), example1.diagram)


@pytest.fixture()
def table(example1):
    """Switching table of the example instance."""
    return spaces(example1)


@pytest_asyncio.fixture()
async def client():
    """Async test client for the solver API."""
    async with AsyncClient(app=solver_app, base_url="http://testserver") as ac:
        yield ac

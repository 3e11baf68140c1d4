from pathlib import Path

import pytest

from wugkit import cluster, ingest
from wugkit.graph import build_wug

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def arm_uses_path() -> Path:
    return FIXTURES / "arm_uses.csv"


@pytest.fixture(scope="session")
def arm_stub_path() -> Path:
    return FIXTURES / "arm_stub.csv"


@pytest.fixture(scope="session")
def arm_uses(arm_uses_path):
    uses, report = ingest.parse_uses(arm_uses_path.read_bytes())
    assert report.ok, report.errors
    return uses


@pytest.fixture(scope="session")
def arm_judgments(arm_stub_path):
    judgments, report = ingest.parse_judgments(arm_stub_path.read_bytes())
    assert report.ok, report.errors
    return judgments


@pytest.fixture(scope="session")
def arm_wug(arm_uses, arm_judgments):
    return build_wug(arm_uses, arm_judgments)


@pytest.fixture(scope="session")
def arm_clustering(arm_wug):
    return cluster.solve(arm_wug, seed=13, restarts=10)

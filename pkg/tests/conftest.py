import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def fixture_text(name: str) -> str:
    with open(fixture_path(name)) as fh:
        return fh.read()


@pytest.fixture(scope="session")
def hb_policy_text():
    return fixture_text("helloblockchain.json")


@pytest.fixture(scope="session")
def hb_source():
    return fixture_text("helloblockchain.sol")


@pytest.fixture(scope="session", autouse=True)
def _close_solver_sessions():
    yield
    from solverify.engine.smtio import close_sessions
    close_sessions()


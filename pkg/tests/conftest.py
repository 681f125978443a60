import json
from pathlib import Path

import pytest

from helpers import make_m1
from newtondp import load_mdp

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def m1():
    return make_m1()


@pytest.fixture
def m2():
    return load_mdp((FIXTURES / "m2.mdp").read_text())


@pytest.fixture
def m2_expected():
    return json.loads((FIXTURES / "m2_expected.json").read_text())

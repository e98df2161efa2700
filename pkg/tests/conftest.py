import json
from pathlib import Path

import pytest

from kraftlab.encoder import parse_encoder

DATA = Path(__file__).parent / "data"


def load_three_state_doc() -> dict:
    return json.loads((DATA / "three_state.json").read_text())


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def three_state():
    return parse_encoder(load_three_state_doc())


@pytest.fixture
def three_state_doc():
    return load_three_state_doc()

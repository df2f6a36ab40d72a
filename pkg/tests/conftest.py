import json

import pytest

from app.models.problem import ProblemKind, ProblemSpec
from app.utils.config import Settings, parse_config


@pytest.fixture
def two_sided_03():
    return ProblemSpec(kind=ProblemKind.BOUNDED_TWO_SIDED, mu0=0.3)


@pytest.fixture
def two_sided_half():
    return ProblemSpec(kind=ProblemKind.BOUNDED_TWO_SIDED, mu0=0.5)


@pytest.fixture
def make_config():
    """Build an ExperimentConfig from keyword overrides, ignoring BETTING_* variables."""

    def _make(**overrides):
        data = {
            "problem": "bounded2:0.3",
            "alternative": {"kind": "bernoulli", "p": 0.4},
            "strategies": ["up"],
            "horizon": 200,
            "replications": 2,
            "seed": 123,
        }
        data.update(overrides)
        return parse_config(data, Settings(), source="test")

    return _make


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return _write

import json

import pytest
from click.testing import CliRunner

from ricci_engine import create_app
from ricci_engine.models.chart import VectorFieldDef
from ricci_engine.models.metric import builtin_metric
from ricci_engine.sampling import make_rng


@pytest.fixture
def app():
    return create_app({"TESTING": True})


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def rng():
    return make_rng(7)


@pytest.fixture
def hyperbolic_polar():
    return builtin_metric("hyperbolic_polar2")


@pytest.fixture
def cone():
    return builtin_metric("cone3")


@pytest.fixture
def example_field(hyperbolic_polar):
    return VectorFieldDef(hyperbolic_polar.chart, ["-2/rho", "0"])


@pytest.fixture
def cone_field(cone):
    return VectorFieldDef(cone.chart, ["-2/rho", "0", "0"])


@pytest.fixture
def write_config(tmp_path):
    def write(body):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(body))
        return str(path)
    return write

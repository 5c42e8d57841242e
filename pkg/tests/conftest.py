import numpy
import pytest

from ecve.ensembles import EnsembleKind
from ecve.ensembles import ResponseScaler
from ecve.ensembles import build_ensemble
from ecve.kernel import bandwidth_rule
from ecve.objective import ObjectiveConfig
from ecve.objective import Sample
from ecve.objective import Weighting


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run the Monte Carlo reproductions marked as slow",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_sample(
    n: int,
    p: int,
    m: int = 4,
    seed: int = 0,
    kind: EnsembleKind = EnsembleKind.fourier,
) -> Sample:
    rng = numpy.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    Y = X[:, 0] + 0.5 * X[:, 1] ** 2 + 0.2 * rng.standard_normal(n)
    ensemble = build_ensemble(kind, m, Y)
    return Sample.from_ensemble(X, Y, ensemble, ResponseScaler.fit(kind, Y))


@pytest.fixture
def small_sample() -> Sample:
    return make_sample(n=20, p=5, m=4, seed=11)


@pytest.fixture(params=[Weighting.uniform, Weighting.weighted], ids=lambda w: w.value)
def weighting(request) -> Weighting:
    return request.param


@pytest.fixture
def small_config(small_sample, weighting) -> ObjectiveConfig:
    return ObjectiveConfig(h=bandwidth_rule(small_sample.X, 3), weighting=weighting)

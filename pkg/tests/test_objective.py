import math

import numpy
import pytest

import naive
from conftest import make_sample
from ecve.ensembles import EnsembleKind
from ecve.errors import DegenerateDataError
from ecve.errors import InvalidConfigError
from ecve.errors import UnsupportedKernelError
from ecve.kernel import Bandwidth
from ecve.kernel import KernelSpec
from ecve.kernel import bandwidth_rule
from ecve.objective import ObjectiveConfig
from ecve.objective import Sample
from ecve.objective import Weighting
from ecve.objective import between_slice_weights
from ecve.objective import distances
from ecve.objective import gradient_ensemble
from ecve.objective import gradient_fd
from ecve.objective import local_variance
from ecve.objective import objective_and_gradient
from ecve.objective import objective_ensemble
from ecve.objective import objective_single
from ecve.objective import slice_moments
from ecve.objective import slice_weights
from ecve.stiefel import StiefelPoint
from ecve.stiefel import orthonormalize
from ecve.stiefel import random_stiefel


def _config(h: float = 1.0, weighting=Weighting.uniform) -> ObjectiveConfig:
    return ObjectiveConfig(h=Bandwidth(h), weighting=weighting)


def _relative_error(analytic, numeric) -> float:
    return float(numpy.max(numpy.abs(analytic - numeric)) / numpy.max(numpy.abs(numeric)))


""" ____________________________________________________________________________________
single slice
"""


def test_distance_of_the_shifting_point():
    V = numpy.array([[1.0], [0.0]])
    s0 = numpy.array([1.5, -2.0])
    assert distances(V, s0, s0[numpy.newaxis, :])[0] == 0.0


def test_distance_by_hand():
    V = numpy.array([[1.0], [0.0]])
    result = distances(V, numpy.zeros(2), numpy.array([[5.0, 3.0]]))
    assert result[0] == pytest.approx(9.0)


def test_slice_weights_equal_distances():
    V = numpy.array([[1.0], [0.0]])
    X = numpy.array([[0.0, 1.0], [3.0, -1.0]])
    sample = Sample(X, numpy.zeros(2), numpy.zeros(2))
    weights = slice_weights(V, numpy.zeros(2), sample, _config())
    numpy.testing.assert_allclose(weights, [0.5, 0.5])


def test_slice_weights_by_hand():
    # d = (0, h) with h = 1
    V = numpy.array([[1.0], [0.0]])
    X = numpy.array([[0.0, 0.0], [0.0, 1.0]])
    sample = Sample(X, numpy.zeros(2), numpy.zeros(2))
    weights = slice_weights(V, numpy.zeros(2), sample, _config(1.0))
    expected = numpy.array([1.0, math.exp(-1.0)]) / (1.0 + math.exp(-1.0))
    numpy.testing.assert_allclose(weights, expected)
    numpy.testing.assert_allclose(weights, [0.7311, 0.2689], atol=1e-4)


def test_slice_weights_sum_to_one(small_sample):
    V = random_stiefel(5, 3, numpy.random.default_rng(0))
    for j in range(small_sample.n):
        weights = slice_weights(V, small_sample.X[j], small_sample, _config(0.7))
        assert weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_slice_moments():
    assert slice_moments([0.25, 0.75], [3.0, 3.0]) == pytest.approx((3.0, 9.0))
    assert slice_moments([0.5, 0.5], [0.0, 2.0]) == pytest.approx((1.0, 2.0))


def test_local_variance():
    V = numpy.array([[1.0], [0.0]])
    X = numpy.array([[0.0, 1.0], [3.0, -1.0]])
    sample = Sample(X, numpy.array([0.0, 2.0]), numpy.array([0.0, 2.0]))
    assert local_variance(V, numpy.zeros(2), sample, _config(), 0) == pytest.approx(1.0)

    constant = Sample(X, numpy.ones(2), numpy.full(2, 4.0))
    assert local_variance(V, numpy.zeros(2), constant, _config(), 0) == pytest.approx(0.0)


""" ____________________________________________________________________________________
all slices
"""


def test_objective_equal_responses(weighting):
    X = numpy.array([[0.0, 1.0], [2.0, 0.5]])
    sample = Sample(X, numpy.full(2, 3.0), numpy.full(2, 3.0))
    V = numpy.array([[1.0], [0.0]])
    assert objective_single(V, sample, _config(weighting=weighting), 0) == pytest.approx(
        0.0, abs=1e-12
    )


def test_objective_single_matches_loops(weighting):
    sample = make_sample(n=4, p=2, m=2, seed=5)
    V = random_stiefel(2, 1, numpy.random.default_rng(1))
    cfg = ObjectiveConfig(h=bandwidth_rule(sample.X, 1), weighting=weighting)
    expected = naive.objective_single(
        V.values,
        sample.X,
        sample.FY[:, 1],
        cfg.h.h,
        weighted=weighting is Weighting.weighted,
    )
    assert objective_single(V, sample, cfg, 1) == pytest.approx(expected, abs=1e-12)


def test_objective_ensemble_matches_loops(weighting):
    sample = make_sample(n=5, p=3, m=2, seed=6)
    V = random_stiefel(3, 2, numpy.random.default_rng(2))
    cfg = ObjectiveConfig(h=bandwidth_rule(sample.X, 2), weighting=weighting)
    expected = naive.objective_ensemble(
        V.values, sample.X, sample.FY, cfg.h.h, weighted=weighting is Weighting.weighted
    )
    result = objective_ensemble(V, sample, cfg)
    assert result.value == pytest.approx(expected, abs=1e-12)
    assert result.per_function.shape == (2,)
    assert result.value == pytest.approx(result.per_function.mean())


def test_objective_ensemble_with_one_function(weighting):
    sample = make_sample(n=12, p=3, m=1, kind=EnsembleKind.identity, seed=2)
    V = random_stiefel(3, 2, numpy.random.default_rng(4))
    cfg = _config(1.3, weighting)
    assert objective_ensemble(V, sample, cfg).value == pytest.approx(
        objective_single(V, sample, cfg, 0), abs=1e-15
    )


def test_objective_depends_on_the_span_only(small_sample, small_config):
    V = random_stiefel(5, 3, numpy.random.default_rng(3))
    rotation = orthonormalize(numpy.random.default_rng(4).standard_normal((3, 3))).values
    rotated = StiefelPoint(V.values @ rotation)
    first = objective_ensemble(V, small_sample, small_config).value
    second = objective_ensemble(rotated, small_sample, small_config).value
    assert second == pytest.approx(first, rel=1e-12, abs=1e-14)


def test_objective_is_bounded_by_the_response_range(small_sample, small_config):
    V = random_stiefel(5, 3, numpy.random.default_rng(5))
    value = objective_ensemble(V, small_sample, small_config)
    value_range = small_sample.FY.max(axis=0) - small_sample.FY.min(axis=0)
    assert numpy.all(value.per_function >= -1e-12)
    assert numpy.all(value.per_function <= value_range**2 / 4.0 + 1e-12)


def test_objective_is_permutation_invariant(small_sample, small_config):
    V = random_stiefel(5, 3, numpy.random.default_rng(6))
    order = numpy.random.default_rng(7).permutation(small_sample.n)
    permuted = Sample(small_sample.X[order], small_sample.Y[order], small_sample.FY[order])
    assert objective_ensemble(V, permuted, small_config).value == pytest.approx(
        objective_ensemble(V, small_sample, small_config).value, rel=1e-12
    )


def test_objective_affine_equivariance(small_sample, weighting):
    """
    X -> A X + b with orthogonal A maps the objective at V to the one at A V.
    """
    A = orthonormalize(numpy.random.default_rng(8).standard_normal((5, 5))).values
    shift = numpy.arange(5.0)
    moved = Sample(small_sample.X @ A.T + shift, small_sample.Y, small_sample.FY)
    V = random_stiefel(5, 3, numpy.random.default_rng(9))
    cfg = _config(bandwidth_rule(small_sample.X, 3).h, weighting)
    assert objective_ensemble(A @ V.values, moved, cfg).value == pytest.approx(
        objective_ensemble(V, small_sample, cfg).value, rel=1e-10
    )


def test_between_slice_weights_equidistant_points():
    # the three points are equidistant once projected off span(V) = span(e3)
    X = numpy.array([[0.0, 0.0, 1.0], [1.0, 0.0, -2.0], [0.5, math.sqrt(3) / 2, 0.0]])
    sample = Sample(X, numpy.arange(3.0), numpy.arange(3.0))
    weights = between_slice_weights(numpy.array([[0.0], [0.0], [1.0]]), sample, _config())
    numpy.testing.assert_allclose(weights, [1 / 3, 1 / 3, 1 / 3])


def test_between_slice_weights_favor_the_middle_point():
    X = numpy.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
    sample = Sample(X, numpy.arange(3.0), numpy.arange(3.0))
    weights = between_slice_weights(numpy.array([[0.0], [1.0]]), sample, _config(100.0))
    assert numpy.argmax(weights) == 1
    assert weights.sum() == pytest.approx(1.0)


def test_between_slice_weights_empty_slices():
    X = numpy.array([[0.0, 0.0], [100.0, 0.0]])
    sample = Sample(X, numpy.arange(2.0), numpy.arange(2.0))
    with pytest.raises(DegenerateDataError):
        between_slice_weights(numpy.array([[0.0], [1.0]]), sample, _config(1e-3))


def test_sample_needs_two_points():
    with pytest.raises(DegenerateDataError):
        Sample(numpy.zeros((1, 2)), numpy.zeros(1), numpy.zeros(1))


def test_sample_rejects_non_finite():
    with pytest.raises(DegenerateDataError):
        Sample(numpy.array([[0.0], [numpy.nan]]), numpy.zeros(2), numpy.zeros(2))


""" ____________________________________________________________________________________
gradient
"""


def test_gradient_of_constant_response(weighting):
    rng = numpy.random.default_rng(0)
    X = rng.standard_normal((15, 4))
    sample = Sample(X, numpy.ones(15), numpy.full((15, 2), 0.7))
    V = random_stiefel(4, 2, rng)
    gradient = gradient_ensemble(V, sample, _config(1.5, weighting))
    numpy.testing.assert_allclose(gradient, 0.0, atol=1e-12)


def test_gradient_matches_finite_differences(small_sample, small_config):
    V = random_stiefel(5, 3, numpy.random.default_rng(12))
    analytic = gradient_ensemble(V, small_sample, small_config)
    numeric = gradient_fd(V, small_sample, small_config, eps=1e-5)
    assert analytic.shape == (5, 3)
    assert _relative_error(analytic, numeric) < 1e-5


def test_gradient_central_differences_are_second_order(small_sample, small_config):
    V = random_stiefel(5, 3, numpy.random.default_rng(13))
    analytic = gradient_ensemble(V, small_sample, small_config)
    coarse = _relative_error(analytic, gradient_fd(V, small_sample, small_config, 1e-3))
    fine = _relative_error(analytic, gradient_fd(V, small_sample, small_config, 5e-4))
    assert 3.0 < coarse / fine < 5.0


def test_objective_and_gradient_agree_with_separate_calls(small_sample, small_config):
    V = random_stiefel(5, 3, numpy.random.default_rng(14))
    value, gradient = objective_and_gradient(V, small_sample, small_config)
    assert value.value == objective_ensemble(V, small_sample, small_config).value
    numpy.testing.assert_array_equal(
        gradient, gradient_ensemble(V, small_sample, small_config)
    )


def test_uniform_direction_on_weighted_objective(small_sample):
    V = random_stiefel(5, 3, numpy.random.default_rng(15))
    h = bandwidth_rule(small_sample.X, 3)
    weighted = ObjectiveConfig(h=h, weighting=Weighting.weighted)
    uniform = ObjectiveConfig(h=h, weighting=Weighting.uniform)
    value, gradient = objective_and_gradient(
        V, small_sample, weighted, direction=Weighting.uniform
    )
    assert value.value == objective_ensemble(V, small_sample, weighted).value
    numpy.testing.assert_allclose(gradient, gradient_ensemble(V, small_sample, uniform))


def test_gradient_needs_gaussian_kernel(small_sample):
    class OtherKind:
        value = "epanechnikov"

    cfg = ObjectiveConfig(h=Bandwidth(1.0), kernel=KernelSpec(OtherKind()))
    with pytest.raises(UnsupportedKernelError):
        gradient_ensemble(random_stiefel(5, 3, numpy.random.default_rng(0)), small_sample, cfg)


def test_gradient_fd_step_must_be_positive(small_sample):
    with pytest.raises(InvalidConfigError):
        gradient_fd(numpy.eye(5)[:, :3], small_sample, _config(), eps=0.0)


""" ____________________________________________________________________________________
seeded instances
"""

_MIXED_KINDS = (
    EnsembleKind.fourier,
    EnsembleKind.indicator,
    EnsembleKind.monomial,
    EnsembleKind.boxcox,
)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences_on_mixed_ensembles(seed, weighting):
    sample = make_sample(n=20, p=5, m=4, seed=seed, kind=_MIXED_KINDS[seed % 4])
    cfg = ObjectiveConfig(h=bandwidth_rule(sample.X, 3), weighting=weighting)
    V = random_stiefel(5, 3, numpy.random.default_rng(100 + seed))
    analytic = gradient_ensemble(V, sample, cfg)
    numeric = gradient_fd(V, sample, cfg, eps=1e-5)
    assert _relative_error(analytic, numeric) < 1e-4


@pytest.mark.parametrize("seed", range(50))
def test_objective_is_rotation_invariant(small_sample, small_config, seed):
    rng = numpy.random.default_rng(200 + seed)
    V = random_stiefel(5, 3, rng)
    rotation = random_stiefel(3, 3, rng).values
    first = objective_ensemble(V, small_sample, small_config).value
    second = objective_ensemble(V.values @ rotation, small_sample, small_config).value
    assert abs(second - first) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_local_variance_identities(seed):
    sample = make_sample(n=15, p=4, m=2, seed=seed)
    cfg = ObjectiveConfig(h=bandwidth_rule(sample.X, 2))
    V = random_stiefel(4, 2, numpy.random.default_rng(300 + seed))
    a, b = 3.5, -2.0
    moved = Sample(sample.X, sample.Y, a * sample.FY + b)
    for j in range(sample.n):
        s0 = sample.X[j]
        weights = slice_weights(V, s0, sample, cfg)
        assert weights.sum() == pytest.approx(1.0, abs=1e-12)
        for f_index in range(sample.m):
            fy = sample.FY[:, f_index]
            ybar1, ybar2 = slice_moments(weights, fy)
            spread = float(weights @ (fy - ybar1) ** 2)
            assert ybar2 - ybar1**2 == pytest.approx(spread, abs=1e-10)

            variance = local_variance(V, s0, sample, cfg, f_index)
            assert variance == pytest.approx(spread, abs=1e-10)
            assert local_variance(V, s0, moved, cfg, f_index) == pytest.approx(
                a**2 * variance, rel=1e-9, abs=1e-12
            )
    between = between_slice_weights(V, sample, cfg)
    assert between.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_objectives_match_loops_on_small_instances(seed, weighting):
    n, p = 3 + seed % 6, 2 + seed % 3
    q = 1 + seed % (p - 1)
    sample = make_sample(n=n, p=p, m=2, seed=seed, kind=_MIXED_KINDS[seed % 4])
    cfg = ObjectiveConfig(h=bandwidth_rule(sample.X, q), weighting=weighting)
    V = random_stiefel(p, q, numpy.random.default_rng(400 + seed))
    weighted = weighting is Weighting.weighted
    for f_index in range(sample.m):
        expected = naive.objective_single(
            V.values, sample.X, sample.FY[:, f_index], cfg.h.h, weighted=weighted
        )
        assert objective_single(V, sample, cfg, f_index) == pytest.approx(
            expected, abs=1e-12
        )
    expected = naive.objective_ensemble(
        V.values, sample.X, sample.FY, cfg.h.h, weighted=weighted
    )
    result = objective_ensemble(V, sample, cfg)
    assert result.value == pytest.approx(expected, abs=1e-12)

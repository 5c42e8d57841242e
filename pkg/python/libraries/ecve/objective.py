"""
Sample objective of the (ensemble) conditional variance estimator and its gradient.

Every data point X_j is used as a shifting point s0. For a candidate V the
slice around s0 + span(V) weights each observation with
``w_i = K(d_i / h) / sum_l K(d_l / h)`` where ``d_i = |(I - V V^T)(X_i - s0)|^2``,
and the local variance of a transformed response f(Y) inside the slice is
``ybar_2 - ybar_1^2``. The objective averages those local variances over the
shifting points (uniformly, or proportionally to the slice mass) and over the
m ensemble functions.

Matrices indexed by (shifting point, observation) are laid out as n x n arrays
whose row j corresponds to s0 = X_j.
"""
import dataclasses
import enum
import functools
import logging

import numpy

from ecve.ensembles import Ensemble
from ecve.ensembles import ResponseScaler
from ecve.ensembles import apply_ensemble
from ecve.errors import DegenerateDataError
from ecve.errors import InvalidConfigError
from ecve.errors import InvalidDimensionError
from ecve.errors import UnsupportedKernelError
from ecve.kernel import GAUSSIAN
from ecve.kernel import Bandwidth
from ecve.kernel import KernelKind
from ecve.kernel import KernelSpec
from ecve.stiefel import StiefelPoint

LOGGER = logging.getLogger(__name__)


class Weighting(enum.Enum):
    """
    How the local variances of the n slices are combined.
    """

    uniform = "uniform"
    weighted = "weighted"


@dataclasses.dataclass(frozen=True, eq=False)
class Sample:
    """
    Predictors, responses and transformed responses of an i.i.d. sample.

    Args:
        X: n x p predictor matrix
        Y: length-n response vector
        FY: n x m matrix of transformed responses f_{t_j}(Y_i), 1d arrays are treated as n x 1
    """

    X: numpy.ndarray
    Y: numpy.ndarray
    FY: numpy.ndarray

    def __post_init__(self):
        X = numpy.array(self.X, dtype=numpy.float64)
        Y = numpy.array(self.Y, dtype=numpy.float64).reshape(-1)
        FY = numpy.array(self.FY, dtype=numpy.float64)
        if FY.ndim == 1:
            FY = FY[:, numpy.newaxis]
        if X.ndim != 2:
            raise InvalidDimensionError(f"X must be a 2d matrix, got shape {X.shape}")
        if not (X.shape[0] == len(Y) == FY.shape[0]):
            raise InvalidDimensionError(
                f"row counts differ: X {X.shape}, Y {Y.shape}, FY {FY.shape}"
            )
        if X.shape[0] < 2:
            raise DegenerateDataError(f"a sample needs n >= 2, got n={X.shape[0]}")
        for name, array in (("X", X), ("Y", Y), ("FY", FY)):
            if not numpy.all(numpy.isfinite(array)):
                raise DegenerateDataError(f"{name} contains non-finite values")
            array.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "FY", FY)

    @classmethod
    def from_ensemble(
        cls,
        X: numpy.ndarray,
        Y: numpy.ndarray,
        ensemble: Ensemble,
        scaler: ResponseScaler,
    ) -> "Sample":
        return cls(X, Y, apply_ensemble(ensemble, scaler, Y))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.FY.shape[1]

    @functools.cached_property
    def squared_distances(self) -> numpy.ndarray:
        """
        n x n matrix of |X_i - X_j|^2, computed once per sample.
        """
        differences = self.X[numpy.newaxis, :, :] - self.X[:, numpy.newaxis, :]
        return numpy.einsum("jik,jik->ji", differences, differences)


@dataclasses.dataclass(frozen=True)
class ObjectiveConfig:
    h: Bandwidth
    weighting: Weighting = Weighting.uniform
    kernel: KernelSpec = GAUSSIAN

    def to_dict(self) -> dict:
        return {
            "h": self.h.h,
            "weighting": self.weighting.value,
            "kernel": self.kernel.kind.value,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class ObjectiveValue:
    """
    Args:
        value: L_{n,F}(V), the mean of ``per_function``
        per_function: length-m vector of L*_n(V, f_j) (or its weighted version)
    """

    value: float
    per_function: numpy.ndarray


def _as_values(V: StiefelPoint | numpy.ndarray) -> numpy.ndarray:
    if isinstance(V, StiefelPoint):
        return V.values
    return numpy.asarray(V, dtype=numpy.float64)


def _check_shapes(values: numpy.ndarray, sample: Sample):
    if values.ndim != 2 or values.shape[0] != sample.p:
        raise InvalidDimensionError(
            f"V of shape {values.shape} does not match p={sample.p}"
        )


""" ____________________________________________________________________________________
SINGLE SLICE
"""


def distances(
    V: StiefelPoint | numpy.ndarray,
    s0: numpy.ndarray,
    X: numpy.ndarray,
) -> numpy.ndarray:
    """
    Squared distances d_i = |X_i - s0|^2 - |V^T (X_i - s0)|^2 of each row of X to
    the affine subspace s0 + span(V), clamped at 0.
    """
    values = _as_values(V)
    centered = numpy.asarray(X, dtype=numpy.float64) - numpy.asarray(
        s0, dtype=numpy.float64
    )
    projected = centered @ values
    result = numpy.sum(centered**2, axis=1) - numpy.sum(projected**2, axis=1)
    return numpy.maximum(result, 0.0)


def slice_weights(
    V: StiefelPoint | numpy.ndarray,
    s0: numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
) -> numpy.ndarray:
    """
    Within-slice weights w_i = K(d_i / h) / sum_j K(d_j / h).
    """
    if not cfg.h.h > 0.0:
        raise InvalidConfigError(f"bandwidth must be positive, got {cfg.h.h}")
    kernel_values = cfg.kernel.evaluate(distances(V, s0, sample.X) / cfg.h.h)
    total = kernel_values.sum()
    if total <= 0.0:
        raise DegenerateDataError(f"slice around s0={s0} contains no mass")
    return kernel_values / total


def slice_moments(weights: numpy.ndarray, fy: numpy.ndarray) -> tuple[float, float]:
    """
    Weighted first and second moments (ybar_1, ybar_2) of a transformed response.
    """
    weights = numpy.asarray(weights, dtype=numpy.float64)
    fy = numpy.asarray(fy, dtype=numpy.float64)
    return float(weights @ fy), float(weights @ fy**2)


def local_variance(
    V: StiefelPoint | numpy.ndarray,
    s0: numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
    f_index: int,
) -> float:
    """
    Variance ybar_2 - ybar_1^2 of f_{f_index}(Y) inside the slice around s0 + span(V).
    """
    weights = slice_weights(V, s0, sample, cfg)
    ybar1, ybar2 = slice_moments(weights, sample.FY[:, f_index])
    return ybar2 - ybar1**2


""" ____________________________________________________________________________________
ALL SLICES
"""


@dataclasses.dataclass(frozen=True, eq=False)
class _SliceState:
    """
    Every intermediate quantity of one objective evaluation, rows = shifting points.
    """

    distances: numpy.ndarray
    kernel_values: numpy.ndarray
    weights: numpy.ndarray
    ybar1: numpy.ndarray
    local_variances: numpy.ndarray
    between_weights: numpy.ndarray | None
    per_function: numpy.ndarray


def _slice_distances(values: numpy.ndarray, sample: Sample) -> numpy.ndarray:
    projected = sample.X @ values
    differences = projected[numpy.newaxis, :, :] - projected[:, numpy.newaxis, :]
    result = sample.squared_distances - numpy.einsum(
        "jik,jik->ji", differences, differences
    )
    result = numpy.maximum(result, 0.0)
    numpy.fill_diagonal(result, 0.0)
    return result


def _between_weights(kernel_values: numpy.ndarray) -> numpy.ndarray:
    n = kernel_values.shape[0]
    if n < 2:
        raise DegenerateDataError(f"between-slice weights need n >= 2, got n={n}")
    # K(0) = 1 self term of each slice
    masses = kernel_values.sum(axis=1) - 1.0
    total = masses.sum()
    if total <= 0.0:
        raise DegenerateDataError(
            "every slice is empty apart from its shifting point, the bandwidth is too small"
        )
    return masses / total


def _slice_state(
    values: numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
    fy: numpy.ndarray | None = None,
) -> _SliceState:
    _check_shapes(values, sample)
    fy = sample.FY if fy is None else fy
    slice_distances = _slice_distances(values, sample)
    kernel_values = cfg.kernel.evaluate(slice_distances / cfg.h.h)
    weights = kernel_values / kernel_values.sum(axis=1, keepdims=True)

    ybar1 = weights @ fy
    ybar2 = weights @ fy**2
    local_variances = ybar2 - ybar1**2

    between_weights = None
    if cfg.weighting is Weighting.weighted:
        between_weights = _between_weights(kernel_values)
        per_function = between_weights @ local_variances
    else:
        per_function = local_variances.mean(axis=0)

    return _SliceState(
        distances=slice_distances,
        kernel_values=kernel_values,
        weights=weights,
        ybar1=ybar1,
        local_variances=local_variances,
        between_weights=between_weights,
        per_function=per_function,
    )


def between_slice_weights(
    V: StiefelPoint | numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
) -> numpy.ndarray:
    """
    Weight of each slice proportional to the kernel mass of the other points it holds:
    ``sum_{j != i} K(d_j(V, X_i) / h) / sum_{l != u} K(d_l(V, X_u) / h)``.
    """
    values = _as_values(V)
    _check_shapes(values, sample)
    slice_distances = _slice_distances(values, sample)
    return _between_weights(cfg.kernel.evaluate(slice_distances / cfg.h.h))


def objective_single(
    V: StiefelPoint | numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
    f_index: int,
) -> float:
    """
    L*_n(V, f) for the transformed response in column ``f_index`` of FY, or its
    slice-mass weighted version L^(w)_n(V, f) when ``cfg.weighting`` is weighted.
    """
    fy = sample.FY[:, [f_index]]
    state = _slice_state(_as_values(V), sample, cfg, fy=fy)
    return float(state.per_function[0])


def objective_ensemble(
    V: StiefelPoint | numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
) -> ObjectiveValue:
    """
    L_{n,F}(V): mean over the m ensemble functions of the per-function objective.
    """
    state = _slice_state(_as_values(V), sample, cfg)
    return ObjectiveValue(
        value=float(state.per_function.mean()),
        per_function=state.per_function,
    )


""" ____________________________________________________________________________________
GRADIENT
"""


def _distance_coefficients(
    state: _SliceState,
    sample: Sample,
    cfg: ObjectiveConfig,
    weighting: Weighting,
) -> numpy.ndarray:
    """
    Partial derivatives of the objective with respect to each d_i(V, X_j), as an n x n matrix.
    """
    n, m = sample.n, sample.m
    # d log K(d / h) / dd
    log_slopes = cfg.kernel.log_slope(state.distances / cfg.h.h) / cfg.h.h

    residuals = sample.FY[numpy.newaxis, :, :] - state.ybar1[:, numpy.newaxis, :]
    excess = numpy.sum(
        residuals**2 - state.local_variances[:, numpy.newaxis, :], axis=2
    )
    within = state.weights * log_slopes * excess

    if weighting is Weighting.uniform:
        return within / (n * m)

    between_weights = state.between_weights
    if between_weights is None:
        between_weights = _between_weights(state.kernel_values)
    total_mass = state.kernel_values.sum() - n
    per_function = between_weights @ state.local_variances
    spread = numpy.sum(state.local_variances - per_function[numpy.newaxis, :], axis=1)
    mass_term = state.kernel_values * log_slopes * spread[:, numpy.newaxis] / total_mass
    return (between_weights[:, numpy.newaxis] * within + mass_term) / m


def _gradient_from_coefficients(
    coefficients: numpy.ndarray,
    values: numpy.ndarray,
    sample: Sample,
) -> numpy.ndarray:
    # sum_ji c_ji (X_i - X_j)(X_i - X_j)^T as X^T (diag(S 1) - S) X with S = C + C^T
    symmetric = coefficients + coefficients.T
    laplacian = numpy.diag(symmetric.sum(axis=1)) - symmetric
    scatter = sample.X.T @ laplacian @ sample.X
    # grad_V d = -2 (X_i - X_j)(X_i - X_j)^T V
    return -2.0 * scatter @ values


def objective_and_gradient(
    V: StiefelPoint | numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
    direction: Weighting | None = None,
) -> tuple[ObjectiveValue, numpy.ndarray]:
    """
    Evaluate the objective and its Euclidean gradient in one pass.

    Args:
        V: p x q matrix
        sample: data
        cfg: objective configuration, only the Gaussian kernel is differentiable
        direction:
            weighting scheme whose gradient is returned, defaults to ``cfg.weighting``.
            Passing uniform with a weighted cfg returns the uniform-scheme gradient
            while the value stays the weighted objective.

    Returns:
        tuple of (objective value, p x q gradient)
    """
    if cfg.kernel.kind is not KernelKind.gaussian:
        raise UnsupportedKernelError(
            f"analytic gradient only available for the gaussian kernel, got {cfg.kernel.kind}"
        )
    direction = direction or cfg.weighting
    values = _as_values(V)
    state = _slice_state(values, sample, cfg)
    coefficients = _distance_coefficients(state, sample, cfg, direction)
    gradient = _gradient_from_coefficients(coefficients, values, sample)
    value = ObjectiveValue(
        value=float(state.per_function.mean()),
        per_function=state.per_function,
    )
    return value, gradient


def gradient_ensemble(
    V: StiefelPoint | numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
) -> numpy.ndarray:
    """
    Euclidean gradient of `objective_ensemble` with respect to V (p x q matrix).

    The per-slice gradient is
    ``(2 / h^2) sum_i (L~_n - (f(Y_i) - ybar_1)^2) w_i d_i grad_V d_i`` with
    ``grad_V d_i = -2 (X_i - s0)(X_i - s0)^T V``, averaged over shifting points
    and ensemble functions. For the weighted scheme the derivative of the
    between-slice weights is included.
    """
    return objective_and_gradient(V, sample, cfg)[1]


def gradient_fd(
    V: StiefelPoint | numpy.ndarray,
    sample: Sample,
    cfg: ObjectiveConfig,
    eps: float = 1e-5,
) -> numpy.ndarray:
    """
    Central finite-difference approximation of the Euclidean gradient of
    `objective_ensemble`, entry by entry.
    """
    if not eps > 0.0:
        raise InvalidConfigError(f"eps must be positive, got {eps}")
    values = _as_values(V)
    gradient = numpy.zeros_like(values)
    for index in numpy.ndindex(values.shape):
        shift = numpy.zeros_like(values)
        shift[index] = eps
        upper = objective_ensemble(values + shift, sample, cfg).value
        lower = objective_ensemble(values - shift, sample, cfg).value
        gradient[index] = (upper - lower) / (2.0 * eps)
    return gradient

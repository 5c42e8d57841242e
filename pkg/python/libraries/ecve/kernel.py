"""
Smoothing kernel and bandwidth rule used to weight points inside a slice.
"""
import dataclasses
import enum
import logging

import numpy

from ecve.errors import ContractViolationError
from ecve.errors import DegenerateDataError
from ecve.errors import InvalidConfigError
from ecve.errors import InvalidDimensionError

LOGGER = logging.getLogger(__name__)


class KernelKind(enum.Enum):
    gaussian = "gaussian"


@dataclasses.dataclass(frozen=True)
class KernelSpec:
    """
    A kernel K on [0, inf): non-increasing, continuous and bounded by 1.

    ``z`` is always a ratio of squared distances d/h.
    """

    kind: KernelKind = KernelKind.gaussian

    def evaluate(self, z: numpy.ndarray) -> numpy.ndarray:
        if self.kind is KernelKind.gaussian:
            return numpy.exp(-numpy.square(z))
        raise NotImplementedError(self.kind)

    def log_slope(self, z: numpy.ndarray) -> numpy.ndarray:
        """
        Derivative of log(K) with respect to z.
        """
        if self.kind is KernelKind.gaussian:
            return -2.0 * z
        raise NotImplementedError(self.kind)


GAUSSIAN = KernelSpec(KernelKind.gaussian)


@dataclasses.dataclass(frozen=True)
class Bandwidth:
    """
    Squared width ``h`` of a slice, in squared-distance units of the predictors.
    """

    h: float

    def __post_init__(self):
        if not self.h > 0.0:
            raise InvalidConfigError(f"bandwidth must be positive, got h={self.h}")


def kernel_eval(spec: KernelSpec, z: float | numpy.ndarray) -> float | numpy.ndarray:
    """
    Evaluate the kernel at nonnegative ``z``.
    """
    z_array = numpy.asarray(z, dtype=numpy.float64)
    if numpy.any(z_array < 0.0):
        raise ContractViolationError(f"kernel argument must be >= 0, got {z}")
    result = spec.evaluate(z_array)
    if result.ndim == 0:
        return float(result)
    return result


def bandwidth_rule(X: numpy.ndarray, q: int) -> Bandwidth:
    """
    Bandwidth h = 1.2^2 * (2 tr(Sigma_x) / p) * n^(-2 / (4 + p - q)).

    Sigma_x is the empirical covariance with 1/n normalization.

    Args:
        X: n x p predictor matrix
        q: dimension of the subspace V the slices are built around, 1 <= q < p
    """
    X = numpy.asarray(X, dtype=numpy.float64)
    n, p = X.shape
    if n < 2:
        raise DegenerateDataError(f"bandwidth needs at least 2 observations, got {n}")
    if not 1 <= q < p:
        raise InvalidDimensionError(f"expected 1 <= q < p, got p={p}, q={q}")

    covariance_trace = float(numpy.var(X, axis=0).sum())
    if covariance_trace <= 0.0:
        raise DegenerateDataError("all predictor columns are constant, tr(Sigma_x) = 0")

    h = 1.2**2 * (2.0 * covariance_trace / p) * (n ** (-1.0 / (4 + p - q))) ** 2
    LOGGER.debug(f"bandwidth_rule(n={n}, p={p}, q={q}): tr={covariance_trace}, h={h}")
    return Bandwidth(h)

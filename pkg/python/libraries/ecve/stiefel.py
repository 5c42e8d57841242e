"""
Matrix-manifold primitives on the Stiefel manifold S(p, q) of p x q matrices with
orthonormal columns.
"""
import dataclasses
import logging
import math

import numpy
import scipy.linalg

from ecve.errors import DegenerateBasisError
from ecve.errors import EmptyComplementError
from ecve.errors import InvalidDimensionError

LOGGER = logging.getLogger(__name__)

ORTHONORMALITY_TOLERANCE = 1e-10

# relative threshold on |diag(R)| under which a QR factor is considered rank-deficient
_RANK_TOLERANCE = 1e-10


def _frozen_array(array: numpy.ndarray) -> numpy.ndarray:
    array = numpy.array(array, dtype=numpy.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True)
class SubspaceProjector:
    """
    Orthogonal projection matrix P = V V^T on the column space of a basis V.
    """

    values: numpy.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    @property
    def rank(self) -> int:
        return int(round(numpy.trace(self.values)))


@dataclasses.dataclass(frozen=True)
class StiefelPoint:
    """
    A p x q matrix with orthonormal columns, the optimization variable V.

    The matrix is copied and made read-only at construction.
    """

    values: numpy.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 2:
            raise InvalidDimensionError(
                f"expected a 2d matrix, got shape {values.shape}"
            )
        p, q = values.shape
        if not 1 <= q <= p:
            raise InvalidDimensionError(f"expected 1 <= q <= p, got p={p}, q={q}")
        defect = numpy.linalg.norm(values.T @ values - numpy.eye(q))
        if defect > ORTHONORMALITY_TOLERANCE:
            raise DegenerateBasisError(
                f"columns are not orthonormal: |V^T V - I| = {defect:.3e}"
            )
        object.__setattr__(self, "values", values)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    def projector(self) -> SubspaceProjector:
        return SubspaceProjector(self.values @ self.values.T)


@dataclasses.dataclass(frozen=True)
class TangentVector:
    """
    Element of the tangent space of S(p, q) at ``base``.
    """

    values: numpy.ndarray
    base: StiefelPoint

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def norm(self) -> float:
        return float(numpy.linalg.norm(self.values))


def orthonormalize(matrix: numpy.ndarray) -> StiefelPoint:
    """
    Return an orthonormal basis of the column space of the given matrix.

    Uses a thin QR decomposition where the sign of each column is chosen so the
    diagonal of R is positive, making the result deterministic.

    Args:
        matrix: p x q matrix of full column rank q, 1d arrays are treated as p x 1

    Returns:
        Q factor as StiefelPoint, spanning the same space as the input columns.
    """
    matrix = numpy.asarray(matrix, dtype=numpy.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, numpy.newaxis]
    if matrix.ndim != 2 or not 1 <= matrix.shape[1] <= matrix.shape[0]:
        raise InvalidDimensionError(
            f"cannot orthonormalize a matrix of shape {matrix.shape}"
        )
    if not numpy.all(numpy.isfinite(matrix)):
        raise DegenerateBasisError("matrix contains non-finite values")

    q_factor, r_factor = scipy.linalg.qr(matrix, mode="economic")
    diagonal = numpy.diag(r_factor)
    magnitude = numpy.abs(diagonal)
    if magnitude.max() == 0.0 or magnitude.min() <= _RANK_TOLERANCE * magnitude.max():
        raise DegenerateBasisError(
            f"matrix of shape {matrix.shape} is not of full column rank"
        )
    signs = numpy.where(diagonal < 0, -1.0, 1.0)
    return StiefelPoint(q_factor * signs)


def random_stiefel(p: int, q: int, rng: numpy.random.Generator) -> StiefelPoint:
    """
    Draw a point of S(p, q) from the orthogonally invariant distribution.

    Args:
        p: ambient dimension
        q: number of columns, 1 <= q <= p
        rng: seeded random source, consumed for p*q standard normal draws
    """
    if not 1 <= q <= p:
        raise InvalidDimensionError(f"expected 1 <= q <= p, got p={p}, q={q}")
    return orthonormalize(rng.standard_normal((p, q)))


def canonical_frame(X: numpy.ndarray) -> numpy.ndarray:
    """
    Orthogonal p x p eigenbasis of the covariance of X, by descending eigenvalue,
    each eigenvector signed so its largest-magnitude entry is positive.

    Permuting the columns of X permutes the rows of the frame, so starting
    points drawn in this frame permute with the predictors.

    Args:
        X: n x p data matrix
    """
    X = numpy.asarray(X, dtype=numpy.float64)
    if X.ndim != 2:
        raise InvalidDimensionError(f"expected an n x p matrix, got shape {X.shape}")
    centered = X - X.mean(axis=0)
    eigenvalues, eigenvectors = scipy.linalg.eigh(centered.T @ centered / X.shape[0])
    frame = eigenvectors[:, numpy.argsort(eigenvalues, kind="stable")[::-1]]
    pivots = numpy.argmax(numpy.abs(frame), axis=0)
    signs = numpy.sign(frame[pivots, numpy.arange(frame.shape[1])])
    signs[signs == 0.0] = 1.0
    return frame * signs


def complement_basis(point: StiefelPoint) -> StiefelPoint:
    """
    Return an orthonormal basis U of the orthogonal complement of span(V).

    Args:
        point: V, with q < p

    Returns:
        p x (p - q) point with U^T V = 0
    """
    if point.q == point.p:
        raise EmptyComplementError(
            f"span(V) is the whole space R^{point.p}, its complement is empty"
        )
    null_space = scipy.linalg.null_space(point.values.T)
    return orthonormalize(null_space)


def tangent_project(point: StiefelPoint, matrix: numpy.ndarray) -> TangentVector:
    """
    Project a p x q matrix G on the tangent space at V: G - V sym(V^T G).
    """
    matrix = numpy.asarray(matrix, dtype=numpy.float64)
    if matrix.shape != point.values.shape:
        raise InvalidDimensionError(
            f"expected a matrix of shape {point.values.shape}, got {matrix.shape}"
        )
    inner = point.values.T @ matrix
    symmetric = 0.5 * (inner + inner.T)
    return TangentVector(matrix - point.values @ symmetric, base=point)


def retract(point: StiefelPoint, tangent: TangentVector, step: float) -> StiefelPoint:
    """
    QR retraction of V + step * xi back on the manifold.

    V + step * xi always has full column rank for a tangent xi, since
    V^T (V + step * xi) = I + step * skew.
    """
    if tangent.values.shape != point.values.shape:
        raise InvalidDimensionError(
            f"tangent of shape {tangent.values.shape} does not match point {point.values.shape}"
        )
    if step == 0.0:
        return point
    return orthonormalize(point.values + step * tangent.values)


def projector(matrix: numpy.ndarray | StiefelPoint) -> SubspaceProjector:
    """
    Orthogonal projector on the column space of any full column rank matrix.
    """
    if isinstance(matrix, StiefelPoint):
        return matrix.projector()
    return orthonormalize(matrix).projector()


def subspace_error(basis: numpy.ndarray, estimate: numpy.ndarray) -> float:
    """
    Basis-free distance |P_B - P_Bhat|_F / sqrt(2k) between two k-dimensional subspaces.

    0 means equal spans, 1 means orthogonal spans.

    Args:
        basis: p x k matrix B of full column rank
        estimate: p x k matrix Bhat of full column rank
    """
    basis = numpy.asarray(getattr(basis, "values", basis), dtype=numpy.float64)
    estimate = numpy.asarray(getattr(estimate, "values", estimate), dtype=numpy.float64)
    if basis.ndim == 1:
        basis = basis[:, numpy.newaxis]
    if estimate.ndim == 1:
        estimate = estimate[:, numpy.newaxis]
    if basis.shape != estimate.shape:
        raise InvalidDimensionError(
            f"bases must have the same shape, got {basis.shape} and {estimate.shape}"
        )
    k = basis.shape[1]
    difference = projector(basis).values - projector(estimate).values
    error = numpy.linalg.norm(difference) / math.sqrt(2 * k)
    return float(min(max(error, 0.0), 1.0))

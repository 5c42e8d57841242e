"""
Fitting API of the conditional variance estimator (CVE) and its ensemble version (ECVE).

A fit standardizes the predictors, transforms the response with an ensemble,
minimizes the objective over S(p, q) with q = p - k and returns a basis of the
orthogonal complement of the minimizer, expressed in the original predictor
coordinates.
"""
import dataclasses
import json
import logging
import time
from typing import Any

import numpy

from ecve.ensembles import Ensemble
from ecve.ensembles import EnsembleKind
from ecve.ensembles import EnsembleSpec
from ecve.ensembles import ResponseScaler
from ecve.ensembles import build_ensemble
from ecve.errors import DegenerateDataError
from ecve.errors import InvalidConfigError
from ecve.errors import InvalidDimensionError
from ecve.kernel import bandwidth_rule
from ecve.objective import ObjectiveConfig
from ecve.objective import Sample
from ecve.objective import Weighting
from ecve.optimizer import OptimizerConfig
from ecve.optimizer import minimize
from ecve.stiefel import StiefelPoint
from ecve.stiefel import canonical_frame
from ecve.stiefel import complement_basis
from ecve.stiefel import orthonormalize

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclasses.dataclass(frozen=True)
class MethodSpec:
    """
    An ensemble specification and the between-slice weighting scheme.

    Its text form is ``<ensemble_spec>[+weighted]``, see `parse_method_spec`.
    """

    ensemble: EnsembleSpec
    weighting: Weighting = Weighting.uniform

    def __str__(self) -> str:
        suffix = "+weighted" if self.weighting is Weighting.weighted else ""
        return f"{self.ensemble}{suffix}"


def parse_method_spec(text: str) -> MethodSpec:
    """
    Parse a method identifier.

    Accepted forms: ``fourier``, ``fourier:6``, ``indicator:auto+weighted``,
    ``indicator_weighted``, ``cve`` (identity ensemble).
    """
    text = text.strip().lower()
    weighting = Weighting.uniform
    if text.endswith("+weighted"):
        text = text[: -len("+weighted")]
        weighting = Weighting.weighted
    elif "_weighted" in text:
        text = text.replace("_weighted", "", 1)
        weighting = Weighting.weighted
    if text == "cve":
        text = EnsembleKind.identity.value
    return MethodSpec(EnsembleSpec.parse(text), weighting)


@dataclasses.dataclass(frozen=True, eq=False)
class StandardizationParams:
    """
    Columnwise location and scale of the predictors (1/n variance).
    """

    means: numpy.ndarray
    sds: numpy.ndarray

    def __post_init__(self):
        means = numpy.array(self.means, dtype=numpy.float64)
        sds = numpy.array(self.sds, dtype=numpy.float64)
        if means.shape != sds.shape:
            raise InvalidDimensionError(
                f"means {means.shape} and sds {sds.shape} have different shapes"
            )
        if numpy.any(sds <= 0.0):
            raise DegenerateDataError(f"standard deviations must be positive: {sds}")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)

    @classmethod
    def fit(cls, X: numpy.ndarray) -> "StandardizationParams":
        X = numpy.asarray(X, dtype=numpy.float64)
        sds = X.std(axis=0)
        constant = numpy.flatnonzero(sds <= 0.0)
        if constant.size:
            raise DegenerateDataError(
                f"predictor columns {constant.tolist()} are constant"
            )
        return cls(X.mean(axis=0), sds)

    def transform(self, X: numpy.ndarray) -> numpy.ndarray:
        return (numpy.asarray(X, dtype=numpy.float64) - self.means) / self.sds

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "sds": self.sds.tolist()}


@dataclasses.dataclass(frozen=True, eq=False)
class EcveFit:
    """
    A fitted sufficient reduction.

    Args:
        B_hat: p x k orthonormal basis of the reduction, in original predictor coordinates
        V_hat: p x q minimizer of the objective, in standardized coordinates
        objective_value: objective at V_hat
        standardization: predictor standardization the fit was computed in
        config: provenance of the fit (method, ensemble, bandwidth, optimizer, ...)
        feature_names: optional predictor names, in column order
        response_name: optional name of the response column
    """

    B_hat: numpy.ndarray
    V_hat: StiefelPoint
    objective_value: float
    standardization: StandardizationParams
    config: dict[str, Any]
    feature_names: tuple[str, ...] | None = None
    response_name: str | None = None

    def __post_init__(self):
        B_hat = numpy.array(self.B_hat, dtype=numpy.float64)
        if B_hat.ndim == 1:
            B_hat = B_hat[:, numpy.newaxis]
        p = self.V_hat.p
        if B_hat.shape[0] != p or B_hat.shape[1] + self.V_hat.q != p:
            raise InvalidDimensionError(
                f"B_hat {B_hat.shape} is not the complement of V_hat {self.V_hat.values.shape}"
            )
        B_hat.setflags(write=False)
        object.__setattr__(self, "B_hat", B_hat)

    @property
    def p(self) -> int:
        return self.V_hat.p

    @property
    def q(self) -> int:
        return self.V_hat.q

    @property
    def k(self) -> int:
        return self.B_hat.shape[1]

    @property
    def seed(self) -> int:
        return self.config["optimizer"]["seed"]

    @property
    def B_standardized(self) -> StiefelPoint:
        """
        Basis of the complement of span(V_hat), in standardized coordinates.
        """
        return complement_basis(self.V_hat)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "p": self.p,
            "k": self.k,
            "q": self.q,
            "B_hat": self.B_hat.tolist(),
            "V_hat": self.V_hat.values.tolist(),
            "objective_value": self.objective_value,
            "config": self.config,
            "standardization": self.standardization.to_dict(),
            "seed": self.seed,
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "response_name": self.response_name,
        }

    def to_json(self) -> str:
        # repr of python floats is the shortest round-trip form: lossless
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "EcveFit":
        feature_names = data.get("feature_names")
        return cls(
            B_hat=numpy.array(data["B_hat"], dtype=numpy.float64),
            V_hat=StiefelPoint(numpy.array(data["V_hat"], dtype=numpy.float64)),
            objective_value=float(data["objective_value"]),
            standardization=StandardizationParams(**data["standardization"]),
            config=data["config"],
            feature_names=tuple(feature_names) if feature_names else None,
            response_name=data.get("response_name"),
        )

    @classmethod
    def from_json(cls, text: str) -> "EcveFit":
        return cls.from_dict(json.loads(text))


def fit(
    X: numpy.ndarray,
    Y: numpy.ndarray,
    k: int,
    ensemble_spec: EnsembleSpec | str = "fourier",
    weighting: Weighting | str = Weighting.uniform,
    opt: OptimizerConfig | None = None,
    feature_names: list[str] | None = None,
    response_name: str | None = None,
) -> EcveFit:
    """
    Estimate a k-dimensional sufficient reduction of X for Y.

    Args:
        X: n x p predictors
        Y: length-n responses
        k: dimension of the reduction, 1 <= k < p
        ensemble_spec: ensemble, ex: "fourier", "indicator:8", "identity"
        weighting: between-slice weighting scheme
        opt: optimizer configuration, defaults to `OptimizerConfig()`
        feature_names: optional predictor names stored in the fit
        response_name: optional response name stored in the fit

    Returns:
        the fitted reduction
    """
    X = numpy.asarray(X, dtype=numpy.float64)
    Y = numpy.asarray(Y, dtype=numpy.float64).reshape(-1)
    if X.ndim != 2:
        raise InvalidDimensionError(f"X must be a 2d matrix, got shape {X.shape}")
    n, p = X.shape
    if len(Y) != n:
        raise InvalidDimensionError(f"X has {n} rows but Y has {len(Y)} values")
    if not 1 <= k < p:
        raise InvalidDimensionError(f"expected 1 <= k < p, got k={k}, p={p}")
    if feature_names is not None and len(feature_names) != p:
        raise InvalidDimensionError(
            f"{len(feature_names)} feature names given for {p} predictors"
        )
    if n <= p:
        LOGGER.warning(f"n={n} <= p={p}: the estimate may be unreliable")

    if isinstance(ensemble_spec, str):
        ensemble_spec = EnsembleSpec.parse(ensemble_spec)
    if isinstance(weighting, str):
        try:
            weighting = Weighting(weighting)
        except ValueError:
            raise InvalidConfigError(f"unknown weighting '{weighting}'") from None
    opt = opt or OptimizerConfig()

    standardization = StandardizationParams.fit(X)
    Z = standardization.transform(X)

    ensemble: Ensemble = build_ensemble(
        ensemble_spec.kind, ensemble_spec.resolve_m(n), Y
    )
    scaler = ResponseScaler.fit(ensemble.kind, Y)
    sample = Sample.from_ensemble(Z, Y, ensemble, scaler)

    q = p - k
    cfg = ObjectiveConfig(h=bandwidth_rule(Z, q), weighting=weighting)

    start_time = time.time()
    LOGGER.info(
        f"fitting {ensemble.describe()} ({weighting.value}) on n={n}, p={p}, k={k} "
        f"with h={cfg.h.h:.4g}"
    )
    result = minimize(sample, cfg, opt, q, frame=canonical_frame(Z))
    LOGGER.info(
        f"fit took {time.time() - start_time:.2f}s, objective={result.value:.6g}, "
        f"converged={result.converged}"
    )

    B_standardized = complement_basis(result.V)
    B_hat = orthonormalize(
        B_standardized.values / standardization.sds[:, numpy.newaxis]
    )

    config = {
        "method": str(MethodSpec(ensemble_spec, weighting)),
        "ensemble": ensemble.to_dict(),
        "response_scaler": scaler.to_dict(),
        "weighting": weighting.value,
        "objective": cfg.to_dict(),
        # results do not depend on the thread count
        "optimizer": {
            key: value for key, value in opt.to_dict().items() if key != "threads"
        },
        "n": n,
        "converged": result.converged,
        "iterations": result.iterations,
        "attempt_values": list(result.attempt_values),
    }
    return EcveFit(
        B_hat=B_hat.values,
        V_hat=result.V,
        objective_value=result.value,
        standardization=standardization,
        config=config,
        feature_names=tuple(feature_names) if feature_names is not None else None,
        response_name=response_name,
    )


def fit_cve(
    X: numpy.ndarray,
    Y: numpy.ndarray,
    k: int,
    opt: OptimizerConfig | None = None,
) -> EcveFit:
    """
    Mean subspace CVE: `fit` with the identity ensemble and uniform weighting.
    """
    return fit(X, Y, k, ensemble_spec="identity", weighting=Weighting.uniform, opt=opt)


def reduce(fitted: EcveFit, X_new: numpy.ndarray) -> numpy.ndarray:
    """
    Apply the reduction: return X_new B_hat (n' x k).
    """
    X_new = numpy.asarray(X_new, dtype=numpy.float64)
    if X_new.ndim != 2 or X_new.shape[1] != fitted.p:
        raise InvalidDimensionError(
            f"expected a matrix with {fitted.p} columns, got shape {X_new.shape}"
        )
    return X_new @ fitted.B_hat


def coefficient_table(fitted: EcveFit, decimals: int = 2) -> str:
    """
    Aligned table of the rounded reduction coefficients, one row per predictor.
    """
    names = fitted.feature_names or tuple(f"x{index + 1}" for index in range(fitted.p))
    name_width = max(len(name) for name in names)
    header = " " * name_width + " | " + " ".join(
        f"{f'b{column + 1}':>8}" for column in range(fitted.k)
    )
    lines = [header, "-" * len(header)]
    for name, row in zip(names, fitted.B_hat):
        cells = " ".join(f"{round(value, decimals):>8.{decimals}f}" for value in row)
        lines.append(f"{name:<{name_width}} | {cells}")
    return "\n".join(lines)

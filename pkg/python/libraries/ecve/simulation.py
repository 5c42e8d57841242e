"""
Simulation models M1-M7, predictor distributions I-III and the Monte Carlo
replication harness measuring the subspace estimation error.
"""
import dataclasses
import enum
import functools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy
import scipy.linalg

from ecve.ensembles import EnsembleKind
from ecve.ensembles import EnsembleSpec
from ecve.errors import InvalidConfigError
from ecve.errors import InvalidDimensionError
from ecve.estimator import MethodSpec
from ecve.estimator import fit
from ecve.estimator import parse_method_spec
from ecve.objective import Weighting
from ecve.optimizer import OptimizerConfig
from ecve.stiefel import subspace_error

LOGGER = logging.getLogger(__name__)

DEFAULT_P = 10

""" ____________________________________________________________________________________
MODELS
"""

# link(reductions, eps) where reductions[:, j] = b_{j+1}^T X
LinkFunction = Callable[[numpy.ndarray, numpy.ndarray], numpy.ndarray]


def _link_m1(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    return 1.0 / r[:, 0] + 0.2 * eps


def _link_m2(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    return numpy.cos(2.0 * r[:, 0]) + numpy.cos(r[:, 1]) + 0.2 * eps


def _link_m3(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    return r[:, 1] + (0.5 + r[:, 0] ** 2) * eps


def _link_m4(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    mean = r[:, 0] / (0.5 + (1.5 + r[:, 1]) ** 2)
    return mean + (numpy.abs(r[:, 0]) + r[:, 1] ** 2 + 0.5) * eps


def _link_m5(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    return r[:, 2] + numpy.sin(r[:, 0] * r[:, 1] ** 2) * eps


def _link_m6(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    return 0.5 * r[:, 0] ** 2 * eps


def _link_m7(r: numpy.ndarray, eps: numpy.ndarray) -> numpy.ndarray:
    return numpy.cos(r[:, 0] - math.pi) + numpy.cos(2.0 * r[:, 0]) * eps


class ModelId(enum.Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    M5 = "M5"
    M6 = "M6"
    M7 = "M7"


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """
    A regression model Y = g(B^T X, eps) whose central subspace is spanned by the
    first k columns of the identity.

    Args:
        id: model name
        k: dimension of the central subspace
        link: response map g applied to the k reductions and the noise
        formula: human readable formula
    """

    id: ModelId
    k: int
    link: LinkFunction
    formula: str

    def B_true(self, p: int) -> numpy.ndarray:
        return numpy.eye(p)[:, : self.k]


MODELS: dict[ModelId, ModelSpec] = {
    ModelId.M1: ModelSpec(ModelId.M1, 1, _link_m1, "Y = 1/(b1'X) + 0.2 eps"),
    ModelId.M2: ModelSpec(
        ModelId.M2, 2, _link_m2, "Y = cos(2 b1'X) + cos(b2'X) + 0.2 eps"
    ),
    ModelId.M3: ModelSpec(ModelId.M3, 2, _link_m3, "Y = b2'X + (0.5 + (b1'X)^2) eps"),
    ModelId.M4: ModelSpec(
        ModelId.M4,
        2,
        _link_m4,
        "Y = b1'X / (0.5 + (1.5 + b2'X)^2) + (|b1'X| + (b2'X)^2 + 0.5) eps",
    ),
    ModelId.M5: ModelSpec(
        ModelId.M5, 3, _link_m5, "Y = b3'X + sin(b1'X (b2'X)^2) eps"
    ),
    ModelId.M6: ModelSpec(ModelId.M6, 1, _link_m6, "Y = 0.5 (b1'X)^2 eps"),
    ModelId.M7: ModelSpec(
        ModelId.M7, 1, _link_m7, "Y = cos(b1'X - pi) + cos(2 b1'X) eps"
    ),
}


def get_model(model: ModelId | str) -> ModelSpec:
    if isinstance(model, ModelSpec):
        return model
    if isinstance(model, ModelId):
        return MODELS[model]
    try:
        return MODELS[ModelId(str(model).upper())]
    except ValueError:
        choices = ", ".join(model_id.value for model_id in ModelId)
        raise InvalidConfigError(
            f"unknown model '{model}', expected one of: {choices}"
        ) from None


""" ____________________________________________________________________________________
PREDICTOR DISTRIBUTIONS
"""


class DistId(enum.Enum):
    """
    I: standard normal.
    II: independent uniform on [-sqrt(3), sqrt(3)].
    III: standard normal shifted by 2 along one coordinate drawn uniformly per observation.
    """

    I = "I"
    II = "II"
    III = "III"


@functools.lru_cache(maxsize=None)
def _covariance_root(p: int) -> numpy.ndarray:
    indices = numpy.arange(p)
    sigma = 0.5 ** numpy.abs(indices[:, numpy.newaxis] - indices[numpy.newaxis, :])
    eigenvalues, eigenvectors = scipy.linalg.eigh(sigma)
    root = (eigenvectors * numpy.sqrt(eigenvalues)) @ eigenvectors.T
    root.setflags(write=False)
    return root


@dataclasses.dataclass(frozen=True, eq=False)
class PredictorDist:
    """
    Distribution of X = Sigma^(1/2) Z with Sigma_ij = 0.5^|i - j|.
    """

    id: DistId
    p: int = DEFAULT_P

    @property
    def Sigma(self) -> numpy.ndarray:
        root = self.Sigma_root
        return root @ root

    @property
    def Sigma_root(self) -> numpy.ndarray:
        """
        Symmetric square root of Sigma, computed once per p.
        """
        return _covariance_root(self.p)

    def draw_Z(self, n: int, rng: numpy.random.Generator) -> numpy.ndarray:
        if self.id is DistId.I:
            return rng.standard_normal((n, self.p))
        if self.id is DistId.II:
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(n, self.p))
        Z = rng.standard_normal((n, self.p))
        shifted = rng.integers(0, self.p, size=n)
        Z[numpy.arange(n), shifted] += 2.0
        return Z

    def draw(self, n: int, rng: numpy.random.Generator) -> numpy.ndarray:
        return self.draw_Z(n, rng) @ self.Sigma_root


def get_dist(dist: DistId | str, p: int = DEFAULT_P) -> PredictorDist:
    if isinstance(dist, PredictorDist):
        return dist
    if isinstance(dist, DistId):
        return PredictorDist(dist, p)
    try:
        return PredictorDist(DistId(str(dist).upper()), p)
    except ValueError:
        choices = ", ".join(dist_id.value for dist_id in DistId)
        raise InvalidConfigError(
            f"unknown distribution '{dist}', expected one of: {choices}"
        ) from None


def generate(
    model: ModelSpec | ModelId | str,
    dist: PredictorDist | DistId | str,
    n: int,
    seed: int | numpy.random.SeedSequence | numpy.random.Generator,
    noise: bool = True,
) -> tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]:
    """
    Draw a sample of size n from a simulation model.

    Args:
        model: one of M1-M7
        dist: predictor distribution I-III (p defaults to 10)
        n: sample size, >= 1
        seed: seed or random generator
        noise: False to freeze eps at 0

    Returns:
        tuple of (X n x p, Y length n, B_true p x k)
    """
    if n < 1:
        raise InvalidConfigError(f"n must be >= 1, got {n}")
    model = get_model(model)
    dist = get_dist(dist)
    rng = numpy.random.default_rng(seed)

    X = dist.draw(n, rng)
    eps = rng.standard_normal(n)
    if not noise:
        eps = numpy.zeros(n)
    B_true = model.B_true(dist.p)
    Y = model.link(X @ B_true, eps)
    return X, Y, B_true


""" ____________________________________________________________________________________
STUDIES
"""


@dataclasses.dataclass(frozen=True, eq=False)
class StudyResult:
    """
    Estimation errors of one (model, dist, n, method) cell over r replicates.

    ``sd`` is the sample standard deviation (denominator r - 1), reported as 0
    with ``sd_degenerate`` set when r = 1.
    """

    model: str
    dist: str
    n: int
    method: str
    replicates: int
    errors: tuple[float, ...]
    mean: float
    sd: float
    sd_degenerate: bool = False

    @classmethod
    def from_errors(
        cls,
        model: str,
        dist: str,
        n: int,
        method: str,
        errors: list[float],
    ) -> "StudyResult":
        r = len(errors)
        mean = math.fsum(errors) / r
        if r > 1:
            sd = math.sqrt(math.fsum((error - mean) ** 2 for error in errors) / (r - 1))
        else:
            sd = 0.0
        return cls(
            model=model,
            dist=dist,
            n=n,
            method=method,
            replicates=r,
            errors=tuple(errors),
            mean=mean,
            sd=sd,
            sd_degenerate=r == 1,
        )

    @property
    def median(self) -> float:
        return float(numpy.median(self.errors))


def _replicate_error(
    model: ModelSpec,
    dist: PredictorDist,
    n: int,
    method: MethodSpec,
    seed: numpy.random.SeedSequence,
    opt: OptimizerConfig,
    k: int,
) -> float:
    data_seed, optimizer_seed = seed.spawn(2)
    X, Y, B_true = generate(model, dist, n, data_seed)
    replicate_opt = dataclasses.replace(
        opt, seed=int(optimizer_seed.generate_state(1)[0]), threads=1
    )
    fitted = fit(
        X,
        Y,
        k,
        ensemble_spec=method.ensemble,
        weighting=method.weighting,
        opt=replicate_opt,
    )
    target = B_true if k == model.k else numpy.eye(dist.p)[:, model.k - k : model.k]
    return subspace_error(target, fitted.B_hat)


def run_study(
    model: ModelSpec | ModelId | str,
    dist: PredictorDist | DistId | str,
    n: int,
    method_spec: MethodSpec | str,
    r: int,
    seed: int,
    opt: OptimizerConfig | None = None,
    threads: int = 1,
    k: int | None = None,
) -> StudyResult:
    """
    Replicate: generate data, fit, measure the error against the true subspace.

    Replicate i uses the i-th child of ``SeedSequence(seed)`` for both its data
    and its optimizer restarts, so results do not depend on ``threads``.

    Args:
        model: simulation model
        dist: predictor distribution
        n: sample size
        method_spec: method identifier, see `parse_method_spec`
        r: number of replicates, >= 1
        seed: master seed
        opt: optimizer configuration (its seed is replaced per replicate)
        threads: number of replicates run concurrently
        k:
            reduction dimension, defaults to the model's k. A smaller k targets the
            trailing k true directions (ex: k=1 on M3 targets the mean subspace b2).
    """
    if r < 1:
        raise InvalidConfigError(f"r must be >= 1, got {r}")
    model = get_model(model)
    dist = get_dist(dist)
    if isinstance(method_spec, str):
        method_spec = parse_method_spec(method_spec)
    opt = opt or OptimizerConfig()
    k = k if k is not None else model.k
    if not 1 <= k <= model.k:
        raise InvalidDimensionError(
            f"k must be in [1, {model.k}] for {model.id.value}, got {k}"
        )

    seeds = numpy.random.SeedSequence(seed).spawn(r)

    def run_replicate(index: int) -> float:
        return _replicate_error(model, dist, n, method_spec, seeds[index], opt, k)

    start_time = time.time()
    LOGGER.info(
        f"study {model.id.value}/{dist.id.value}/n={n}/{method_spec}: {r} replicates"
    )
    if threads > 1 and r > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            errors = list(executor.map(run_replicate, range(r)))
    else:
        errors = [run_replicate(index) for index in range(r)]

    result = StudyResult.from_errors(
        model.id.value, dist.id.value, n, str(method_spec), errors
    )
    if result.sd_degenerate:
        LOGGER.warning("single replicate: sd reported as 0")
    LOGGER.info(
        f"study {model.id.value}/{dist.id.value}/n={n}/{method_spec}: "
        f"mean={result.mean:.3f} sd={result.sd:.3f}, took {time.time() - start_time:.2f}s"
    )
    return result


def consistency_sweep(
    model: ModelSpec | ModelId | str,
    dist: PredictorDist | DistId | str,
    n_list: list[int],
    method_spec: MethodSpec | str,
    r: int,
    seed: int,
    opt: OptimizerConfig | None = None,
    threads: int = 1,
    k: int | None = None,
) -> list[StudyResult]:
    """
    One study per sample size, to follow the error as n grows.
    """
    if not n_list:
        raise InvalidConfigError("n_list must not be empty")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidConfigError(f"n_list must be strictly increasing, got {n_list}")
    seeds = numpy.random.SeedSequence(seed).spawn(len(n_list))
    return [
        run_study(
            model,
            dist,
            n,
            method_spec,
            r,
            int(n_seed.generate_state(1)[0]),
            opt=opt,
            threads=threads,
            k=k,
        )
        for n, n_seed in zip(n_list, seeds)
    ]


def ensemble_size_sweep(
    model: ModelSpec | ModelId | str,
    dist: PredictorDist | DistId | str,
    n: int,
    kind: EnsembleKind | str,
    m_list: list[int],
    weighting: Weighting | str,
    r: int,
    seed: int,
    opt: OptimizerConfig | None = None,
    threads: int = 1,
) -> list[StudyResult]:
    """
    One study per ensemble size m, all sharing the same replicate data.
    """
    if not m_list:
        raise InvalidConfigError("m_list must not be empty")
    kind = EnsembleKind(kind) if isinstance(kind, str) else kind
    weighting = Weighting(weighting) if isinstance(weighting, str) else weighting
    return [
        run_study(
            model,
            dist,
            n,
            MethodSpec(EnsembleSpec(kind, m), weighting),
            r,
            seed,
            opt=opt,
            threads=threads,
        )
        for m in m_list
    ]


def study_grid(
    models: list[str],
    dists: list[str],
    n_list: list[int],
    methods: list[str],
    r: int,
    seed: int,
    opt: OptimizerConfig | None = None,
    threads: int = 1,
) -> list[StudyResult]:
    """
    Every (model, dist, n, method) combination. Methods of the same cell share the
    replicate data.
    """
    results = []
    for model in models:
        for dist in dists:
            for n in n_list:
                cell_entropy = [
                    seed,
                    list(ModelId).index(get_model(model).id),
                    list(DistId).index(get_dist(dist).id),
                    n,
                ]
                cell_seed = int(
                    numpy.random.SeedSequence(cell_entropy).generate_state(1)[0]
                )
                for method in methods:
                    results.append(
                        run_study(
                            model,
                            dist,
                            n,
                            method,
                            r,
                            cell_seed,
                            opt=opt,
                            threads=threads,
                        )
                    )
    return results


""" ____________________________________________________________________________________
REPORTING
"""

STUDY_CSV_HEADER = ("model", "dist", "n", "method", "replicates", "mean_err", "sd_err")
REPLICATE_CSV_HEADER = ("model", "dist", "n", "method", "rep", "err")


def study_rows(results: list[StudyResult]) -> list[tuple]:
    return [
        (res.model, res.dist, res.n, res.method, res.replicates, res.mean, res.sd)
        for res in results
    ]


def replicate_rows(results: list[StudyResult]) -> list[tuple]:
    return [
        (res.model, res.dist, res.n, res.method, rep, err)
        for res in results
        for rep, err in enumerate(res.errors)
    ]


def format_study_table(results: list[StudyResult]) -> str:
    """
    Aligned "mean (sd)" table, one block per model, rows (dist, n), columns methods.
    """
    methods = list(dict.fromkeys(res.method for res in results))
    cells = {(res.model, res.dist, res.n, res.method): res for res in results}
    width = max([15] + [len(method) for method in methods])

    lines = []
    for model in dict.fromkeys(res.model for res in results):
        header = f"{model:<4} {'dist':>4} {'n':>6} | " + " ".join(
            f"{method:>{width}}" for method in methods
        )
        lines += [header, "-" * len(header)]
        rows = dict.fromkeys((res.dist, res.n) for res in results if res.model == model)
        for dist, n in rows:
            row = []
            for method in methods:
                res = cells.get((model, dist, n, method))
                text = f"{res.mean:.3f} ({res.sd:.3f})" if res else "-"
                row.append(f"{text:>{width}}")
            lines.append(f"{'':<4} {dist:>4} {n:>6} | " + " ".join(row))
        lines.append("")
    return "\n".join(lines)

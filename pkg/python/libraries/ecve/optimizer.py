"""
Multi-start Riemannian gradient descent of the objective over S(p, q).
"""
import dataclasses
import enum
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy

from ecve.errors import InvalidConfigError
from ecve.errors import InvalidDimensionError
from ecve.objective import ObjectiveConfig
from ecve.objective import Sample
from ecve.objective import Weighting
from ecve.objective import objective_and_gradient
from ecve.objective import objective_ensemble
from ecve.stiefel import StiefelPoint
from ecve.stiefel import orthonormalize
from ecve.stiefel import random_stiefel
from ecve.stiefel import retract
from ecve.stiefel import tangent_project

LOGGER = logging.getLogger(__name__)

# ties between attempt values closer than this are broken by attempt index
_TIE_TOLERANCE = 1e-12
# projected gradients with a smaller Frobenius norm are treated as zero
_STATIONARY_NORM = 1e-10


class SearchDirection(enum.Enum):
    """
    Gradient the weighted objective is descended along.

    exact: gradient of the weighted objective itself.
    uniform: gradient of the uniformly weighted objective, used as a search direction only.
    """

    exact = "exact"
    uniform = "uniform"


@dataclasses.dataclass(frozen=True)
class OptimizerConfig:
    """
    Args:
        attempts: number of random restarts
        max_iter: maximum number of descent steps per attempt
        tol_rel: stop once the relative objective decrease of a step falls under it
        armijo_c: sufficient decrease constant of the Armijo condition
        backtrack_factor: step shrinking factor of the line search
        initial_step: Frobenius length of the first move tried by the line search
        max_backtracks: number of shrinkings after which the line search gives up
        seed: seed of the restart initializations
        threads: number of attempts run concurrently
        weighted_direction: search direction used for the weighted objective
    """

    attempts: int = 10
    max_iter: int = 50
    tol_rel: float = 1e-3
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 30
    seed: int = 0
    threads: int = 1
    weighted_direction: SearchDirection = SearchDirection.uniform

    def __post_init__(self):
        if self.attempts < 1:
            raise InvalidConfigError(f"attempts must be >= 1, got {self.attempts}")
        if self.max_iter < 0:
            raise InvalidConfigError(f"max_iter must be >= 0, got {self.max_iter}")
        if not self.tol_rel > 0.0:
            raise InvalidConfigError(f"tol_rel must be positive, got {self.tol_rel}")
        if not 0.0 < self.armijo_c < 1.0:
            raise InvalidConfigError(f"armijo_c must be in (0, 1), got {self.armijo_c}")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise InvalidConfigError(
                f"backtrack_factor must be in (0, 1), got {self.backtrack_factor}"
            )
        if not self.initial_step > 0.0:
            raise InvalidConfigError(
                f"initial_step must be positive, got {self.initial_step}"
            )
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be >= 1, got {self.threads}")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["weighted_direction"] = self.weighted_direction.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        data = dict(data)
        if "weighted_direction" in data:
            data["weighted_direction"] = SearchDirection(data["weighted_direction"])
        return cls(**data)


@dataclasses.dataclass(frozen=True, eq=False)
class AttemptResult:
    V: StiefelPoint
    value: float
    iterations: int
    converged: bool
    trace: tuple[float, ...]


@dataclasses.dataclass(frozen=True, eq=False)
class OptimizationResult:
    """
    Args:
        V: best point found over all attempts
        value: objective at V, the minimum of ``attempt_values``
        iterations: descent steps taken by the best attempt
        attempt_values: final objective value of each attempt, in attempt order
        converged: True if the best attempt met the tolerance before max_iter
        trace: objective values of the accepted iterates of the best attempt
        best_attempt: index of the best attempt
    """

    V: StiefelPoint
    value: float
    iterations: int
    attempt_values: tuple[float, ...]
    converged: bool
    trace: tuple[float, ...] = ()
    best_attempt: int = 0


def _direction_weighting(cfg: ObjectiveConfig, opt: OptimizerConfig) -> Weighting:
    if (
        cfg.weighting is Weighting.weighted
        and opt.weighted_direction is SearchDirection.uniform
    ):
        return Weighting.uniform
    return cfg.weighting


def _line_search(
    V: StiefelPoint,
    sample: Sample,
    cfg: ObjectiveConfig,
    opt: OptimizerConfig,
) -> tuple[StiefelPoint, float, float]:
    """
    Armijo backtracking along the negative projected gradient xi.

    The first trial step is ``opt.initial_step / |xi|``, a move of Frobenius
    length ``opt.initial_step`` whatever the scale of the objective.

    Returns:
        tuple of (next point, its objective value, accepted step). The step is 0
        and V is returned unchanged when the projected gradient vanishes, and
        the step is nan when no step satisfied the Armijo condition.
    """
    current, gradient = objective_and_gradient(
        V, sample, cfg, direction=_direction_weighting(cfg, opt)
    )
    direction = tangent_project(V, -gradient)
    norm = direction.norm()
    if norm < _STATIONARY_NORM:
        return V, current.value, 0.0

    squared_norm = norm**2
    step = opt.initial_step / norm
    for _ in range(opt.max_backtracks + 1):
        candidate = retract(V, direction, step)
        value = objective_ensemble(candidate, sample, cfg).value
        if value <= current.value - opt.armijo_c * step * squared_norm:
            return candidate, value, step
        step *= opt.backtrack_factor

    LOGGER.debug(f"line search exhausted at step={step:.3e}, |xi|={norm:.3e}")
    return V, current.value, float("nan")


def descend_once(
    V: StiefelPoint,
    sample: Sample,
    cfg: ObjectiveConfig,
    opt: OptimizerConfig,
) -> tuple[StiefelPoint, float]:
    """
    One Riemannian descent step with Armijo backtracking.

    Returns:
        tuple of (next point, objective value at the next point)
    """
    next_point, value, _ = _line_search(V, sample, cfg, opt)
    return next_point, value


def minimize_from(
    V0: StiefelPoint,
    sample: Sample,
    cfg: ObjectiveConfig,
    opt: OptimizerConfig,
) -> AttemptResult:
    """
    Descend from V0 until an accepted step decreases the objective by less than
    ``opt.tol_rel`` relatively, the projected gradient vanishes or
    ``opt.max_iter`` steps were taken.

    An exhausted line search ends the descent unconverged.
    """
    V = V0
    value = objective_ensemble(V, sample, cfg).value
    trace = [value]
    converged = False
    iterations = 0

    for iterations in range(1, opt.max_iter + 1):
        next_point, next_value, accepted = _line_search(V, sample, cfg, opt)
        if math.isnan(accepted):
            break
        if accepted == 0.0:
            converged = True
            break
        decrease = (value - next_value) / max(abs(value), 1e-12)
        V, value = next_point, next_value
        trace.append(value)
        if decrease < opt.tol_rel:
            converged = True
            break

    return AttemptResult(
        V=V,
        value=value,
        iterations=iterations,
        converged=converged,
        trace=tuple(trace),
    )


def minimize(
    sample: Sample,
    cfg: ObjectiveConfig,
    opt: OptimizerConfig,
    q: int,
    frame: numpy.ndarray | None = None,
) -> OptimizationResult:
    """
    Minimize the objective over S(p, q) from ``opt.attempts`` random starts.

    Attempt i draws its start from the i-th child of ``SeedSequence(opt.seed)``,
    so the first attempts of a run are shared by every run with more attempts.
    The lowest final value wins, ties going to the lowest attempt index.

    Args:
        sample: data
        cfg: objective configuration
        opt: optimizer configuration
        q: number of columns of V, 1 <= q < p
        frame: p x p orthogonal matrix the random starts are drawn in,
            the standard basis if None
    """
    if not 1 <= q < sample.p:
        raise InvalidDimensionError(f"expected 1 <= q < p, got p={sample.p}, q={q}")
    if frame is not None and frame.shape != (sample.p, sample.p):
        raise InvalidDimensionError(
            f"expected a {sample.p} x {sample.p} start frame, got {frame.shape}"
        )

    seeds = numpy.random.SeedSequence(opt.seed).spawn(opt.attempts)

    def run_attempt(index: int) -> AttemptResult:
        rng = numpy.random.default_rng(seeds[index])
        V0 = random_stiefel(sample.p, q, rng)
        if frame is not None:
            V0 = orthonormalize(frame @ V0.values)
        attempt = minimize_from(V0, sample, cfg, opt)
        LOGGER.debug(
            f"attempt {index}: value={attempt.value:.6g} after {attempt.iterations} "
            f"iterations (converged={attempt.converged})"
        )
        return attempt

    start_time = time.time()
    if opt.threads > 1 and opt.attempts > 1:
        with ThreadPoolExecutor(max_workers=opt.threads) as executor:
            attempts = list(executor.map(run_attempt, range(opt.attempts)))
    else:
        attempts = [run_attempt(index) for index in range(opt.attempts)]

    best_index = 0
    for index, attempt in enumerate(attempts):
        if attempt.value < attempts[best_index].value - _TIE_TOLERANCE:
            best_index = index
    best = attempts[best_index]

    LOGGER.debug(
        f"minimize(n={sample.n}, p={sample.p}, q={q}, m={sample.m}): "
        f"best value {best.value:.6g} (attempt {best_index}), "
        f"took {time.time() - start_time:.2f}s"
    )
    return OptimizationResult(
        V=best.V,
        value=best.value,
        iterations=best.iterations,
        attempt_values=tuple(attempt.value for attempt in attempts),
        converged=best.converged,
        trace=best.trace,
        best_attempt=best_index,
    )

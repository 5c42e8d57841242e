import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy

from ecve.config import add_common_arguments
from ecve.config import load_config_file
from ecve.config import resolve_run_config
from ecve.ensembles import EnsembleKind
from ecve.ensembles import ResponseScaler
from ecve.ensembles import build_ensemble
from ecve.errors import UsageError
from ecve.kernel import bandwidth_rule
from ecve.objective import ObjectiveConfig
from ecve.objective import Sample
from ecve.objective import Weighting
from ecve.objective import gradient_ensemble
from ecve.objective import gradient_fd
from ecve.stiefel import random_stiefel

COMMAND = "gradcheck"
FILENAME = Path(__file__).stem
LOGGER = logging.getLogger(FILENAME)

TOLERANCE = 1e-4
# under this scale the gradient is considered null and the error is absolute
_NULL_SCALE = 1e-10


@dataclasses.dataclass
class GradcheckRunConfig:
    p: int = 5
    q: int = 3
    n: int = 20
    m: int = 4
    seed: int = 0
    weighting: str = Weighting.uniform.value
    constant_response: bool = False
    eps: float = 1e-5
    order_eps: float = 1e-3


@dataclasses.dataclass(frozen=True)
class GradcheckReport:
    analytic_norm: float
    error: float
    relative: bool
    order_ratio: float

    @property
    def passed(self) -> bool:
        return self.error < TOLERANCE


def _gradient_error(
    analytic: numpy.ndarray,
    numeric: numpy.ndarray,
) -> tuple[float, bool]:
    difference = float(numpy.max(numpy.abs(analytic - numeric)))
    scale = float(numpy.max(numpy.abs(numeric)))
    if scale < _NULL_SCALE:
        return difference, False
    return difference / scale, True


def check_gradient(run_config: GradcheckRunConfig) -> GradcheckReport:
    """
    Compare the analytic gradient of the ensemble objective with central finite
    differences on random data.
    """
    p, q, n, m = run_config.p, run_config.q, run_config.n, run_config.m
    if not 1 <= q < p:
        raise UsageError(f"expected 1 <= q < p, got q={q}, p={p}")
    if n < 2 or m < 1:
        raise UsageError(f"expected n >= 2 and m >= 1, got n={n}, m={m}")
    try:
        weighting = Weighting(run_config.weighting)
    except ValueError:
        raise UsageError(f"unknown weighting '{run_config.weighting}'") from None

    data_seed, point_seed = numpy.random.SeedSequence(run_config.seed).spawn(2)
    rng = numpy.random.default_rng(data_seed)
    X = rng.standard_normal((n, p))
    if run_config.constant_response:
        Y = numpy.ones(n)
    else:
        Y = X[:, 0] + 0.5 * X[:, 1] ** 2 + 0.2 * rng.standard_normal(n)

    ensemble = build_ensemble(EnsembleKind.fourier, m, Y)
    sample = Sample.from_ensemble(X, Y, ensemble, ResponseScaler.fit(ensemble.kind, Y))
    cfg = ObjectiveConfig(h=bandwidth_rule(X, q), weighting=weighting)
    V = random_stiefel(p, q, numpy.random.default_rng(point_seed))

    analytic = gradient_ensemble(V, sample, cfg)
    numeric = gradient_fd(V, sample, cfg, run_config.eps)
    error, relative = _gradient_error(analytic, numeric)
    LOGGER.debug(f"h={cfg.h.h:.4g}, |grad|={numpy.linalg.norm(analytic):.4g}")

    coarse, _ = _gradient_error(
        analytic, gradient_fd(V, sample, cfg, run_config.order_eps)
    )
    fine, _ = _gradient_error(
        analytic, gradient_fd(V, sample, cfg, run_config.order_eps / 2.0)
    )
    order_ratio = coarse / fine if fine > 0.0 else float("inf")

    return GradcheckReport(
        analytic_norm=float(numpy.linalg.norm(analytic)),
        error=error,
        relative=relative,
        order_ratio=order_ratio,
    )


def get_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=f"ecve {COMMAND}",
        description=(
            "Check the analytic gradient of the objective against central finite "
            f"differences. Exit status is 0 if the error is under {TOLERANCE}."
        ),
    )
    parser.add_argument("--p", type=int, default=None, help="number of predictors.")
    parser.add_argument("--q", type=int, default=None, help="columns of V.")
    parser.add_argument("--n", type=int, default=None, help="sample size.")
    parser.add_argument("--m", type=int, default=None, help="ensemble size.")
    parser.add_argument(
        "--weighting",
        type=str,
        choices=[weighting.value for weighting in Weighting],
        default=None,
        help="between-slice weighting scheme of the objective.",
    )
    parser.add_argument(
        "--constant-response",
        action="store_true",
        default=None,
        help="use a constant response, for which the gradient must vanish.",
    )
    parser.add_argument(
        "--eps",
        type=float,
        default=None,
        help="finite difference step of the checked error.",
    )
    add_common_arguments(parser, with_threads=False)
    return parser


def execute(argv: list[str] = None) -> int:
    """
    Args:
        argv: list of command line argument for the CLI

    Returns:
        exit status
    """
    cli = get_cli()
    argv = argv if argv is not None else sys.argv[1:]
    parsed = cli.parse_args(argv)
    if parsed.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    run_config = resolve_run_config(
        GradcheckRunConfig(), COMMAND, load_config_file(parsed.config), vars(parsed)
    )
    report = check_gradient(run_config)

    kind = "relative" if report.relative else "absolute"
    print(f"gradient norm: {report.analytic_norm:.3e}")
    print(f"max {kind} error: {report.error:.3e} (eps={run_config.eps:g})")
    print(
        f"error ratio for eps {run_config.order_eps:g} -> {run_config.order_eps / 2:g}: "
        f"{report.order_ratio:.2f} (second order expects ~4)"
    )
    if not report.passed:
        LOGGER.error(f"gradient check failed: {report.error:.3e} >= {TOLERANCE}")
        return 1
    print("gradient check passed")
    return 0

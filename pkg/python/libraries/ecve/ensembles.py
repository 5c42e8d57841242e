"""
Parametric ensembles of response transforms f_t, and the default ensemble size rule.

An ensemble turns the response vector Y into the n x m matrix of transformed
responses f_t(Y) the objective is averaged over.
"""
import dataclasses
import enum
import logging
import math

import numpy

from ecve.errors import InvalidConfigError
from ecve.errors import ResponseDomainError

LOGGER = logging.getLogger(__name__)


class EnsembleKind(enum.Enum):
    identity = "identity"
    fourier = "fourier"
    indicator = "indicator"
    monomial = "monomial"
    boxcox = "boxcox"


# transforms applied to the robustly scaled response
_SCALED_KINDS = (EnsembleKind.fourier, EnsembleKind.monomial, EnsembleKind.boxcox)
# interquartile range of the standard normal
_IQR_TO_SD = 1.3489795003921634


@dataclasses.dataclass(frozen=True)
class ResponseScaler:
    """
    Affine map z = (y - center) / scale + shift_to_positive applied before the transforms.
    """

    center: float = 0.0
    scale: float = 1.0
    shift_to_positive: float | None = None

    def __post_init__(self):
        if not self.scale > 0.0:
            raise InvalidConfigError(f"scale must be positive, got {self.scale}")

    @classmethod
    def fit(cls, kind: EnsembleKind, Y: numpy.ndarray) -> "ResponseScaler":
        """
        Build the scaler an ensemble kind expects from training responses.

        - identity and indicator work on the raw response.
        - fourier and monomial center on the median and divide by the interquartile
          range over 1.349, which is the standard deviation for normal responses.
        - boxcox scales the same way then shifts so the minimum becomes 0.1 * range.

        The scale falls back to the standard deviation, then to 1, when the
        interquartile range is 0.
        """
        Y = numpy.asarray(Y, dtype=numpy.float64)
        if kind not in _SCALED_KINDS:
            return cls()

        lower, center, upper = numpy.quantile(Y, [0.25, 0.5, 0.75])
        scale = float(upper - lower) / _IQR_TO_SD
        if not scale > 0.0:
            sd = float(Y.std())
            scale = sd if sd > 0.0 else 1.0
        center = float(center)
        if kind is not EnsembleKind.boxcox:
            return cls(center=center, scale=scale)

        scaled = (Y - center) / scale
        value_range = float(scaled.max() - scaled.min())
        shift = -float(scaled.min()) + 0.1 * value_range
        return cls(center=center, scale=scale, shift_to_positive=shift)

    def transform(self, Y: numpy.ndarray) -> numpy.ndarray:
        z = (numpy.asarray(Y, dtype=numpy.float64) - self.center) / self.scale
        if self.shift_to_positive is not None:
            z = z + self.shift_to_positive
        return z

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class Ensemble:
    """
    An ordered list of m scalar response transforms.

    Args:
        kind: family of the transforms
        m: number of transforms
        thresholds: indicator only, strictly increasing cut points q_j
        boxcox_exponents: boxcox only, the m-1 power exponents t_j (log is the m-th function)
    """

    kind: EnsembleKind
    m: int
    thresholds: tuple[float, ...] | None = None
    boxcox_exponents: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m < 1:
            raise InvalidConfigError(f"ensemble needs m >= 1, got {self.m}")
        if self.kind is EnsembleKind.identity and self.m != 1:
            raise InvalidConfigError(f"identity ensemble has m = 1, got {self.m}")
        if self.kind is EnsembleKind.fourier and self.m % 2:
            raise InvalidConfigError(f"fourier ensemble needs an even m, got {self.m}")
        if self.kind is EnsembleKind.indicator:
            if self.thresholds is None or len(self.thresholds) != self.m:
                raise InvalidConfigError("indicator ensemble needs m thresholds")
            if numpy.any(numpy.diff(self.thresholds) <= 0):
                raise InvalidConfigError(
                    f"indicator thresholds must be strictly increasing: {self.thresholds}"
                )
        if self.kind is EnsembleKind.boxcox:
            if self.m < 2:
                raise InvalidConfigError(f"boxcox ensemble needs m >= 2, got {self.m}")
            exponents = self.boxcox_exponents
            if exponents is None or len(exponents) != self.m - 1:
                raise InvalidConfigError("boxcox ensemble needs m - 1 exponents")

    def describe(self) -> str:
        return f"{self.kind.value}:{self.m}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "m": self.m,
            "thresholds": list(self.thresholds) if self.thresholds else None,
            "boxcox_exponents": (
                list(self.boxcox_exponents) if self.boxcox_exponents else None
            ),
        }


@dataclasses.dataclass(frozen=True)
class EnsembleSpec:
    """
    User-facing description ``kind[:m]`` where a missing m or ``m=auto`` uses `default_m`.
    """

    kind: EnsembleKind
    m: int | None = None

    @classmethod
    def parse(cls, text: str) -> "EnsembleSpec":
        """
        Parse ``identity | fourier:m | indicator:m | monomial:m | boxcox:m`` where m
        is an integer or ``auto``.
        """
        name, _, size = text.strip().lower().partition(":")
        try:
            kind = EnsembleKind(name)
        except ValueError:
            choices = ", ".join(kind.value for kind in EnsembleKind)
            raise InvalidConfigError(
                f"unknown ensemble '{name}', expected one of: {choices}"
            ) from None

        if kind is EnsembleKind.identity:
            if size not in ("", "auto", "1"):
                raise InvalidConfigError(f"identity ensemble has m = 1, got '{size}'")
            return cls(kind, 1)
        if size in ("", "auto"):
            return cls(kind, None)
        try:
            m = int(size)
        except ValueError:
            raise InvalidConfigError(
                f"invalid ensemble size '{size}' in '{text}'"
            ) from None
        return cls(kind, m)

    def resolve_m(self, n: int) -> int:
        return self.m if self.m is not None else default_m(n)

    def __str__(self) -> str:
        if self.kind is EnsembleKind.identity:
            return self.kind.value
        return f"{self.kind.value}:{self.m if self.m is not None else 'auto'}"


def default_m(n: int) -> int:
    """
    Default ensemble size: ceil(log n), bumped to the next even integer.
    """
    if n < 2:
        raise InvalidConfigError(f"default_m needs n >= 2, got {n}")
    size = math.ceil(math.log(n))
    return size if size % 2 == 0 else size + 1


def boxcox_exponents(m: int) -> tuple[float, ...]:
    """
    Exponent grid t_j = 0.1 + 2 (j - 1) / (m - 1) for j = 1 .. m - 1.
    """
    return tuple(0.1 + 2.0 * (j - 1) / (m - 1) for j in range(1, m))


def build_ensemble(kind: EnsembleKind, m: int, Y: numpy.ndarray) -> Ensemble:
    """
    Build the ensemble of the given kind, fitting its data-dependent parts on Y.

    Indicator thresholds are the j/(m+1) empirical quantiles of Y (linear
    interpolation of order statistics). Duplicated quantiles, which happen on
    responses with many ties, are dropped and m shrinks accordingly.

    Args:
        kind: ensemble family
        m: requested number of functions
        Y: training responses
    """
    Y = numpy.asarray(Y, dtype=numpy.float64)
    if m < 1:
        raise InvalidConfigError(f"ensemble needs m >= 1, got {m}")

    if kind is EnsembleKind.identity:
        return Ensemble(kind, 1)

    if kind is EnsembleKind.fourier:
        if m % 2:
            raise InvalidConfigError(f"fourier ensemble needs an even m, got {m}")
        return Ensemble(kind, m)

    if kind is EnsembleKind.monomial:
        return Ensemble(kind, m)

    if kind is EnsembleKind.boxcox:
        if m < 2:
            raise InvalidConfigError(f"boxcox ensemble needs m >= 2, got {m}")
        return Ensemble(kind, m, boxcox_exponents=boxcox_exponents(m))

    levels = numpy.arange(1, m + 1) / (m + 1)
    thresholds = numpy.quantile(Y, levels, method="linear")
    unique = numpy.unique(thresholds)
    if len(unique) < len(thresholds):
        LOGGER.warning(
            f"{len(thresholds) - len(unique)} duplicated indicator thresholds dropped, "
            f"using m={len(unique)} instead of {m}"
        )
    return Ensemble(kind, len(unique), thresholds=tuple(float(t) for t in unique))


def apply_ensemble(
    ensemble: Ensemble,
    scaler: ResponseScaler,
    Y: numpy.ndarray,
) -> numpy.ndarray:
    """
    Return the n x m matrix whose column j is f_{t_j} applied to the scaled responses.
    """
    z = scaler.transform(Y)
    kind = ensemble.kind

    if kind is EnsembleKind.identity:
        return z[:, numpy.newaxis].copy()

    if kind is EnsembleKind.indicator:
        thresholds = numpy.asarray(ensemble.thresholds)
        above = z[:, numpy.newaxis] >= thresholds[numpy.newaxis, :]
        return above.astype(numpy.float64)

    if kind is EnsembleKind.fourier:
        frequencies = numpy.arange(1, ensemble.m // 2 + 1)
        phases = z[:, numpy.newaxis] * frequencies[numpy.newaxis, :]
        return numpy.hstack([numpy.sin(phases), numpy.cos(phases)])

    if kind is EnsembleKind.monomial:
        powers = numpy.arange(1, ensemble.m + 1)
        return z[:, numpy.newaxis] ** powers[numpy.newaxis, :]

    if numpy.any(z <= 0.0):
        raise ResponseDomainError(
            f"boxcox transforms need positive shifted responses, got min {z.min()}"
        )
    exponents = numpy.asarray(ensemble.boxcox_exponents)
    powered = (z[:, numpy.newaxis] ** exponents[numpy.newaxis, :] - 1.0) / exponents
    return numpy.hstack([powered, numpy.log(z)[:, numpy.newaxis]])

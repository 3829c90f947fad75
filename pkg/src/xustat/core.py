"""Shared domain types, validation errors, and the top-q kernel abstraction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np


class TailInferenceError(Exception):
    """Base class for every error raised by this package."""


class TooFewObservations(TailInferenceError):
    pass


class NonFiniteInput(TailInferenceError):
    pass


class DegenerateSpacing(TailInferenceError):
    """A required spacing between order statistics is zero or underflows."""


class InstanceTooLarge(TailInferenceError):
    pass


class BlockSizeOutOfRange(TailInferenceError):
    pass


class ThresholdOutOfRange(TailInferenceError):
    pass


class ArgumentOutOfRange(TailInferenceError):
    pass


class NonPositiveArgument(TailInferenceError):
    pass


@dataclass(frozen=True)
class SortedSample:
    """Observations sorted in descending order; values[0] is the sample maximum.

    The array is made read-only on construction, so instances are immutable
    and safe to share across threads.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise TooFewObservations(f"need at least 3 observations, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput("sample contains NaN or infinite values")
        if np.any(np.diff(v) > 0):
            raise ArgumentOutOfRange("values must be sorted in descending order")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)


def sort_sample(raw: Sequence[float]) -> SortedSample:
    """Validate and sort raw observations into descending order.

    Ties are preserved; the input is not modified.
    """
    v = np.asarray(raw, dtype=float)
    if v.ndim != 1 or v.size < 3:
        raise TooFewObservations(f"need at least 3 observations, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("input contains NaN or infinite values")
    return SortedSample(np.sort(v, kind="stable")[::-1])


@dataclass(frozen=True)
class Evi:
    """Extreme value index: the shape parameter governing tail heaviness."""

    gamma: float

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise NonFiniteInput("extreme value index must be finite")


@dataclass(frozen=True)
class TopQKernel:
    """Symmetric location-scale invariant kernel of the top q order statistics.

    ``eval`` maps a strictly decreasing length-q vector to a real.  A
    non-constant location-scale invariant kernel needs at least three
    arguments, hence q >= 3.  ``g_prime`` is the derivative of the scalar
    representation g with K(y) = g(ln((y1-y2)/(y2-y3))) when one exists, and
    ``partials`` are the q first-order partial derivatives.
    """

    q: int
    eval: Callable[[np.ndarray], float]
    g_prime: Optional[Callable[[float], float]] = None
    partials: Optional[Tuple[Callable, ...]] = None

    def __post_init__(self):
        if self.q < 3:
            raise ArgumentOutOfRange("a location-scale invariant kernel needs q >= 3")
        if self.partials is not None and len(self.partials) != self.q:
            raise ArgumentOutOfRange("need one partial derivative per argument")


@dataclass(frozen=True)
class EstimateRecord:
    """One point estimate of the extreme value index.

    ``m_or_k`` is the block size m for the extreme U-Pickands estimator and
    the exceedance count k for GP maximum likelihood.
    """

    estimator: str  # "ExtremePickands" or "GpMl"
    m_or_k: int
    gamma_hat: float
    stderr: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    def __post_init__(self):
        if self.estimator not in ("ExtremePickands", "GpMl"):
            raise ArgumentOutOfRange(f"unknown estimator {self.estimator!r}")
        if self.m_or_k < 1:
            raise ArgumentOutOfRange("m_or_k must be positive")
        if self.stderr is not None and self.stderr < 0:
            raise ArgumentOutOfRange("stderr must be nonnegative")
        if self.ci_low is not None and self.ci_high is not None:
            if math.isfinite(self.gamma_hat) and not (
                self.ci_low <= self.gamma_hat <= self.ci_high
            ):
                raise ArgumentOutOfRange("confidence interval must contain the estimate")


def pickands_g(t):
    """Scalar representation of the Pickands kernel: g(t) = 2t - ln(1 + e^t)."""
    return 2.0 * t - np.logaddexp(0.0, t)


def pickands_g_prime(t):
    """Derivative g'(t) = 2 - e^t/(1 + e^t); bounded by 2 in absolute value."""
    t = np.asarray(t, dtype=float)
    out = 2.0 - 1.0 / (1.0 + np.exp(-t))
    return float(out) if out.ndim == 0 else out


def pickands_kernel(y1: float, y2: float, y3: float) -> float:
    """ln((y1-y2)^2 / ((y1-y3)(y2-y3))) for a strictly decreasing triple.

    Computed from log-spacings: t = ln(y1-y2) - ln(y2-y3) and then
    g(t) = 2t - softplus(t), which stays finite for extreme spacing ratios
    where the raw ratio would overflow.
    """
    d12 = y1 - y2
    d23 = y2 - y3
    if not (math.isfinite(d12) and math.isfinite(d23)) or d12 <= 0.0 or d23 <= 0.0:
        raise DegenerateSpacing(f"spacings must be positive, got {d12} and {d23}")
    t = math.log(d12) - math.log(d23)
    return float(pickands_g(t))


def pickands_kernel_vec(y1, y2, y3):
    """Vectorized Pickands kernel over arrays of strictly decreasing triples."""
    t = np.log(y1 - y2) - np.log(y2 - y3)
    return pickands_g(t)


def pickands_partials(x1, x2, x3):
    """First-order partial derivatives of the Pickands kernel at (x1, x2, x3).

    K1 = g'(t)/(x1-x2), K3 = g'(t)/(x2-x3), K2 = -K1 - K3, with
    t = ln((x1-x2)/(x2-x3)).
    """
    d12 = np.asarray(x1) - np.asarray(x2)
    d23 = np.asarray(x2) - np.asarray(x3)
    gp = pickands_g_prime(np.log(d12) - np.log(d23))
    k1 = gp / d12
    k3 = gp / d23
    return k1, -k1 - k3, k3


PICKANDS_KERNEL = TopQKernel(
    q=3,
    eval=lambda y: pickands_kernel(y[0], y[1], y[2]),
    g_prime=pickands_g_prime,
    partials=(
        lambda y: pickands_partials(y[0], y[1], y[2])[0],
        lambda y: pickands_partials(y[0], y[1], y[2])[1],
        lambda y: pickands_partials(y[0], y[1], y[2])[2],
    ),
)

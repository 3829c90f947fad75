"""U-statistic evaluation engines.

Four routes to the same quantity:

* :func:`brute_force_ustat` enumerates every size-m subset (the oracle),
* :func:`topq_weighted_ustat` sums kernel values over rank tuples weighted by
  the number of subsets whose top q lands on those ranks,
* :func:`pickands_ustat` evaluates the explicit order-statistic formula for
  the Pickands kernel with recursively computed log-space weights,
* :func:`pickands_ustat_batch` is the same formula vectorized over many
  samples at once.

The estimator weights carry their binomial ratios in log space through a
recursive update, so block sizes up to n = 10^4 and beyond evaluate without
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .core import (
    BlockSizeOutOfRange,
    DegenerateSpacing,
    InstanceTooLarge,
    SortedSample,
    TopQKernel,
)

_BRUTE_FORCE_MAX_N = 20


@dataclass(frozen=True)
class PickandsWeights:
    """Coefficients w_j of the log-spacing sums, for j = 2 .. n-m+3.

    w_j = C(n-j, m-3)/C(n,m) * (2(n-j+1)/(m-2) - j).  Location-scale
    invariance forces sum_j w_j (j-1) = 0.
    """

    n: int
    m: int
    j: np.ndarray
    w: np.ndarray

    def zero_sum_residual(self) -> float:
        """Relative residual of sum_j w_j (j-1); zero up to rounding."""
        terms = self.w * (self.j - 1)
        scale = float(np.abs(terms).sum()) or 1.0
        return float(math.fsum(terms)) / scale


def pickands_weights(n: int, m: int) -> PickandsWeights:
    """Weights of the explicit Pickands U-statistic formula.

    The binomial ratio starts at m(m-1)(m-2)/(n(n-1)(n-m+1)) and follows the
    recursion ratio_j = ratio_{j-1} * (n-j-m+4)/(n-j+1), accumulated as a sum
    of logs; the sign-carrying block factor is applied separately.
    """
    if not 3 <= m <= n:
        raise BlockSizeOutOfRange(f"need 3 <= m <= n, got m={m}, n={n}")
    js = np.arange(2, n - m + 4)
    log_ratio = np.empty(js.size)
    log_ratio[0] = (
        math.log(m)
        + math.log(m - 1)
        + math.log(m - 2)
        - math.log(n)
        - math.log(n - 1)
        - math.log(n - m + 1)
    )
    if js.size > 1:
        j_tail = js[1:]
        steps = np.log(n - j_tail - m + 4.0) - np.log(n - j_tail + 1.0)
        log_ratio[1:] = log_ratio[0] + np.cumsum(steps)
    factor = 2.0 * (n - js + 1) / (m - 2) - js
    return PickandsWeights(n=n, m=m, j=js, w=np.exp(log_ratio) * factor)


@dataclass(frozen=True)
class OverlapPmf:
    """Hypergeometric overlap law of two size-m subsets of [n].

    p_l = C(m,l) C(n-m, m-l) / C(n,m) over l = 0..m; mean m^2/n.
    """

    n: int
    m: int
    p: np.ndarray

    def mean(self) -> float:
        return float(np.dot(np.arange(self.m + 1), self.p))


def overlap_pmf(n: int, m: int) -> OverlapPmf:
    if not 1 <= m <= n:
        raise BlockSizeOutOfRange(f"need 1 <= m <= n, got m={m}, n={n}")
    lo = max(0, 2 * m - n)
    # anchor near the mode (where the mass sits) with an exact integer
    # binomial ratio; lgamma alone has ~1e-12 absolute error at n ~ 2000,
    # which would shift the entire pmf
    anchor_l = min(max((m * m) // n, lo), m)
    anchor = float(
        Fraction(
            math.comb(m, anchor_l) * math.comb(n - m, m - anchor_l),
            math.comb(n, m),
        )
    )
    # log-ratio recursion p_{l+1}/p_l = (m-l)^2 / ((l+1)(n-2m+l+1))
    sup = np.arange(lo, m + 1)
    steps = np.zeros(0)
    if sup.size > 1:
        l = sup[:-1].astype(float)
        steps = 2.0 * np.log(m - l) - np.log(l + 1.0) - np.log(n - 2 * m + l + 1.0)
    rel = np.zeros(sup.size)
    idx = anchor_l - lo
    rel[idx + 1 :] = np.cumsum(steps[idx:])
    if idx > 0:
        rel[:idx] = -np.cumsum(steps[:idx][::-1])[::-1]
    p = np.zeros(m + 1)
    p[lo:] = anchor * np.exp(rel)
    return OverlapPmf(n=n, m=m, p=p)


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def brute_force_ustat(sample: SortedSample, m: int, kernel: TopQKernel) -> float:
    """Exact all-subsets average; the oracle the fast formulas are checked against.

    Guarded at n <= 20: C(20, 10) subsets is the practical ceiling.
    """
    n = sample.n
    if n > _BRUTE_FORCE_MAX_N:
        raise InstanceTooLarge(f"brute force is limited to n <= {_BRUTE_FORCE_MAX_N}")
    if not kernel.q <= m <= n:
        raise BlockSizeOutOfRange(f"need q={kernel.q} <= m <= n, got m={m}, n={n}")
    v = sample.values
    q = kernel.q
    # values are descending, so the first q indices of a subset are its top q
    terms = [kernel.eval(v[list(idx[:q])]) for idx in combinations(range(n), m)]
    return math.fsum(terms) / len(terms)


def topq_weighted_ustat(
    sample: SortedSample, m: int, kernel: TopQKernel, max_n: int = 2000
) -> float:
    """Rank-tuple evaluation of the same average.

    A size-m subset has its top q at ranks i_1 < ... < i_q exactly when it
    contains those q elements and its remaining m-q elements come from the
    n - i_q lower ranks, so the tuple weight is C(n-i_q, m-q)/C(n,m).
    """
    n = sample.n
    if n > max_n:
        raise InstanceTooLarge(f"rank-tuple evaluation limited to n <= {max_n}")
    q = kernel.q
    if not q <= m <= n:
        raise BlockSizeOutOfRange(f"need q={q} <= m <= n, got m={m}, n={n}")
    v = sample.values
    log_cnm = _log_binom(n, m)
    # i_q can be at most n - (m - q): the subset needs m-q elements below it
    log_tail = np.full(n + 1, -np.inf)
    iq_max = n - (m - q)
    iq = np.arange(q, iq_max + 1)
    log_tail[iq] = _log_binom(n - iq, m - q) - log_cnm
    terms = []
    for ranks in combinations(range(1, iq_max + 1), q):
        w = log_tail[ranks[-1]]
        if w == -np.inf:
            continue
        terms.append(math.exp(w) * kernel.eval(v[np.array(ranks) - 1]))
    return math.fsum(terms)


def _check_strictly_decreasing(v: np.ndarray, upto: int) -> None:
    """Spacings among the first ``upto`` order statistics must be positive."""
    d = np.diff(v[:upto])
    if d.size and np.max(d) >= 0.0:
        i = int(np.argmax(d >= 0.0))
        raise DegenerateSpacing(
            f"tie among order statistics {i + 1} and {i + 2} (1 = largest)"
        )


def log_spacing_sums(values: np.ndarray, j_hi: int) -> np.ndarray:
    """s_j = sum_{i=1}^{j-1} ln(X_(i) - X_(j)) for j = 2..j_hi, X_(i) the i-th largest.

    Returned array is indexed by j-2.  Inner sums use numpy's pairwise
    reduction; a zero spacing anywhere in range raises DegenerateSpacing.
    """
    v = np.asarray(values, dtype=float)
    if not 2 <= j_hi <= v.size:
        raise BlockSizeOutOfRange(f"need 2 <= j_hi <= n, got {j_hi}")
    _check_strictly_decreasing(v, j_hi)
    s = np.empty(j_hi - 1)
    block = 512
    for a in range(2, j_hi + 1, block):
        b = min(a + block - 1, j_hi)
        cols = np.arange(a, b + 1)
        diff = v[: b - 1, None] - v[None, cols - 1]
        mask = np.arange(b - 1)[:, None] < (cols - 1)[None, :]
        logs = np.zeros_like(diff)
        np.log(diff, out=logs, where=mask)
        s[a - 2 : b - 1] = logs.sum(axis=0)
    return s


def pickands_ustat(
    sample: SortedSample, m: int, truncation: Optional[float] = None
) -> float:
    """Extreme U-Pickands estimate of the extreme value index at block size m.

    Exact when ``truncation`` is None; otherwise trailing weight terms are
    dropped once their conservative tail bound falls below ``truncation``
    times the accumulated magnitude (see :func:`pickands_ustat_truncated`).
    """
    if truncation is None:
        n = sample.n
        weights = pickands_weights(n, m)
        s = log_spacing_sums(sample.values, n - m + 3)
        return float(math.fsum(weights.w * s))
    return pickands_ustat_truncated(sample, m, truncation).value


@dataclass(frozen=True)
class TruncatedEstimate:
    """Truncated evaluation with its reported error bound."""

    value: float
    error_bound: float
    terms_used: int
    terms_total: int


def pickands_ustat_truncated(
    sample: SortedSample, m: int, truncation: float
) -> TruncatedEstimate:
    """Drop trailing j-terms whose tail bound is negligible.

    |s_j| <= (j-1) * L with L a bound on |ln(spacing)| from the extreme
    spacings, so the discarded tail is bounded by L * sum_{j>J} |w_j| (j-1).
    J is the first index where that bound drops below ``truncation`` times
    the same magnitude proxy accumulated over the kept head.
    """
    if truncation <= 0:
        raise BlockSizeOutOfRange("truncation tolerance must be positive")
    n = sample.n
    weights = pickands_weights(n, m)
    j_hi = n - m + 3
    _check_strictly_decreasing(sample.values, j_hi)
    v = sample.values
    adj = -np.diff(v[:j_hi])
    spread = v[0] - v[j_hi - 1]
    log_bound = max(abs(math.log(adj.min())), abs(math.log(spread)), 1e-300)

    mag = np.abs(weights.w) * (weights.j - 1) * log_bound
    tail = np.cumsum(mag[::-1])[::-1]
    head = np.cumsum(mag)
    keep = tail[1:] > truncation * head[:-1]  # keep[idx]: term idx+1 still needed
    n_used = int(np.argmin(keep)) + 1 if not keep.all() else weights.w.size
    bound = float(tail[n_used]) if n_used < weights.w.size else 0.0

    s = log_spacing_sums(v, int(weights.j[n_used - 1]))
    value = float(math.fsum(weights.w[:n_used] * s[: int(weights.j[n_used - 1]) - 1]))
    return TruncatedEstimate(
        value=value,
        error_bound=bound,
        terms_used=n_used,
        terms_total=int(weights.w.size),
    )


def pickands_ustat_grid(sample: SortedSample, m_grid: Sequence[int]) -> Dict[int, float]:
    """Estimates for several block sizes sharing one pass of inner sums.

    The inner log-spacing sums do not depend on m, so a whole trajectory
    costs one O(n^2) sweep plus an O(n) weighted sum per block size.
    Block sizes whose index range hits a tie come back as NaN.
    """
    n = sample.n
    ms = list(m_grid)
    for m in ms:
        if not 3 <= m <= n:
            raise BlockSizeOutOfRange(f"block size {m} outside [3, {n}]")
    j_need = n - min(ms) + 3
    v = sample.values
    d = np.diff(v[:j_need])
    tie = np.nonzero(d >= 0.0)[0]
    j_ok = j_need if tie.size == 0 else int(tie[0]) + 1
    s = log_spacing_sums(v, j_ok) if j_ok >= 2 else np.empty(0)
    out = {}
    for m in ms:
        j_hi = n - m + 3
        if j_hi > j_ok:
            out[m] = float("nan")
        else:
            w = pickands_weights(n, m).w
            out[m] = float(math.fsum(w * s[: j_hi - 1]))
    return out


def pickands_ustat_batch(values: np.ndarray, m: int) -> np.ndarray:
    """Row-wise Pickands estimates for a matrix of descending-sorted samples.

    Rows containing a tie within the touched index range yield NaN instead
    of raising, so large Monte Carlo sweeps can account for failures.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise BlockSizeOutOfRange("expected a matrix of samples")
    nrep, n = v.shape
    if not 3 <= m <= n:
        raise BlockSizeOutOfRange(f"need 3 <= m <= n, got m={m}, n={n}")
    j_hi = n - m + 3
    ok = np.all(np.diff(v[:, :j_hi], axis=1) < 0.0, axis=1)
    out = np.full(nrep, np.nan)
    if not ok.any():
        return out
    w = pickands_weights(n, m).w
    vv = v[ok]
    acc = np.zeros(vv.shape[0])
    for j in range(2, j_hi + 1):
        acc += w[j - 2] * np.log(vv[:, : j - 1] - vv[:, j - 1 : j]).sum(axis=1)
    out[ok] = acc
    return out

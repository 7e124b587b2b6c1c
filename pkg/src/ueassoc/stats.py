"""Two-sample Kolmogorov-Smirnov test and series summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SERIES_TOL = 1e-12
MAX_TERMS = 10_000
# below this lambda the alternating series converges slowly and its truncation
# steps break monotonicity; the equivalent theta form is used instead
THETA_SWITCH = 1.18


@dataclass(frozen=True)
class KsResult:
    d_stat: float
    p_value: float
    n1: int
    n2: int


def _theta_form(lam: float) -> float:
    # Q = 1 - sqrt(2 pi)/lam * sum exp(-(2j-1)^2 pi^2 / (8 lam^2)); every term is positive
    terms = []
    for j in range(1, MAX_TERMS + 1):
        term = math.exp(-((2 * j - 1) ** 2) * math.pi ** 2 / (8.0 * lam * lam))
        terms.append(term)
        if term < SERIES_TOL * 1e-6:
            break
    return 1.0 - math.sqrt(2.0 * math.pi) / lam * math.fsum(terms)


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function ``2 * sum (-1)^(j-1) exp(-2 j^2 lam^2)``.

    The alternating series is summed until a term drops below ``SERIES_TOL``.
    For ``lam < THETA_SWITCH`` the same function is evaluated through its
    Jacobi-transformed form, which needs only a handful of positive terms.
    """
    if lam <= 0.0:
        return 1.0
    if lam < THETA_SWITCH:
        return min(1.0, max(0.0, _theta_form(lam)))
    terms = []
    sign = 1.0
    for j in range(1, MAX_TERMS + 1):
        term = math.exp(-2.0 * j * j * lam * lam)
        terms.append(sign * term)
        if term < SERIES_TOL:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * math.fsum(terms)))


def ks_two_sample(a, b) -> KsResult:
    """Two-sided two-sample KS test with the asymptotic p-value.

    Empirical CDFs are compared at every point of the pooled sample, each CDF
    counting all values ``<=`` the point, so ties advance both CDFs together.
    """
    x = np.sort(np.asarray(a, dtype=np.float64).ravel())
    y = np.sort(np.asarray(b, dtype=np.float64).ravel())
    n1, n2 = x.size, y.size
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, pooled, side="right") / n1
    cdf_y = np.searchsorted(y, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf_x - cdf_y)))
    en = math.sqrt(n1 * n2 / (n1 + n2))
    p = kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
    return KsResult(d, p, n1, n2)


@dataclass(frozen=True)
class Summary:
    mean: float
    min: float
    max: float
    count: int


def summarize(series) -> Summary:
    values = [float(v) for v in series]
    if not values:
        raise ValueError("cannot summarize an empty series")
    return Summary(math.fsum(values) / len(values), min(values), max(values), len(values))

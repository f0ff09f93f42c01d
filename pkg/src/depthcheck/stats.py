"""Small-sample statistics for per-frame series: normality and mean shift.

The normality statistic is the classic W: the squared correlation between
the sorted sample and a set of expected normal order statistics, with the
two outermost weights polynomial-corrected for sample size. The mean-shift
test is the two-sample pooled-variance t with a two-sided p-value from the
regularized incomplete beta function. Both are self-contained; only the
standard library's normal distribution is used underneath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DegenerateSampleError, SampleTooSmallError

_ND = NormalDist()

# weight corrections and p-value polynomials (highest power first)
_C1 = (-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
_C3 = (-0.0006714, 0.025054, -0.39978, 0.544)
_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_C6 = (0.0030302, -0.082676, -0.4803)
_G = (0.459, -2.273)
_PI6 = 1.909859
_STQR = 1.047198

MAX_EXACT_N = 5000


@dataclass(frozen=True)
class TestResult:
    """Outcome of a statistical test: the statistic, its p-value, sample sizes."""

    statistic: float
    p_value: float
    n: tuple[int, ...]


def _poly(coeffs: tuple[float, ...], v: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * v + c
    return acc


def _normality_weights(n: int) -> np.ndarray:
    if n == 3:
        r = math.sqrt(0.5)
        return np.array([-r, 0.0, r])
    m = np.array([_ND.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    summ2 = float(m @ m)
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a = m.copy()
    a_top = _poly(_C1, rsn) + m[-1] / ssumm2
    if n > 5:
        a_next = _poly(_C2, rsn) + m[-2] / ssumm2
        fac = math.sqrt(
            (summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2)
            / (1 - 2 * a_top**2 - 2 * a_next**2)
        )
        a[2:-2] = m[2:-2] / fac
        a[-2], a[1] = a_next, -a_next
    else:
        fac = math.sqrt((summ2 - 2 * m[-1] ** 2) / (1 - 2 * a_top**2))
        a[1:-1] = m[1:-1] / fac
    a[-1], a[0] = a_top, -a_top
    return a


def shapiro_wilk(sample: "np.ndarray | list[float]") -> TestResult:
    """Test a sample against normality; higher W means more normal.

    Samples beyond 5000 points are thinned with a fixed stride first (the
    approximation degrades there and the series this package feeds in are
    far shorter anyway).

    Raises:
        SampleTooSmallError: fewer than 3 observations.
        DegenerateSampleError: all observations identical.
    """
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size < 3:
        raise SampleTooSmallError(f"normality test needs >= 3 points, got {x.size}")
    if x.size > MAX_EXACT_N:
        stride = -(-x.size // MAX_EXACT_N)
        x = x[::stride]
    n = int(x.size)
    x = np.sort(x)
    if x[-1] - x[0] == 0:
        raise DegenerateSampleError("normality test on a constant sample")

    a = _normality_weights(n)
    centered = x - x.mean()
    w = float((a @ x) ** 2 / (centered @ centered))
    w = min(w, 1.0)

    if n == 3:
        p = _PI6 * (math.asin(math.sqrt(w)) - _STQR)
        return TestResult(w, min(max(p, 0.0), 1.0), (n,))
    w1 = 1.0 - w
    if w1 <= 0.0:
        return TestResult(w, 1.0, (n,))
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_G, float(n))
        if y >= gamma:
            return TestResult(w, 1e-19, (n,))
        y = -math.log(gamma - y)
        mu = _poly(_C3, float(n))
        sigma = math.exp(_poly(_C4, float(n)))
    else:
        ln_n = math.log(n)
        mu = _poly(_C5, ln_n)
        sigma = math.exp(_poly(_C6, ln_n))
    p = 1.0 - _ND.cdf((y - mu) / sigma)
    return TestResult(w, min(max(p, 0.0), 1.0), (n,))


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's continued fraction for the incomplete beta integral
    max_iter, eps, tiny = 300, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_test(sample_a, sample_b, pooled: bool = True) -> TestResult:
    """Two-sample t-test for a mean shift; two-sided p-value.

    The default pools the variances (classic equal-variance form); pass
    pooled=False for the unequal-variance variant with its adjusted
    degrees of freedom.

    Raises:
        SampleTooSmallError: either sample has fewer than 2 observations.
        DegenerateSampleError: both samples constant with different means.
    """
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    na, nb = int(a.size), int(b.size)
    if na < 2 or nb < 2:
        raise SampleTooSmallError(f"t-test needs >= 2 points per sample, got {na} and {nb}")
    ma, mb = float(a.mean()), float(b.mean())
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if pooled:
        df = float(na + nb - 2)
        pooled_var = ((na - 1) * va + (nb - 1) * vb) / df
        denom = math.sqrt(pooled_var * (1.0 / na + 1.0 / nb))
    else:
        se2 = va / na + vb / nb
        if se2 > 0:
            df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
        else:
            df = float(na + nb - 2)
        denom = math.sqrt(se2)
    if denom == 0.0:
        if ma == mb:
            return TestResult(0.0, 1.0, (na, nb))
        raise DegenerateSampleError("t-test on constant samples with different means")
    t = (ma - mb) / denom
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return TestResult(t, min(max(p, 0.0), 1.0), (na, nb))

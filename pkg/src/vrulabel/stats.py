"""Student and Welch two-sample t-tests on top of a regularized incomplete beta."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

from .errors import InputError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"betainc argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, dof: float) -> float:
    """P(|T| >= |t|) for Student's t with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return min(1.0, max(0.0, betainc(0.5 * dof, 0.5, dof / (dof + t * t))))


class TTestResult(NamedTuple):
    t_stat: float
    dof: float
    p_two_sided: float
    significant: bool


def _mean_var(xs: Sequence[float], name: str) -> tuple[int, float, float]:
    n = len(xs)
    if n < 2:
        raise InputError(f"{name} needs at least 2 values, got {n}")
    m = math.fsum(xs) / n
    v = math.fsum((x - m) ** 2 for x in xs) / (n - 1)
    return n, m, v


def t_test_unpaired(sample_a: Sequence[float], sample_b: Sequence[float], alpha: float = 0.05,
                    welch: bool = False) -> TTestResult:
    """Two-sided unpaired t-test; pooled variance unless ``welch`` is set."""
    na, ma, va = _mean_var(list(sample_a), "sample_a")
    nb, mb, vb = _mean_var(list(sample_b), "sample_b")
    if welch:
        sa, sb = va / na, vb / nb
        se2 = sa + sb
        if se2 <= 0:
            raise InputError("sample_a and sample_b both have zero variance")
        dof = se2 * se2 / ((sa * sa / (na - 1) if sa else 0.0) + (sb * sb / (nb - 1) if sb else 0.0))
    else:
        dof = na + nb - 2
        pooled = ((na - 1) * va + (nb - 1) * vb) / dof
        if pooled <= 0:
            raise InputError("sample_a and sample_b have zero pooled variance")
        se2 = pooled * (1.0 / na + 1.0 / nb)
    t = (ma - mb) / math.sqrt(se2)
    p = t_sf_two_sided(t, dof)
    return TTestResult(t, dof, p, p < alpha)

"""Welch's unequal-variance t-test with a self-contained t distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from freqplan.errors import ContractError


def _betacf(a: float, b: float, x: float, max_iter: int = 500, tol: float = 1e-15) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ContractError("betainc_reg needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class WelchResult:
    t: float
    p: float
    df: float
    degenerate: bool = False

    def __iter__(self):
        yield self.t
        yield self.p


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    m = math.fsum(xs) / n
    return m, math.fsum((x - m) ** 2 for x in xs) / (n - 1)


def welch_t_test(xs: Sequence[float], ys: Sequence[float]) -> WelchResult:
    """Two-sided Welch test of equal means. Unpacks as ``t, p``.

    With zero variance in both samples the test is degenerate: p = 1 when the
    means agree, else p = 0 with ``degenerate=True``.
    """
    xs, ys = [float(x) for x in xs], [float(y) for y in ys]
    if len(xs) < 2 or len(ys) < 2:
        raise ContractError("welch_t_test needs at least two samples on each side")
    mx, vx = _mean_var(xs)
    my, vy = _mean_var(ys)
    sx, sy = vx / len(xs), vy / len(ys)
    se2 = sx + sy
    if se2 == 0.0:
        if mx == my:
            return WelchResult(0.0, 1.0, float("nan"), degenerate=True)
        return WelchResult(math.copysign(math.inf, mx - my), 0.0, float("nan"), degenerate=True)
    t = (mx - my) / math.sqrt(se2)
    df = se2 ** 2 / ((sx ** 2 / (len(xs) - 1) if sx else 0.0) + (sy ** 2 / (len(ys) - 1) if sy else 0.0))
    return WelchResult(t, t_two_sided_p(t, df), df)

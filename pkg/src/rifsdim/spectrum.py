"""Dimension, local-dimension range and multifractal spectrum under USSC.

All transcendental work is done in a private mpmath context; exact inputs
are converted once per call.  Root finding is bisection throughout.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Sequence

import mpmath

from .errors import BracketFailure, BudgetExceeded, FlatSegment, OutOfRange
from .model import Rifs, validate

DEFAULT_DIGITS = 100
RESIDUAL_TOL = 1e-12
TIE_TOL = 1e-12
DEFAULT_ALPHA_CAP = 1_000_000


def _context(digits: int) -> mpmath.MPContext:
    ctx = mpmath.MPContext()
    ctx.dps = digits
    return ctx


class _Logs:
    """Per-system lists of (log p, log r) at the requested precision."""

    def __init__(self, rifs: Rifs, digits: int, theta=None):
        self.ctx = ctx = _context(digits)
        theta = rifs.theta if theta is None else theta
        self.theta = [ctx.mpf(t.numerator) / t.denominator for t in theta]
        self.terms = []
        for s in rifs.systems:
            row = []
            for mp, p in zip(s.maps, s.probs):
                row.append((ctx.log(ctx.mpf(p.numerator) / p.denominator), ctx.log(mp.ratio.to_mpf(ctx))))
            self.terms.append(row)

    def pressure(self, q, b):
        """sum_j theta_j log sum_k p^q r^b; strictly decreasing in b."""
        ctx = self.ctx
        total = ctx.mpf(0)
        for th, row in zip(self.theta, self.terms):
            total += th * ctx.log(ctx.fsum(ctx.exp(q * lp + b * lr) for lp, lr in row))
        return total

    def slope(self, q, b):
        """beta'(q) from implicit differentiation of pressure(q, beta(q)) = 0."""
        ctx = self.ctx
        num = den = ctx.mpf(0)
        for th, row in zip(self.theta, self.terms):
            w = [ctx.exp(q * lp + b * lr) for lp, lr in row]
            d = ctx.fsum(w)
            num += th * ctx.fsum(wi * lp for wi, (lp, _) in zip(w, row)) / d
            den += th * ctx.fsum(wi * lr for wi, (_, lr) in zip(w, row)) / d
        return -num / den

    def solve(self, q):
        """beta(q) by bisection; returns (beta, residual)."""
        ctx = self.ctx
        q = ctx.mpf(q)
        lo, hi = ctx.mpf(-1), ctx.mpf(1)
        for _ in range(400):
            if self.pressure(q, lo) > 0:
                break
            lo *= 2
        else:
            raise BracketFailure(f"no lower bracket for beta at q={q}")
        for _ in range(400):
            if self.pressure(q, hi) < 0:
                break
            hi *= 2
        else:
            raise BracketFailure(f"no upper bracket for beta at q={q}")
        # 1e-30 is far inside the residual tolerance and saves two thirds of the steps
        eps = max(ctx.mpf(10) ** -30, ctx.mpf(2) ** (-(ctx.prec - 8)))
        while hi - lo > eps * max(1, abs(lo), abs(hi)):
            mid = (lo + hi) / 2
            v = self.pressure(q, mid)
            if v == 0:
                lo = hi = mid
                break
            if v > 0:
                lo = mid
            else:
                hi = mid
        b = (lo + hi) / 2
        res = abs(self.pressure(q, b))
        if res > RESIDUAL_TOL:
            raise BracketFailure(f"residual {float(res):.3g} above tolerance at q={q}")
        return b, res


def dimension_ussc(rifs: Rifs, digits: int = DEFAULT_DIGITS) -> float:
    """Unique s with sum_j theta_j log sum_k r_{j,k}^s = 0."""
    rep = validate(rifs, "spectrum")
    if rep.ussc != "pass":
        warnings.warn("USSC not confirmed; the dimension formula is evaluated anyway", stacklevel=2)
    s, _ = _Logs(rifs, digits).solve(0)
    return float(s)


@dataclass(frozen=True)
class BetaEval:
    q: float
    beta: float
    d_values: tuple
    beta_prime: float
    residual: float

    @property
    def alpha(self) -> float:
        return -self.beta_prime

    @property
    def f(self) -> float:
        return self.beta + self.q * self.alpha


def _beta_eval(logs: _Logs, q) -> BetaEval:
    ctx = logs.ctx
    b, res = logs.solve(q)
    qm = ctx.mpf(q)
    ds = tuple(float(ctx.fsum(ctx.exp(qm * lp + b * lr) for lp, lr in row)) for row in logs.terms)
    bp = logs.slope(qm, b)
    return BetaEval(float(q), float(b), ds, float(bp), float(res))


def beta(rifs: Rifs, q: float, digits: int = DEFAULT_DIGITS) -> BetaEval:
    return _beta_eval(_Logs(rifs, digits), q)


@dataclass(frozen=True)
class AlphaEndpoints:
    lo: float
    hi: float
    argmin: tuple  # choice vectors (0-based map indices per system)
    argmax: tuple


def alpha_endpoints(rifs: Rifs, digits: int = DEFAULT_DIGITS, cap: int = DEFAULT_ALPHA_CAP) -> AlphaEndpoints:
    """Extremes of sum theta log p / sum theta log r over all choice vectors."""
    total = 1
    for s in rifs.systems:
        total *= len(s.maps)
    if total > cap:
        raise BudgetExceeded(f"{total} choice vectors exceed cap {cap}")
    logs = _Logs(rifs, digits)
    ctx = logs.ctx
    vals = []
    for vec in itertools.product(*(range(len(row)) for row in logs.terms)):
        num = ctx.fsum(th * row[k][0] for th, row, k in zip(logs.theta, logs.terms, vec))
        den = ctx.fsum(th * row[k][1] for th, row, k in zip(logs.theta, logs.terms, vec))
        vals.append((vec, num / den))
    lo = min(v for _, v in vals)
    hi = max(v for _, v in vals)

    def near(a, b):
        return abs(a - b) <= TIE_TOL * max(1, abs(b))

    return AlphaEndpoints(float(lo), float(hi),
                          tuple(vec for vec, v in vals if near(v, lo)),
                          tuple(vec for vec, v in vals if near(v, hi)))


@dataclass(frozen=True)
class SpectrumSample:
    q: float
    beta: float
    alpha: float
    f: float
    residual: float


@dataclass(frozen=True)
class SpectrumCurve:
    samples: tuple
    endpoints: AlphaEndpoints
    dim_k: float


def spectrum_curve(rifs: Rifs, q_grid: Sequence[float], digits: int = DEFAULT_DIGITS) -> SpectrumCurve:
    """Parametric Legendre curve (alpha(q), f(q)) with alpha = -beta'(q)."""
    qs = list(q_grid)
    if any(b < a for a, b in zip(qs, qs[1:])):
        raise ValueError("q grid must be non-decreasing")
    logs = _Logs(rifs, digits)
    samples = []
    for q in qs:
        ev = _beta_eval(logs, q)
        samples.append(SpectrumSample(ev.q, ev.beta, ev.alpha, ev.f, ev.residual))
    dim_k = float(logs.solve(0)[0])
    return SpectrumCurve(tuple(samples), alpha_endpoints(rifs, digits), dim_k)


@dataclass(frozen=True)
class LevelSetValue:
    alpha: float
    q: float
    f: float


def dim_level_set(rifs: Rifs, alpha: float, digits: int = DEFAULT_DIGITS) -> LevelSetValue:
    """Solve -beta'(q) = alpha and return beta(q) + alpha q."""
    ends = alpha_endpoints(rifs, digits)
    if not ends.lo < alpha < ends.hi:
        raise OutOfRange(f"alpha={alpha} outside the open interval ({ends.lo}, {ends.hi})")
    logs = _Logs(rifs, digits)
    ctx = logs.ctx
    a = ctx.mpf(alpha)

    def excess(q):
        # -beta'(q) - alpha, non-increasing in q
        b, _ = logs.solve(q)
        return -logs.slope(q, b) - a

    lo, hi = ctx.mpf(-1), ctx.mpf(1)
    for _ in range(200):
        if excess(lo) > 0:
            break
        lo *= 2
    else:
        raise BracketFailure("no bracket for q_alpha")
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi *= 2
    else:
        raise BracketFailure("no bracket for q_alpha")
    for _ in range(200):
        mid = (lo + hi) / 2
        v = excess(mid)
        if v > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < ctx.mpf(10) ** -16:
            break
    q = (lo + hi) / 2
    # an affine stretch of beta shows up as -beta' pinned to alpha on both sides
    step = ctx.mpf(1) / 4
    if abs(excess(q - step)) < 1e-14 and abs(excess(q + step)) < 1e-14:
        raise FlatSegment(f"-beta' is constant at {alpha} near q={float(q)}",
                          (float(q - step), float(q + step)))
    b, _ = logs.solve(q)
    return LevelSetValue(float(alpha), float(q), float(b + a * q))

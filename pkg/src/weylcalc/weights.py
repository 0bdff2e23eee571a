"""Weight sequences, associated functions and the entire series ``P``.

``P(lam) = sum_n lam^n / Mhat_n`` grows like ``exp`` of the associated
function, so for the arguments that matter (``ln P`` in the hundreds) the
series is summed in multiprecision arithmetic.  Associated functions only
need ``log M_n`` and are computed in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath
import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, PmaxTooSmall

DEFAULT_DPS = 60


def _context(dps: int = DEFAULT_DPS) -> mpmath.ctx_mp.MPContext:
    # a private context keeps precision changes away from other threads
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


@dataclass(frozen=True)
class WeightSequence:
    """A positive sequence ``M_0, M_1, ...`` described by a closed form or by values.

    Parameters
    ----------
    kind : {"factorial_power", "self_power", "explicit"}
        ``factorial_power`` is ``M_p = p!^s``; ``self_power`` is
        ``M_n = h^{-n} n^{snm}`` with ``0^0 = 1``; ``explicit`` takes ``values``.
    s, h, m : float
        Parameters of the closed forms.
    values : tuple, optional
        Explicit entries (ints, Fractions, decimal strings or floats).
    """

    kind: str
    s: float = 1.0
    h: float = 1.0
    m: float = 1.0
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("factorial_power", "self_power", "explicit"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.values:
                raise ValueError("explicit weights need at least one value")
            for v in self.values:
                if Fraction(str(v)) <= 0:
                    raise ValueError("weight entries must be positive")
        if self.h <= 0 or self.s <= 0 or self.m <= 0:
            raise ValueError("weight parameters must be positive")

    # constructors -----------------------------------------------------------
    @classmethod
    def factorial_power(cls, s: float) -> "WeightSequence":
        return cls("factorial_power", s=s)

    @classmethod
    def self_power(cls, h: float = 1.0, s: float = 2.0, m: float = 2.0) -> "WeightSequence":
        return cls("self_power", s=s, h=h, m=m)

    @classmethod
    def explicit(cls, values: Sequence) -> "WeightSequence":
        return cls("explicit", values=tuple(values))

    @classmethod
    def from_config(cls, cfg: Mapping) -> "WeightSequence":
        kind = cfg.get("kind")
        if kind == "factorial_power":
            return cls.factorial_power(float(cfg["s"]))
        if kind == "self_power":
            return cls.self_power(float(cfg.get("h", 1)), float(cfg.get("s", 2)), float(cfg.get("m", 2)))
        if kind == "explicit":
            return cls.explicit(cfg["values"])
        raise ValueError(f"unknown weight kind {kind!r}")

    def to_config(self) -> dict:
        if self.kind == "factorial_power":
            return {"kind": self.kind, "s": self.s}
        if self.kind == "self_power":
            return {"kind": self.kind, "h": self.h, "s": self.s, "m": self.m}
        return {"kind": self.kind, "values": [str(v) for v in self.values]}

    # evaluation ------------------------------------------------------------
    @property
    def max_index(self) -> int | None:
        """Largest available index, or None for closed forms."""
        return len(self.values) - 1 if self.kind == "explicit" else None

    def log_values(self, pmax: int) -> np.ndarray:
        """``ln M_0 .. ln M_pmax`` in double precision."""
        if self.max_index is not None and pmax > self.max_index:
            raise PmaxTooSmall(f"explicit sequence has only {self.max_index + 1} entries")
        n = np.arange(pmax + 1, dtype=float)
        if self.kind == "factorial_power":
            return self.s * gammaln(n + 1)
        if self.kind == "self_power":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = self.s * self.m * n * np.log(n) - n * math.log(self.h)
            out[0] = 0.0
            return out
        return np.array([_log_positive(v) for v in self.values[:pmax + 1]])

    def log_value_mp(self, n: int, ctx) -> "mpmath.mpf":
        """``ln M_n`` at the working precision of ``ctx``."""
        if self.kind == "factorial_power":
            return ctx.mpf(self.s) * ctx.loggamma(n + 1)
        if self.kind == "self_power":
            if n == 0:
                return ctx.mpf(0)
            return ctx.mpf(self.s) * ctx.mpf(self.m) * n * ctx.log(n) - n * ctx.log(ctx.mpf(self.h))
        if n > self.max_index:
            raise PmaxTooSmall(f"explicit sequence has only {self.max_index + 1} entries")
        v = Fraction(str(self.values[n]))
        return ctx.log(ctx.mpf(v.numerator) / v.denominator)


def _log_positive(v) -> float:
    q = Fraction(str(v))
    if q <= 0:
        raise ValueError("weight entries must be positive")
    return math.log(q.numerator) - math.log(q.denominator)


# conditions ------------------------------------------------------------------

@dataclass
class ConditionReport:
    """Finite-range evidence for the weight conditions on ``0 <= p <= pmax``.

    Asymptotic conditions (M2, M3') cannot be decided on a finite range; the
    verdicts here are evidence only and ``finite_range`` records the range.
    """

    M1: bool
    M2: bool
    M3_prime: bool
    M4: bool
    stk: bool | None
    finite_range: tuple[int, int]
    m2_H_half: float
    m2_H_full: float
    m3_tail_slope: float
    m3_partial_sum: float
    stk_params: dict | None = None

    def to_dict(self) -> dict:
        return {
            "M1": self.M1, "M2": self.M2, "M3'": self.M3_prime, "M4": self.M4, "stk": self.stk,
            "finite_range": list(self.finite_range),
            "M2_smallest_H": {"half_range": self.m2_H_half, "full_range": self.m2_H_full},
            "M3'_tail_loglog_slope": self.m3_tail_slope,
            "M3'_partial_sum": self.m3_partial_sum,
            "stk_params": self.stk_params,
        }


def _log_convex(L: np.ndarray, rtol: float = 1e-12) -> bool:
    second = L[:-2] + L[2:] - 2 * L[1:-1]
    slack = rtol * np.maximum(1.0, np.abs(L[1:-1]))
    return bool(np.all(second >= -slack))


def check_conditions(seq: WeightSequence, pmax: int, s: float | None = None,
                     m: float | None = None, C0: float = 1.0) -> ConditionReport:
    """Check the weight conditions on the range ``0..pmax``.

    M1 is log-convexity, M4 log-convexity of ``M_p/p!``.  M2 reports the
    smallest ``H`` with ``M_{p+q} <= H^{p+q} M_p M_q`` (taking ``c_0 = 1``)
    over the half and the full range and accepts when it grows by less than
    10%.  M3' accepts when ``M_{p-1}/M_p`` decays faster than ``1/p`` on the
    upper half of the range, judged by the log-log slope.  ``stk`` checks that
    ``C0^n M_n / (nm)!^s`` is nondecreasing; ``s`` defaults to the sequence's
    own ``s`` and ``m`` to the sequence's ``m`` (1 for ``factorial_power``).
    """
    if pmax < 2:
        raise ValueError("pmax must be at least 2")
    L = seq.log_values(pmax)
    if not np.all(np.isfinite(L)):
        raise ValueError("nonpositive or non-finite weight entries")
    p = np.arange(pmax + 1, dtype=float)

    M1 = _log_convex(L)
    M4 = _log_convex(L - gammaln(p + 1))

    def smallest_H(top: int) -> float:
        best = -np.inf
        for tot in range(1, top + 1):
            q = np.arange(0, tot + 1)
            best = max(best, float(np.max(L[tot] - L[q] - L[tot - q])) / tot)
        return math.exp(best)

    H_half = smallest_H(pmax // 2)
    H_full = smallest_H(pmax)
    M2 = H_full <= 1.1 * H_half

    ratios = L[:-1] - L[1:]  # ln(M_{p-1}/M_p), p = 1..pmax
    upper = np.arange(max(1, pmax // 2), pmax + 1)
    slope = float(np.polyfit(np.log(upper), ratios[upper - 1], 1)[0])
    # a margin keeps the borderline 1/p decay (slope exactly -1) from passing on rounding
    M3 = slope < -1.0 - 1e-6
    partial = float(np.sum(np.exp(ratios)))

    if s is None:
        s = seq.s if seq.kind != "explicit" else None
    if m is None:
        m = seq.m if seq.kind == "self_power" else 1.0
    stk = None
    params = None
    if s is not None:
        u = L + p * math.log(C0) - s * gammaln(p * m + 1)
        slack = 1e-12 * np.maximum(1.0, np.abs(u[1:]))
        stk = bool(np.all(np.diff(u) >= -slack))
        params = {"s": s, "m": m, "C0": C0}
    return ConditionReport(M1=M1, M2=bool(M2), M3_prime=bool(M3), M4=M4, stk=stk,
                           finite_range=(0, pmax), m2_H_half=H_half, m2_H_full=H_full,
                           m3_tail_slope=slope, m3_partial_sum=partial, stk_params=params)


# associated functions -----------------------------------------------------------

_PMAX_START = 64
_PMAX_CAP = 1 << 22


def _grow_pmax(seq: WeightSequence, pmax: int | None, evaluate):
    """Run ``evaluate(L)`` with growing ``pmax`` until the optimum is interior."""
    if pmax is not None:
        return evaluate(seq.log_values(pmax), strict=True)
    top = _PMAX_START
    limit = seq.max_index if seq.max_index is not None else _PMAX_CAP
    while True:
        top = min(top, limit)
        try:
            return evaluate(seq.log_values(top), strict=True)
        except PmaxTooSmall:
            if top >= limit:
                raise
            top *= 4


def associated_function_log(seq: WeightSequence, log_rho: float, pmax: int | None = None) -> float:
    """``M(rho) = sup_p ln_+ (rho^p / M_p)`` given ``ln rho``.

    With ``pmax=None`` the range grows until the maximizing index is interior.
    An explicit ``pmax`` that is attained raises :class:`PmaxTooSmall`.
    """
    def evaluate(L, strict):
        vals = np.arange(len(L)) * log_rho - L
        k = int(np.argmax(vals))
        if vals[k] > 0 and k == len(L) - 1:
            raise PmaxTooSmall(f"supremum attained at pmax={k}; increase pmax")
        return max(0.0, float(vals[k]))

    return _grow_pmax(seq, pmax, evaluate)


def associated_function(seq: WeightSequence, rho: float, pmax: int | None = None) -> float:
    if rho <= 0:
        raise ValueError("rho must be positive")
    return associated_function_log(seq, math.log(rho), pmax)


def associated_inverse_log(seq: WeightSequence, t: float, pmax: int | None = None) -> float:
    """``ln`` of the smallest ``y`` with ``M(y) >= t``, for ``t > 0``.

    ``M(y) >= t`` holds exactly when ``ln y >= (t + ln M_n)/n`` for some
    ``n >= 1``, so the inverse is a minimum over ``n``.
    """
    if t <= 0:
        raise ValueError("t must be positive")

    def evaluate(L, strict):
        n = np.arange(1, len(L))
        vals = (t + L[1:]) / n
        k = int(np.argmin(vals))
        if k == len(vals) - 1:
            raise PmaxTooSmall(f"minimum attained at pmax={len(L) - 1}; increase pmax")
        return float(vals[k])

    return _grow_pmax(seq, pmax, evaluate)


# the entire series ---------------------------------------------------------------

@dataclass(frozen=True)
class EntireSeries:
    """``P(lam) = sum_n lam^n / Mhat_n`` with ``Mhat`` given by ``weights``.

    Parameters
    ----------
    weights : WeightSequence
        The denominators ``Mhat_n``.
    truncation : int, optional
        Sum only ``n <= truncation`` (a polynomial); None sums adaptively.
    tol : float
        Relative size of the first omitted term in adaptive summation.
    dps : int
        Decimal digits of the multiprecision context.
    """

    weights: WeightSequence
    truncation: int | None = None
    tol: float = 1e-40
    dps: int = DEFAULT_DPS
    max_terms: int = 200_000

    def context(self):
        return _context(self.dps)


@dataclass(frozen=True)
class InverseResult:
    """``P^{-1}(y)`` together with a certified bracket ``P(lo) <= y <= P(hi)``."""

    value: object
    lo: object
    hi: object

    def __float__(self):
        return float(self.value)


def _terms_window(P: EntireSeries, log_lam: float) -> int:
    """Index after which all terms are negligible, from double-precision logs."""
    if P.truncation is not None:
        return P.truncation
    seq = P.weights
    log_tol = math.log(P.tol)
    top = 256
    while True:
        if seq.max_index is not None:
            top = min(top, seq.max_index)
        L = seq.log_values(top)
        logs = np.arange(top + 1) * log_lam - L
        peak = np.maximum.accumulate(logs)
        # first index past the peak whose term and successors are below tol * peak
        small = (logs < peak + log_tol) & (np.arange(top + 1) > np.argmax(logs))
        small &= np.concatenate(([False], np.diff(logs) < 0))
        hits = np.nonzero(small)[0]
        if hits.size:
            return int(hits[0])
        if seq.max_index is not None and top >= seq.max_index:
            raise ConvergenceError("explicit weights exhausted before the series converged")
        if top >= P.max_terms:
            raise ConvergenceError(f"series did not converge within {P.max_terms} terms")
        top *= 2


def _to_mp(ctx, v):
    if isinstance(v, np.integer):
        v = int(v)
    elif isinstance(v, np.floating):
        v = float(v)
    return ctx.mpf(v)


def _series_parts(P: EntireSeries, lam, ctx, derivative: bool = False):
    lam = _to_mp(ctx, lam)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        return ctx.mpf(1), (ctx.mpf(1) / ctx.exp(P.weights.log_value_mp(1, ctx))
                            if derivative else None)
    log_lam = ctx.log(lam)
    top = _terms_window(P, float(log_lam))
    total = ctx.mpf(0)
    dtotal = ctx.mpf(0)
    for n in range(top + 1):
        t = ctx.exp(n * log_lam - P.weights.log_value_mp(n, ctx))
        total += t
        if derivative:
            dtotal += n * t
    return total, (dtotal / lam if derivative else None)


def series_eval(P: EntireSeries, lam):
    """``P(lam)`` as an ``mpf`` at the series' precision."""
    ctx = P.context()
    return _series_parts(P, lam, ctx)[0]


def series_derivative(P: EntireSeries, lam):
    ctx = P.context()
    return _series_parts(P, lam, ctx, derivative=True)[1]


def growth_ratio(P: EntireSeries, lam) -> float:
    """``lam P'(lam) / P(lam)``."""
    ctx = P.context()
    lam = _to_mp(ctx, lam)
    if lam == 0:
        return 0.0
    val, der = _series_parts(P, lam, ctx, derivative=True)
    return float(lam * der / val)


def growth_ratio_check(P: EntireSeries, y_grid: Sequence[float]) -> list[float]:
    grid = list(y_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    return [growth_ratio(P, y) for y in grid]


def series_inverse(P: EntireSeries, y, rtol: float = 1e-30) -> InverseResult:
    """The unique ``lam >= 0`` with ``P(lam) = y`` for ``y >= 1``.

    Safeguarded Newton on ``ln P(e^u) = ln y`` in ``u = ln lam``, falling back
    to bisection whenever a step leaves the current bracket.  The returned
    bracket is checked by direct evaluation.
    """
    ctx = P.context()
    y = _to_mp(ctx, y)
    if y < 1:
        raise ValueError("y must be at least 1")
    if y == 1:
        z = ctx.mpf(0)
        return InverseResult(z, z, z)
    log_y = ctx.log(y)

    def f_and_df(u):
        lam = ctx.exp(u)
        val, der = _series_parts(P, lam, ctx, derivative=True)
        return ctx.log(val) - log_y, lam * der / val

    # bracket in u; P(e^u) is increasing in u
    u_hi = ctx.mpf(0)
    f_hi, _ = f_and_df(u_hi)
    u_lo = None
    step = ctx.mpf(1)
    while f_hi < 0:
        u_lo, u_hi = u_hi, u_hi + step
        step *= 2
        f_hi, _ = f_and_df(u_hi)
    if u_lo is None:
        u_lo = ctx.mpf(-1)
        while f_and_df(u_lo)[0] >= 0:
            u_hi = u_lo
            u_lo *= 2
            if u_lo < -10_000:
                raise ConvergenceError("inverse underflows")
    u = (u_lo + u_hi) / 2
    for _ in range(400):
        f, df = f_and_df(u)
        if f < 0:
            u_lo = u
        else:
            u_hi = u
        if u_hi - u_lo <= rtol:
            break
        nxt = u - f / df if df > 0 else (u_lo + u_hi) / 2
        if not (u_lo < nxt < u_hi):
            nxt = (u_lo + u_hi) / 2
        if abs(nxt - u) <= rtol / 4:
            # Newton has converged; tighten the bracket around it
            lo_try = max(u_lo, nxt - rtol / 2)
            hi_try = min(u_hi, nxt + rtol / 2)
            if f_and_df(lo_try)[0] >= 0 or f_and_df(hi_try)[0] < 0:
                u = nxt
                continue
            u_lo, u_hi = lo_try, hi_try
            break
        u = nxt
    else:
        raise ConvergenceError("series_inverse did not converge")
    # certify by direct evaluation; an endpoint that sits on the root within
    # working precision is pushed outward until the inequality is strict
    width = max(u_hi - u_lo, ctx.mpf(rtol))
    for _ in range(60):
        if _series_parts(P, ctx.exp(u_lo), ctx)[0] < y:
            break
        u_lo -= width
        width *= 2
    else:
        raise ConvergenceError("inverse bracket failed certification")
    width = max(u_hi - u_lo, ctx.mpf(rtol))
    for _ in range(60):
        if _series_parts(P, ctx.exp(u_hi), ctx)[0] > y:
            break
        u_hi += width
        width *= 2
    else:
        raise ConvergenceError("inverse bracket failed certification")
    lo, hi = ctx.exp(u_lo), ctx.exp(u_hi)
    return InverseResult(ctx.exp((u_lo + u_hi) / 2), lo, hi)


def weights_from_config(cfg: Mapping) -> WeightSequence:
    return WeightSequence.from_config(cfg)

"""Counting and eigenvalue sweeps for ``P(H)`` with ``H`` the harmonic oscillator.

Every row compares an exact quantity (integer lattice counts, ``P`` at the
exact oscillator levels) with the Weyl-law predictions.  Output is CSV with
a versioned first line; identical configs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import mpmath

from .spectral import (closed_form_counting_self_power, closed_form_log_eigenvalue_self_power,
                       lattice_count_harmonic, series_counting_exact, weyl_constant)
from .weights import (EntireSeries, WeightSequence, associated_function_log,
                      associated_inverse_log, series_eval, series_inverse)

COUNTING_VERSION = "# weylcalc counting sweep v1"
EIGEN_VERSION = "# weylcalc eigenvalue sweep v1"

COUNTING_HEADER = ["log10_lambda", "ln_lambda", "N_exact", "N_via_inverse_lo", "N_via_inverse_hi",
                   "P_inverse", "N_predicted_Pinv", "N_predicted_assoc", "N_closed_form",
                   "ratio", "ratio_assoc", "ratio_closed_form"]
EIGEN_HEADER = ["j", "mu_j", "ln_lambda_exact", "ln_lambda_predicted", "ln_lambda_predicted_assoc",
                "ln_lambda_closed_form", "ratio", "argument_ratio"]

MAX_DIM = 3


def thread_cap() -> int:
    """Worker count from ``WEYLCALC_THREADS`` (default 1)."""
    raw = os.environ.get("WEYLCALC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep parameters.

    ``log10_lambda`` is the grid of ``log10`` of the counting thresholds;
    ``j_grid`` the eigenvalue indices (0-based, with multiplicity).  The
    operator is always the oscillator, so ``m = 2``.
    """

    d: int
    weights: WeightSequence
    log10_lambda: tuple[float, ...] = ()
    j_grid: tuple[int, ...] = ()
    m: int = 2
    counting_out: str | None = None
    eigen_out: str | None = None
    dps: int = 60

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise ValueError(f"d must be between 1 and {MAX_DIM}")
        if self.m != 2:
            raise ValueError("sweeps use the harmonic oscillator, so m must be 2")
        for name, grid in (("log10_lambda", self.log10_lambda), ("j_grid", self.j_grid)):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if any(v < 0 for v in self.log10_lambda):
            raise ValueError("lambda must be at least 1")
        if any(j < 0 for j in self.j_grid):
            raise ValueError("j must be nonnegative")

    @classmethod
    def from_dict(cls, cfg: Mapping) -> "ExperimentConfig":
        grid = cfg.get("log10_lambda", ())
        if isinstance(grid, Mapping):
            start, stop, num = float(grid["start"]), float(grid["stop"]), int(grid["num"])
            if grid.get("spacing", "geometric") == "geometric":
                grid = [start * (stop / start) ** (k / (num - 1)) for k in range(num)] if num > 1 else [start]
            else:
                grid = [start + (stop - start) * k / (num - 1) for k in range(num)] if num > 1 else [start]
        jg = cfg.get("j_grid", ())
        if isinstance(jg, Mapping):
            jg = range(int(jg["start"]), int(jg["stop"]), int(jg.get("step", 1)))
        out = cfg.get("outputs", {})
        return cls(d=int(cfg["d"]), weights=WeightSequence.from_config(cfg["weights"]),
                   log10_lambda=tuple(float(v) for v in grid), j_grid=tuple(int(j) for j in jg),
                   m=int(cfg.get("m", 2)), counting_out=out.get("counting"),
                   eigen_out=out.get("eigen"), dps=int(cfg.get("dps", 60)))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def series(self) -> EntireSeries:
        return EntireSeries(self.weights, dps=self.dps)

    def has_closed_form(self) -> bool:
        return self.weights.kind == "self_power" and self.weights.m == 2


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    if isinstance(v, mpmath.mpf):
        return mpmath.nstr(v, 20, min_fixed=-30, max_fixed=30)
    return repr(float(v))


def _counting_row(cfg: ExperimentConfig, P: EntireSeries, c: float, log10_lam: float) -> list:
    lam = mpmath.mpf(10) ** mpmath.mpf(log10_lam)
    ln_lam = float(mpmath.log(lam))
    d, m = cfg.d, cfg.m
    inv = series_inverse(P, lam)
    exact = series_counting_exact(P, d, lam)
    n_lo = lattice_count_harmonic(d, inv.lo)
    n_hi = lattice_count_harmonic(d, inv.hi)
    pred = c * float(inv.value) ** (2 * d / m)
    assoc = c * math.exp(associated_inverse_log(cfg.weights, ln_lam) * 2 * d / m) if ln_lam > 0 else 0.0
    closed = (closed_form_counting_self_power(d, cfg.weights.h, cfg.weights.s, ln_lam)
              if cfg.has_closed_form() else None)
    ratio = exact / pred if pred > 0 else None
    ratio_assoc = exact / assoc if assoc > 0 else None
    ratio_closed = exact / closed if closed else None
    return [log10_lam, ln_lam, exact, n_lo, n_hi, inv.value, pred, assoc, closed,
            ratio, ratio_assoc, ratio_closed]


def _write_csv(version: str, header: Sequence[str], rows: Sequence[Sequence], path: str | None) -> str:
    buf = io.StringIO()
    buf.write(version + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def counting_rows(cfg: ExperimentConfig) -> list[list]:
    P = cfg.series()
    c = weyl_constant(cfg.d, cfg.m)
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        return list(pool.map(lambda v: _counting_row(cfg, P, c, v), cfg.log10_lambda))


def run_counting_sweep(cfg: ExperimentConfig) -> str:
    """Exact ``N_{P(H)}`` against both Weyl predictions; returns the CSV text."""
    return _write_csv(COUNTING_VERSION, COUNTING_HEADER, counting_rows(cfg), cfg.counting_out)


def oscillator_levels(d: int, count: int) -> list[int]:
    """First ``count`` oscillator eigenvalues ``d + 2|alpha|`` with multiplicity."""
    out: list[int] = []
    k = 0
    while len(out) < count:
        out.extend([d + 2 * k] * math.comb(k + d - 1, d - 1))
        k += 1
    return out[:count]


def eigen_rows(cfg: ExperimentConfig) -> list[list]:
    P = cfg.series()
    d, m = cfg.d, cfg.m
    c = weyl_constant(d, m)
    levels = oscillator_levels(d, (max(cfg.j_grid) + 1) if cfg.j_grid else 0)

    def row(j: int) -> list:
        mu = levels[j]
        arg = (j / c) ** (m / (2 * d))
        ln_exact = mpmath.log(series_eval(P, mu))
        ln_pred = mpmath.log(series_eval(P, arg))
        ln_assoc = associated_function_log(cfg.weights, math.log(arg)) if arg > 0 else 0.0
        closed = (closed_form_log_eigenvalue_self_power(d, cfg.weights.h, cfg.weights.s, j)
                  if cfg.has_closed_form() else None)
        ratio = mpmath.exp(ln_exact - ln_pred)
        arg_ratio = mu / arg if arg > 0 else None
        return [j, mu, ln_exact, ln_pred, ln_assoc, closed, ratio, arg_ratio]

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        return list(pool.map(row, cfg.j_grid))


def run_eigenvalue_sweep(cfg: ExperimentConfig) -> str:
    """Exact ``lambda_j = P(mu_j)`` against the predicted eigenvalues; returns the CSV text."""
    return _write_csv(EIGEN_VERSION, EIGEN_HEADER, eigen_rows(cfg), cfg.eigen_out)


def read_sweep_csv(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# weylcalc"):
        raise ValueError("missing sweep version line")
    return list(csv.DictReader(lines[1:]))


# trend checks ----------------------------------------------------------------------

def monotone_toward_one(values: Sequence[float], strict: bool = True) -> bool:
    """``|v - 1|`` nonincreasing (strictly decreasing when ``strict``)."""
    dev = [abs(v - 1) for v in values]
    if strict:
        return all(b < a for a, b in zip(dev, dev[1:]))
    return all(b <= a for a, b in zip(dev, dev[1:]))


def windowed_trend_toward_one(values: Sequence[float], windows: int = 3) -> bool:
    """Max deviation from 1 over consecutive windows is nonincreasing.

    Suited to ratios that carry lattice jitter on top of a shrinking envelope.
    """
    vals = list(values)
    if len(vals) < windows:
        return monotone_toward_one(vals, strict=False)
    size = len(vals) / windows
    maxima = []
    for k in range(windows):
        chunk = vals[int(round(k * size)):int(round((k + 1) * size))]
        maxima.append(max(abs(v - 1) for v in chunk))
    return all(b <= a for a, b in zip(maxima, maxima[1:]))

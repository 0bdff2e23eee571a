"""Acceptance criteria, one test each; tolerances and sizes are fixed here.

Run ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per criterion is
printed in the terminal summary.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np

from weylcalc.gaussian import GaussianRational
from weylcalc.hermite import HermiteBasisSpec, quantize
from weylcalc.index import index_integral, operator_index_oracle
from weylcalc.matsym import MatrixSymbol
from weylcalc.parametrix import verify_left_inverse
from weylcalc.spectral import (eigensolve_hermitian, lattice_count_harmonic,
                               operator_series_matrix, weyl_constant)
from weylcalc.sweeps import ExperimentConfig, counting_rows, monotone_toward_one, windowed_trend_toward_one
from weylcalc.symbol import (PolySymbol, multinomial_identity_check, sharp_commutator,
                             sharp_power_closed, sharp_power_closed_sum, sharp_power_iterated, star,
                             variables)
from weylcalc.weights import EntireSeries, WeightSequence, series_eval

I = GaussianRational(0, 1)


def random_symbol(rng: random.Random, d: int, max_degree: int, real: bool = False,
                  max_terms: int = 4) -> PolySymbol:
    monos = [(xe, qe) for e in itertools.product(range(max_degree + 1), repeat=2 * d)
             if sum(e) <= max_degree for xe, qe in [(e[:d], e[d:])]]
    terms = {}
    for key in rng.sample(monos, rng.randint(1, max_terms)):
        re = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        im = Fraction(0) if real else Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        terms[key] = GaussianRational(re, im)
    return PolySymbol(d, terms)


def test_criterion_01_exact_algebra(acceptance):
    t0 = time.perf_counter()
    rng = random.Random(101)
    failures = []
    count = 0
    for k in range(50):
        d = 1 + k % 2
        a, b, c = (random_symbol(rng, d, 3) for _ in range(3))
        count += 3
        one = PolySymbol.constant(d)
        if star(star(a, b), c) != star(a, star(b, c)):
            failures.append(("assoc", k))
        if not (star(one, a) == a == star(a, one)):
            failures.append(("unit", k))
        if star(a, b).conj() != star(b.conj(), a.conj()):
            failures.append(("conj", k))
    for d in (1, 2):
        xs, qs = variables(d)
        for j, l in itertools.product(range(d), repeat=2):
            if sharp_commutator(xs[j], qs[l]) != PolySymbol.constant(d, I if j == l else 0):
                failures.append(("ccr", d, j, l))
    elapsed = time.perf_counter() - t0
    ok = not failures and count >= 50 and elapsed < 10
    acceptance(1, "exact algebra: associativity, unit, conjugation, x#xi - xi#x = i", ok,
               f"{count} symbols, {len(failures)} failures, {elapsed:.1f}s < 10s")
    assert ok, failures


def test_criterion_02_closed_form_powers(acceptance):
    t0 = time.perf_counter()
    rng = random.Random(202)
    bad = []
    cases = 0
    for d in (1, 2):
        pool = [PolySymbol.harmonic(d)] + [random_symbol(rng, d, 2, real=True, max_terms=3)
                                           for _ in range(3)]
        for a, n in itertools.product(pool, range(0, 5)):
            cases += 1
            if sharp_power_closed_sum(a, n) != sharp_power_iterated(a, n):
                bad.append(("sum", d, n, str(a)))
            m = max(a.degree, 0)
            for j in range(n * m // 2 + 1) if n >= 2 else ():
                t = sharp_power_closed(a, n, j)
                if not (t.is_zero() or t.degree <= n * m - 2 * j):
                    bad.append(("degree", d, n, j))
                if not t.is_real():
                    bad.append(("real", d, n, j))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30
    acceptance(2, "closed-form #-power equals iterated star; degree bound and reality", ok,
               f"{cases} (symbol, n) cases, {elapsed:.1f}s < 30s")
    assert ok, bad


def test_criterion_03_multinomial_identity(acceptance):
    bad = []
    checked = 0
    for d, n, j in itertools.product(range(1, 4), range(2, 6), range(0, 5)):
        lhs, rhs = multinomial_identity_check(d, n, j)
        expect = Fraction(d ** j * n ** j * (n - 1) ** j, 2 ** j * math.factorial(j))
        checked += 1
        if not (lhs == rhs == expect):
            bad.append((d, n, j))
    ok = not bad
    acceptance(3, "brute-force multinomial sums equal d^j n^j (n-1)^j / (2^j j!)", ok,
               f"{checked} triples, d<=3, n<=5, j<=4")
    assert ok, bad


def test_criterion_04_quantization_compatibility(acceptance):
    rng = random.Random(404)
    N = 40
    spec = HermiteBasisSpec(1, N)
    worst_rel = 0.0
    worst_abs = 0.0
    for _ in range(20):
        a = random_symbol(rng, 1, 3)
        b = random_symbol(rng, 1, 3)
        ma, mb = max(a.degree, 0), max(b.degree, 0)
        margin = ma + mb
        A = quantize(a, spec).square()
        B = quantize(b, spec).square()
        AB = quantize(star(a, b), spec).square()
        prod = (A.entries @ B.entries)
        k = HermiteBasisSpec(1, N - margin).size
        diff = np.abs(prod[:k, :k] - AB.entries[:k, :k]).max()
        scale = max(1.0, np.abs(AB.entries[:k, :k]).max())
        worst_abs = max(worst_abs, diff)
        worst_rel = max(worst_rel, diff / scale)
    H = quantize(PolySymbol.harmonic(1), spec).interior(2)
    diag_err = np.abs(H.entries - np.diag(2 * np.arange(N - 1) + 1.0)).max()
    ok = worst_rel <= 1e-10 and diag_err <= 1e-12
    acceptance(4, "quantize(a#b) = quantize(a) quantize(b) on interior blocks; oscillator diagonal", ok,
               f"max-norm error {worst_rel:.1e} relative ({worst_abs:.1e} absolute) <= 1e-10, "
               f"diagonal error {diag_err:.1e} <= 1e-12")
    assert ok


def _series_spectrum_error(d: int, N: int, weights: WeightSequence) -> tuple[float, int]:
    P = EntireSeries(weights)
    a = PolySymbol.harmonic(d)
    ref = eigensolve_hermitian(operator_series_matrix(a, P, HermiteBasisSpec(d, N - 4)))
    op = operator_series_matrix(a, P, HermiteBasisSpec(d, N))
    res = eigensolve_hermitian(op, reference=ref)
    levels = sorted(d + 2 * sum(al) for al in op.domain.indices)
    tr = res.trusted
    expect = np.array([float(series_eval(P, mu)) for mu in levels[:tr.size]])
    return float(np.max(np.abs(tr - expect) / expect)), tr.size


def test_criterion_05_series_spectrum(acceptance):
    rows = []
    worst = 0.0
    # n^{snm} with s = 2, m = 2, and the doubled exponent n^{2snm} (the same family at s = 4)
    for label, w in (("n^(snm)", WeightSequence.self_power(1, 2, 2)),
                     ("n^(2snm)", WeightSequence.self_power(1, 4, 2))):
        for d, N in ((1, 40), (2, 24)):
            err, trusted = _series_spectrum_error(d, N, w)
            worst = max(worst, err)
            rows.append(f"{label} d={d}: {trusted} trusted, rel err {err:.1e}")
    ok = worst <= 1e-8
    acceptance(5, "eigenvalues of truncated P(H) equal P at the oscillator levels", ok,
               "; ".join(rows))
    assert ok


def test_criterion_06_weyl_constant(acceptance):
    c1, c2 = weyl_constant(1), weyl_constant(2)
    ok = abs(c1 - 0.5) <= 1e-6 and abs(c2 - 0.125) <= 1e-6
    acceptance(6, "Weyl constant by sphere quadrature, Phi = 1", ok,
               f"d=1: {c1:.12f}, d=2: {c2:.12f}")
    assert ok


def test_criterion_07_counting_law(acceptance):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict({
        "d": 1, "weights": {"kind": "self_power", "h": 1, "s": 2, "m": 2},
        "log10_lambda": {"start": 10, "stop": 1000, "num": 25, "spacing": "geometric"},
    })
    rows = counting_rows(cfg)
    elapsed = time.perf_counter() - t0
    # columns: log10, ln, exact, lo, hi, Pinv, pred, assoc, closed, ratio, ratio_assoc, ratio_closed
    bridge = all(r[2] == r[3] == r[4] == lattice_count_harmonic(1, r[5]) for r in rows)
    top_ratio = rows[-1][9]
    final_decade = [r[9] for r in rows if r[0] >= 100 - 1e-9]
    pinv_trend = windowed_trend_toward_one(final_decade)
    closed = [r[11] for r in rows]
    closed_bounds = all(0.5 <= c <= 2 for c in closed)
    closed_trend = monotone_toward_one(closed)
    ok = bridge and 0.8 <= top_ratio <= 1.2 and pinv_trend and closed_bounds and closed_trend and elapsed < 120
    acceptance(7, "counting law: exact bridge, Weyl ratio at the top, closed-form ratio trend", ok,
               f"bridge {'exact' if bridge else 'broken'} on {len(rows)} rows, top ratio {top_ratio:.9f}, "
               f"final-decade trend {'ok' if pinv_trend else 'broken'}, closed-form ratio "
               f"{closed[0]:.3f} -> {closed[-1]:.3f}, {elapsed:.1f}s < 120s")
    assert ok


def test_criterion_08_parametrix(acceptance):
    t0 = time.perf_counter()
    reports = []
    for d in (1, 2):
        a = PolySymbol.constant(d) + PolySymbol.harmonic(d)
        reports.append(verify_left_inverse(a, 3, raise_on_failure=False))
    elapsed = time.perf_counter() - t0
    ok = all(r.c0_is_one and r.max_nonzero_k is None for r in reports) and elapsed < 60
    acceptance(8, "parametrix composition: c0 = 1, c1 = c2 = c3 = 0 exactly", ok,
               f"d=1 and d=2, a = 1 + |w|^2, {elapsed:.1f}s < 60s")
    assert ok


def _creation(k: int) -> MatrixSymbol:
    z = PolySymbol.x(0, 1) - PolySymbol.xi(0, 1).scale(I)
    return MatrixSymbol(((z ** k,),))


def _quaternion() -> MatrixSymbol:
    w1, w2 = PolySymbol.x(0, 2), PolySymbol.x(1, 2)
    w3, w4 = PolySymbol.xi(0, 2), PolySymbol.xi(1, 2)
    return MatrixSymbol(((w1 + w2.scale(I), -(w3 - w4.scale(I))),
                         (w3 + w4.scale(I), w1 - w2.scale(I))))


def test_criterion_09_index_agreement(acceptance):
    t0 = time.perf_counter()
    notes = []
    ok = True
    for k in (1, 2, 3):
        val = index_integral(_creation(k), 1.0).value
        orc = operator_index_oracle(_creation(k), 30).index
        good = abs(val + k) <= 1e-6 and orc == -k
        ok &= good
        notes.append(f"k={k}: {val:+.9f}/{orc}")
    Q = _quaternion()
    r1 = index_integral(Q, 1.0)
    r2 = index_integral(Q, 2.0)
    orc = operator_index_oracle(Q, 10)
    agree = abs(r1.value - orc.index) <= 1e-3 and r1.rounded == orc.index
    radius = abs(r1.value - r2.value) <= 1e-6 and abs(
        index_integral(_creation(2), 1.0).value - index_integral(_creation(2), 3.0).value) <= 1e-6
    S = _creation(1).blockdiag(_creation(2).adjoint())
    additive = (abs(index_integral(S, 1.0).value - 1) <= 1e-6
                and operator_index_oracle(S, 20).index == 1)
    elapsed = time.perf_counter() - t0
    ok = ok and agree and radius and additive and elapsed < 180
    notes.append(f"2x2 d=2: integral {r1.value:+.9f}, oracle {orc.index}")
    notes.append(f"radius {'ok' if radius else 'broken'}, additivity {'ok' if additive else 'broken'}")
    acceptance(9, "index: boundary integral matches the truncated-operator oracle", ok,
               "; ".join(notes) + f"; {elapsed:.1f}s < 180s")
    assert ok


def _random_elliptic_scalar(rng: random.Random) -> MatrixSymbol:
    """1 + |w|^2 + i q(w) + small real linear part; its real part is positive everywhere."""
    d = 2
    out = PolySymbol.constant(d) + PolySymbol.harmonic(d)
    gens = list(variables(d)[0]) + list(variables(d)[1])
    for g, h in itertools.combinations_with_replacement(gens, 2):
        out = out + (g * h).scale(GaussianRational(0, rng.randint(-3, 3)))
    for g in gens:
        # |sum c_k w_k| <= |w| < 1 + |w|^2 when every |c_k| <= 1/2
        out = out + g.scale(Fraction(rng.randint(-2, 2), 4))
    return MatrixSymbol(((out,),))


def test_criterion_10_scalar_vanishing(acceptance):
    rng = random.Random(1010)
    vals = [index_integral(_random_elliptic_scalar(rng), 2.0).value for _ in range(5)]
    ok = all(abs(v) <= 1e-6 for v in vals)
    acceptance(10, "scalar elliptic symbols in d=2 have vanishing index integral", ok,
               "max |integral| " + f"{max(abs(v) for v in vals):.1e}")
    assert ok

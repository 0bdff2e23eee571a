"""Spectra of quantized operators, counting functions and Weyl-law predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, NotHermitianError
from .hermite import HermiteBasisSpec, HermiteOperator, quantize
from .sphere import integrate_sphere
from .symbol import PolySymbol
from .weights import (EntireSeries, WeightSequence, associated_function_log,
                      associated_inverse_log, series_eval, series_inverse)


# Jacobi eigensolver -------------------------------------------------------------

def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint index pairs covering every pair exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b)); qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Pairs are processed in round-robin order so that each round consists of
    disjoint rotations that can be applied together.  Each rotation first
    removes the phase of ``A[p, q]`` and then applies a real rotation chosen
    so that the new ``A[p, q]`` vanishes.

    Returns ascending eigenvalues and the matching unitary eigenvector matrix.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    V = np.eye(n, dtype=complex)
    if n <= 1:
        return A.real.diagonal().copy(), V
    fro = np.linalg.norm(A)
    if fro == 0:
        return np.zeros(n), V
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off <= tol * fro:
            break
        for p, q in rounds:
            apq = A[p, q]
            r = np.abs(apq)
            keep = r > tol * fro * 1e-3
            if not np.any(keep):
                continue
            p, q, apq, r = p[keep], q[keep], apq[keep], r[keep]
            app = A[p, p].real
            aqq = A[q, q].real
            ph = apq / r  # e^{i phi}
            tau = (aqq - app) / (2 * r)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1 + tau * tau))
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            phc = ph.conj()
            # J has columns (c, -s e^{-i phi}) and (s, c e^{-i phi}) on rows (p, q)
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = Ap * c - Aq * (s * phc)
            A[:, q] = Ap * s + Aq * (c * phc)
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - (s * ph)[:, None] * Aq
            A[q, :] = s[:, None] * Ap + (c * ph)[:, None] * Aq
            A[p, q] = 0
            A[q, p] = 0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = Vp * c - Vq * (s * phc)
            V[:, q] = Vp * s + Vq * (c * phc)
    else:
        raise ConvergenceError("Jacobi iteration did not converge")
    w = A.diagonal().real
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass
class SpectrumResult:
    """Ascending eigenvalues with the count of leading ones certified stable."""

    eigenvalues: np.ndarray
    source: str = ""
    trusted_count: int = 0
    eigenvectors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be ascending")
        if not 0 <= self.trusted_count <= ev.size:
            raise ValueError("trusted_count out of range")
        self.eigenvalues = ev

    @property
    def trusted(self) -> np.ndarray:
        return self.eigenvalues[:self.trusted_count]

    def to_dict(self) -> dict:
        return {"source": self.source, "trusted_count": self.trusted_count,
                "eigenvalues": [float(v) for v in self.eigenvalues]}


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, HermiteOperator):
        if op.domain != op.codomain:
            raise NotHermitianError("operator is not square; take an interior block first")
        return np.asarray(op.entries)
    return np.asarray(op)


def eigensolve_hermitian(op, reference=None, source: str = "",
                         rtol_trust: float = 1e-6, herm_tol: float = 1e-10) -> SpectrumResult:
    """Full spectrum of a Hermitian matrix or square :class:`HermiteOperator`.

    ``reference`` is the spectrum (a :class:`SpectrumResult` or array) of the
    same operator built at a smaller truncation.  The leading eigenvalues that
    agree with it to ``rtol_trust`` are counted as trusted.  Without a
    reference every eigenvalue is trusted.
    """
    A = _as_matrix(op)
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotHermitianError("matrix is not square")
    if np.abs(A - A.conj().T).max(initial=0.0) > herm_tol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    A = (A + A.conj().T) / 2
    w, V = jacobi_eigh(A)
    norm = np.linalg.norm(A, 2) if A.size else 0.0
    if A.size:
        resid = np.linalg.norm(A @ V - V * w, axis=0)
        if np.any(resid > 1e-8 * max(norm, 1e-300)):
            raise ConvergenceError("eigenpair residual exceeds 1e-8 ||A||")
    trusted = len(w)
    if reference is not None:
        ref = reference.eigenvalues if isinstance(reference, SpectrumResult) else np.asarray(reference)
        k = 0
        while k < min(len(ref), len(w)):
            if abs(w[k] - ref[k]) > rtol_trust * max(abs(w[k]), 1e-300):
                break
            k += 1
        trusted = k
    return SpectrumResult(w, source, trusted, V)


# series of operators --------------------------------------------------------------

def operator_series_matrix(a: PolySymbol, P: EntireSeries, spec: HermiteBasisSpec,
                           n_terms: int | None = None, tail_rtol: float = 1e-10,
                           max_terms: int = 10_000) -> HermiteOperator:
    """``sum_n M^n / Mhat_n`` with ``M`` the interior block of ``quantize(a)``.

    With ``n_terms=None`` terms are added until the norm bound
    ``||M||^n / Mhat_n`` drops below ``tail_rtol`` times the partial sum's
    norm while decreasing.
    """
    if not a.is_real():
        raise NotHermitianError("series of operators needs a real symbol")
    m = max(a.degree, 0)
    M = quantize(a, spec).interior(m)
    mat = np.asarray(M.entries)
    n = mat.shape[0]
    total = np.eye(n, dtype=complex)
    if n_terms == 0 or n == 0:
        return HermiteOperator(M.domain, M.domain, total)
    norm = np.linalg.norm(mat, 2)
    log_norm = math.log(norm) if norm > 0 else -math.inf
    top = n_terms if n_terms is not None else max_terms
    L = P.weights.log_values(min(top, P.weights.max_index or top))
    if P.truncation is not None:
        top = min(top, P.truncation)
    term = np.eye(n, dtype=complex)
    prev_bound = math.inf
    for k in range(1, min(top, len(L) - 1) + 1):
        # term_k = M^k / Mhat_k built incrementally to avoid overflow
        term = (term @ mat) * math.exp(L[k - 1] - L[k])
        total = total + term
        if n_terms is None:
            bound = k * log_norm - L[k]
            tot_norm = np.linalg.norm(total, 2)
            if bound < prev_bound and math.exp(bound) < tail_rtol * tot_norm:
                break
            prev_bound = bound
    else:
        if n_terms is None:
            raise ConvergenceError("operator series tail bound not reached within budget")
    return HermiteOperator(M.domain, M.domain, total)


# counting ---------------------------------------------------------------------------

def _exact(lam) -> Fraction:
    """``lam`` as an exact rational; mpf values keep every bit of their own context."""
    if hasattr(lam, "man_exp"):
        man, exp = lam.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    if isinstance(lam, np.generic):
        lam = lam.item()
    return Fraction(lam)


def _floor_level(d: int, lam) -> int:
    """Largest ``K`` with ``d + 2K <= lam``, or -1."""
    q = _exact(lam)
    if q < d:
        return -1
    return math.floor((q - d) / 2)


def lattice_count_harmonic(d: int, lam, method: str = "auto") -> int:
    """``#{alpha in N^d : sum(2 alpha_j + 1) <= lam}``.

    ``method`` is ``"graded"`` (sum the per-degree multiplicities),
    ``"closed"`` (the hockey-stick closed form) or ``"auto"``.
    """
    if d < 1:
        raise ValueError("d must be positive")
    K = _floor_level(d, lam)
    if K < 0:
        return 0
    if method == "auto":
        method = "graded" if K <= 5000 else "closed"
    if method == "graded":
        return sum(math.comb(k + d - 1, d - 1) for k in range(K + 1))
    if method == "closed":
        return math.comb(K + d, d)
    raise ValueError(f"unknown method {method!r}")


def lattice_count_bruteforce(d: int, lam: float) -> int:
    """Direct enumeration of the lattice points; only for small ``lam``."""
    from itertools import product
    K = _floor_level(d, lam)
    if K < 0:
        return 0
    return sum(1 for a in product(range(K + 1), repeat=d) if d + 2 * sum(a) <= lam)


def counting_from_spectrum(result: SpectrumResult, lam: float) -> int:
    """Number of trusted eigenvalues ``<= lam``.

    Raises ``ValueError`` when ``lam`` reaches past the trusted range, where the
    count would depend on truncation.
    """
    tr = result.trusted
    if result.trusted_count < len(result.eigenvalues) and lam >= result.eigenvalues[result.trusted_count]:
        raise ValueError("lam exceeds the trusted part of the spectrum")
    return int(np.searchsorted(tr, lam, side="right"))


def series_counting_exact(P: EntireSeries, d: int, lam) -> int:
    """``N_{P(H)}(lam)``: levels ``mu = d + 2K`` with ``P(mu) <= lam``, with multiplicity.

    Found by forward evaluation of ``P`` at integer levels only.
    """
    import mpmath
    lam = mpmath.mpf(lam)
    if series_eval(P, d) > lam:
        return 0
    lo, hi = 0, 1
    while series_eval(P, d + 2 * hi) <= lam:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if series_eval(P, d + 2 * mid) <= lam:
            lo = mid
        else:
            hi = mid
    return math.comb(lo + d, d)


@dataclass(frozen=True)
class CountingBridge:
    """Both sides of ``N_{P(H)}(lam) = N_H(P^{-1}(lam))`` for one ``lam``."""

    lam: object
    exact: int
    via_inverse_lo: int
    via_inverse_hi: int
    inverse: object

    @property
    def agrees(self) -> bool:
        return self.exact == self.via_inverse_lo == self.via_inverse_hi


def counting_bridge(P: EntireSeries, d: int, lam) -> CountingBridge:
    """Compare the forward count with the lattice count at both ends of the inverse bracket."""
    inv = series_inverse(P, lam)
    return CountingBridge(lam, series_counting_exact(P, d, lam),
                          lattice_count_harmonic(d, inv.lo), lattice_count_harmonic(d, inv.hi),
                          inv.value)


# Weyl constants and predictions ---------------------------------------------------

def _phi_from(d: int, m: float, Phi) -> Callable:
    if isinstance(Phi, PolySymbol):
        principal = Phi
        if principal.dim != d:
            raise ValueError("symbol dim does not match d")

        def f(pts):
            vals = principal.evaluate(pts).real
            if np.any(vals <= 0):
                raise ValueError("principal symbol must be positive on the sphere")
            return vals ** (1.0 / m)
        return f
    if callable(Phi):
        return Phi
    const = float(Phi)
    return lambda pts: np.full(len(pts), const)


def weyl_constant(d: int, m: float = 2, Phi=1.0, q: int | None = None) -> float:
    """``c = pi / ((2 pi)^{d+1} d) * int_{S^{2d-1}} Phi^{-2d}``.

    ``Phi`` is a positive callable on unit points of shape ``(k, 2d)``, a
    constant, or a principal symbol ``a'`` (then ``Phi = a'^{1/m}``).
    """
    f = _phi_from(d, m, Phi)

    def integrand(pts):
        vals = np.asarray(f(pts), dtype=float)
        if np.any(vals <= 0):
            raise ValueError("Phi must be positive on the sphere")
        return vals ** (-2 * d)

    integral = integrate_sphere(integrand, 2 * d, q=q, rtol=1e-4)
    return math.pi / ((2 * math.pi) ** (d + 1) * d) * float(integral)


def weyl_gamma(d: int, m: float = 2, Phi=1.0, q: int | None = None) -> float:
    """``sqrt(2 pi) (2d / int Phi^{-2d})^{1/(2d)}``, reported but not tested for convergence."""
    f = _phi_from(d, m, Phi)
    integral = integrate_sphere(lambda p: np.asarray(f(p), dtype=float) ** (-2 * d), 2 * d, q=q)
    return math.sqrt(2 * math.pi) * (2 * d / float(integral)) ** (1 / (2 * d))


def predicted_counting(P: EntireSeries, c: float, d: int, m: float, lam) -> dict:
    """Weyl predictions for ``N(lam)``: ``c P^{-1}(lam)^{2d/m}`` and ``c Mhat^{-1}(ln lam)^{2d/m}``."""
    import mpmath
    lam = mpmath.mpf(lam)
    if lam < 1:
        raise ValueError("lam must be at least 1")
    inv = series_inverse(P, lam)
    pinv = c * float(inv.value) ** (2 * d / m)
    if lam == 1:
        return {"pinv": pinv, "assoc": 0.0}
    log_y = associated_inverse_log(P.weights, float(mpmath.log(lam)))
    assoc = c * math.exp(log_y * 2 * d / m)
    return {"pinv": pinv, "assoc": assoc}


def predicted_eigenvalue(P: EntireSeries, c: float, d: int, m: float, j: int) -> dict:
    """Weyl predictions for ``lambda_j``: ``P((j/c)^{m/2d})`` and ``exp(Mhat((j/c)^{m/2d}))``.

    The second form is returned as its logarithm, since it overflows doubles.
    """
    if j < 0:
        raise ValueError("j must be nonnegative")
    arg = (j / c) ** (m / (2 * d))
    pval = series_eval(P, arg)
    log_assoc = associated_function_log(P.weights, math.log(arg)) if arg > 0 else 0.0
    return {"argument": arg, "pinv": pval, "log_assoc": log_assoc}


def closed_form_counting_self_power(d: int, h: float, s: float, lnlam: float) -> float:
    """Closed-form asymptotic count for the oscillator with ``Mhat_n = h^{-n} n^{2sn}``."""
    return (math.exp(2 * d * s) / (h ** d * s ** (2 * d * s) * 2 ** (d * (2 * s + 1)) * math.factorial(d))
            * lnlam ** (2 * d * s))


def closed_form_log_eigenvalue_self_power(d: int, h: float, s: float, j: float) -> float:
    """``ln lambda_j`` from the closed-form eigenvalue asymptotics for the oscillator."""
    return (2 ** ((2 * s + 1) / (2 * s)) * s * h ** (1 / (2 * s)) * math.factorial(d) ** (1 / (2 * d * s))
            / math.e * j ** (1 / (2 * d * s)))


def coeff_decay_diagnostic(coeffs: Sequence[complex], d: int, Mtilde: WeightSequence,
                           K: float = 1.0) -> float:
    """``sup_j |c_j| exp(Mtilde(j^{1/(2d)} / K))`` over the available coefficients.

    A moderate value is evidence for the decay class; values growing with the
    range indicate the coefficients are not in it.
    """
    best = -math.inf
    for j, cj in enumerate(coeffs):
        a = abs(cj)
        if a == 0:
            continue
        rho = j ** (1 / (2 * d)) / K
        Mval = associated_function_log(Mtilde, math.log(rho)) if rho > 0 else 0.0
        best = max(best, math.log(a) + Mval)
    if best == -math.inf:
        return 0.0
    return math.exp(best) if best < 700 else math.inf

"""Parametrix recursion for elliptic polynomial symbols.

Scalar case: exact rational symbols ``p / a^k`` over a fixed positive
polynomial ``a``.  The terms

    q_0 = 1/a,   q_j = -q_0 sum_{s=1}^{j} layer_s(q_{j-s}, a)

make every composition term of ``(sum_j q_j) # a`` beyond the first vanish.

Matrix case: the same recursion with the non-commutative ordering kept,
evaluated pointwise through truncated Taylor jets since matrix inverses are
not polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EllipticityError, LeftInverseFailure
from .gaussian import GaussianRational, factorial, multi_indices_of_norm
from .matsym import MatrixSymbol
from .symbol import PolySymbol, derive


# exact polynomial division ---------------------------------------------------------

def _grlex_key(mono):
    e = mono[0] + mono[1]
    return (sum(e), e)


def poly_divmod(p: PolySymbol, a: PolySymbol) -> tuple[PolySymbol, PolySymbol]:
    """Multivariate division of ``p`` by the single polynomial ``a`` (graded lex order).

    A single polynomial is a Groebner basis of the ideal it generates, so the
    remainder is zero exactly when ``a`` divides ``p``.
    """
    if a.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    d = a.dim
    lead = max(a.terms, key=_grlex_key)
    lead_c = a.terms[lead]
    rem_terms: dict = {}
    quot_terms: dict = {}
    work = dict(p.terms)
    while work:
        mono = max(work, key=_grlex_key)
        c = work[mono]
        if all(u >= v for u, v in zip(mono[0] + mono[1], lead[0] + lead[1])):
            qm = (tuple(u - v for u, v in zip(mono[0], lead[0])),
                  tuple(u - v for u, v in zip(mono[1], lead[1])))
            qc = c / lead_c
            quot_terms[qm] = quot_terms.get(qm, GaussianRational(0)) + qc
            for am, ac in a.terms.items():
                key = (tuple(u + v for u, v in zip(qm[0], am[0])),
                       tuple(u + v for u, v in zip(qm[1], am[1])))
                val = work.get(key, GaussianRational(0)) - qc * ac
                if val.is_zero():
                    work.pop(key, None)
                else:
                    work[key] = val
        else:
            rem_terms[mono] = c
            del work[mono]
    return PolySymbol(d, quot_terms), PolySymbol(d, rem_terms)


def is_everywhere_positive(a: PolySymbol) -> bool:
    """Sufficient check: real, constant term positive, every other term an even
    monomial with positive coefficient."""
    if not a.is_real():
        return False
    zero = ((0,) * a.dim, (0,) * a.dim)
    if not a.coefficient(*zero).re > 0:
        return False
    for (xe, qe), c in a.terms.items():
        if any(e % 2 for e in xe + qe) or c.re <= 0:
            return False
    return True


# rational symbols -------------------------------------------------------------------

class RationalSymbol:
    """``numerator / base^power`` for a fixed positive polynomial ``base``.

    The representation is kept reduced: the numerator is not divisible by
    ``base`` unless ``power`` is already zero.
    """

    __slots__ = ("numerator", "power", "base")

    def __init__(self, numerator: PolySymbol, power: int, base: PolySymbol, reduce: bool = True):
        if power < 0:
            raise ValueError("power must be nonnegative")
        if numerator.dim != base.dim:
            raise DimensionMismatch("numerator and base dims differ")
        if reduce:
            numerator, power = _reduce(numerator, power, base)
        self.numerator = numerator
        self.power = power
        self.base = base

    @classmethod
    def polynomial(cls, p: PolySymbol, base: PolySymbol) -> "RationalSymbol":
        return cls(p, 0, base)

    def _same_base(self, other: "RationalSymbol"):
        if other.base is not self.base and other.base != self.base:
            raise ValueError("rational symbols have different denominator bases")

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def is_real(self) -> bool:
        return self.numerator.is_real()

    def __eq__(self, other):
        if isinstance(other, RationalSymbol):
            return (self.base == other.base and self.power == other.power
                    and self.numerator == other.numerator)
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.power == 0 and self.numerator == other
        return NotImplemented

    def __hash__(self):
        return hash((self.numerator, self.power))

    def __add__(self, other):
        return rs_add(self, other)

    def __neg__(self):
        return RationalSymbol(-self.numerator, self.power, self.base, reduce=False)

    def __sub__(self, other):
        return rs_add(self, -other)

    def __mul__(self, other):
        if isinstance(other, RationalSymbol):
            return rs_mul(self, other)
        if isinstance(other, PolySymbol):
            return rs_mul(self, RationalSymbol.polynomial(other, self.base))
        return RationalSymbol(self.numerator.scale(other), self.power, self.base, reduce=False)

    __rmul__ = __mul__

    def evaluate(self, points) -> np.ndarray:
        return self.numerator.evaluate(points) / self.base.evaluate(points) ** self.power

    def size(self) -> int:
        """Number of numerator terms, a rough measure of expression growth."""
        return len(self.numerator)

    def __repr__(self):
        return f"RationalSymbol(({self.numerator}) / a^{self.power})"


def _reduce(p: PolySymbol, k: int, a: PolySymbol) -> tuple[PolySymbol, int]:
    if p.is_zero():
        return p, 0
    while k > 0:
        quot, rem = poly_divmod(p, a)
        if not rem.is_zero():
            break
        p, k = quot, k - 1
    return p, k


def rs_reduce(r: RationalSymbol) -> RationalSymbol:
    return RationalSymbol(r.numerator, r.power, r.base)


def rs_add(r: RationalSymbol, s: RationalSymbol) -> RationalSymbol:
    r._same_base(s)
    k = max(r.power, s.power)
    num = r.numerator * (r.base ** (k - r.power)) + s.numerator * (r.base ** (k - s.power))
    return RationalSymbol(num, k, r.base)


def rs_mul(r: RationalSymbol, s: RationalSymbol) -> RationalSymbol:
    r._same_base(s)
    return RationalSymbol(r.numerator * s.numerator, r.power + s.power, r.base)


def _rs_derive_once(r: RationalSymbol, x_order, xi_order) -> RationalSymbol:
    # d(p/a^k) = (a dp - k p da) / a^{k+1}
    a = r.base
    dp = derive(r.numerator, x_order, xi_order)
    if r.power == 0:
        return RationalSymbol(dp, 0, a)
    da = derive(a, x_order, xi_order)
    num = a * dp - (r.numerator * da).scale(r.power)
    return RationalSymbol(num, r.power + 1, a)


def rs_derive(r: RationalSymbol, x_order: Sequence[int], xi_order: Sequence[int]) -> RationalSymbol:
    """Exact partial derivative ``d_x^x_order d_xi^xi_order r``."""
    d = r.base.dim
    out = r
    for k in range(d):
        for _ in range(x_order[k]):
            e = tuple(int(i == k) for i in range(d))
            out = _rs_derive_once(out, e, (0,) * d)
        for _ in range(xi_order[k]):
            e = tuple(int(i == k) for i in range(d))
            out = _rs_derive_once(out, (0,) * d, e)
    return out


# sharp layers with a polynomial right factor ------------------------------------------

def _layer_pairs(d: int, l: int):
    """``(alpha, beta, coefficient)`` with ``|alpha + beta| = l`` for the sharp layer.

    The coefficient collects ``(-1)^|beta| / (alpha! beta! 2^l)`` and the
    ``i^{-l}`` coming from the two ``D`` derivatives.
    """
    for la in range(l + 1):
        for alpha in multi_indices_of_norm(la, d):
            for beta in multi_indices_of_norm(l - la, d):
                c = Fraction((-1) ** sum(beta), math.prod(factorial(v) for v in alpha + beta) * 2 ** l)
                yield alpha, beta, GaussianRational(c).times_i_power(-l)


def layer_rational_poly(q: RationalSymbol, a: PolySymbol, l: int) -> RationalSymbol:
    """``l``-th sharp layer of ``q # a``: ``sum c d_xi^alpha d_x^beta q * d_xi^beta d_x^alpha a``."""
    d = a.dim
    total = RationalSymbol(PolySymbol.zero(d), 0, q.base)
    for alpha, beta, c in _layer_pairs(d, l):
        da = derive(a, alpha, beta)
        if da.is_zero():
            continue
        dq = rs_derive(q, beta, alpha)
        if dq.is_zero():
            continue
        total = total + (dq * da) * c
    return total


def parametrix_terms(a: PolySymbol, J: int, assume_positive: bool = False) -> list[RationalSymbol]:
    """``q_0 .. q_J`` of the left parametrix of ``a``.

    ``a`` must be everywhere positive; the sufficient structural check of
    :func:`is_everywhere_positive` is applied unless ``assume_positive``.
    """
    if J < 0:
        raise ValueError("J must be nonnegative")
    if not assume_positive and not is_everywhere_positive(a):
        raise EllipticityError("parametrix needs an everywhere-positive symbol")
    one = PolySymbol.constant(a.dim)
    q0 = RationalSymbol(one, 1, a)
    qs = [q0]
    for j in range(1, J + 1):
        acc = RationalSymbol(PolySymbol.zero(a.dim), 0, a)
        for s in range(1, j + 1):
            acc = acc + layer_rational_poly(qs[j - s], a, s)
        qs.append(-(q0 * acc))
    return qs


@dataclass
class LeftInverseReport:
    J: int
    c0_is_one: bool
    max_nonzero_k: int | None
    term_sizes: list[int] = field(default_factory=list)
    denominator_powers: list[int] = field(default_factory=list)
    all_real: bool = True

    def to_dict(self) -> dict:
        return {"J": self.J, "c0_is_one": self.c0_is_one, "max_nonzero_k": self.max_nonzero_k,
                "term_sizes": self.term_sizes, "denominator_powers": self.denominator_powers,
                "all_real": self.all_real}


def composition_terms(qs: Sequence[RationalSymbol], a: PolySymbol) -> list[RationalSymbol]:
    """``c_k = sum_{s + l = k} layer_l(q_s, a)`` for ``k = 0 .. len(qs) - 1``."""
    out = []
    for k in range(len(qs)):
        acc = RationalSymbol(PolySymbol.zero(a.dim), 0, a)
        for s in range(k + 1):
            acc = acc + layer_rational_poly(qs[s], a, k - s)
        out.append(acc)
    return out


def verify_left_inverse(a: PolySymbol, J: int, raise_on_failure: bool = True,
                        assume_positive: bool = False) -> LeftInverseReport:
    """Check ``c_0 = 1`` and ``c_k = 0`` for ``1 <= k <= J`` exactly."""
    qs = parametrix_terms(a, J, assume_positive=assume_positive)
    cs = composition_terms(qs, a)
    c0_ok = cs[0] == 1
    bad = [k for k in range(1, J + 1) if not cs[k].is_zero()]
    report = LeftInverseReport(J, c0_ok, max(bad) if bad else None,
                               [q.size() for q in qs], [q.power for q in qs],
                               all(q.is_real() for q in qs))
    if raise_on_failure:
        if not c0_ok:
            raise LeftInverseFailure(0, cs[0])
        if bad:
            raise LeftInverseFailure(bad[0], cs[bad[0]])
    return report


# matrix parametrix on a grid ---------------------------------------------------------

class _Jets:
    """Truncated Taylor jets of matrix functions at many points at once.

    A jet stores, for each multi-index ``gamma`` in ``2d`` variables with
    ``|gamma| <= order``, the array of Taylor coefficients
    ``d^gamma f / gamma!`` with shape ``(points, n, n)``.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.indices = [g for k in range(order + 1) for g in multi_indices_of_norm(k, nvars)]
        self.pos = {g: i for i, g in enumerate(self.indices)}
        # product table: (i, j, k) with gamma_i + gamma_j = gamma_k
        self.table = []
        for i, g in enumerate(self.indices):
            for j, h in enumerate(self.indices):
                s = tuple(u + v for u, v in zip(g, h))
                if sum(s) <= order:
                    self.table.append((i, j, self.pos[s]))

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        out = np.zeros_like(A)
        for i, j, k in self.table:
            out[k] += A[i] @ B[j]
        return out

    def inverse(self, A: np.ndarray) -> np.ndarray:
        inv0 = np.linalg.inv(A[0])
        # A = A0 (I + N) with N having zero constant term; invert by a finite Neumann series
        Nj = np.zeros_like(A)
        for k in range(1, len(self.indices)):
            Nj[k] = inv0 @ A[k]
        ident = np.zeros_like(A)
        ident[0] = np.broadcast_to(np.eye(A.shape[-1]), A[0].shape)
        out = ident.copy()
        power = ident.copy()
        for _ in range(self.order):
            power = -self.mul(power, Nj)
            out = out + power
        right = np.zeros_like(A)
        right[0] = inv0
        return self.mul(out, right)

    def derivative(self, A: np.ndarray, gamma: Sequence[int]) -> np.ndarray:
        """Jet of ``d^gamma f``; entries above ``order - |gamma|`` are zero-filled."""
        out = np.zeros_like(A)
        for k, g in enumerate(self.indices):
            src = tuple(u + v for u, v in zip(g, gamma))
            if sum(src) > self.order:
                continue
            fac = math.prod(math.perm(s, v) for s, v in zip(src, gamma))
            out[k] = A[self.pos[src]] * fac
        return out


def _taylor_jets(A: MatrixSymbol, pts: np.ndarray, jets: _Jets) -> np.ndarray:
    """Exact Taylor coefficients of the polynomial matrix ``A`` at each point."""
    d = A.dim
    out = np.empty((len(jets.indices), len(pts), A.n, A.n), dtype=complex)
    for k, g in enumerate(jets.indices):
        D = A.derivative(g[:d], g[d:])
        out[k] = D.evaluate(pts) / math.prod(factorial(v) for v in g)
    return out


@dataclass
class MatrixParametrix:
    points: np.ndarray
    terms: list[np.ndarray]        # q_j values, shape (points, n, n)
    condition: np.ndarray          # cond(A) at each point
    composition: list[np.ndarray]  # c_k values, should vanish for k >= 1

    def max_composition_error(self) -> float:
        errs = [np.abs(self.composition[0] - np.eye(self.composition[0].shape[-1])).max()]
        errs += [np.abs(c).max() for c in self.composition[1:]]
        return float(max(errs))


def matrix_parametrix_eval(A: MatrixSymbol, points, J: int, variant: str = "left",
                           singular_tol: float = 1e-12) -> MatrixParametrix:
    """Pointwise values of the matrix parametrix terms ``q_0 .. q_J``.

    ``variant="left"`` uses ``q_j = -sum layer(q_{j-s}, A) q_0`` so that
    ``(sum q_j) # A = 1``.  ``variant="right"`` uses
    ``q_j = -q_0 sum layer(A, q_{j-s})`` so that ``A # (sum q_j) = 1``.
    Each layer keeps the factor order ``d q * d A`` (or ``d A * d q``).
    The composition terms of the chosen side are returned as a residual check.
    """
    if variant not in ("left", "right"):
        raise ValueError("variant must be 'left' or 'right'")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = A.dim
    if pts.shape[-1] != 2 * d:
        raise DimensionMismatch(f"points must have last axis {2 * d}")
    vals = A.evaluate(pts)
    cond = np.linalg.cond(vals)
    dets = np.abs(np.linalg.det(vals))
    if np.any(dets < singular_tol) or not np.all(np.isfinite(cond)):
        raise EllipticityError("matrix symbol is singular at a grid point")
    # jets in variables (x_1..x_d, xi_1..xi_d); q_j needs derivatives up to J - j
    jets = _Jets(2 * d, J)
    Aj = _taylor_jets(A, pts, jets)
    q = [jets.inverse(Aj)]
    pairs = {l: list(_layer_pairs(d, l)) for l in range(1, J + 1)}

    def layer(left: np.ndarray, right: np.ndarray, l: int) -> np.ndarray:
        # d_xi^alpha D_x^beta left * d_xi^beta D_x^alpha right
        acc = np.zeros_like(left)
        for alpha, beta, c in pairs[l]:
            dl = jets.derivative(left, beta + alpha)
            dr = jets.derivative(right, alpha + beta)
            acc = acc + complex(c) * jets.mul(dl, dr)
        return acc

    for j in range(1, J + 1):
        acc = np.zeros_like(Aj)
        for s in range(1, j + 1):
            if variant == "left":
                acc = acc + layer(q[j - s], Aj, s)
            else:
                acc = acc + layer(Aj, q[j - s], s)
        q.append(-(jets.mul(acc, q[0]) if variant == "left" else jets.mul(q[0], acc)))
    comp = []
    for k in range(J + 1):
        acc = jets.mul(q[k], Aj) if variant == "left" else jets.mul(Aj, q[k])
        for s in range(k):
            acc = acc + (layer(q[s], Aj, k - s) if variant == "left" else layer(Aj, q[s], k - s))
        comp.append(acc[0])
    return MatrixParametrix(pts, [t[0] for t in q], cond, comp)


def default_grid(d: int, radii: Sequence[float] = (1.0, 2.0, 4.0), level: int = 3) -> np.ndarray:
    """Product-rule nodes on spheres of a few radii, in ``(x, xi)`` coordinates."""
    from .sphere import sphere_rule
    return np.vstack([sphere_rule(2 * d, level, r)[0] for r in radii])

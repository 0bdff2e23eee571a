"""Exact polynomial phase-space symbols and the Weyl sharp product.

A symbol in ``d`` dimensions is a polynomial in ``w = (x, xi)`` with
``x, xi`` in R^d.  Each term is keyed by the pair ``(x_exp, xi_exp)`` of
exponent tuples and carries a :class:`GaussianRational` coefficient.  No
floating point is involved anywhere in this module.

The sharp product is the finite bidifferential expansion

    (a # b)_l = sum_{|alpha+beta| = l} (-1)^|beta| / (alpha! beta! 2^l)
                * d_xi^alpha D_x^beta a * d_xi^beta D_x^alpha b,

with ``D = -i d``.  For polynomials the sum over ``l`` terminates at
``deg a + deg b``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from itertools import combinations_with_replacement, product
from collections import Counter
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch
from .gaussian import (ONE, ZERO, GaussianRational, factorial,
                       fraction_to_str, multi_factorial)

Monomial = tuple[tuple[int, ...], tuple[int, ...]]


class PolySymbol:
    """Sparse exact polynomial in the phase-space variables ``(x, xi)``.

    Parameters
    ----------
    dim : int
        Configuration dimension ``d``; the symbol lives on R^{2d}.
    terms : mapping
        ``{(x_exp, xi_exp): coefficient}``.  Zero coefficients are dropped,
        so two symbols are equal exactly when their term maps are equal.
    """

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[Monomial, object] | None = None):
        if dim < 1:
            raise ValueError("dim must be positive")
        clean: dict[Monomial, GaussianRational] = {}
        for key, c in (terms or {}).items():
            xe, qe = key
            xe, qe = tuple(int(v) for v in xe), tuple(int(v) for v in qe)
            if len(xe) != dim or len(qe) != dim:
                raise DimensionMismatch(f"monomial {key} does not have dim {dim}")
            if min(xe + qe, default=0) < 0:
                raise ValueError(f"negative exponent in {key}")
            c = GaussianRational.coerce(c)
            if c.is_zero():
                continue
            k = (xe, qe)
            if k in clean:
                c = clean[k] + c
                if c.is_zero():
                    del clean[k]
                    continue
            clean[k] = c
        self.dim = dim
        self._terms = clean
        self._hash = None

    # construction ---------------------------------------------------------
    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "PolySymbol":
        # trusted path: terms already normalized
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, dim: int, c=1) -> "PolySymbol":
        zero = (0,) * dim
        return cls(dim, {(zero, zero): c})

    @classmethod
    def zero(cls, dim: int) -> "PolySymbol":
        return cls._raw(dim, {})

    @classmethod
    def x(cls, k: int, dim: int) -> "PolySymbol":
        """The coordinate ``x_k`` (0-based ``k``)."""
        e = tuple(int(i == k) for i in range(dim))
        return cls(dim, {(e, (0,) * dim): 1})

    @classmethod
    def xi(cls, k: int, dim: int) -> "PolySymbol":
        """The coordinate ``xi_k`` (0-based ``k``)."""
        e = tuple(int(i == k) for i in range(dim))
        return cls(dim, {((0,) * dim, e): 1})

    @classmethod
    def harmonic(cls, dim: int) -> "PolySymbol":
        """``|x|^2 + |xi|^2``, the harmonic oscillator symbol."""
        out = cls.zero(dim)
        for k in range(dim):
            out = out + cls.x(k, dim) ** 2 + cls.xi(k, dim) ** 2
        return out

    # accessors ------------------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, GaussianRational]:
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(xe) + sum(qe) for xe, qe in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        return all(c.is_real() for c in self._terms.values())

    def coefficient(self, x_exp: Sequence[int], xi_exp: Sequence[int]) -> GaussianRational:
        return self._terms.get((tuple(x_exp), tuple(xi_exp)), ZERO)

    def homogeneous_part(self, deg: int) -> "PolySymbol":
        return PolySymbol._raw(self.dim, {k: c for k, c in self._terms.items()
                                          if sum(k[0]) + sum(k[1]) == deg})

    def principal_part(self) -> "PolySymbol":
        return self.homogeneous_part(self.degree)

    # ring operations --------------------------------------------------------
    def _check(self, other: "PolySymbol"):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dims differ: {self.dim} vs {other.dim}")

    def _lift(self, other) -> "PolySymbol":
        if isinstance(other, PolySymbol):
            self._check(other)
            return other
        return PolySymbol.constant(self.dim, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            v = out.get(k)
            v = c if v is None else v + c
            if v.is_zero():
                out.pop(k, None)
            else:
                out[k] = v
        return PolySymbol._raw(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol._raw(self.dim, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "PolySymbol":
        c = GaussianRational.coerce(c)
        if c.is_zero():
            return PolySymbol.zero(self.dim)
        return PolySymbol._raw(self.dim, {k: v * c for k, v in self._terms.items()})

    def __mul__(self, other):
        """Pointwise (commutative) product; use :func:`star` for ``#``."""
        if not isinstance(other, PolySymbol):
            return self.scale(other)
        self._check(other)
        out: dict[Monomial, GaussianRational] = {}
        for (xa, qa), ca in self._terms.items():
            for (xb, qb), cb in other._terms.items():
                k = (tuple(u + v for u, v in zip(xa, xb)),
                     tuple(u + v for u, v in zip(qa, qb)))
                v = ca * cb
                if k in out:
                    v = out[k] + v
                out[k] = v
        return PolySymbol._raw(self.dim, {k: v for k, v in out.items() if not v.is_zero()})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = PolySymbol.constant(self.dim)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conj(self) -> "PolySymbol":
        return PolySymbol._raw(self.dim, {k: c.conjugate() for k, c in self._terms.items()})

    def real_part(self) -> "PolySymbol":
        return PolySymbol(self.dim, {k: GaussianRational(c.re) for k, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, PolySymbol):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self == PolySymbol.constant(self.dim, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._terms.items())))
        return self._hash

    # numerics -------------------------------------------------------------
    def evaluate(self, points) -> np.ndarray:
        """Evaluate at ``points`` of shape ``(..., 2d)`` ordered ``(x, xi)``."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != 2 * self.dim:
            raise DimensionMismatch(f"points must have last axis {2 * self.dim}")
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for (xe, qe), c in self._terms.items():
            exps = xe + qe
            mono = np.ones(pts.shape[:-1])
            for k, e in enumerate(exps):
                if e:
                    mono = mono * pts[..., k] ** e
            out = out + complex(c) * mono
        return out

    # I/O ------------------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Monomial, GaussianRational]]:
        return sorted(self._terms.items(),
                      key=lambda kv: (-(sum(kv[0][0]) + sum(kv[0][1])), kv[0]))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"x": list(xe), "xi": list(qe),
                 "re": fraction_to_str(c.re), "im": fraction_to_str(c.im)}
                for (xe, qe), c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PolySymbol":
        dim = int(data["dim"])
        terms: dict = {}
        for t in data["terms"]:
            key = (tuple(t["x"]), tuple(t["xi"]))
            c = GaussianRational(Fraction(str(t.get("re", "0"))), Fraction(str(t.get("im", "0"))))
            terms[key] = terms[key] + c if key in terms else c
        return cls(dim, terms)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "PolySymbol":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"PolySymbol(dim={self.dim}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (xe, qe), c in self.sorted_terms():
            factors = []
            for name, exps in (("x", xe), ("xi", qe)):
                for k, e in enumerate(exps):
                    if e == 1:
                        factors.append(f"{name}{k + 1}")
                    elif e > 1:
                        factors.append(f"{name}{k + 1}^{e}")
            mono = "*".join(factors)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts)


def variables(dim: int) -> tuple[list[PolySymbol], list[PolySymbol]]:
    """Coordinate symbols ``([x_1..x_d], [xi_1..xi_d])``."""
    return ([PolySymbol.x(k, dim) for k in range(dim)],
            [PolySymbol.xi(k, dim) for k in range(dim)])


# calculus ----------------------------------------------------------------

def _falling(n: int, k: int) -> int:
    return math.perm(n, k)


def derive(a: PolySymbol, x_order: Sequence[int], xi_order: Sequence[int],
           use_D: bool = False) -> PolySymbol:
    """Exact partial derivative ``d_x^x_order d_xi^xi_order a``.

    With ``use_D`` the result is multiplied by ``i^-(|x_order|+|xi_order|)``,
    i.e. ``D = -i d`` is used in every variable.
    """
    x_order, xi_order = tuple(x_order), tuple(xi_order)
    if len(x_order) != a.dim or len(xi_order) != a.dim:
        raise DimensionMismatch("derivative orders must have length dim")
    out: dict[Monomial, GaussianRational] = {}
    for (xe, qe), c in a._terms.items():
        if any(e < o for e, o in zip(xe, x_order)) or any(e < o for e, o in zip(qe, xi_order)):
            continue
        k = 1
        for e, o in zip(xe + qe, x_order + xi_order):
            k *= _falling(e, o)
        key = (tuple(e - o for e, o in zip(xe, x_order)),
               tuple(e - o for e, o in zip(qe, xi_order)))
        out[key] = c * k
    result = PolySymbol._raw(a.dim, out)
    if use_D:
        result = result.scale(ONE.times_i_power(-(sum(x_order) + sum(xi_order))))
    return result


def _bidifferential(a: PolySymbol, b: PolySymbol, layer: int | None) -> PolySymbol:
    """Sum of the sharp-product layers (all of them when ``layer`` is None)."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims differ: {a.dim} vs {b.dim}")
    d = a.dim
    acc: dict[Monomial, GaussianRational] = {}
    for (pa, qa), ca in a._terms.items():
        for (pb, qb), cb in b._terms.items():
            cab = ca * cb
            # alpha hits xi in a and x in b; beta hits x in a and xi in b
            amax = [min(u, v) for u, v in zip(qa, pb)]
            bmax = [min(u, v) for u, v in zip(pa, qb)]
            for al in product(*(range(t + 1) for t in amax)):
                la = sum(al)
                if layer is not None and la > layer:
                    continue
                ka = 1
                for i in range(d):
                    ka *= math.comb(qa[i], al[i]) * math.comb(pb[i], al[i]) * factorial(al[i])
                for be in product(*(range(t + 1) for t in bmax)):
                    lb = sum(be)
                    l = la + lb
                    if layer is not None and l != layer:
                        continue
                    k = ka
                    for i in range(d):
                        k *= math.comb(pa[i], be[i]) * math.comb(qb[i], be[i]) * factorial(be[i])
                    if lb % 2:
                        k = -k
                    coef = (cab * Fraction(k, 2 ** l)).times_i_power(-l)
                    key = (tuple(pa[i] + pb[i] - al[i] - be[i] for i in range(d)),
                           tuple(qa[i] + qb[i] - al[i] - be[i] for i in range(d)))
                    if key in acc:
                        coef = acc[key] + coef
                    acc[key] = coef
    return PolySymbol._raw(d, {k: v for k, v in acc.items() if not v.is_zero()})


def sharp_term(a: PolySymbol, b: PolySymbol, l: int) -> PolySymbol:
    """The ``l``-th layer of ``a # b``."""
    if l < 0:
        raise ValueError("layer index must be nonnegative")
    return _bidifferential(a, b, l)


def star(a: PolySymbol, b: PolySymbol) -> PolySymbol:
    """Exact Weyl sharp product ``a # b`` (all layers summed)."""
    return _bidifferential(a, b, None)


def sharp_commutator(a: PolySymbol, b: PolySymbol) -> PolySymbol:
    return star(a, b) - star(b, a)


def sharp_power_iterated(a: PolySymbol, n: int) -> PolySymbol:
    """``a^(#n)`` by repeated right multiplication; ``n == 0`` gives 1."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return PolySymbol.constant(a.dim)
    out = a
    for _ in range(n - 1):
        out = star(out, a)
    return out


def _dominated(orders: Sequence[int], monomials: Sequence[tuple[int, ...]]) -> bool:
    return any(all(e >= o for e, o in zip(mono, orders)) for mono in monomials)


def sharp_power_closed(a: PolySymbol, n: int, j: int) -> PolySymbol:
    """The ``j``-th term of ``a^{#n}`` from the closed combinatorial formula.

    The ``n - 1`` successive products contribute multi-index blocks
    ``alpha^{l,k}, beta^{l,k}`` (``1 <= k <= l <= n-1``).  One unit of
    ``alpha^{l,k}`` differentiates factor ``k`` in xi and factor ``l+1`` in
    x; ``beta^{l,k}`` does the reverse.  Configurations are enumerated with
    pruning on derivatives that already vanish, and grouped by the resulting
    per-factor derivative pattern before any polynomial is multiplied.
    """
    if n < 2:
        raise ValueError("closed form needs n >= 2; use sharp_power_iterated for n < 2")
    if j < 0:
        raise ValueError("j must be nonnegative")
    d = a.dim
    if a.is_zero():
        return PolySymbol.zero(d)
    if j == 0:
        return a ** n
    # each slot: (factor receiving xi-derivative, factor receiving x-derivative, coord, is_beta)
    slots = []
    for l in range(1, n):
        for k in range(1, l + 1):
            for i in range(d):
                slots.append((k - 1, l, i, False))
                slots.append((l, k - 1, i, True))
    monos = [xe + qe for xe, qe in a._terms]
    # per-factor orders stored as one 2d list (x orders then xi orders)
    orders = [[0] * (2 * d) for _ in range(n)]
    groups: dict[tuple, Fraction] = {}

    def dfs(t: int, remaining: int, denom: int, sign: int):
        if remaining == 0:
            key = tuple(tuple(o) for o in orders)
            groups[key] = groups.get(key, Fraction(0)) + Fraction(sign, denom)
            return
        if t == len(slots):
            return
        fx, fxx, i, is_beta = slots[t]
        # c = 0 for this slot
        dfs(t + 1, remaining, denom, sign)
        c = 0
        while c < remaining:
            c += 1
            orders[fx][d + i] += 1
            orders[fxx][i] += 1
            ok = _dominated(orders[fx], monos) and _dominated(orders[fxx], monos)
            if not ok:
                orders[fx][d + i] -= c
                orders[fxx][i] -= c
                return
            s = -sign if (is_beta and c % 2) else sign
            dfs(t + 1, remaining - c, denom * factorial(c), s)
        orders[fx][d + i] -= c
        orders[fxx][i] -= c

    dfs(0, j, 1, 1)

    cache: dict[tuple, PolySymbol] = {}

    def dpart(o: tuple[int, ...]) -> PolySymbol:
        if o not in cache:
            cache[o] = derive(a, o[:d], o[d:])
        return cache[o]

    total = PolySymbol.zero(d)
    for key, coef in groups.items():
        if coef == 0:
            continue
        prod_poly = dpart(key[0])
        for o in key[1:]:
            if prod_poly.is_zero():
                break
            prod_poly = prod_poly * dpart(o)
        total = total + prod_poly.scale(coef)
    # (2i)^-j = 2^-j * i^-j
    return total.scale(GaussianRational(Fraction(1, 2 ** j)).times_i_power(-j))


def sharp_power_closed_sum(a: PolySymbol, n: int) -> PolySymbol:
    """``a^(#n)`` as the sum of closed-form terms over ``j``."""
    if n == 0:
        return PolySymbol.constant(a.dim)
    if n == 1:
        return a
    m = max(a.degree, 0)
    out = PolySymbol.zero(a.dim)
    for j in range(n * m // 2 + 1):
        out = out + sharp_power_closed(a, n, j)
    return out


def multinomial_identity_check(d: int, n: int, j: int) -> tuple[Fraction, Fraction]:
    """Both sides of the block multinomial identity.

    The left side enumerates every assignment of nonnegative integers to the
    ``d n (n-1)`` scalar entries of the blocks ``(alpha^l, beta^l)`` with total
    ``j`` and sums ``1 / (alpha~! beta~! 2^j)``.  The right side is
    ``d^j n^j (n-1)^j / (2^j j!)``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if d < 1 or j < 0:
        raise ValueError("need d >= 1 and j >= 0")
    slots = d * n * (n - 1)
    # each multiset of j slots is one entry assignment; weight j!/prod(c!)
    acc = 0
    for combo in combinations_with_replacement(range(slots), j):
        denom = 1
        for c in Counter(combo).values():
            denom *= factorial(c)
        acc += factorial(j) // denom
    lhs = Fraction(acc, factorial(j) * 2 ** j)
    rhs = Fraction(d ** j * n ** j * (n - 1) ** j, 2 ** j * factorial(j))
    return lhs, rhs


def symbols_from_json_list(items: Iterable[Mapping]) -> list[PolySymbol]:
    return [PolySymbol.from_dict(it) for it in items]

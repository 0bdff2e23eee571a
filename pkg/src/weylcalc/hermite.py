"""Weyl quantization of polynomial symbols in a truncated Hermite basis.

The basis of ``V_N`` is ``{h_alpha : |alpha| <= N}`` ordered by total degree
and, within one degree, lexicographically descending in ``alpha``.  Because
the ordering is graded, ``V_N`` is always a prefix of ``V_{N'}`` for
``N <= N'`` and truncation is just slicing.

Quantization uses the coordinate recursion

    (x_j b)^w  = X_j b^w - (i/2) (d_{xi_j} b)^w
    (xi_j b)^w = P_j b^w + (i/2) (d_{x_j} b)^w

which follows from the first sharp-product layer with a coordinate
function.  A symbol of degree ``m`` raises Hermite degree by at most ``m``, so
columns of degree ``<= N`` are computed exactly on ``V_{N+m}``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .gaussian import multi_indices_of_norm
from .symbol import PolySymbol

ORDERING_TAG = "grlex"


@dataclass(frozen=True)
class HermiteBasisSpec:
    """Truncated Hermite basis ``{h_alpha : |alpha| <= max_degree}`` in ``dim`` variables."""

    dim: int
    max_degree: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.max_degree < 0:
            raise ValueError("max_degree must be nonnegative")

    @property
    def size(self) -> int:
        return math.comb(self.max_degree + self.dim, self.dim)

    @cached_property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        out = []
        for k in range(self.max_degree + 1):
            out.extend(multi_indices_of_norm(k, self.dim))
        return tuple(out)

    @cached_property
    def position(self) -> dict[tuple[int, ...], int]:
        return {alpha: i for i, alpha in enumerate(self.indices)}

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([sum(a) for a in self.indices], dtype=int)

    def count_up_to(self, degree: int) -> int:
        """Number of basis functions with total degree ``<= degree``."""
        if degree < 0:
            return 0
        return math.comb(min(degree, self.max_degree) + self.dim, self.dim)

    def grown(self, extra: int) -> "HermiteBasisSpec":
        return HermiteBasisSpec(self.dim, self.max_degree + extra)


@dataclass(frozen=True)
class HermiteOperator:
    """Dense matrix of an operator from ``domain`` into ``codomain``.

    Rows index ``codomain`` and columns index ``domain``, both in graded order.
    """

    domain: HermiteBasisSpec
    codomain: HermiteBasisSpec
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.domain.dim != self.codomain.dim:
            raise DimensionMismatch("domain and codomain dims differ")
        shape = (self.codomain.size, self.domain.size)
        if self.entries.shape != shape:
            raise DimensionMismatch(f"entries have shape {self.entries.shape}, expected {shape}")
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def square(self) -> "HermiteOperator":
        """Compression onto the domain (rows truncated to the domain basis)."""
        n = self.domain.size
        if self.codomain.size < n:
            raise DimensionMismatch("codomain smaller than domain")
        return HermiteOperator(self.domain, self.domain, np.array(self.entries[:n, :n]))

    def interior(self, margin: int) -> "HermiteOperator":
        return interior_block(self, margin)

    def __matmul__(self, other: "HermiteOperator") -> "HermiteOperator":
        # rows of `other` beyond our domain are discarded, so the product is
        # exact only on columns whose image under `other` fits in our domain
        if not isinstance(other, HermiteOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch("dims differ")
        k = min(self.domain.size, other.codomain.size)
        ent = self.entries[:, :k] @ other.entries[:k, :]
        return HermiteOperator(other.domain, self.codomain, ent)

    def __add__(self, other: "HermiteOperator") -> "HermiteOperator":
        if self.domain != other.domain or self.codomain != other.codomain:
            raise DimensionMismatch("operator shapes differ")
        return HermiteOperator(self.domain, self.codomain, self.entries + other.entries)

    def scale(self, c) -> "HermiteOperator":
        return HermiteOperator(self.domain, self.codomain, self.entries * c)

    def adjoint(self) -> "HermiteOperator":
        return HermiteOperator(self.codomain, self.domain, self.entries.conj().T.copy())

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        if self.domain != self.codomain:
            return False
        e = self.entries
        scale = max(1.0, float(np.abs(e).max(initial=0.0)))
        return bool(np.abs(e - e.conj().T).max(initial=0.0) <= tol * scale)

    # I/O ------------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.dim, self.domain.max_degree, self.codomain.max_degree, ORDERING_TAG])
        for row in self.entries:
            flat = []
            for z in row:
                flat.extend((repr(float(z.real)), repr(float(z.imag))))
            w.writerow(flat)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "HermiteOperator":
        rows = list(csv.reader(io.StringIO(text)))
        dim, n_dom, n_cod, tag = rows[0]
        if tag != ORDERING_TAG:
            raise ValueError(f"unsupported basis ordering {tag!r}")
        dom = HermiteBasisSpec(int(dim), int(n_dom))
        cod = HermiteBasisSpec(int(dim), int(n_cod))
        vals = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        vals = vals.reshape(cod.size, dom.size, 2) if vals.size else np.zeros((cod.size, dom.size, 2))
        return cls(dom, cod, vals[..., 0] + 1j * vals[..., 1])


def interior_block(op: HermiteOperator, margin: int) -> HermiteOperator:
    """Restrict rows and columns to Hermite degree ``<= N - margin``.

    ``N`` is the domain degree.  A degree-``m`` symbol couples Hermite degrees
    at most ``m`` apart, so with ``margin >= m`` the block is free of
    truncation effects.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    n_dom = op.domain.max_degree
    if margin > n_dom:
        raise ValueError(f"margin {margin} exceeds basis degree {n_dom}")
    spec = HermiteBasisSpec(op.dim, n_dom - margin)
    k = spec.size
    return HermiteOperator(spec, spec, np.array(op.entries[:k, :k]))


# construction ---------------------------------------------------------------

def _ladder_sparse(spec: HermiteBasisSpec) -> tuple[list[sp.csr_matrix], list[sp.csr_matrix]]:
    """Sparse ``X_k, P_k`` on ``V_N`` (square, truncated at degree ``N``)."""
    pos = spec.position
    n = spec.size
    xs, ps = [], []
    r2 = math.sqrt(2.0)
    for k in range(spec.dim):
        rows, cols, xv, pv = [], [], [], []
        for j, alpha in enumerate(spec.indices):
            # raising: A_k^dagger h_alpha = sqrt(alpha_k + 1) h_{alpha + e_k}
            up = alpha[:k] + (alpha[k] + 1,) + alpha[k + 1:]
            if up in pos:
                s = math.sqrt(alpha[k] + 1) / r2
                rows.append(pos[up]); cols.append(j); xv.append(s); pv.append(1j * s)
            if alpha[k] > 0:
                down = alpha[:k] + (alpha[k] - 1,) + alpha[k + 1:]
                s = math.sqrt(alpha[k]) / r2
                rows.append(pos[down]); cols.append(j); xv.append(s); pv.append(-1j * s)
        xs.append(sp.csr_matrix((np.array(xv, dtype=complex), (rows, cols)), shape=(n, n)))
        ps.append(sp.csr_matrix((np.array(pv, dtype=complex), (rows, cols)), shape=(n, n)))
    return xs, ps


def ladder_matrices(spec: HermiteBasisSpec) -> tuple[list[HermiteOperator], list[HermiteOperator]]:
    """Position and momentum matrices ``X_k = (A+A^*)/sqrt2``, ``P_k = (A-A^*)/(i sqrt2)``."""
    xs, ps = _ladder_sparse(spec)
    wrap = lambda m: HermiteOperator(spec, spec, m.toarray())
    return [wrap(m) for m in xs], [wrap(m) for m in ps]


class _Quantizer:
    """Memoized monomial quantization on a fixed ambient space ``V_L``."""

    def __init__(self, spec: HermiteBasisSpec):
        self.spec = spec
        self.X, self.P = _ladder_sparse(spec)
        self.ident = sp.identity(spec.size, dtype=complex, format="csr")
        self.memo: dict = {}

    def monomial(self, xe: tuple[int, ...], qe: tuple[int, ...]) -> sp.csr_matrix:
        key = (xe, qe)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        d = self.spec.dim
        if not any(xe) and not any(qe):
            out = self.ident
        else:
            # peel x variables first, then xi
            j = next((k for k in range(d) if xe[k]), None)
            if j is not None:
                rest_x = xe[:j] + (xe[j] - 1,) + xe[j + 1:]
                out = self.X[j] @ self.monomial(rest_x, qe)
                if qe[j]:
                    # d_{xi_j}(x^rest xi^q) = q_j x^rest xi^{q - e_j}
                    rest_q = qe[:j] + (qe[j] - 1,) + qe[j + 1:]
                    out = out - (0.5j * qe[j]) * self.monomial(rest_x, rest_q)
            else:
                j = next(k for k in range(d) if qe[k])
                rest_q = qe[:j] + (qe[j] - 1,) + qe[j + 1:]
                # x-exponents are all zero here, so the correction term vanishes
                out = self.P[j] @ self.monomial(xe, rest_q)
            out = out.tocsr()
        self.memo[key] = out
        return out

    def symbol(self, a: PolySymbol) -> sp.csr_matrix:
        total = sp.csr_matrix((self.spec.size, self.spec.size), dtype=complex)
        for (xe, qe), c in a.terms.items():
            total = total + complex(c) * self.monomial(xe, qe)
        return total


def quantize_sparse(a: PolySymbol, spec: HermiteBasisSpec) -> sp.csr_matrix:
    """``a^w`` as a sparse matrix from ``V_N`` into ``V_{N + deg a}``."""
    if a.dim != spec.dim:
        raise DimensionMismatch(f"symbol dim {a.dim} != basis dim {spec.dim}")
    m = max(a.degree, 0)
    q = _Quantizer(spec.grown(m))
    return q.symbol(a)[:, :spec.size]


def quantize(a: PolySymbol, spec: HermiteBasisSpec) -> HermiteOperator:
    """Weyl quantization of ``a`` restricted to ``V_N`` with values in ``V_{N+deg a}``.

    Every column is exact (up to double rounding); the square compression is
    exact on the interior block of margin ``deg a``.
    """
    m = max(a.degree, 0)
    mat = quantize_sparse(a, spec)
    return HermiteOperator(spec, spec.grown(m), mat.toarray())


def quantize_many(symbols, spec: HermiteBasisSpec, extra: int) -> list[sp.csr_matrix]:
    """Quantize several symbols on the shared ambient space ``V_{N+extra}``.

    Returns full square sparse matrices on the ambient space; columns with
    degree ``<= N`` are exact whenever ``extra >= deg``.
    """
    q = _Quantizer(spec.grown(extra))
    out = []
    for a in symbols:
        if a.dim != spec.dim:
            raise DimensionMismatch(f"symbol dim {a.dim} != basis dim {spec.dim}")
        if a.degree > extra:
            raise ValueError("symbol degree exceeds the ambient margin")
        out.append(q.symbol(a))
    return out

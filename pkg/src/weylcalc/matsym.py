"""Square matrices of polynomial symbols."""

from __future__ import annotations

import json
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch
from .symbol import PolySymbol, derive


class MatrixSymbol:
    """An ``n x n`` matrix of :class:`PolySymbol` entries sharing one ``dim``.

    Parameters
    ----------
    entries : nested sequence
        Rows of symbols; integers and Gaussian rationals are promoted to
        constant symbols.
    dim : int, optional
        Needed only when no entry is a :class:`PolySymbol`.
    """

    def __init__(self, entries: Sequence[Sequence], dim: int | None = None):
        rows = [list(r) for r in entries]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise DimensionMismatch("matrix symbol must be square and nonempty")
        dims = {e.dim for r in rows for e in r if isinstance(e, PolySymbol)}
        if dim is not None:
            dims.add(dim)
        if len(dims) != 1:
            raise DimensionMismatch(f"entries have inconsistent dims {sorted(dims)}")
        self.dim = dims.pop()
        self.n = n
        self.entries = tuple(
            tuple(e if isinstance(e, PolySymbol) else PolySymbol.constant(self.dim, e) for e in r)
            for r in rows)

    @classmethod
    def scalar(cls, a: PolySymbol) -> "MatrixSymbol":
        return cls([[a]])

    @classmethod
    def identity(cls, n: int, dim: int) -> "MatrixSymbol":
        return cls([[int(i == j) for j in range(n)] for i in range(n)], dim=dim)

    @classmethod
    def scalar_times_identity(cls, a: PolySymbol, n: int) -> "MatrixSymbol":
        zero = PolySymbol.zero(a.dim)
        return cls([[a if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def degree(self) -> int:
        return max(e.degree for r in self.entries for e in r)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if not isinstance(other, MatrixSymbol):
            return NotImplemented
        return self.dim == other.dim and self.entries == other.entries

    def __hash__(self):
        return hash((self.dim, self.entries))

    def __matmul__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        """Entrywise-pointwise matrix product (not the sharp product)."""
        if self.n != other.n or self.dim != other.dim:
            raise DimensionMismatch("matrix symbols differ in size or dim")
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = PolySymbol.zero(self.dim)
                for k in range(n):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return MatrixSymbol(out)

    def map(self, f) -> "MatrixSymbol":
        return MatrixSymbol([[f(e) for e in r] for r in self.entries])

    def derivative(self, x_order: Sequence[int], xi_order: Sequence[int]) -> "MatrixSymbol":
        return self.map(lambda e: derive(e, x_order, xi_order))

    def adjoint(self) -> "MatrixSymbol":
        """Conjugate transpose with conjugated coefficients; the symbol of ``(A^w)^*``."""
        n = self.n
        return MatrixSymbol([[self.entries[j][i].conj() for j in range(n)] for i in range(n)])

    def blockdiag(self, other: "MatrixSymbol") -> "MatrixSymbol":
        if self.dim != other.dim:
            raise DimensionMismatch("dims differ")
        zero = PolySymbol.zero(self.dim)
        n, m = self.n, other.n
        rows = [list(r) + [zero] * m for r in self.entries]
        rows += [[zero] * n + list(r) for r in other.entries]
        return MatrixSymbol(rows)

    def evaluate(self, points) -> np.ndarray:
        """Values at ``points`` of shape ``(..., 2d)`` in ``(x, xi)`` order; shape ``(..., n, n)``."""
        pts = np.asarray(points, dtype=float)
        out = np.empty(pts.shape[:-1] + (self.n, self.n), dtype=complex)
        for i, r in enumerate(self.entries):
            for j, e in enumerate(r):
                out[..., i, j] = e.evaluate(pts)
        return out

    # I/O ------------------------------------------------------------------
    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n,
                "entries": [[e.to_dict()["terms"] for e in r] for r in self.entries]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "MatrixSymbol":
        """Accept a matrix document or a plain scalar symbol document."""
        dim = int(data["dim"])
        if "entries" not in data:
            return cls.scalar(PolySymbol.from_dict(data))
        rows = [[PolySymbol.from_dict({"dim": dim, "terms": t}) for t in r] for r in data["entries"]]
        if "n" in data and int(data["n"]) != len(rows):
            raise DimensionMismatch("declared n does not match entries")
        return cls(rows, dim=dim)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "MatrixSymbol":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"MatrixSymbol(n={self.n}, dim={self.dim})"

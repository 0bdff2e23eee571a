"""Fredholm index of elliptic matrix symbols: boundary integral and operator oracle.

The boundary integral is

    ind = -(d-1)! / ((2d-1)! (2 pi i)^d) * int_{|w|=s} tr (A^{-1} dA)^{2d-1}

over the sphere in R^{2d}, oriented as the boundary of the ball with the
volume form ``dxi_1 ^ dx_1 ^ ... ^ dxi_d ^ dx_d``.  All orientation
bookkeeping lives in the coordinate order ``u = (xi_1, x_1, ..., xi_d, x_d)``
used below: with respect to ``u`` the sphere is the standard outward-oriented
boundary of the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from itertools import permutations

import numpy as np
import scipy.sparse as sp

from .errors import (EllipticityError, OracleInstability, QuadratureError,
                     ThresholdAmbiguity)
from .hermite import HermiteBasisSpec, quantize_many
from .matsym import MatrixSymbol
from .sphere import default_level, iter_sphere_rule, sphere_rule


def _u_to_w(pts_u: np.ndarray, d: int) -> np.ndarray:
    """Reorder ``(xi_1, x_1, ..., xi_d, x_d)`` into ``(x_1..x_d, xi_1..xi_d)``."""
    w = np.empty_like(pts_u)
    w[..., :d] = pts_u[..., 1::2]
    w[..., d:] = pts_u[..., 0::2]
    return w


def _u_derivatives(A: MatrixSymbol) -> list[MatrixSymbol]:
    """``dA/du_k`` for ``u = (xi_1, x_1, ..., xi_d, x_d)``."""
    d = A.dim
    out = []
    for i in range(d):
        e = tuple(int(k == i) for k in range(d))
        z = (0,) * d
        out.append(A.derivative(z, e))   # d/dxi_i
        out.append(A.derivative(e, z))   # d/dx_i
    return out


@dataclass
class EllipticityReport:
    radius: float
    min_abs_det: float
    max_condition: float
    samples: int
    ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_ellipticity(A: MatrixSymbol, s: float, sample_count: int = 2000,
                      seed: int = 0, threshold: float = 1e-10) -> EllipticityReport:
    """Sample ``|det A|`` on ``|w| = s`` and on shells ``s..2s``.

    Points are random directions from a seeded generator plus the nodes of a
    coarse product rule, so the report is reproducible.
    """
    if s <= 0:
        raise ValueError("radius must be positive")
    n = 2 * A.dim
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(sample_count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    nodes, _ = sphere_rule(n, 6)
    dirs = np.vstack([dirs, nodes])
    radii = np.concatenate([[s], np.linspace(s, 2 * s, 5)[1:]])
    pts = np.concatenate([r * dirs for r in radii])
    vals = A.evaluate(pts)
    dets = np.abs(np.linalg.det(vals))
    conds = np.linalg.cond(vals)
    min_det = float(dets.min())
    return EllipticityReport(float(s), min_det, float(np.max(conds)), int(len(pts)),
                             bool(min_det >= threshold and np.all(np.isfinite(conds))))


def _form_density(A: MatrixSymbol, derivs: list[MatrixSymbol], pts_u: np.ndarray) -> np.ndarray:
    """Pull back of ``tr (A^{-1} dA)^{2d-1}`` contracted with the outward normal.

    For a ``(2d-1)``-form ``sum_i eta_i du_1^..^(omit du_i)^..^du_{2d}`` the
    surface integral is ``int sum_i (-1)^i nu_i eta_i dS`` (0-based ``i``).
    ``eta_i`` is the antisymmetrized trace of the ordered matrix product.
    """
    d = A.dim
    n2 = 2 * d
    w = _u_to_w(pts_u, d)
    Ainv = np.linalg.inv(A.evaluate(w))
    omegas = [Ainv @ D.evaluate(w) for D in derivs]
    radius = np.linalg.norm(pts_u, axis=1)
    nu = pts_u / radius[:, None]
    total = np.zeros(len(pts_u), dtype=complex)
    for i in range(n2):
        rest = [k for k in range(n2) if k != i]
        eta = np.zeros(len(pts_u), dtype=complex)
        for perm in permutations(range(len(rest))):
            sign = _perm_sign(perm)
            prod = omegas[rest[perm[0]]]
            for k in perm[1:]:
                prod = prod @ omegas[rest[k]]
            eta += sign * np.trace(prod, axis1=-2, axis2=-1)
        total += (-1) ** i * nu[:, i] * eta
    return total


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


@dataclass
class IndexIntegral:
    value: float
    imag: float
    rounded: int
    distance: float
    coarse: float

    def to_dict(self) -> dict:
        return asdict(self)


def index_integral(A: MatrixSymbol, s: float, quad_level: int | None = None,
                   check: bool = True, rtol: float = 1e-4) -> IndexIntegral:
    """Index from the boundary integral on the sphere of radius ``s``.

    Evaluated at quadrature levels ``quad_level`` and ``2 * quad_level``;
    disagreement above ``rtol`` (absolute, since the value is an integer)
    raises :class:`QuadratureError`.
    """
    if check:
        rep = check_ellipticity(A, s)
        if not rep.ok:
            raise EllipticityError(f"symbol is not invertible near radius {s}: min |det| = {rep.min_abs_det:g}")
    d = A.dim
    derivs = _u_derivatives(A)
    const = -math.factorial(d - 1) / (math.factorial(2 * d - 1) * (2j * math.pi) ** d)
    vals = []
    q = default_level(2 * d) if quad_level is None else quad_level
    for level in (q, 2 * q):
        total = sum(np.sum(wts * _form_density(A, derivs, pts))
                    for pts, wts in iter_sphere_rule(2 * d, level, s))
        vals.append(const * total)
    coarse, fine = vals
    if abs(fine - coarse) > rtol:
        raise QuadratureError(f"index integral levels disagree: {coarse} vs {fine}")
    r = int(round(fine.real))
    return IndexIntegral(float(fine.real), float(fine.imag), r, float(abs(fine - r)), float(coarse.real))


# operator oracle -------------------------------------------------------------

def _block_quantization(A: MatrixSymbol, N: int) -> np.ndarray:
    """Dense block matrix of ``A^w`` from ``(V_N)^n`` into ``(V_{N+m})^n``."""
    m = max(A.degree, 0)
    spec = HermiteBasisSpec(A.dim, N)
    mats = quantize_many([e for r in A.entries for e in r], spec, m)
    cols = spec.size
    blocks = [[mats[i * A.n + j][:, :cols] for j in range(A.n)] for i in range(A.n)]
    return sp.bmat(blocks, format="csr").toarray()


def _kernel_dim(M: np.ndarray, rel_tau: float, gap: float) -> tuple[int, float, float]:
    sv = np.linalg.svd(M, compute_uv=False)
    smax = float(sv[0]) if sv.size else 0.0
    tau = rel_tau * smax
    ambiguous = sv[(sv > tau / gap) & (sv < tau * gap)]
    if ambiguous.size:
        raise ThresholdAmbiguity(f"singular value {ambiguous[0]:.3e} within {gap}x of threshold {tau:.3e}")
    rank = int(np.sum(sv > tau))
    return M.shape[1] - rank, smax, tau


@dataclass
class OracleResult:
    index: int
    N: int
    kernel: int
    cokernel: int
    kernel_next: int
    cokernel_next: int

    def to_dict(self) -> dict:
        return asdict(self)


def operator_index_oracle(A: MatrixSymbol, N: int, step: int = 4, rel_tau: float = 1e-8,
                          gap: float = 10.0) -> OracleResult:
    """Index as ``dim ker A^w - dim ker (A^*)^w`` from truncated sections.

    Both operators are truncated the same way, from degree ``<= N`` into
    degree ``<= N + m``, where each truncation is exact.  The count is repeated
    at ``N + step`` and must agree.
    """
    adj = A.adjoint()
    counts = []
    for size in (N, N + step):
        k, _, _ = _kernel_dim(_block_quantization(A, size), rel_tau, gap)
        c, _, _ = _kernel_dim(_block_quantization(adj, size), rel_tau, gap)
        counts.append((k, c))
    (k0, c0), (k1, c1) = counts
    if k0 - c0 != k1 - c1:
        raise OracleInstability(f"index changes with truncation: {k0 - c0} at N={N}, {k1 - c1} at N={N + step}")
    return OracleResult(k0 - c0, N, k0, c0, k1, c1)

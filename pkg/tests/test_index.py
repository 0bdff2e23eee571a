from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylcalc.errors import EllipticityError, ThresholdAmbiguity
from weylcalc.gaussian import GaussianRational
from weylcalc.index import check_ellipticity, index_integral, operator_index_oracle
from weylcalc.matsym import MatrixSymbol
from weylcalc.symbol import PolySymbol

I = GaussianRational(0, 1)


def creation_power(k: int) -> MatrixSymbol:
    z = PolySymbol.x(0, 1) - PolySymbol.xi(0, 1).scale(I)
    return MatrixSymbol(((z ** k,),))


def quaternion_symbol() -> MatrixSymbol:
    """[[w1 + i w2, -(w3 - i w4)], [w3 + i w4, w1 - i w2]] with w = (x1, x2, xi1, xi2)."""
    w1, w2 = PolySymbol.x(0, 2), PolySymbol.x(1, 2)
    w3, w4 = PolySymbol.xi(0, 2), PolySymbol.xi(1, 2)
    return MatrixSymbol(((w1 + w2.scale(I), -(w3 - w4.scale(I))),
                         (w3 + w4.scale(I), w1 - w2.scale(I))))


def test_ellipticity_report():
    rep = check_ellipticity(creation_power(1), 1.0)
    assert rep.ok and rep.min_abs_det == pytest.approx(1.0, rel=1e-12)
    bad = MatrixSymbol(((PolySymbol.x(0, 1) - PolySymbol.constant(1),),))
    assert not check_ellipticity(bad, 1.0).ok
    with pytest.raises(EllipticityError):
        index_integral(bad, 1.0)


@pytest.mark.parametrize("d", [1, 2])
def test_identity_has_index_zero(d):
    A = MatrixSymbol.identity(2, d)
    assert index_integral(A, 1.0).value == pytest.approx(0.0, abs=1e-12)
    assert operator_index_oracle(A, 6).index == 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_creation_powers(k):
    r = index_integral(creation_power(k), 1.0)
    assert r.value == pytest.approx(-k, abs=1e-10)
    assert abs(r.imag) < 1e-10
    o = operator_index_oracle(creation_power(k), 30)
    # the raising operator is injective; its adjoint kills the first k levels
    assert (o.kernel, o.cokernel, o.index) == (0, k, -k)


def test_annihilation_is_opposite():
    A = creation_power(1).adjoint()
    assert index_integral(A, 1.0).rounded == 1
    assert operator_index_oracle(A, 20).index == 1


def test_quaternion_symbol_agrees():
    A = quaternion_symbol()
    r = index_integral(A, 1.0)
    o = operator_index_oracle(A, 8)
    assert o.index == -1
    assert abs(r.value - o.index) <= 1e-3
    assert r.rounded == o.index


def test_pair_ordering_flips_sign():
    # the same matrix in the variables (x1, xi1, x2, xi2) has the opposite index
    w1, w2 = PolySymbol.x(0, 2), PolySymbol.xi(0, 2)
    w3, w4 = PolySymbol.x(1, 2), PolySymbol.xi(1, 2)
    A = MatrixSymbol(((w1 + w2.scale(I), -(w3 - w4.scale(I))),
                      (w3 + w4.scale(I), w1 - w2.scale(I))))
    assert index_integral(A, 1.0).rounded == 1
    assert operator_index_oracle(A, 8).index == 1


@pytest.mark.parametrize("A", [creation_power(2), quaternion_symbol()], ids=["d1", "d2"])
def test_radius_independence(A):
    assert index_integral(A, 1.0).value == pytest.approx(index_integral(A, 2.0).value, abs=1e-6)


def test_direct_sum_additivity():
    A, B = creation_power(1), creation_power(2).adjoint()
    S = A.blockdiag(B)
    expect = -1 + 2
    assert index_integral(S, 1.0).value == pytest.approx(expect, abs=1e-6)
    assert operator_index_oracle(S, 20).index == expect


def test_adjoint_negates():
    A = quaternion_symbol()
    assert operator_index_oracle(A.adjoint(), 8).index == -operator_index_oracle(A, 8).index
    assert index_integral(A.adjoint(), 1.0).value == pytest.approx(-index_integral(A, 1.0).value, abs=1e-6)


@st.composite
def elliptic_scalars_d2(draw):
    """1 + |w|^2 perturbed by small real and imaginary linear terms; nonvanishing everywhere."""
    out = PolySymbol.constant(2) + PolySymbol.harmonic(2)
    gens = [PolySymbol.x(0, 2), PolySymbol.x(1, 2), PolySymbol.xi(0, 2), PolySymbol.xi(1, 2)]
    for g in gens:
        re = draw(st.integers(-2, 2))
        im = draw(st.integers(-2, 2))
        out = out + g.scale(GaussianRational(re, im) * GaussianRational(1, 4))
    return MatrixSymbol(((out,),))


@given(elliptic_scalars_d2())
@settings(max_examples=5)
def test_scalar_symbols_in_d2_vanish(A):
    assert index_integral(A, 3.0).value == pytest.approx(0.0, abs=1e-6)


def test_self_adjoint_symbol_has_index_zero():
    assert operator_index_oracle(MatrixSymbol(((PolySymbol.x(0, 1),),)), 10).index == 0


def test_oracle_refuses_ambiguous_threshold():
    # a huge gap factor makes every small singular value look ambiguous
    with pytest.raises(ThresholdAmbiguity):
        operator_index_oracle(creation_power(1), 10, gap=1e9)

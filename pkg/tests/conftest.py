from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from weylcalc.gaussian import GaussianRational
from weylcalc.symbol import PolySymbol

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def monomials(dim: int, max_degree: int):
    """All (x_exp, xi_exp) pairs of total degree <= max_degree."""
    out = []

    def rec(prefix, left):
        if len(prefix) == 2 * dim:
            out.append((tuple(prefix[:dim]), tuple(prefix[dim:])))
            return
        for e in range(left + 1):
            rec(prefix + [e], left - e)

    rec([], max_degree)
    return out


small_rational = st.builds(Fraction, st.integers(-4, 4), st.integers(1, 3))
gaussian = st.builds(GaussianRational, small_rational, small_rational)


@st.composite
def symbols(draw, dim=None, max_degree=3, real=False, max_terms=5):
    d = draw(st.sampled_from([1, 2])) if dim is None else dim
    monos = monomials(d, max_degree)
    keys = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=max_terms, unique=True))
    coef = st.builds(GaussianRational, small_rational, st.just(Fraction(0))) if real else gaussian
    return PolySymbol(d, {k: draw(coef) for k in keys})


@st.composite
def symbol_pairs(draw, max_degree=3, n=2):
    d = draw(st.sampled_from([1, 2]))
    return tuple(draw(symbols(dim=d, max_degree=max_degree)) for _ in range(n))


@pytest.fixture
def harmonic1():
    return PolySymbol.harmonic(1)


# acceptance reporting --------------------------------------------------------------

@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", {})

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        lines[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])

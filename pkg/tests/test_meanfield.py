import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rydscale.meanfield import (
    chi,
    classical_fraction,
    correlation_length_mf,
    eos_alpha,
    eos_roots,
    eos_solve,
)


def bisect(fn, lo, hi, n=400):
    # plain bisection on a sign change, deliberately independent of the solver
    flo = fn(lo)
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        if (fn(mid) > 0) == (flo > 0):
            lo, flo = mid, fn(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_zero_detuning_closed_form():
    assert eos_solve(1e-5, 0.0).f_R == pytest.approx(1e-2, rel=1e-13)
    assert eos_solve(1.0, 0.0).f_R == pytest.approx(1.0, rel=1e-13)


def test_negative_detuning_bisection_oracle():
    f = eos_solve(1e-2, -1.0).f_R
    ref = bisect(lambda x: x**2.5 + x**0.5 - 1e-2, 0.0, 1.0)
    assert f == pytest.approx(ref, rel=1e-12)
    assert f == pytest.approx(1e-4, rel=1e-3)


def test_classical_limit():
    assert eos_solve(1e-12, 1.0).f_R == pytest.approx(1.0, abs=1e-6)
    assert eos_solve(0.0, 1.0).branch == "classical"
    assert classical_fraction(0.0, 3, 6) == 0.0
    assert classical_fraction(1.0, 3, 6) == 1.0
    assert classical_fraction(0.64, 3, 6) == pytest.approx(0.8, rel=1e-15)
    assert classical_fraction(-2.0, 3, 6) == 0.0


def test_cap_flags_saturation():
    s = eos_solve(10.0, 0.0)
    assert s.f_R == 1.0 and s.saturated and s.unclipped > 1
    assert eos_solve(10.0, 0.0, cap=False).f_R == pytest.approx(10.0**0.4)


def test_negative_alpha_rejected():
    with pytest.raises(ValueError):
        eos_solve(-1e-3, 0.0)


@given(
    alpha=st.floats(1e-9, 1e-1),
    delta=st.floats(-50.0, 50.0),
    dp=st.sampled_from([(1, 6), (2, 6), (3, 6), (3, 4)]),
)
def test_residual_contract(alpha, delta, dp):
    d, p = dp
    s = eos_solve(alpha, delta, d, p, cap=False)
    assert eos_alpha(s.f_R, delta, d, p) == pytest.approx(alpha, rel=1e-12)
    assert s.f_R >= classical_fraction(delta, d, p) * (1 - 1e-14)


@given(alpha=st.floats(1e-8, 1e-2), delta=st.floats(-10, 10), k=st.floats(1.01, 3.0))
def test_monotonic(alpha, delta, k):
    f = eos_solve(alpha, delta, cap=False).f_R
    assert eos_solve(alpha * k, delta, cap=False).f_R > f
    assert eos_solve(alpha, delta + (k - 1), cap=False).f_R > f


def test_extra_roots_for_positive_detuning():
    roots = eos_roots(1e-3, 1.0)
    assert [r.branch for r in roots] == ["physical", "unphysical_low", "unphysical_mid"]
    for r in roots:
        assert eos_alpha(r.f_R, 1.0, 3, 6) == pytest.approx(1e-3, rel=1e-9)
    assert roots[1].f_R < roots[2].f_R < roots[0].f_R


@pytest.mark.parametrize("dp", [(1, 6), (3, 6), (2, 5)])
def test_chi_at_zero(dp):
    assert chi(0.0, *dp) == pytest.approx(1.0, abs=1e-10)


def test_chi_asymptotics():
    assert chi(1e4) / 1e4**0.5 == pytest.approx(1.0, abs=0.01)
    assert chi(-1e2) * 1e4 == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("y", np.linspace(-100, 100, 21))
def test_chi_alpha_ref_independence(y):
    assert chi(y, alpha_ref=1e-6) == pytest.approx(chi(y, alpha_ref=1e-8), rel=1e-6)


def test_powerlaw_slope_of_eos():
    a = np.geomspace(1e-6, 1e-2, 9)
    f = [eos_solve(x, 0.0).f_R for x in a]
    slope = np.polyfit(np.log(a), np.log(f), 1)[0]
    assert slope == pytest.approx(0.4, abs=1e-12)


def test_correlation_length():
    assert correlation_length_mf(1.0, 3) == 1.0
    assert correlation_length_mf(1e-3, 3) == pytest.approx(10.0)
    assert correlation_length_mf(1e-2, 1) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        correlation_length_mf(0.0, 3)
    assert math.isfinite(correlation_length_mf(1e-300, 3))

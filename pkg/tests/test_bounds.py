import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diobound import bounds, cutoff, eigen
from diobound.errors import ArgumentError, ResolutionError
from diobound.symbol import Symbol

from oracles import ols_slope


@pytest.fixture(scope="module")
def lshape_pairs():
    m = eigen.lshape_mask(64)
    return eigen.solve(eigen.ProblemSpec(m), 8)


# interior_ratio --------------------------------------------------------------------------


def test_ratio_ground_mode():
    p = bounds.interior_ratio(eigen.rectangle_oracle(1, 1), 0.3)
    assert p.ratio == pytest.approx(2 / math.pi, rel=1e-12)
    assert p.sup == 1.0 and p.l2 == pytest.approx(math.pi / 2, rel=1e-12)


@pytest.mark.parametrize("m,n", [(1, 1), (2, 1), (2, 2), (4, 2), (4, 4), (8, 4)])
def test_ratio_independent_of_lambda(m, n):
    # maxima at odd multiples of pi/(2m) are grid points when 128 / (2m) is an integer
    p = bounds.interior_ratio(eigen.rectangle_oracle(m, n, 127), 0.3)
    assert p.ratio == pytest.approx(2 / math.pi, rel=1e-12)


def test_local_l2_against_ball_quadrature():
    # C(A) by FFT convolution versus a loop of direct ball sums
    o = eigen.rectangle_oracle(1, 1)
    p = bounds.interior_ratio(o, 0.3)
    e = eigen.erode(o.mask, 0.3)
    X, Y = o.mask.coords()
    ref = max(cutoff.ball_l2(o.psi, o.mask.h, o.mask.origin, (X[i, j], Y[i, j]), 0.3)
              for i, j in np.argwhere(e.inside))
    assert p.C_A == pytest.approx(ref, rel=1e-10)
    assert p.C_A == pytest.approx(0.5275656062378095, rel=1e-10)


@given(st.floats(1e-3, 1e3), st.sampled_from([-1.0, 1.0]))
@settings(max_examples=20)
def test_scale_invariance(c, sign):
    o = eigen.rectangle_oracle(2, 3)
    scaled = eigen.EigenPair(o.lam, sign * c * o.psi, o.residual, o.source, o.mask)
    assert bounds.interior_ratio(scaled, 0.3).ratio == pytest.approx(bounds.interior_ratio(o, 0.3).ratio,
                                                                    rel=1e-13)


def test_monotonicity_in_r(lshape_pairs):
    for pair in lshape_pairs:
        sups = [bounds.interior_ratio(pair, r).sup for r in (0.05, 0.1, 0.2, 0.3, 0.4)]
        assert all(a >= b for a, b in zip(sups, sups[1:]))


def test_window_refusal():
    o = eigen.rectangle_oracle(12, 12, 63)  # 288 > 0.05 / h^2 = 20.75
    with pytest.raises(ResolutionError):
        bounds.interior_ratio(o, 0.3)
    assert bounds.interior_ratio(o, 0.3, enforce_window=False).ratio > 0


def test_gamma_dimension_checked():
    with pytest.raises(ArgumentError):
        bounds.interior_ratio(eigen.rectangle_oracle(1, 1), 0.3, gamma=(1, 0, 0))


def test_derivative_ratio_closed_form():
    # sup |d/dx sin(4x) sin(4y)| = 4, so the ratio is 4 / (pi/2)
    p = bounds.interior_ratio(eigen.rectangle_oracle(4, 4, 255), 0.5, gamma=(1, 0))
    assert p.ratio == pytest.approx(8 / math.pi, rel=1e-3)


def test_derivative_sup_matches_finite_difference():
    # the plateau transition band r/4 must span several cells; N = 128 gives ~5
    m = eigen.lshape_mask(128)
    pair = eigen.solve(eigen.ProblemSpec(m), 4)[3]
    interior = eigen.erode(m, 0.5)
    spectral = bounds.derivative_sup(pair, interior, 0.5, (1, 0))
    fd = np.zeros_like(pair.psi)
    fd[1:-1] = (pair.psi[2:] - pair.psi[:-2]) / (2 * m.h)
    ref = float(np.max(np.abs(fd[interior.inside])))
    assert spectral == pytest.approx(ref, rel=0.01)


# fits -----------------------------------------------------------------------------------


def test_fit_quarter_power():
    lam = np.logspace(1, 4, 6)
    f = bounds.fit_loglog(lam, lam**0.25)
    assert f.slope == pytest.approx(0.25, abs=1e-12)
    assert f.stderr < 1e-12


def test_fit_constant():
    f = bounds.fit_loglog(np.logspace(1, 4, 6), np.full(6, 3.0))
    assert abs(f.slope) < 1e-12


@settings(max_examples=30)
@given(st.lists(st.floats(0.1, 10), min_size=6, max_size=6), st.floats(-1, 1))
def test_fit_matches_polyfit(noise, p):
    x = np.logspace(0, 3, 6)
    y = x**p * np.asarray(noise)
    assert bounds.fit_loglog(x, y).slope == pytest.approx(ols_slope(x, y), abs=1e-9)


def test_fit_span_and_count():
    with pytest.raises(ArgumentError):
        bounds.fit_loglog([10, 20, 30, 300], [1, 2, 3, 4])  # 1.48 decades
    with pytest.raises(ArgumentError):
        bounds.fit_loglog([1, 100, 1000], [1, 2, 3])
    bounds.fit_loglog([10, 20, 30, 300], [1, 2, 3, 4], min_decades=1.0)


def test_rectangle_family_slope():
    pts = [bounds.interior_ratio(eigen.rectangle_oracle(m, m, 511), 0.3) for m in range(2, 21)]
    fit = bounds.fit_exponent(pts)
    assert abs(fit.slope) < 1e-12
    assert fit.n == 19 and fit.window == (8.0, 800.0)


# F_delta scaling -------------------------------------------------------------------------


def test_fdelta_scaling_1d():
    s = bounds.fdelta_scaling(Symbol.laplacian(1), 0.2, [10**3, 10**3.5, 10**4, 10**4.5, 10**5])
    assert [p.count for p in s.points] == [4, 4, 6, 6, 6]
    assert 0 <= s.fit.slope <= 0.2
    assert not any(p.saturated for p in s.points)


def test_fdelta_scaling_3d():
    s = bounds.fdelta_scaling(Symbol.laplacian(3), 0.2, [10**2.5, 10**3, 10**3.5, 10**4])
    assert [p.count for p in s.points] == [7028, 24932, 89956, 316010]
    assert 0.9 <= s.fit.slope <= 1.2
    assert s.target == pytest.approx(1.1)


def test_fdelta_scaling_refuses_wave():
    with pytest.raises(ArgumentError):
        bounds.fdelta_scaling(Symbol.from_terms(2, {(2, 0): 1, (0, 2): -1}), 0.2, [1e3, 1e4, 1e5, 1e6])

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diobound import lattice
from diobound.errors import ArgumentError, DomainError, ResourceError
from diobound.symbol import Symbol, ellipticity_certificate

from oracles import brute_count_ball, brute_fdelta_norm2

LAP2 = Symbol.laplacian(2)
WAVE = Symbol.from_terms(2, {(2, 0): 1, (0, 2): -1})


def _brute_wave(cap, delta=0.5):
    ax = np.arange(-cap, cap + 1)
    a, b = np.meshgrid(ax, ax, indexing="ij")
    n = a * a + b * b
    return int(np.sum((n <= cap * cap) & (np.abs(a * a - b * b) <= n ** ((1 + delta) / 2))))


# count_ball --------------------------------------------------------------------------------


def test_count_ball_trivial():
    assert lattice.count_ball(3, 1) == 7
    assert lattice.count_ball(2, 0) == 1


def test_count_ball_enumeration_oracle():
    assert brute_count_ball(2, 2) == 13
    assert lattice.count_ball(2, 2) == 13


@pytest.mark.parametrize("d,R", [(1, 7.5), (2, 9.99), (3, 6), (4, 4.2), (5, 3)])
def test_count_ball_matches_brute(d, R):
    assert lattice.count_ball(d, R) == brute_count_ball(d, R)


def test_count_ball_exact_radius_boundary():
    # R^2 = 25 exactly: (3,4) and (5,0) families are on the sphere and included
    assert lattice.count_ball(2, 5) - lattice.count_ball(2, math.nextafter(5, 0)) == 12


def test_count_ball_cap():
    with pytest.raises(ResourceError):
        lattice.count_ball(6, 1e6)


@settings(max_examples=20)
@given(st.integers(2, 4), st.floats(0, 30), st.floats(0, 30))
def test_shell_additivity(d, a, b):
    R1, R2 = sorted((a, b))
    if d == 4:
        R1, R2 = R1 / 2, R2 / 2
    n1, n2 = math.floor(R1 * R1), math.floor(R2 * R2)
    independent = len(lattice.shell_points(d, n1 + 1, n2)) if n2 > n1 else 0
    assert lattice.count_ball(d, R2) - lattice.count_ball(d, R1) == independent


def test_shell_points_order():
    pts = lattice.shell_points(2, 0, 5)
    n = np.sum(pts * pts, axis=1)
    assert np.all(np.diff(n) >= 0)
    assert [tuple(p) for p in pts[:5]] == [(0, 0), (-1, 0), (0, -1), (0, 1), (1, 0)]


@pytest.mark.parametrize("d", [2, 3])
def test_gauss_remainder(d):
    radii = range(10, 201, 10) if d == 2 else range(10, 101, 10)
    K = lattice.gauss_remainder_constant(d, radii)
    assert 0 < K < 10


def test_counts_independent_of_workers():
    ref = lattice.count_ball(3, 40)
    assert all(lattice.count_ball(3, 40, workers=w) == ref for w in (2, 8))


# count_diophantine -----------------------------------------------------------------------


def test_fdelta_origin_ties():
    # ties are solutions: the four unit vectors satisfy |1 - 0| <= 1
    rep = lattice.count_diophantine(LAP2, 0, 0.5, 10, keep_solutions=True)
    assert rep.count == 5 == brute_fdelta_norm2(2, 0, 0.5, 10)
    assert set(rep.solutions) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}
    assert not rep.saturated and rep.complete


def test_fdelta_wave_saturates():
    rep = lattice.count_diophantine(WAVE, 0, 0.5, 50, certify=False)
    assert rep.saturated
    assert rep.count > lattice.count_diophantine(WAVE, 0, 0.5, 25, certify=False).count


def test_fdelta_double_loop_oracle():
    assert brute_fdelta_norm2(2, 100, 0.5, 20) == 196
    rep = lattice.count_diophantine(LAP2, 100, 0.5, 20, keep_solutions=True)
    assert rep.count == 196 == len(rep.solutions)
    assert rep.exact


def test_fdelta_delta_range():
    for delta in (0, 1, -0.1):
        with pytest.raises(ArgumentError):
            lattice.count_diophantine(LAP2, 0, delta, 10)


def test_wave_growth_frozen():
    # numpy box oracle over the caps used by the non-elliptic growth property
    caps = (10, 20, 40, 50)
    frozen = (97, 253, 693, 945)
    assert tuple(_brute_wave(c) for c in caps) == frozen
    counts = [lattice.count_diophantine(WAVE, 0, 0.5, c, certify=False).count for c in caps]
    assert tuple(counts) == frozen


@pytest.mark.parametrize("C", [10, 20])
def test_non_elliptic_growth(C):
    a = lattice.count_diophantine(WAVE, 0, 0.5, C, certify=False).count
    b = lattice.count_diophantine(WAVE, 0, 0.5, 2 * C, certify=False).count
    assert b >= a + 1


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0, 2000),
       st.floats(0.1, 0.9), st.integers(-3, 3))
def test_elliptic_finiteness(entries, lam, delta, lin):
    B = np.array(entries).reshape(2, 2)
    A = B @ B.T + np.eye(2)
    sym = Symbol.from_terms(2, {(2, 0): A[0, 0], (1, 1): 2 * A[0, 1], (0, 2): A[1, 1], (1, 0): lin})
    cert = ellipticity_certificate(sym)
    rep = lattice.count_until_complete(sym, lam, delta, certificate=cert)
    assert rep.complete and not rep.saturated
    again = lattice.count_diophantine(sym, lam, delta, 2 * rep.cap, certificate=cert)
    assert again.count == rep.count


def test_count_until_complete_refuses_wave():
    with pytest.raises(DomainError):
        lattice.count_until_complete(WAVE, 0, 0.5)


def test_complex_lambda_uses_modulus():
    # |n - (100 + 30i)| <= n^(3/4) needs 30 <= n^(3/4), which the real-only test ignores
    rep = lattice.count_diophantine(LAP2, 100 + 30j, 0.5, 20)
    ref = lattice.count_diophantine(LAP2, 100, 0.5, 20)
    pts = lattice.shell_points(2, 0, 400)
    n = np.sum(pts * pts, axis=1).astype(float)
    brute = int(np.sum(np.abs(n - (100 + 30j)) <= n**0.75))
    assert rep.count == brute < ref.count


def test_diophantine_workers_identical():
    sym = Symbol.norm_power(2, 2)
    runs = [lattice.count_diophantine(sym, 1e6, 0.3, 60, keep_solutions=True, workers=w) for w in (1, 2, 8)]
    assert all(r.to_json() == runs[0].to_json() for r in runs)


# annulus_prediction ------------------------------------------------------------------------


def test_annulus_closed_form():
    # x_pm = sqrt(1e4 +- (2e4)^0.75), area pi (x+^2 - x-^2) = 2 pi (2e4)^0.75
    p = lattice.annulus_prediction(2, 2, 1e4, 0.5)
    assert p.beta == 0.75
    assert p.x_minus == pytest.approx(91.2042058761139, rel=1e-12)
    assert p.x_plus == pytest.approx(108.08234282484548, rel=1e-12)
    assert p.predicted == pytest.approx(10567.016002364247, rel=1e-12)
    assert p.x_minus < p.x_plus


def test_annulus_d3_against_enumeration():
    enumerated = lattice.count_diophantine(Symbol.laplacian(3), 1e4, 0.5, 115).count
    assert enumerated == 1265952  # numpy box oracle
    ratio = lattice.annulus_prediction(3, 2, 1e4, 0.5).predicted / enumerated
    assert 0.5 <= ratio <= 2


def test_annulus_floor():
    assert lattice.validity_floor(0.75) == 2.0**5
    with pytest.raises(DomainError, match="c_beta"):
        lattice.annulus_prediction(2, 2, 31.9, 0.5)
    lattice.annulus_prediction(2, 2, 32.0, 0.5)


def test_unit_ball_volume():
    assert lattice.unit_ball_volume(1) == 2
    assert lattice.unit_ball_volume(2) == math.pi
    assert lattice.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diobound import eigen
from diobound.errors import ArgumentError, ConvergenceError, EmptyInteriorError

from oracles import box_spectrum, brute_erode, dense_dirichlet_laplacian


def _inner(a, b, h):
    return h * h * np.vdot(a.psi, b.psi)


# masks ----------------------------------------------------------------------------------


def test_generator_sizes():
    # frozen cell counts at N = 64
    assert eigen.rectangle_mask(64).n_inside == 64 * 64
    assert eigen.lshape_mask(64).n_inside == 3072
    assert eigen.disk_mask(64).n_inside == 3300
    assert eigen.koch_mask(64).n_inside == 1864
    assert eigen.percolation_mask(64).n_inside == 1936


def test_lshape_removes_quadrant():
    m = eigen.lshape_mask(64)
    X, Y = m.coords()
    assert not m.inside[(X >= math.pi / 2) & (Y >= math.pi / 2)].any()
    assert m.inside[(X < math.pi / 2) | (Y < math.pi / 2)].all()


def test_percolation_seeded():
    a = eigen.percolation_mask(64, seed=5)
    assert np.array_equal(a.inside, eigen.percolation_mask(64, seed=5).inside)
    assert not np.array_equal(a.inside, eigen.percolation_mask(64, seed=6).inside)


def test_empty_mask_rejected():
    with pytest.raises(EmptyInteriorError):
        eigen.DomainMask(np.zeros((4, 4), dtype=bool), 0.1)


def test_erode_identity():
    sq = eigen.rectangle_mask(11)
    assert eigen.erode(sq, 0) is sq


def test_erode_square_by_two_cells():
    sq = eigen.rectangle_mask(11)
    ref = np.zeros((11, 11), dtype=bool)
    ref[2:9, 2:9] = True
    assert np.array_equal(eigen.erode(sq, 2 * sq.h).inside, ref)


def test_erode_koch_brute_force():
    k = eigen.koch_mask(64)
    ref = brute_erode(k.inside, 4.0)
    assert int(ref.sum()) == 976
    assert np.array_equal(eigen.erode(k, 4 * k.h).inside, ref)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.5, 3.5))
def test_erode_matches_brute_on_random_masks(seed, cells):
    m = eigen.percolation_mask(16, p=0.85, levels=2, seed=seed)
    ref = brute_erode(m.inside, cells)
    if not ref.any():
        with pytest.raises(EmptyInteriorError):
            eigen.erode(m, cells * m.h)
    else:
        assert np.array_equal(eigen.erode(m, cells * m.h).inside, ref)


def test_erode_empty():
    with pytest.raises(EmptyInteriorError):
        eigen.erode(eigen.rectangle_mask(8), 1.5)


def test_pgm_round_trip(tmp_path):
    for m in (eigen.koch_mask(40), eigen.percolation_mask(32), eigen.lshape_mask(20)):
        path = tmp_path / f"{m.name}.pgm"
        m.save(path)
        assert path.read_text().startswith("P2")
        back = eigen.DomainMask.load(path)
        assert np.array_equal(back.inside, m.inside)
        assert back.h == m.h and back.origin == m.origin and back.name == m.name


# assemble -------------------------------------------------------------------------------


def test_assemble_single_cell():
    m = eigen.DomainMask(np.array([[True]]), 0.5)
    assert eigen.assemble(eigen.ProblemSpec(m)).toarray().tolist() == [[16.0]]


def test_assemble_two_cells():
    h = 0.25
    m = eigen.DomainMask(np.array([[True, True]]), h)
    A = eigen.assemble(eigen.ProblemSpec(m)).toarray()
    assert A.tolist() == [[4 / h**2, -1 / h**2], [-1 / h**2, 4 / h**2]]
    np.testing.assert_allclose(np.linalg.eigvalsh(A), [3 / h**2, 5 / h**2], rtol=1e-15)


def test_assemble_matches_dense_oracle():
    for m in (eigen.lshape_mask(12), eigen.koch_mask(24), eigen.percolation_mask(16)):
        A = eigen.assemble(eigen.ProblemSpec(m)).toarray()
        assert np.array_equal(A, dense_dirichlet_laplacian(m.inside, m.h))


# solve ------------------------------------------------------------------------------------


def test_square_ground_state():
    m = eigen.rectangle_mask(63)
    (p,) = eigen.solve(eigen.ProblemSpec(m), 1)
    h = m.h
    assert p.lam == pytest.approx(8 / h**2 * math.sin(h / 2) ** 2, rel=1e-12)
    assert p.lam == pytest.approx(1.999598437023194, rel=1e-12)
    assert p.l2_norm() == pytest.approx(1.0, rel=1e-12)


def test_square_first_three():
    pairs = eigen.solve(eigen.ProblemSpec(eigen.rectangle_mask(63)), 3)
    np.testing.assert_allclose([p.lam for p in pairs], box_spectrum(63, 3), rtol=1e-11)
    assert [round(p.lam) for p in pairs] == [2, 5, 5]


def test_solver_matches_dense_eigh():
    m = eigen.lshape_mask(16)
    ref = np.linalg.eigvalsh(dense_dirichlet_laplacian(m.inside, m.h))[:8]
    got = [p.lam for p in eigen.solve(eigen.ProblemSpec(m), 8)]
    np.testing.assert_allclose(got, ref, rtol=1e-11)


def test_constant_shift():
    m = eigen.lshape_mask(32)
    a = [p.lam for p in eigen.solve(eigen.ProblemSpec(m), 6)]
    b = [p.lam for p in eigen.solve(eigen.ProblemSpec(m, 3.0), 6)]
    np.testing.assert_allclose(np.array(b) - 3.0, a, rtol=0, atol=1e-9)


def test_complex_potential_shift():
    m = eigen.lshape_mask(32)
    a = [p.lam for p in eigen.solve(eigen.ProblemSpec(m), 4)]
    b = [p.lam for p in eigen.solve(eigen.ProblemSpec(m, 2j), 4)]
    np.testing.assert_allclose(np.array(b), np.array(a) + 2j, rtol=0, atol=1e-9)


def test_self_adjoint_real_and_orthogonal():
    m = eigen.koch_mask(48)
    pairs = eigen.solve(eigen.ProblemSpec(m), 12)
    assert all(isinstance(p.lam, float) for p in pairs)
    for i, a in enumerate(pairs):
        assert a.residual <= 1e-8 * a.lam
        for b in pairs[i + 1:]:
            if abs(a.lam - b.lam) > 1e-6 * a.lam:
                assert abs(_inner(a, b, m.h)) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_domain_monotonicity(seed):
    m = eigen.percolation_mask(32, p=0.9, levels=2, seed=seed)
    e = eigen.erode(m, 1.5 * m.h)
    lam = eigen.solve(eigen.ProblemSpec(m), 1)[0].lam
    lam_e = eigen.solve(eigen.ProblemSpec(e), 1)[0].lam
    assert lam_e >= lam


def test_window_interval():
    m = eigen.rectangle_mask(31)
    pairs = eigen.solve_window(eigen.ProblemSpec(m), 0, 20.5)
    ref = [v for v in box_spectrum(31, 40) if v <= 20.5]
    np.testing.assert_allclose([p.lam for p in pairs], ref, rtol=1e-10)


def test_convergence_error_carries_residual():
    m = eigen.koch_mask(96)
    with pytest.raises(ConvergenceError) as info:
        eigen.solve(eigen.ProblemSpec(m), 40, max_iter=1)
    assert info.value.best_residual > 0


def test_k_validation():
    with pytest.raises(ArgumentError):
        eigen.solve(eigen.ProblemSpec(eigen.rectangle_mask(8)), 0)


def test_accuracy_ceiling():
    m = eigen.rectangle_mask(255)
    assert eigen.accuracy_ceiling(m) == pytest.approx(0.05 * (256 / math.pi) ** 2)


# closed-form oracles ----------------------------------------------------------------------


def test_rectangle_oracle_norms():
    o = eigen.rectangle_oracle(1, 1)
    assert o.lam == 2
    assert o.metadata["l2_norm"] == math.pi / 2 and o.metadata["sup_norm"] == 1
    assert o.l2_norm() == pytest.approx(math.pi / 2, rel=1e-12)
    assert eigen.rectangle_oracle(3, 4).lam == 25


@pytest.mark.parametrize("N", [63, 127, 255])
def test_oracle_residual_is_discretization_gap(N):
    # sin(5x) sin(5y) is an exact grid eigenvector with eigenvalue lambda_h,
    # so the residual equals |lambda_h - 50| ~ (1250 / 12) h^2
    o = eigen.rectangle_oracle(5, 5, N)
    gap = abs(eigen.discrete_box_eigenvalue(5, 5, o.mask.h) - 50)
    assert o.residual == pytest.approx(gap, rel=1e-9)
    assert o.residual / o.mask.h**2 == pytest.approx(1250 / 12, rel=0.01)


def test_pairs_round_trip(tmp_path):
    m = eigen.lshape_mask(24)
    pairs = eigen.solve(eigen.ProblemSpec(m), 5)
    path = tmp_path / "pairs.bin"
    eigen.write_pairs(path, pairs)
    assert path.stat().st_size == 32 + 5 * (24 + 8 * 24 * 24)
    for mask in (m, None):
        back = eigen.read_pairs(path, mask)
        assert [p.lam for p in back] == [p.lam for p in pairs]
        assert [p.residual for p in back] == [p.residual for p in pairs]
        assert all(np.array_equal(a.psi, b.psi) for a, b in zip(back, pairs))
        assert all(np.array_equal(b.mask.inside, m.inside) for b in back)

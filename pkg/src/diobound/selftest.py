"""Built-in trivial cases of every operation, run by ``diobound selftest``."""

from __future__ import annotations

import math

import numpy as np

from . import bounds, cutoff, eigen, lattice, numtheory
from .errors import ArgumentError, DomainError, LogicError
from .symbol import (
    Symbol,
    ellipticity_certificate,
    eval_symbol,
    principal_symbol,
    witness_sequence,
)

LAP2 = Symbol.laplacian(2)
WAVE = Symbol.from_terms(2, {(2, 0): 1, (0, 2): -1})


def _raises(exc, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def _symbol_cases():
    yield "symbol.eval pythagorean", lambda: eval_symbol(LAP2, (3, 4)) == 25
    yield "symbol.eval wave diagonal", lambda: eval_symbol(WAVE, (5, 5)) == 0
    yield "symbol.eval dimension mismatch", lambda: _raises(ArgumentError, eval_symbol, LAP2, (1, 2, 3))
    yield "symbol.principal drops constant", lambda: principal_symbol(
        Symbol.from_terms(2, {(2, 0): 1, (0, 2): 1, (0, 0): 7})) == LAP2
    yield "symbol.principal drops linear", lambda: principal_symbol(
        Symbol.from_terms(2, {(2, 0): 1, (0, 2): -1, (1, 0): 1})) == WAVE
    yield "symbol.principal cubic", lambda: principal_symbol(
        Symbol.from_terms(2, {(3, 0): 1j, (0, 2): 1})) == Symbol.from_terms(2, {(3, 0): 1j})

    def lap_cert():
        c = ellipticity_certificate(LAP2)
        return c.verdict == "elliptic" and abs(c.margin - 1) < 1e-12

    def wave_cert():
        c = ellipticity_certificate(WAVE)
        return c.verdict == "non-elliptic" and np.allclose(np.abs(c.witness), 2**-0.5, atol=1e-6)

    def wave_witness():
        seq = witness_sequence(WAVE, ellipticity_certificate(WAVE), 3)
        return [tuple(p) for p in seq.points] == [(1, 1), (2, 2), (3, 3)]

    yield "symbol.certificate laplacian", lap_cert
    yield "symbol.certificate wave", wave_cert
    yield "symbol.witness wave", wave_witness
    yield "symbol.witness refuses elliptic", lambda: _raises(
        LogicError, witness_sequence, LAP2, ellipticity_certificate(LAP2), 3)


def _lattice_cases():
    yield "lattice.count_ball d=3 R=1", lambda: lattice.count_ball(3, 1) == 7
    yield "lattice.count_ball d=2 R=0", lambda: lattice.count_ball(2, 0) == 1
    yield "lattice.fdelta wave saturates", lambda: lattice.count_diophantine(
        WAVE, 0, 0.5, 20, certify=False).saturated
    yield "lattice.fdelta delta range", lambda: _raises(
        ArgumentError, lattice.count_diophantine, LAP2, 0, 1.0, 10)

    def predict_1d():
        p = lattice.annulus_prediction(1, 2, 1000.0, 0.5)
        return p.c_d == 2 and math.isclose(p.predicted, 2 * (p.x_plus - p.x_minus))

    yield "lattice.predict d=1 interval", predict_1d
    yield "lattice.predict below floor", lambda: _raises(DomainError, lattice.annulus_prediction, 2, 2, 1.0, 0.5)


def _nt_cases():
    yield "nt.rdn d=3 n=1", lambda: numtheory.rdn_table(3, 1)[1] == 6
    yield "nt.rdn n=0", lambda: all(numtheory.rdn_table(d, 0)[0] == 1 for d in range(1, 9))
    yield "nt.zeta s=10 dominated by n=1", lambda: abs(numtheory.zeta_d_partial(2, 10, 10).partial - 4) < 0.04
    yield "nt.zeta divergent", lambda: _raises(DomainError, numtheory.zeta_d_partial, 2, 1.0, 10)
    yield "nt.eta gcd screening", lambda: numtheory.eta(2, 2) == 0
    yield "nt.hardy dimension range", lambda: _raises(DomainError, numtheory.hardy_rdn, 9, 1)


def _eigen_cases():
    sq = eigen.rectangle_mask(11)
    yield "eigen.erode r=0 identity", lambda: eigen.erode(sq, 0) is sq

    def erode_square():
        e = eigen.erode(sq, 2 * sq.h).inside
        ref = np.zeros_like(e)
        ref[2:9, 2:9] = True
        return np.array_equal(e, ref)

    def one_cell():
        m = eigen.DomainMask(np.array([[True]]), 0.5, (0.0, 0.0))
        return eigen.assemble(eigen.ProblemSpec(m)).toarray().tolist() == [[16.0]]

    def shift():
        m = eigen.rectangle_mask(15)
        a = [p.lam for p in eigen.solve(eigen.ProblemSpec(m), 3)]
        b = [p.lam for p in eigen.solve(eigen.ProblemSpec(m, 1.5), 3)]
        return np.allclose(np.array(b) - 1.5, a, rtol=0, atol=1e-10)

    yield "eigen.erode 11x11 by 2h", erode_square
    yield "eigen.assemble single cell", one_cell
    yield "eigen.solve constant shift", shift
    yield "eigen.oracle (1,1)", lambda: eigen.rectangle_oracle(1, 1).lam == 2 and \
        eigen.rectangle_oracle(1, 1).metadata["l2_norm"] == math.pi / 2
    yield "eigen.oracle (3,4)", lambda: eigen.rectangle_oracle(3, 4).lam == 25


def _cutoff_cases():
    yield "cutoff.bump origin", lambda: all(cutoff.bump(p, 0.0) == 1.0 for p in cutoff.PROFILES)
    yield "cutoff.bump support", lambda: all(cutoff.bump(p, t) == 0.0 for p in cutoff.PROFILES
                                             for t in (1.0, -1.0, 1.5))
    yield "cutoff.bump plateau", lambda: cutoff.bump("plateau", 0.4) == 1.0

    def constant_field():
        M = 64
        h = 2 * math.pi / M
        f = cutoff.periodize(np.ones((M, M)), cutoff.Cutoff((0.0, 0.0), 0.5), h, (-math.pi, -math.pi))
        direct = float(np.sum(f.values)) * h * h / (2 * math.pi) ** 2
        return f.coefficient((0, 0)).real > 0 and math.isclose(f.coefficient((0, 0)).real, direct)

    def modulation():
        f = cutoff.TorusField.from_spectrum({(3, -2): 1.0}, 32)
        k = np.unravel_index(np.argmax(np.abs(f.spectrum)), f.spectrum.shape)
        return tuple(int(cutoff.integer_frequencies(32)[i]) for i in k) == (3, -2)

    def deriv_gamma0():
        o = eigen.rectangle_oracle(2, 3)
        f = cutoff.periodize_pair(o, cutoff.Cutoff((math.pi / 2, math.pi / 2), 0.4))
        b = cutoff.derivative_sup_bound(f, (0, 0))
        return b.bound >= float(np.max(np.abs(f.values)))

    def deriv_plane_wave():
        f = cutoff.TorusField.from_spectrum({(3, 4): 1.0}, 32)
        b = cutoff.derivative_sup_bound(f, (1, 0))
        return math.isclose(b.bound, 5.0) and math.isclose(b.sampled_sup, 3.0) and b.sampled_sup <= b.bound

    yield "cutoff.periodize constant field", constant_field
    yield "cutoff.periodize modulation peak", modulation
    yield "cutoff.radius precondition", lambda: _raises(ArgumentError, cutoff.Cutoff, (0.0, 0.0), 1.0)
    yield "cutoff.deriv gamma=0", deriv_gamma0
    yield "cutoff.deriv plane wave", deriv_plane_wave


def _bounds_cases():
    def ratio_11():
        p = bounds.interior_ratio(eigen.rectangle_oracle(1, 1), 0.3)
        return math.isclose(p.ratio, 2 / math.pi, rel_tol=1e-12)

    def homogeneous():
        o = eigen.rectangle_oracle(2, 1)
        scaled = eigen.EigenPair(o.lam, 10 * o.psi, o.residual, o.source, o.mask)
        return math.isclose(bounds.interior_ratio(o, 0.3).ratio, bounds.interior_ratio(scaled, 0.3).ratio,
                            rel_tol=1e-13)

    def fit_quarter():
        lam = np.logspace(1, 4, 6)
        f = bounds.fit_loglog(lam, lam**0.25)
        return abs(f.slope - 0.25) < 1e-12 and f.stderr < 1e-12

    def fit_const():
        return abs(bounds.fit_loglog(np.logspace(1, 4, 6), np.full(6, 3.0)).slope) < 1e-12

    yield "bounds.ratio (1,1)", ratio_11
    yield "bounds.ratio homogeneity", homogeneous
    yield "bounds.fit quarter power", fit_quarter
    yield "bounds.fit constant", fit_const


CASE_GROUPS = (_symbol_cases, _lattice_cases, _nt_cases, _eigen_cases, _cutoff_cases, _bounds_cases)


def run_selftest() -> list[dict]:
    """Run every case; exceptions count as failures and are reported by type."""
    results = []
    for group in CASE_GROUPS:
        for name, fn in group():
            try:
                ok, err = bool(fn()), None
            except Exception as exc:  # noqa: BLE001 - a crash is a failed case
                ok, err = False, type(exc).__name__
            row = {"name": name, "pass": ok}
            if err:
                row["error"] = err
            results.append(row)
    return results

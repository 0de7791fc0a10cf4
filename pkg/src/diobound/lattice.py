"""Exact lattice point counting in balls, shells and diophantine annuli.

Work is partitioned by shells ``n = |xi|^2``: a chunk is a closed range
``[lo, hi]`` of squared norms, and points inside a chunk are ordered by
``(|xi|^2, lexicographic)``. Chunks are merged in increasing ``n``, so every
result is identical whatever the worker count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from ._parallel import pmap
from .errors import ArgumentError, DomainError, ResourceError
from .symbol import (VERDICT_ELLIPTIC, EllipticityCertificate, Symbol, ellipticity_certificate,
                     eval_many, eval_many_int)

# max radius accepted by count_ball, per dimension
BALL_CAPS = {1: 10**12, 2: 10**6, 3: 10**4, 4: 10**3, 5: 300, 6: 100}
# max number of lattice points count_diophantine will enumerate
ENUMERATION_CAP = 4 * 10**8
MAX_ENUM_DIM = 6
FLOAT_SLACK = 1e-9
_EXACT_BAND = 1e-12
_N_CHUNKS = 16


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d, via V_d = 2 pi / d * V_(d-2) (V_1 = 2, V_2 = pi exactly)."""
    v = 2.0 if d % 2 else 1.0
    for k in range(2 if d % 2 == 0 else 3, d + 1, 2):
        v *= 2 * math.pi / k
    return v


def squared_bound(R) -> int:
    """floor(R^2) computed exactly from the binary value of R."""
    if R < 0:
        raise ArgumentError("radius must be >= 0")
    return math.floor(Fraction(R) ** 2)


def isqrt_array(v: np.ndarray) -> np.ndarray:
    """Exact elementwise floor(sqrt(v)) for non-negative int64 input."""
    v = np.asarray(v, dtype=np.int64)
    s = np.floor(np.sqrt(v.astype(float))).astype(np.int64)
    s = np.where(s * s > v, s - 1, s)
    s = np.where((s + 1) * (s + 1) <= v, s + 1, s)
    return s


def ceil_sqrt_array(v: np.ndarray) -> np.ndarray:
    v = np.maximum(np.asarray(v, dtype=np.int64), 0)
    s = isqrt_array(v)
    return np.where(s * s < v, s + 1, s)


# ball counts -------------------------------------------------------------------


def _count_le(d: int, N: int) -> int:
    """#{xi in Z^d : |xi|^2 <= N}."""
    if N < 0:
        return 0
    if d == 1:
        return 2 * math.isqrt(N) + 1
    r = math.isqrt(N)
    if d == 2:
        x = np.arange(1, r + 1, dtype=np.int64)
        inner = int(np.sum(2 * isqrt_array(N - x * x) + 1))
        return (2 * r + 1) + 2 * inner
    total = _count_le(d - 1, N)
    for x in range(1, r + 1):
        total += 2 * _count_le(d - 1, N - x * x)
    return total


def _count_slab(args) -> int:
    d, N, x_lo, x_hi = args
    total = 0
    for x in range(x_lo, x_hi):
        w = 1 if x == 0 else 2
        total += w * _count_le(d - 1, N - x * x)
    return total


def count_ball(d: int, R, workers: int = 1) -> int:
    """Number of lattice points with |xi| <= R, exact.

    The comparison is ``|xi|^2 <= floor(R^2)`` with ``floor(R^2)`` computed
    from the exact rational value of ``R``. Radii above ``BALL_CAPS[d]`` raise
    ``ResourceError``.
    """
    if d < 1:
        raise ArgumentError("dimension must be >= 1")
    cap = BALL_CAPS.get(d)
    if cap is None or R > cap:
        raise ResourceError(f"count_ball cap exceeded: d={d}, R={R}, cap={cap}")
    N = squared_bound(R)
    return count_norm_le(d, N, workers)


def count_norm_le(d: int, N: int, workers: int = 1) -> int:
    if d == 1 or workers <= 1:
        return _count_le(d, N)
    r = math.isqrt(N)
    edges = np.linspace(0, r + 1, min(workers * 4, r + 1) + 1).astype(int)
    tasks = [(d, N, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    return sum(pmap(_count_slab, tasks, workers))


def count_shell_range(d: int, n_lo: int, n_hi: int) -> int:
    """#{xi : n_lo <= |xi|^2 <= n_hi}."""
    if n_hi < n_lo:
        return 0
    return _count_le(d, n_hi) - _count_le(d, n_lo - 1)


def gauss_remainder_constant(d: int, radii) -> float:
    """Smallest K with |count_ball(d,R) - c_d R^d| <= K R^(d-1) over ``radii``."""
    c = unit_ball_volume(d)
    return max(abs(count_ball(d, R) - c * R**d) / R ** (d - 1) for R in radii)


# shell enumeration -----------------------------------------------------------


def _ball_points(d: int, N: int) -> np.ndarray:
    """All points with |xi|^2 <= N, shape (n, d), unordered."""
    if N < 0:
        return np.zeros((0, d), dtype=np.int64)
    r = math.isqrt(N)
    pts = np.arange(-r, r + 1, dtype=np.int64)[:, None]
    for _ in range(d - 1):
        s = np.sum(pts * pts, axis=1)
        b = isqrt_array(N - s)
        cnt = 2 * b + 1
        rep = np.repeat(pts, cnt, axis=0)
        starts = np.repeat(-b, cnt)
        offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        pts = np.hstack([rep, (starts + offs)[:, None]])
    return pts


def shell_points(d: int, n_lo: int, n_hi: int) -> np.ndarray:
    """Points with n_lo <= |xi|^2 <= n_hi, ordered by (|xi|^2, lexicographic)."""
    if n_hi < max(n_lo, 0):
        return np.zeros((0, d), dtype=np.int64)
    if d == 1:
        prefix = np.zeros((1, 0), dtype=np.int64)
    else:
        prefix = _ball_points(d - 1, n_hi)
    s = np.sum(prefix * prefix, axis=1)
    b = isqrt_array(n_hi - s)
    a = ceil_sqrt_array(n_lo - s)
    # z in [-b, -a] and [a, b]; a == 0 means one interval [-b, b]
    ok = a <= b
    prefix, s, a, b = prefix[ok], s[ok], a[ok], b[ok]
    lo_start = -b
    cnt_neg = np.where(a == 0, 2 * b + 1, b - a + 1)
    cnt_pos = np.where(a == 0, 0, b - a + 1)
    blocks = []
    for cnt, start in ((cnt_neg, lo_start), (cnt_pos, a)):
        tot = int(cnt.sum())
        if tot == 0:
            continue
        rep = np.repeat(prefix, cnt, axis=0)
        offs = np.arange(tot) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        z = np.repeat(start, cnt) + offs
        blocks.append(np.hstack([rep, z[:, None]]))
    if not blocks:
        return np.zeros((0, d), dtype=np.int64)
    pts = np.vstack(blocks)
    n = np.sum(pts * pts, axis=1)
    keys = [pts[:, i] for i in range(d - 1, -1, -1)] + [n]
    return pts[np.lexsort(keys)]


def shell_chunks(d: int, n_max: int, n_chunks: int = _N_CHUNKS) -> list[tuple[int, int]]:
    """Split [0, n_max] into contiguous squared-norm ranges of similar volume."""
    edges = sorted({int(round(n_max * (k / n_chunks) ** (2.0 / d))) for k in range(1, n_chunks)})
    bounds, lo = [], 0
    for e in edges + [n_max]:
        if e >= lo:
            bounds.append((lo, e))
            lo = e + 1
    return bounds


# diophantine counting -------------------------------------------------------


@dataclass(frozen=True)
class DiophantineReport:
    lam: complex
    delta: float
    cap: float
    count: int
    saturated: bool
    solutions: tuple[tuple[int, ...], ...] | None = None
    r_star: float | None = None
    complete: bool = False
    exact: bool = True
    slack: float = 0.0
    ambiguous: int = 0

    def to_json(self) -> dict:
        out = {
            "lambda": [self.lam.real, self.lam.imag],
            "delta": self.delta,
            "cap": self.cap,
            "count": self.count,
            "saturated": self.saturated,
            "r_star": self.r_star,
            "complete": self.complete,
            "exact": self.exact,
            "slack": self.slack,
            "ambiguous": self.ambiguous,
        }
        if self.solutions is not None:
            out["solutions"] = [list(s) for s in self.solutions]
        return out


def self_sufficiency_radius(sym: Symbol, lam: complex, delta: float, margin: float) -> float:
    """Radius beyond which |P(xi) - lam| > |xi|^(m-1+delta) is guaranteed.

    Uses |sigma(xi)| >= margin |xi|^m and the triangle inequality on the lower
    order terms. Dividing by t^m gives a function increasing in t, so its only
    zero is located by bisection.
    """
    m = sym.order
    if margin <= 0:
        raise ArgumentError("margin must be positive")
    lower = [(abs(c), sum(a)) for a, c in sym.terms.items() if sum(a) < m]
    lam_abs = abs(lam)

    def h(t):
        return (margin - sum(c * t ** (k - m) for c, k in lower) - lam_abs * t ** (-m)
                - t ** (delta - 1.0))

    lo, hi = 1e-12, 1.0
    while h(hi) <= 0:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise DomainError("self-sufficiency radius does not exist")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def _scan_chunk(args):
    sym, lam, delta, n_lo, n_hi, keep, exact = args
    pts = shell_points(sym.dim, n_lo, n_hi)
    if pts.shape[0] == 0:
        return 0, np.zeros((0, sym.dim), dtype=np.int64), 0, -1
    n = np.sum(pts * pts, axis=1)
    e = sym.order - 1 + delta
    rhs = np.power(n.astype(float), 0.5 * e)  # |xi|^e with n = |xi|^2
    if exact:
        re, im = eval_many_int(sym, pts)
        dr = re - int(lam.real)
        di = im - int(lam.imag)
        lhs_int = dr * dr + di * di
        lhs = lhs_int.astype(float)
        rhs2 = rhs * rhs
        band = np.abs(lhs - rhs2) <= _EXACT_BAND * rhs2
        hit = lhs <= rhs2
        hit &= ~band
        ambiguous = 0
        if band.any():
            with mpmath.workdps(60):
                for i in np.nonzero(band)[0]:
                    L = mpmath.mpf(int(lhs_int[i]))
                    R = mpmath.mpf(int(n[i])) ** mpmath.mpf(e)
                    hit[i] = L <= R
    else:
        lhs = np.abs(eval_many(sym, pts) - lam)
        ambiguous = int(np.sum(np.abs(lhs - rhs) <= FLOAT_SLACK * rhs))
        hit = lhs <= rhs * (1.0 + FLOAT_SLACK)
    sols = pts[hit]
    max_n = int(n[hit].max()) if hit.any() else -1
    return int(hit.sum()), (sols if keep else sols[:0]), ambiguous, max_n


def count_diophantine(sym: Symbol, lam: complex, delta: float, cap: float,
                      keep_solutions: bool = False, certificate: EllipticityCertificate | None = None,
                      certify: bool = True, workers: int = 1) -> DiophantineReport:
    """Count xi in Z^d with |xi| <= cap and |P(xi) - lam| <= |xi|^(m-1+delta).

    Ties count as solutions. Gaussian-integer data is compared exactly via
    squared moduli; other data uses a relative slack of ``FLOAT_SLACK``.
    When the symbol is certified elliptic the report carries the radius R*
    beyond which no solution can exist, and ``complete`` is set if the cap
    reaches it.
    """
    if not 0 < delta < 1:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta}")
    if cap < 1:
        raise ArgumentError("cap must be >= 1")
    d = sym.dim
    if d > MAX_ENUM_DIM:
        raise ResourceError(f"exhaustive enumeration limited to d <= {MAX_ENUM_DIM}")
    if unit_ball_volume(d) * (cap + 1) ** d > ENUMERATION_CAP:
        raise ResourceError(f"enumeration of radius {cap} in d={d} exceeds {ENUMERATION_CAP} points")
    lam = complex(lam)
    n_max = squared_bound(cap)
    bound = sum(abs(c) * max(cap, 1.0) ** sum(a) for a, c in sym.terms.items()) + abs(lam)
    exact = (sym.gaussian_integer and float(lam.real).is_integer() and float(lam.imag).is_integer()
             and bound < 2.0**30)
    tasks = [(sym, lam, float(delta), lo, hi, keep_solutions, exact)
             for lo, hi in shell_chunks(d, n_max)]
    results = pmap(_scan_chunk, tasks, workers)
    count = sum(r[0] for r in results)
    ambiguous = sum(r[2] for r in results)
    max_n = max(r[3] for r in results)
    saturated = max_n >= 0 and math.sqrt(max_n) > cap - math.sqrt(d)
    sols = None
    if keep_solutions:
        sols = tuple(tuple(int(x) for x in row) for r in results for row in r[1])

    r_star = None
    complete = False
    if certify:
        cert = certificate or ellipticity_certificate(sym)
        if cert.verdict == VERDICT_ELLIPTIC:
            r_star = self_sufficiency_radius(sym, lam, delta, cert.margin - cert.tolerance)
            complete = cap >= r_star
    return DiophantineReport(lam, float(delta), float(cap), count, bool(saturated), sols, r_star,
                             complete, exact, 0.0 if exact else FLOAT_SLACK, ambiguous)


def count_until_complete(sym: Symbol, lam: complex, delta: float, keep_solutions: bool = False,
                         certificate: EllipticityCertificate | None = None, workers: int = 1,
                         pad: float = 2.0) -> DiophantineReport:
    """F_delta with the cap set just past R*; requires a certified-elliptic symbol."""
    cert = certificate or ellipticity_certificate(sym)
    if cert.verdict != VERDICT_ELLIPTIC:
        raise DomainError(f"symbol is not certified elliptic (verdict {cert.verdict})")
    r_star = self_sufficiency_radius(sym, lam, delta, cert.margin - cert.tolerance)
    cap = math.ceil(r_star) + pad + math.sqrt(sym.dim)
    return count_diophantine(sym, lam, delta, cap, keep_solutions, cert, True, workers)


# continuum prediction ---------------------------------------------------------


@dataclass(frozen=True)
class AnnulusPrediction:
    d: int
    m: int
    a: float
    delta: float
    beta: float
    x_minus: float
    x_plus: float
    c_d: float
    predicted: float
    floor: float

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in
                ("d", "m", "a", "delta", "beta", "x_minus", "x_plus", "c_d", "predicted", "floor")}


def validity_floor(beta: float) -> float:
    """c_beta = 2^((2-beta)/(1-beta))."""
    return 2.0 ** ((2.0 - beta) / (1.0 - beta))


def annulus_prediction(d: int, m: int, re_lam: float, delta: float) -> AnnulusPrediction:
    """Continuum volume of the annulus that contains the F_delta solutions.

    For m = 2: beta = (1+delta)/2, x_pm = sqrt(a +- (2a)^beta).
    For general m: beta = 1 - 1/m + delta/m, x_pm = (a +- a^beta)^(1/m).
    In both cases the floor is c_beta = 2^((2-beta)/(1-beta)).
    """
    if d < 1 or m < 1:
        raise ArgumentError("need d >= 1 and m >= 1")
    if not 0 < delta < 1:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta}")
    a = float(re_lam)
    if m == 2:
        beta = (1.0 + delta) / 2.0
        width = (2.0 * a) ** beta if a > 0 else 0.0
    else:
        beta = 1.0 - 1.0 / m + delta / m
        width = a**beta if a > 0 else 0.0
    floor = validity_floor(beta)
    if a < floor:
        raise DomainError(f"Re lambda = {a} below validity floor c_beta = {floor:.6g} (beta = {beta:.6g})")
    x_minus = (a - width) ** (1.0 / m)
    x_plus = (a + width) ** (1.0 / m)
    c_d = unit_ball_volume(d)
    return AnnulusPrediction(d, m, a, float(delta), beta, x_minus, x_plus, c_d,
                             c_d * (x_plus**d - x_minus**d), floor)


def timed(fn, *args, **kwargs):
    """Call ``fn`` and return ``(result, elapsed_ms)``."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1e3


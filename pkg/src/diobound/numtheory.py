"""Sums of squares: r_d(n) tables, the series zeta_d(s) and Hardy's formula.

r_d(n) is computed by repeated additive convolution with the one-square
indicator, in exact integers. The singular series uses quadratic Gauss sums
eta(h, k); for each k they are obtained from the residue counts of j^2 mod 2k
with one FFT, and a direct O(k) summation is kept as a reference path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, DomainError, ResourceError
from .lattice import count_norm_le, unit_ball_volume

TABLE_BUDGET = 10**7  # rdn_table requires d * N <= TABLE_BUDGET
_INT64_GUARD = 2.0**62
HARDY_DIMS = range(3, 9)
DEFAULT_K = 512


@dataclass(frozen=True)
class SquaresTable:
    d: int
    N: int
    counts: np.ndarray  # r_d(0..N), int64 or object

    def __getitem__(self, n):
        return int(self.counts[n])

    def cumulative(self, n: int) -> int:
        """sum_{k <= n} r_d(k), i.e. lattice points with |xi|^2 <= n."""
        return int(sum(int(x) for x in self.counts[: n + 1])) if self.counts.dtype == object \
            else int(self.counts[: n + 1].sum())


def squares_indicator(N: int) -> np.ndarray:
    """r_1(0..N): 1 at 0, 2 at every positive square."""
    r1 = np.zeros(N + 1, dtype=np.int64)
    k = np.arange(0, math.isqrt(N) + 1)
    r1[k * k] = 2
    r1[0] = 1
    return r1


def _add_square(a: np.ndarray, N: int) -> np.ndarray:
    """Convolve ``a`` with r_1, truncated at N."""
    out = a.copy()
    for k in range(1, math.isqrt(N) + 1):
        s = k * k
        out[s:] += 2 * a[: N + 1 - s]
    return out


def rdn_table(d: int, N: int) -> SquaresTable:
    """Exact r_d(0..N) by d-fold convolution of the one-square indicator.

    Values are kept in int64 while a float shadow stays below 2^62, and in
    Python integers afterwards.
    """
    if d < 1:
        raise ArgumentError("dimension must be >= 1")
    if N < 0:
        raise ArgumentError("N must be >= 0")
    if d * N > TABLE_BUDGET:
        raise ResourceError(f"rdn_table cap exceeded: d*N = {d * N} > {TABLE_BUDGET}")
    r = squares_indicator(N)
    shadow = r.astype(float)
    for _ in range(d - 1):
        shadow = _add_square(shadow, N)
        if r.dtype != object and shadow.max() >= _INT64_GUARD:
            r = r.astype(object)
        r = _add_square(r, N)
    return SquaresTable(d, N, r)


def convolve_exact(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Exact truncated convolution (a * b)[0..N] of two integer sequences."""
    a = np.asarray(a)[: N + 1]
    b = np.asarray(b)[: N + 1]
    big = a.dtype == object or b.dtype == object
    if not big:
        est = np.convolve(a.astype(float), b.astype(float))[: N + 1]
        big = est.max(initial=0.0) >= _INT64_GUARD
    if big:
        a, b = a.astype(object), b.astype(object)
        out = np.zeros(N + 1, dtype=object)
        for i in range(N + 1):
            if a[i]:
                out[i:] += a[i] * b[: N + 1 - i]
        return out
    return np.convolve(a.astype(np.int64), b.astype(np.int64))[: N + 1]


def rdn_growth_constant(d: int, N: int, eps: float = 0.1, table: SquaresTable | None = None) -> float:
    """max_{1 <= n <= N} r_d(n) / n^(d/2 - 1 + eps)."""
    t = table if table is not None else rdn_table(d, N)
    n = np.arange(1, N + 1, dtype=float)
    vals = np.asarray(t.counts[1 : N + 1], dtype=float)
    return float(np.max(vals / n ** (d / 2 - 1 + eps)))


# zeta_d ------------------------------------------------------------------------


@dataclass(frozen=True)
class ZetaPartial:
    d: int
    s: float
    N: int
    partial: float
    tail_bound: float

    @property
    def upper(self) -> float:
        return self.partial + self.tail_bound

    def to_json(self) -> dict:
        return {"d": self.d, "s": self.s, "N": self.N, "partial": self.partial,
                "tail_bound": self.tail_bound}


def zeta_tail_bound(d: int, s: float, N: int, count_le_N: int | None = None) -> float:
    """Upper bound for sum_{n > N} r_d(n) n^-s.

    Abel summation with A(x) = #{1 <= |xi|^2 <= x} <= c_d (sqrt(x) + sqrt(d)/2)^d
    (disjoint unit cubes around lattice points) gives
    s c_d (1 + sqrt(d)/(2 sqrt N))^d N^(d/2-s) / (s - d/2) - A(N) N^-s.
    """
    if N < 1:
        raise ArgumentError("N must be >= 1")
    if count_le_N is None:
        count_le_N = count_norm_le(d, N)
    a_N = count_le_N - 1
    c = unit_ball_volume(d)
    bound = s * c * (1 + math.sqrt(d) / (2 * math.sqrt(N))) ** d * N ** (d / 2 - s) / (s - d / 2)
    return max(bound - a_N * N ** (-s), 0.0)


def zeta_d_partial(d: int, s: float, N: int, table: SquaresTable | None = None) -> ZetaPartial:
    """Partial sum of zeta_d(s) = sum_{n>=1} r_d(n) n^-s with a rigorous tail bound."""
    if s <= d / 2:
        raise DomainError(f"divergent: Re s <= d/2 (s={s}, d={d})")
    t = table if table is not None and table.N >= N else rdn_table(d, N)
    n = np.arange(1, N + 1, dtype=float)
    r = np.asarray(t.counts[1 : N + 1], dtype=float)
    terms = r * n ** (-s)
    partial = float(math.fsum(terms[::-1]))
    count_le = int(t.counts[0]) + int(np.sum(r))
    return ZetaPartial(d, float(s), N, partial, zeta_tail_bound(d, s, N, count_le))


def zeta_d_value(d: int, s: float, N: int = 20000) -> float:
    """zeta_d(s) estimated as partial sum plus half the tail bound."""
    z = zeta_d_partial(d, s, N)
    return z.partial + 0.5 * z.tail_bound


# singular series ---------------------------------------------------------------


def eta_direct(h: int, k: int) -> complex:
    """eta(h, k) = (1/2) k^-1/2 sum_{j=1}^{2k} exp(pi i h j^2 / k), 0 if gcd(h, k) > 1."""
    if math.gcd(h, k) > 1:
        return 0j
    j = np.arange(1, 2 * k + 1, dtype=np.int64)
    t = (h * j * j) % (2 * k)
    return complex(0.5 * k**-0.5 * np.exp(1j * np.pi * t / k).sum())


@lru_cache(maxsize=4096)
def _eta_table(k: int) -> np.ndarray:
    """eta(h, k) for h = 0..2k-1 (h = 0 stands for h = 2k), coprime screening applied."""
    two_k = 2 * k
    j = np.arange(1, two_k + 1, dtype=np.int64)
    counts = np.bincount((j * j) % two_k, minlength=two_k).astype(float)
    # sum_t c_t exp(2 pi i h t / 2k) = 2k * ifft(c)[h]
    eta = math.sqrt(k) * np.fft.ifft(counts)
    h = np.arange(two_k)
    h[0] = two_k
    coprime = np.gcd(h, k) == 1
    eta[~coprime] = 0.0
    eta.setflags(write=False)
    return eta


def eta(h: int, k: int) -> complex:
    return complex(_eta_table(k)[h % (2 * k)])


def singular_series_terms(d: int, ns, K: int) -> np.ndarray:
    """Array (K, len(ns)) of the k-th singular series terms for each n.

    term_k(n) = k^(-d/2) sum_{h=1}^{2k} eta(h,k)^d exp(-pi i h n / k).
    """
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    out = np.empty((K, ns.size), dtype=complex)
    for k in range(1, K + 1):
        b = _eta_table(k) ** d
        # sum_h b_h exp(-2 pi i h n / 2k) = fft(b)[n mod 2k]
        spec = np.fft.fft(b)
        out[k - 1] = k ** (-d / 2) * spec[ns % (2 * k)]
    return out


@dataclass(frozen=True)
class SingularSeriesValue:
    d: int
    n: int
    K: int
    value: float
    term_tail_bound: float
    last_term: float
    rigorous_tail: bool

    def to_json(self) -> dict:
        return {"d": self.d, "n": self.n, "K": self.K, "value": self.value,
                "term_tail_bound": self.term_tail_bound, "last_term": self.last_term,
                "rigorous_tail": self.rigorous_tail}


def _check_hardy(d: int, K: int):
    if d not in HARDY_DIMS:
        raise DomainError(f"Hardy's exact formula needs 3 <= d <= 8, got d={d}")
    if K < 16:
        raise ArgumentError("K must be >= 16")


def singular_series(d: int, n: int, K: int = DEFAULT_K) -> SingularSeriesValue:
    """S_d(n) truncated after k = K, summed in increasing k.

    For d >= 5, |eta| <= 1 and at most 2k values of h give the rigorous tail
    bound 2 K^(2-d/2) / (d/2 - 2). For d = 3, 4 the last term is reported
    instead.
    """
    _check_hardy(d, K)
    terms = singular_series_terms(d, [n], K)[:, 0]
    value = float(math.fsum(terms.real))
    last = float(abs(terms[-1]))
    if d >= 5:
        tail, rigorous = 2.0 * K ** (2 - d / 2) / (d / 2 - 2), True
    else:
        tail, rigorous = last, False
    return SingularSeriesValue(d, int(n), K, value, tail, last, rigorous)


def hardy_prefactor(d: int, n) -> np.ndarray:
    return math.pi ** (d / 2) / math.gamma(d / 2) * np.asarray(n, dtype=float) ** (d / 2 - 1)


def hardy_rdn(d: int, n: int, K: int = DEFAULT_K) -> float:
    """pi^(d/2) / Gamma(d/2) n^(d/2-1) S_d(n)."""
    return float(hardy_prefactor(d, n) * singular_series(d, n, K).value)


def hardy_rdn_many(d: int, ns, K: int = DEFAULT_K) -> np.ndarray:
    """Vectorized :func:`hardy_rdn` over several n."""
    _check_hardy(d, K)
    ns = np.asarray(ns, dtype=np.int64)
    S = singular_series_terms(d, ns, K).real.sum(axis=0)
    return hardy_prefactor(d, ns) * S

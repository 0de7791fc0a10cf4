"""Smooth cutoffs, periodization onto the torus and Fourier-coefficient checks.

A field psi sampled on a lattice ``origin + h * index`` with ``h = 2 pi / M``
is multiplied by a bump chi_r centred at x0 and wrapped onto an M^d torus
grid whose index 0 sits at ``origin``. Since r < 1 < pi the translates never
overlap. Fourier coefficients use the convention

    Psi_hat(xi) = (2 pi)^-d  int_T Psi(x) exp(-i xi.x) dx,

evaluated by the rectangle rule (exact for trigonometric polynomials below
the Nyquist frequency), i.e. ``exp(-i xi.origin) * fftn(Psi) / M^d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .errors import ArgumentError, GeometryError, ResolutionError
from .lattice import count_diophantine
from .numtheory import zeta_d_partial
from .symbol import Symbol, eval_many

PROFILES = ("plain", "plateau")
DERIVATIVE_ORDERS = 12
_TIE_BAND = 1e-9


# bump profiles ----------------------------------------------------------------------


def _smooth_exp(x: np.ndarray) -> np.ndarray:
    """exp(-1/x) for x > 0, else 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def bump(profile: str, t) -> np.ndarray | float:
    """Radial cutoff profile chi(t), supported in |t| < 1 with chi(0) = 1.

    plain:   exp(1 - 1/(1 - t^2)) for |t| < 1.
    plateau: 1 for |t| <= 1/2, 0 for |t| >= 1 and in between the smooth step
             g(1-u) / (g(1-u) + g(u)), u = 2|t| - 1, g(x) = exp(-1/x).
    """
    scalar = np.isscalar(t)
    t = np.abs(np.asarray(t, dtype=float))
    if profile == "plain":
        out = np.zeros_like(t)
        inside = t < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    elif profile == "plateau":
        u = np.clip(2.0 * t - 1.0, 0.0, 1.0)
        a, b = _smooth_exp(1.0 - u), _smooth_exp(u)
        out = a / (a + b)
    else:
        raise ArgumentError(f"unknown profile '{profile}', choose from {PROFILES}")
    return float(out) if scalar else out


@lru_cache(maxsize=None)
def bump_derivative_table(profile: str, orders: int = DERIVATIVE_ORDERS) -> tuple[float, ...]:
    """sup_t |chi^(k)(t)| for k = 0..orders.

    The profile is smooth and vanishes for |t| >= 1, so its restriction to
    [-2, 2) is a smooth periodic function and spectral differentiation on
    2^16 points resolves it to near machine precision.
    """
    n = 2**16
    t = np.linspace(-2.0, 2.0, n, endpoint=False)
    f_hat = np.fft.fft(bump(profile, t))
    omega = 2 * np.pi * np.fft.fftfreq(n, d=4.0 / n)
    out = []
    for k in range(orders + 1):
        mult = (1j * omega) ** k
        if k % 2:
            mult[n // 2] = 0.0
        out.append(float(np.max(np.abs(np.fft.ifft(mult * f_hat).real))))
    return tuple(out)


@dataclass(frozen=True)
class Cutoff:
    """chi_r(x) = chi((x - x0) / r) for a profile chi supported in the unit ball."""

    center: tuple[float, ...]
    r: float
    profile: str = "plain"

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise ArgumentError(f"cutoff radius must satisfy 0 < r < 1, got {self.r}")
        if self.profile not in PROFILES:
            raise ArgumentError(f"unknown profile '{self.profile}', choose from {PROFILES}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        dist = np.sqrt(sum((c - x0) ** 2 for c, x0 in zip(coords, self.center)))
        return bump(self.profile, dist / self.r)


# torus fields --------------------------------------------------------------------------


def torus_size(h: float) -> int:
    """M with M h = 2 pi; raises if 2 pi is not an integer multiple of h."""
    M = int(round(2 * math.pi / h))
    if M < 4 or abs(M * h - 2 * math.pi) > 1e-9 * 2 * math.pi:
        raise GeometryError(f"grid spacing h={h} does not divide 2*pi; cannot embed in the torus")
    return M


def integer_frequencies(M: int) -> np.ndarray:
    """Integer frequencies in FFT order: 0, 1, ..., M/2-1, -M/2, ..., -1."""
    return np.fft.fftfreq(M, d=1.0 / M).round().astype(np.int64)


@dataclass(frozen=True)
class TorusField:
    """Grid values of a 2 pi-periodic field and its Fourier coefficients."""

    values: np.ndarray
    h: float
    corner: tuple[float, ...]
    spectrum: np.ndarray = field(repr=False)
    cutoff: Cutoff | None = None
    local_l2: float | None = None  # ||psi||_{L2(B(x0, r))} by grid quadrature

    @classmethod
    def from_values(cls, values: np.ndarray, corner=None, cutoff: Cutoff | None = None,
                    local_l2: float | None = None) -> "TorusField":
        values = np.asarray(values)
        M = values.shape[0]
        if any(n != M for n in values.shape):
            raise ArgumentError("torus grid must be M^d")
        h = 2 * math.pi / M
        corner = tuple(float(c) for c in (corner if corner is not None else [-math.pi] * values.ndim))
        k = integer_frequencies(M)
        grids = np.meshgrid(*([k] * values.ndim), indexing="ij", sparse=True)
        phase = np.exp(-1j * sum(g * c for g, c in zip(grids, corner)))
        spec = phase * np.fft.fftn(values) / M**values.ndim
        values.setflags(write=False)
        spec.setflags(write=False)
        return cls(values, h, corner, spec, cutoff, local_l2)

    @classmethod
    def from_spectrum(cls, coefficients: dict, M: int, dim: int = 2, corner=None) -> "TorusField":
        """Field sum_xi c_xi exp(i xi.x) for a finite set of frequencies below Nyquist."""
        corner = tuple(float(c) for c in (corner if corner is not None else [-math.pi] * dim))
        axes = [corner[i] + (2 * math.pi / M) * np.arange(M) for i in range(dim)]
        X = np.meshgrid(*axes, indexing="ij")
        vals = np.zeros((M,) * dim, dtype=complex)
        for xi, c in coefficients.items():
            if len(xi) != dim or max(abs(int(v)) for v in xi) >= M // 2:
                raise ArgumentError(f"frequency {xi} not representable on an M={M} grid")
            vals += c * np.exp(1j * sum(int(v) * x for v, x in zip(xi, X)))
        return cls.from_values(vals, corner)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def nyquist(self) -> int:
        return self.M // 2

    def frequencies(self) -> list[np.ndarray]:
        """Integer frequency grids matching ``spectrum`` (FFT order, indexing 'ij')."""
        k = integer_frequencies(self.M)
        return np.meshgrid(*([k] * self.dim), indexing="ij")

    def coefficient(self, xi) -> complex:
        idx = tuple(int(v) % self.M for v in xi)
        return complex(self.spectrum[idx])

    def l2_norm_sq(self) -> float:
        """Grid quadrature of int_T |Psi|^2."""
        return float(self.h**self.dim * np.sum(np.abs(self.values) ** 2))

    def parseval_error(self) -> float:
        """Relative gap between sum |Psi_hat|^2 and (2 pi)^-d ||Psi||^2."""
        lhs = float(np.sum(np.abs(self.spectrum) ** 2))
        rhs = self.l2_norm_sq() / (2 * math.pi) ** self.dim
        return abs(lhs - rhs) / rhs if rhs else abs(lhs)

    def derivative(self, gamma) -> np.ndarray:
        """Grid values of the partial derivative d^gamma Psi by spectral differentiation.

        |d^gamma Psi| = |D^gamma Psi| for D = -i d/dx, so sup norms agree.
        """
        gamma = tuple(int(g) for g in gamma)
        if len(gamma) != self.dim or min(gamma) < 0:
            raise ArgumentError(f"multi-index {gamma} does not match dimension {self.dim}")
        mult = np.ones(self.spectrum.shape, dtype=complex)
        for g, xi in zip(gamma, self.frequencies()):
            f = (1j * xi.astype(float)) ** g
            if g % 2:
                f[xi == -self.nyquist] = 0.0  # the Nyquist mode has no odd derivative
            mult = mult * f
        k = integer_frequencies(self.M)
        grids = np.meshgrid(*([k] * self.dim), indexing="ij", sparse=True)
        phase = np.exp(1j * sum(g * c for g, c in zip(grids, self.corner)))
        out = np.fft.ifftn(mult * self.spectrum * phase) * self.M**self.dim
        return out.real if np.isrealobj(self.values) else out


def ball_indices(h: float, origin, shape, center, r: float) -> tuple[np.ndarray, ...]:
    """Raster indices (per axis) of lattice points at distance < r from ``center``."""
    lo = [int(math.ceil((c - r - o) / h - 1e-12)) for c, o in zip(center, origin)]
    hi = [int(math.floor((c + r - o) / h + 1e-12)) for c, o in zip(center, origin)]
    for a, b, n in zip(lo, hi, shape):
        if a < 0 or b >= n:
            raise GeometryError(f"ball B({tuple(center)}, {r}) leaves the raster")
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    dist2 = sum((o + h * g - c) ** 2 for g, o, c in zip(grids, origin, center))
    keep = dist2 < r * r
    return tuple(g[keep] for g in grids)


def ball_l2(psi: np.ndarray, h: float, origin, center, r: float) -> float:
    """||psi||_{L2(B(center, r))} by grid quadrature."""
    idx = ball_indices(h, origin, psi.shape, center, r)
    return float(math.sqrt(h**psi.ndim * np.sum(np.abs(psi[idx]) ** 2)))


def periodize(psi: np.ndarray, cutoff: Cutoff, h: float, origin, inside: np.ndarray | None = None) -> TorusField:
    """Psi = chi_r psi wrapped onto the torus grid of spacing h (2 pi / h integer).

    Parameters
    ----------
    psi : array
        Field on the raster ``origin + h * index``.
    cutoff : Cutoff
        Its ball must lie inside the raster, and inside ``inside`` if given.
    h, origin :
        Raster geometry.
    inside : bool array, optional
        Domain mask; every lattice point of the ball must be interior.
    """
    psi = np.asarray(psi)
    M = torus_size(h)
    if any(n > M for n in psi.shape):
        raise GeometryError(f"raster {psi.shape} wider than the torus period ({M} cells)")
    idx = ball_indices(h, origin, psi.shape, cutoff.center, cutoff.r)
    if inside is not None and not np.all(inside[idx]):
        raise GeometryError(f"ball B({cutoff.center}, {cutoff.r}) is not contained in the mask")
    coords = [o + h * i for o, i in zip(origin, idx)]
    vals = np.zeros((M,) * psi.ndim, dtype=psi.dtype)
    wrapped = tuple(i % M for i in idx)
    np.add.at(vals, wrapped, cutoff(*coords) * psi[idx])
    local = float(math.sqrt(h**psi.ndim * np.sum(np.abs(psi[idx]) ** 2)))
    return TorusField.from_values(vals, tuple(origin), cutoff, local)


def periodize_pair(pair, cutoff: Cutoff) -> TorusField:
    """:func:`periodize` for an :class:`~diobound.eigen.EigenPair`."""
    m = pair.mask
    return periodize(pair.psi, cutoff, m.h, m.origin, m.inside)


# Part I / Part II split ----------------------------------------------------------------


def annulus_membership(sym: Symbol, lam: complex, delta: float, points: np.ndarray) -> np.ndarray:
    """|P(xi) - lam| <= |xi|^(m-1+delta) for each row of ``points``.

    Evaluated in floating point; comparisons within a 1e-9 relative band of
    equality are redone in 60-digit arithmetic.
    """
    points = np.asarray(points)
    e = sym.order - 1 + delta
    lhs = np.abs(eval_many(sym, points) - complex(lam))
    rhs = np.sum(points.astype(float) ** 2, axis=1) ** (0.5 * e)
    hit = lhs <= rhs
    close = np.nonzero(np.abs(lhs - rhs) <= _TIE_BAND * np.maximum(rhs, 1.0))[0]
    if close.size:
        with mpmath.workdps(60):
            lam_mp = mpmath.mpc(complex(lam).real, complex(lam).imag)
            for i in close:
                xi = [mpmath.mpf(int(v)) for v in points[i]]
                val = mpmath.mpf(0)
                for alpha, c in sym.terms.items():
                    mono = mpmath.mpf(1)
                    for x, a in zip(xi, alpha):
                        mono *= x**a
                    val += mpmath.mpc(c.real, c.imag) * mono
                n = sum(x * x for x in xi)
                hit[i] = abs(val - lam_mp) <= n ** (mpmath.mpf(e) / 2)
    return hit


def default_alpha(d: int, delta: float) -> int:
    """Smallest integer above d / delta, plus one."""
    return int(math.ceil(d / delta)) + 1


@dataclass(frozen=True)
class CoefficientReport:
    lam: complex
    delta: float
    alpha: int
    nyquist: int
    partI_count: int
    fdelta_count: int | None
    partI_sum: float
    partI_cs_bound: float
    partII_sum: float
    C_obs: float
    C_obs_at: tuple[int, ...]
    psi_hat_zero: float
    tail_sum: float
    zeta_ref: float
    eps2: float
    local_l2: float
    r: float | None
    profile: str | None

    def to_json(self) -> dict:
        lam = complex(self.lam)
        return {
            "lambda": [lam.real, lam.imag], "delta": self.delta, "alpha": self.alpha,
            "nyquist": self.nyquist, "partI_count": self.partI_count,
            "fdelta_count": self.fdelta_count, "partI_sum": self.partI_sum,
            "partI_cs_bound": self.partI_cs_bound, "partII_sum": self.partII_sum,
            "C_obs": self.C_obs, "C_obs_at": list(self.C_obs_at),
            "psi_hat_zero": self.psi_hat_zero, "tail_sum": self.tail_sum,
            "zeta_ref": self.zeta_ref, "eps2": self.eps2, "local_l2": self.local_l2,
            "r": self.r, "profile": self.profile,
        }


def _box_points(field: TorusField) -> tuple[np.ndarray, np.ndarray]:
    """Observed frequencies with |xi_i| < Nyquist, as rows, with their flat spectrum index."""
    grids = field.frequencies()
    keep = np.ones(grids[0].shape, dtype=bool)
    for g in grids:
        keep &= g != -field.nyquist
    pts = np.stack([g[keep] for g in grids], axis=1)
    return pts, keep


def coefficient_bound_report(field: TorusField, sym: Symbol, lam: complex, delta: float,
                             alpha: int | None = None, compare_lattice: bool = True,
                             zeta_horizon: int = 20000) -> CoefficientReport:
    """Split the observed spectrum into the annulus (Part I) and the rest (Part II).

    C_obs is the largest |Psi_hat(xi)| |P(xi)-lam|^alpha / (|xi|^((m-1) alpha) ||psi||_{L2(B)})
    over Part II with xi != 0 and P(xi) != lam. ``tail_sum`` is
    sum |xi|^((m-1) alpha) / |P(xi)-lam|^alpha over the same set, and
    ``zeta_ref`` an upper bound for zeta_d(alpha delta / 2), which dominates it.
    """
    d = field.dim
    if sym.dim != d:
        raise ArgumentError(f"symbol dimension {sym.dim} does not match field dimension {d}")
    if not 0 < delta < 1:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta}")
    alpha = default_alpha(d, delta) if alpha is None else int(alpha)
    if alpha * delta <= d:
        raise ArgumentError(f"alpha must exceed d/delta = {d / delta:.6g}, got {alpha}")
    m = sym.order
    lam = complex(lam)
    need = 2.0 * max(abs(lam.real), 1.0) ** (1.0 / m)
    if field.nyquist <= need:
        raise ResolutionError(f"Nyquist frequency {field.nyquist} does not resolve the annulus "
                              f"(needs > {need:.4g}); use a finer grid")
    if field.local_l2 is None or field.local_l2 <= 0:
        raise ArgumentError("field carries no positive local L2 norm")
    pts, keep = _box_points(field)
    coeff = np.abs(field.spectrum[keep])
    part1 = annulus_membership(sym, lam, delta, pts)
    n = np.sum(pts.astype(float) ** 2, axis=1)
    dist = np.abs(eval_many(sym, pts) - lam)
    part2 = ~part1
    tail_set = part2 & (n > 0) & (dist > 0)
    with np.errstate(divide="ignore"):
        weight = np.where(tail_set, dist**alpha / np.where(tail_set, n, 1.0) ** (0.5 * (m - 1) * alpha), 0.0)
    ratios = coeff * weight / field.local_l2
    j = int(np.argmax(np.where(tail_set, ratios, -1.0)))
    tail = float(math.fsum(np.where(tail_set, 1.0 / np.where(tail_set, weight, 1.0), 0.0)))
    count1 = int(part1.sum())
    fdelta = None
    if compare_lattice:
        cap = field.nyquist * math.sqrt(d)
        rep = count_diophantine(sym, lam, delta, cap, keep_solutions=True, certify=False)
        sols = np.array(rep.solutions, dtype=np.int64).reshape(-1, d)
        fdelta = int(np.sum(np.all(np.abs(sols) < field.nyquist, axis=1)))
    zeta = zeta_d_partial(d, alpha * delta / 2, zeta_horizon)
    cut = field.cutoff
    return CoefficientReport(
        lam, float(delta), alpha, field.nyquist, count1, fdelta,
        float(coeff[part1].sum()),
        float(math.sqrt(np.sum(coeff**2)) * math.sqrt(count1)),
        float(coeff[part2].sum()),
        float(ratios[j]) if tail_set.any() else 0.0,
        tuple(int(v) for v in pts[j]) if tail_set.any() else (),
        float(abs(field.coefficient((0,) * d))) / field.local_l2,
        tail, zeta.upper, alpha * delta - d, field.local_l2,
        cut.r if cut else None, cut.profile if cut else None,
    )


# derivative bounds -----------------------------------------------------------------------


@dataclass(frozen=True)
class DerivativeBound:
    gamma: tuple[int, ...]
    bound: float  # sum_xi |xi|^|gamma| |Psi_hat(xi)|
    sampled_sup: float  # max over the grid of |D^gamma Psi|

    def to_json(self) -> dict:
        return {"gamma": list(self.gamma), "bound": self.bound, "sampled_sup": self.sampled_sup}


def derivative_sup_bound(field: TorusField, gamma) -> DerivativeBound:
    """Fourier-side upper bound for sup |D^gamma Psi| and the sampled value."""
    gamma = tuple(int(g) for g in gamma)
    order = sum(gamma)
    norm = np.sqrt(sum(g.astype(float) ** 2 for g in field.frequencies()))
    bound = float(np.sum(norm**order * np.abs(field.spectrum)))
    sup = float(np.max(np.abs(field.derivative(gamma))))
    return DerivativeBound(gamma, bound, sup)


def shrinking_radius(lam: float) -> float:
    """r(lambda) = lambda^(-1 / log log lambda), defined for lambda > e."""
    if lam <= math.e:
        raise ArgumentError("shrinking radius schedule needs lambda > e")
    return float(lam ** (-1.0 / math.log(math.log(lam))))

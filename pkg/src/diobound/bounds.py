"""Interior sup-norm ratios, log-log exponent fits and the F_delta scaling study."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .cutoff import Cutoff, periodize
from .eigen import ACCURACY_WINDOW, DomainMask, EigenPair, erode
from .errors import ArgumentError, GeometryError, ResolutionError
from .lattice import count_until_complete
from .symbol import VERDICT_ELLIPTIC, Symbol, ellipticity_certificate

MIN_DECADES = 1.5
MIN_POINTS = 4


@dataclass(frozen=True)
class RatioPoint:
    lam_re: float
    ratio: float  # sup over the r-interior of |D^gamma psi| / ||psi||_{L2(mask)}
    r: float
    mask_id: str
    gamma: tuple[int, ...]
    C_A: float  # max over the r-interior of ||psi||_{L2(B(x, r))}
    sup: float
    l2: float

    def to_row(self) -> dict:
        return {"lambda": self.lam_re, "ratio": self.ratio, "r": self.r, "C_A": self.C_A,
                "mask": self.mask_id, "gamma": "".join(str(g) for g in self.gamma)}


def local_l2_max(psi: np.ndarray, mask: DomainMask, r: float, where: np.ndarray) -> float:
    """max over cells in ``where`` of the grid L2 norm of psi on the open ball of radius r."""
    # strict inequality |offset| < r, matching the balls used by the cutoff module
    R = int(math.ceil(r / mask.h))
    ax = np.arange(-R, R + 1)
    g = np.meshgrid(*([ax] * mask.dim), indexing="ij")
    st = (sum(x * x for x in g) * mask.h**2 < r * r).astype(float)
    energy = fftconvolve(np.abs(psi) ** 2, st, mode="same")
    return float(math.sqrt(max(float(energy[where].max()), 0.0) * mask.h**mask.dim))


def _plateau_cover(interior: np.ndarray, h: float, origin, radius: float) -> list[tuple[int, ...]]:
    """Greedy centres in ``interior`` whose closed radius-balls cover every interior cell."""
    idx = np.argwhere(interior)
    pos = np.asarray(origin) + h * idx
    covered = np.zeros(len(idx), dtype=bool)
    centres = []
    for k in range(len(idx)):
        if covered[k]:
            continue
        centres.append(tuple(int(v) for v in idx[k]))
        covered |= np.sum((pos - pos[k]) ** 2, axis=1) <= radius * radius * (1 - 1e-12)
    return centres


def derivative_sup(pair: EigenPair, interior: DomainMask, r: float, gamma) -> float:
    """sup of |d^gamma psi| over ``interior`` via plateau cutoffs on a ball cover.

    Each centre c lies in the r-interior, so B(c, r) is inside the mask; the
    plateau cutoff chi_r equals 1 on B(c, r/2), where the spectral derivative
    of the periodized field therefore equals that of psi.
    """
    mask = pair.mask
    half = r / 2
    best = 0.0
    X = mask.coords()
    for c_idx in _plateau_cover(interior.inside, mask.h, mask.origin, half):
        centre = tuple(o + mask.h * i for o, i in zip(mask.origin, c_idx))
        field = periodize(pair.psi, Cutoff(centre, r, "plateau"), mask.h, mask.origin, mask.inside)
        deriv = field.derivative(gamma)
        near = interior.inside & (sum((x - c) ** 2 for x, c in zip(X, centre)) <= half * half * (1 - 1e-12))
        idx = np.nonzero(near)
        best = max(best, float(np.max(np.abs(deriv[tuple(i % field.M for i in idx)]))))
    return best


def interior_ratio(pair: EigenPair, r: float, gamma=None, mask: DomainMask | None = None,
                   enforce_window: bool = True) -> RatioPoint:
    """||D^gamma psi||_{L_inf(mask_{-r})} / ||psi||_{L2(mask)} on the grid.

    The L2 norm is the grid quadrature over the whole mask; the sup is the
    grid maximum over the eroded mask. Pairs with Re lambda > 0.05 / h^2 are
    refused because the 5-point discretization is no longer 1% accurate there.
    """
    mask = mask or pair.mask
    gamma = tuple(int(g) for g in (gamma if gamma is not None else (0,) * mask.dim))
    if len(gamma) != mask.dim or min(gamma) < 0:
        raise ArgumentError(f"multi-index {gamma} does not match dimension {mask.dim}")
    lam = float(np.real(pair.lam))
    if enforce_window and lam > ACCURACY_WINDOW / mask.h**2:
        raise ResolutionError(f"lambda = {lam:.6g} exceeds the accuracy window "
                              f"{ACCURACY_WINDOW / mask.h**2:.6g}; refine the grid")
    interior = erode(mask, r)
    psi = np.where(mask.inside, pair.psi, 0)
    l2 = float(math.sqrt(mask.h**mask.dim * np.sum(np.abs(psi) ** 2)))
    if l2 == 0:
        raise ArgumentError("eigenfunction vanishes on the mask")
    if sum(gamma) == 0:
        sup = float(np.max(np.abs(psi[interior.inside])))
    else:
        if not 0 < r < 1:
            raise GeometryError("derivative ratios need 0 < r < 1 for the torus cutoff")
        sup = derivative_sup(pair, interior, r, gamma)
    c_a = local_l2_max(psi, mask, r, interior.inside)
    return RatioPoint(lam, sup / l2, float(r), mask.name, gamma, c_a, sup, l2)


# fits -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    n: int
    window: tuple[float, float]

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "n": self.n, "window": list(self.window)}


def fit_loglog(x, y, min_decades: float = MIN_DECADES, min_points: int = MIN_POINTS) -> ExponentFit:
    """Ordinary least squares of log y on log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ArgumentError("x and y differ in length")
    if x.size < min_points:
        raise ArgumentError(f"need at least {min_points} points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ArgumentError("log-log fit needs positive data")
    span = math.log10(x.max() / x.min())
    if span < min_decades - 1e-12:
        raise ArgumentError(f"points span {span:.3f} decades, need >= {min_decades}")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    resid = ly - (intercept + slope * lx)
    dof = x.size - 2
    stderr = float(math.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 else 0.0
    return ExponentFit(slope, intercept, stderr, int(x.size), (float(x.min()), float(x.max())))


def fit_exponent(points: list[RatioPoint], min_decades: float = MIN_DECADES) -> ExponentFit:
    """Slope of log ratio against log Re lambda."""
    return fit_loglog([p.lam_re for p in points], [p.ratio for p in points], min_decades)


# F_delta scaling ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FdeltaPoint:
    lam: float
    count: int
    saturated: bool
    r_star: float
    cap: float

    def to_row(self) -> dict:
        return {"lambda": self.lam, "count": self.count, "saturated": self.saturated,
                "r_star": self.r_star, "cap": self.cap}


@dataclass(frozen=True)
class FdeltaScaling:
    fit: ExponentFit
    points: tuple[FdeltaPoint, ...]
    target: float  # (d - 1 + delta) / m

    def to_json(self) -> dict:
        return {"fit": self.fit.to_json(), "target": self.target,
                "points": [p.to_row() for p in self.points]}


def fdelta_scaling(sym: Symbol, delta: float, lams, workers: int = 1,
                   min_decades: float = MIN_DECADES) -> FdeltaScaling:
    """Slope of log F_delta(lambda, P) against log Re lambda, each count complete.

    Every count uses a cap beyond the radius R* past which no solution can
    exist, so none is truncated; a saturated count is refused.
    """
    cert = ellipticity_certificate(sym)
    if cert.verdict != VERDICT_ELLIPTIC:
        raise ArgumentError(f"F_delta scaling needs an elliptic symbol (verdict {cert.verdict})")
    pts = []
    for lam in lams:
        rep = count_until_complete(sym, lam, delta, certificate=cert, workers=workers)
        if rep.saturated or not rep.complete:
            raise ArgumentError(f"count at lambda={lam} is saturated (cap {rep.cap}); raise the cap")
        pts.append(FdeltaPoint(float(np.real(lam)), rep.count, rep.saturated, rep.r_star, rep.cap))
    fit = fit_loglog([p.lam for p in pts], [p.count for p in pts], min_decades)
    return FdeltaScaling(fit, tuple(pts), (sym.dim - 1 + delta) / sym.order)

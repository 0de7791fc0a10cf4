"""Constant-coefficient symbols P(xi) = sum_alpha c_alpha xi^alpha.

A symbol is stored as a mapping from multi-indices to complex coefficients.
Integer evaluation points combined with Gaussian-integer coefficients are
evaluated in exact (arbitrary precision) integer arithmetic; everything else
goes through complex double arithmetic.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, DegenerateSymbolError, LogicError

MultiIndex = tuple[int, ...]

VERDICT_ELLIPTIC = "elliptic"
VERDICT_NON_ELLIPTIC = "non-elliptic"
VERDICT_INCONCLUSIVE = "inconclusive"

# refined minimum must exceed tolerance by this factor to be called elliptic
_SEPARATION = 100.0
# refinement continues past 1/grid_density**2 down to this step
_POLISH_STEP = 1e-13
_MAX_SWEEPS = 200_000


def _check_alpha(alpha: Sequence[int], dim: int | None = None) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) < 1:
        raise ArgumentError("multi-index must have at least one entry")
    if any(a < 0 for a in alpha):
        raise ArgumentError(f"multi-index entries must be >= 0, got {alpha}")
    if dim is not None and len(alpha) != dim:
        raise ArgumentError(f"multi-index {alpha} has length {len(alpha)}, expected {dim}")
    return alpha


def _is_int(x) -> bool:
    if isinstance(x, (int, np.integer)):
        return True
    if isinstance(x, (float, np.floating)):
        return float(x).is_integer()
    return False


@dataclass(frozen=True)
class Symbol:
    """Polynomial symbol of a constant-coefficient differential operator.

    Build instances with :meth:`from_terms`, which validates multi-indices and
    drops zero coefficients. ``order`` is the largest ``|alpha|`` present.
    """

    dim: int
    terms: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ArgumentError("dimension must be >= 1")
        for alpha in self.terms:
            _check_alpha(alpha, self.dim)

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[Sequence[int], complex] | Iterable) -> "Symbol":
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[MultiIndex, complex] = {}
        for alpha, c in items:
            alpha = _check_alpha(alpha, dim)
            acc[alpha] = acc.get(alpha, 0j) + complex(c)
        return cls(dim, {a: c for a, c in sorted(acc.items()) if c != 0})

    @classmethod
    def laplacian(cls, dim: int) -> "Symbol":
        """Symbol |xi|^2 of -Laplace."""
        return cls.from_terms(dim, {tuple(2 * (i == j) for j in range(dim)): 1 for i in range(dim)})

    @classmethod
    def norm_power(cls, dim: int, k: int) -> "Symbol":
        """Symbol |xi|^(2k), expanded by the multinomial theorem."""
        terms: dict[MultiIndex, complex] = {}
        for ks in itertools.product(range(k + 1), repeat=dim):
            if sum(ks) != k:
                continue
            coef = math.factorial(k)
            for kk in ks:
                coef //= math.factorial(kk)
            terms[tuple(2 * kk for kk in ks)] = coef
        return cls.from_terms(dim, terms)

    @property
    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def gaussian_integer(self) -> bool:
        """True when every coefficient has integral real and imaginary parts."""
        return all(_is_int(c.real) and _is_int(c.imag) for c in self.terms.values())

    def coefficient_mass(self, top_only: bool = False) -> float:
        m = self.order
        return float(sum(abs(c) for a, c in self.terms.items() if not top_only or sum(a) == m))

    def __call__(self, xi):
        return eval_symbol(self, xi)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for alpha, c in self.terms.items():
            mono = "*".join(f"x{i + 1}^{a}" if a > 1 else f"x{i + 1}" for i, a in enumerate(alpha) if a)
            coef = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}j)"
            parts.append(f"{coef}*{mono}" if mono else coef)
        return " + ".join(parts)

    # serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"alpha": list(a), "re": c.real, "im": c.imag} for a, c in self.terms.items()],
        }

    @classmethod
    def from_json(cls, obj: Mapping | str) -> "Symbol":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            dim = int(obj["dim"])
            terms = [(t["alpha"], complex(t.get("re", 0.0), t.get("im", 0.0))) for t in obj["terms"]]
        except (KeyError, TypeError) as exc:
            raise ArgumentError(f"malformed symbol JSON: {exc}") from exc
        return cls.from_terms(dim, terms)

    def to_text(self) -> str:
        lines = [f"# dim {self.dim}"]
        for alpha, c in self.terms.items():
            lines.append(" ".join(str(a) for a in alpha) + f" {c.real!r} {c.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Symbol":
        rows = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if len(tok) < 3:
                raise ArgumentError(f"line {lineno}: expected 'alpha_1 ... alpha_d re im'")
            try:
                alpha = [int(t) for t in tok[:-2]]
                c = complex(float(tok[-2]), float(tok[-1]))
            except ValueError as exc:
                raise ArgumentError(f"line {lineno}: {exc}") from exc
            rows.append((alpha, c))
        if not rows:
            raise ArgumentError("symbol text contains no terms")
        dims = {len(a) for a, _ in rows}
        if len(dims) != 1:
            raise ArgumentError(f"inconsistent multi-index lengths {sorted(dims)}")
        return cls.from_terms(dims.pop(), rows)

    @classmethod
    def load(cls, path) -> "Symbol":
        with open(path) as fh:
            text = fh.read()
        if text.lstrip().startswith("{"):
            return cls.from_json(text)
        return cls.from_text(text)


# evaluation ----------------------------------------------------------------


def eval_exact(sym: Symbol, xi: Sequence[int]) -> tuple[int, int]:
    """Exact ``(re, im)`` of P(xi) for integer xi and Gaussian-integer coefficients."""
    re = im = 0
    for alpha, c in sym.terms.items():
        mono = 1
        for x, a in zip(xi, alpha):
            if a:
                mono *= int(x) ** a
        re += int(c.real) * mono
        im += int(c.imag) * mono
    return re, im


def eval_symbol(sym: Symbol, xi):
    """Evaluate P(xi) at a single point.

    Integer points with Gaussian-integer coefficients use exact integer
    arithmetic and return an ``int`` when the value is real. All other inputs
    use complex doubles; a non-finite result raises ``OverflowError``.
    """
    xi = list(xi)
    if len(xi) != sym.dim:
        raise ArgumentError(f"point has length {len(xi)}, symbol dimension is {sym.dim}")
    if all(_is_int(x) for x in xi) and sym.gaussian_integer:
        re, im = eval_exact(sym, [int(x) for x in xi])
        return re if im == 0 else complex(re, im)
    total = 0j
    with np.errstate(over="raise", invalid="raise"):
        try:
            for alpha, c in sym.terms.items():
                mono = complex(1.0)
                for x, a in zip(xi, alpha):
                    if a:
                        mono *= complex(x) ** a
                total += c * mono
        except (FloatingPointError, OverflowError) as exc:
            raise OverflowError(f"symbol evaluation overflowed at {xi}") from exc
    if not (math.isfinite(total.real) and math.isfinite(total.imag)):
        raise OverflowError(f"symbol evaluation overflowed at {xi}")
    return total


def _monomials(points: np.ndarray, alphas: list[MultiIndex]) -> list[np.ndarray]:
    out = []
    for alpha in alphas:
        mono = np.ones(points.shape[0], dtype=points.dtype)
        for i, a in enumerate(alpha):
            if a:
                mono = mono * points[:, i] ** a
        out.append(mono)
    return out


def eval_many(sym: Symbol, points) -> np.ndarray:
    """Vectorized complex evaluation at the rows of ``points`` (shape (n, d))."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != sym.dim:
        raise ArgumentError(f"points must have shape (n, {sym.dim})")
    alphas = list(sym.terms)
    out = np.zeros(pts.shape[0], dtype=complex)
    for c, mono in zip(sym.terms.values(), _monomials(pts, alphas)):
        out += c * mono
    return out


def int64_safe(sym: Symbol, radius: float, squared: bool = False) -> bool:
    """Whether exact int64 evaluation (optionally of |P - lam|^2) cannot overflow on |xi| <= radius."""
    if not sym.gaussian_integer:
        return False
    bound = sum(abs(c) * max(radius, 1.0) ** sum(a) for a, c in sym.terms.items())
    limit = 2.0**30 if squared else 2.0**61
    return bound < limit


def eval_many_int(sym: Symbol, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact int64 real and imaginary parts; caller must check :func:`int64_safe`."""
    pts = np.asarray(points, dtype=np.int64)
    alphas = list(sym.terms)
    re = np.zeros(pts.shape[0], dtype=np.int64)
    im = np.zeros(pts.shape[0], dtype=np.int64)
    for c, mono in zip(sym.terms.values(), _monomials(pts, alphas)):
        if c.real:
            re += int(c.real) * mono
        if c.imag:
            im += int(c.imag) * mono
    return re, im


def principal_symbol(sym: Symbol) -> Symbol:
    """Top-degree homogeneous part of ``sym``."""
    m = sym.order
    return Symbol(sym.dim, {a: c for a, c in sym.terms.items() if sum(a) == m})


# ellipticity -----------------------------------------------------------------


@dataclass(frozen=True)
class EllipticityCertificate:
    margin: float
    witness: tuple[float, ...]
    verdict: str
    grid_density: int
    tolerance: float
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "margin": self.margin,
            "witness": list(self.witness),
            "verdict": self.verdict,
            "grid_density": self.grid_density,
            "tolerance": self.tolerance,
            "converged": self.converged,
        }


def sphere_grid(dim: int, density: int) -> np.ndarray:
    """Deterministic grid on the unit sphere: cube-surface lattice projected radially."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    ticks = np.linspace(-1.0, 1.0, density + 1)
    face = np.array(list(itertools.product(ticks, repeat=dim - 1)))
    blocks = []
    for axis in range(dim):
        for sign in (1.0, -1.0):
            pts = np.insert(face, axis, sign, axis=1)
            blocks.append(pts)
    pts = np.vstack(blocks)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _canonical_direction(w: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(w)))
    return -w if w[k] < 0 else w


def _refine(f, w: np.ndarray, step: float, coarse_stop: float) -> tuple[np.ndarray, float, bool]:
    best = f(w[None, :])[0]
    sweeps = 0
    stop = min(coarse_stop, _POLISH_STEP)
    while step >= stop:
        sweeps += 1
        if sweeps > _MAX_SWEEPS:
            return w, best, False
        improved = False
        for i in range(w.size):
            for sgn in (1.0, -1.0):
                trial = w.copy()
                trial[i] += sgn * step
                trial /= np.linalg.norm(trial)
                val = f(trial[None, :])[0]
                if val < best:
                    w, best, improved = trial, val, True
        if not improved:
            step *= 0.5
    return w, best, True


def ellipticity_certificate(sym: Symbol, grid_density: int = 32, tolerance: float | None = None,
                            candidates: int = 12) -> EllipticityCertificate:
    """Estimate min |sigma| on the unit sphere and classify the symbol.

    A deterministic sphere grid is scanned, then the lowest ``candidates`` grid
    points are refined by coordinate descent on the sphere (step halving, first
    to ``1/grid_density**2`` and then polished to 1e-13).
    """
    if grid_density < 8:
        raise ArgumentError("grid_density must be >= 8")
    sigma = principal_symbol(sym)
    if sigma.is_zero or sigma.order == 0:
        raise DegenerateSymbolError("principal symbol is identically zero or constant")
    if tolerance is None:
        tolerance = 1e-9 * sigma.coefficient_mass()
    if tolerance <= 0:
        raise ArgumentError("tolerance must be positive")

    def f(w):
        return np.abs(eval_many(sigma, w))

    grid = sphere_grid(sym.dim, grid_density)
    vals = f(grid)
    order = np.argsort(vals, kind="stable")
    starts = []
    for idx in order:
        p = grid[idx]
        if all(np.linalg.norm(p - q) > 1e-12 for q in starts):
            starts.append(p)
        if len(starts) >= candidates:
            break
    results = []
    all_conv = True
    for p in starts:
        w, val, conv = _refine(f, p.copy(), 2.0 / grid_density, 1.0 / grid_density**2)
        all_conv &= conv
        results.append((float(val), _canonical_direction(w)))
    zeros = [r for r in results if r[0] <= tolerance]
    if zeros:
        # several zero directions: report the one closest to the positive diagonal
        best_val, best_w = max(zeros, key=lambda r: (float(np.sum(r[1])), -r[0]))
    else:
        best_val, best_w = min(results, key=lambda r: r[0])
    if best_val <= tolerance:
        verdict = VERDICT_NON_ELLIPTIC
    elif all_conv and best_val > _SEPARATION * tolerance:
        verdict = VERDICT_ELLIPTIC
    else:
        verdict = VERDICT_INCONCLUSIVE
    return EllipticityCertificate(float(best_val), tuple(float(x) for x in best_w), verdict,
                                  grid_density, float(tolerance), all_conv)


@dataclass(frozen=True)
class WitnessSequence:
    points: tuple[tuple[int, ...], ...]
    direction: tuple[float, ...]
    stride: float
    line_distance: float  # max dist(xi_j, R*zeta)
    growth_constant: float  # max |sigma(xi_j)| / |xi_j|^(m-1)

    def to_json(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "direction": list(self.direction),
            "stride": self.stride,
            "C": self.line_distance,
            "C_prime": self.growth_constant,
        }


def witness_sequence(sym: Symbol, cert: EllipticityCertificate, count: int) -> WitnessSequence:
    """Lattice points hugging the zero line of a non-elliptic principal symbol.

    Uses the stride T = 1/max|zeta_i| so that the dominant coordinate of
    ``round(j T zeta)`` advances by exactly one per step; norms are then
    strictly increasing.
    """
    if cert.verdict != VERDICT_NON_ELLIPTIC:
        raise LogicError(f"witness sequence needs a non-elliptic certificate, got {cert.verdict}")
    if count < 1:
        raise ArgumentError("count must be >= 1")
    zeta = _canonical_direction(np.asarray(cert.witness, dtype=float))
    zeta = zeta / np.linalg.norm(zeta)
    stride = 1.0 / float(np.max(np.abs(zeta)))
    j = np.arange(1, count + 1, dtype=float)[:, None]
    pts = np.rint(j * stride * zeta[None, :]).astype(np.int64)
    proj = pts @ zeta
    dist = np.linalg.norm(pts - proj[:, None] * zeta[None, :], axis=1)
    sigma = principal_symbol(sym)
    m = sigma.order
    sig = np.array([abs(eval_symbol(sigma, p.tolist())) for p in pts], dtype=float)
    norms = np.linalg.norm(pts, axis=1)
    growth = float(np.max(sig / norms ** (m - 1))) if m >= 1 else float(np.max(sig))
    return WitnessSequence(tuple(tuple(int(x) for x in p) for p in pts), tuple(zeta.tolist()),
                           stride, float(dist.max()), growth)

"""Dirichlet eigenpairs of -Laplace + V on raster masks.

The operator is the 5-point finite-difference Laplacian restricted to the
interior cells of a :class:`DomainMask`; exterior neighbours are dropped,
which imposes zero Dirichlet data. Eigenpairs near a target are found by
shift-invert ARPACK (one sparse LU per shift) from a fixed starting vector.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigs, eigsh

from ..errors import ArgumentError, ConvergenceError
from .domain import DomainMask, rectangle_mask

START_SEED = 20240602  # seed of the ARPACK starting vector
MAX_ITER = 20000
ACCURACY_WINDOW = 0.05  # lambda <= ACCURACY_WINDOW / h^2 keeps the 5-point error below 1%
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class ProblemSpec:
    """Mask, potential samples (scalar or grid field) and boundary condition."""

    mask: DomainMask
    V: np.ndarray | complex | float = 0.0
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.boundary != "dirichlet":
            raise ArgumentError("only Dirichlet boundary conditions are supported")
        V = np.asarray(self.V)
        if V.ndim and V.shape != self.mask.shape:
            raise ArgumentError(f"V has shape {V.shape}, mask has {self.mask.shape}")
        vals = V[self.mask.inside] if V.ndim else V
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("V must be finite on the mask")

    def potential(self) -> np.ndarray:
        """V on the interior cells, in the order used by :func:`assemble`."""
        V = np.asarray(self.V)
        if V.ndim == 0:
            return np.full(self.mask.n_inside, V.item())
        return V[self.mask.inside]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.V) or bool(np.all(np.imag(self.V) == 0))


@dataclass(frozen=True)
class EigenPair:
    lam: complex
    psi: np.ndarray  # full raster, zero outside the mask
    residual: float
    source: str  # "discrete-solver" | "closed-form"
    mask: DomainMask
    metadata: dict = field(default_factory=dict)

    @property
    def lam_re(self) -> float:
        return float(np.real(self.lam))

    def l2_norm(self) -> float:
        """Grid quadrature sqrt(h^d sum |psi|^2)."""
        return float(math.sqrt(self.mask.h**self.mask.dim * np.sum(np.abs(self.psi) ** 2)))


def assemble(spec: ProblemSpec) -> sp.csr_matrix:
    """Sparse matrix of -Laplace_h + V over interior cells (row-major cell order)."""
    mask = spec.mask
    inside = mask.inside
    n = mask.n_inside
    index = -np.ones(inside.shape, dtype=np.int64)
    index[inside] = np.arange(n)
    h2 = mask.h**2
    V = spec.potential()
    dtype = complex if np.iscomplexobj(V) else float
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [2 * mask.dim / h2 + V.astype(dtype)]
    for axis in range(mask.dim):
        # pair each interior cell with its interior successor along this axis
        lo = [slice(None)] * mask.dim
        hi = [slice(None)] * mask.dim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        a = index[tuple(lo)]
        b = index[tuple(hi)]
        both = (a >= 0) & (b >= 0)
        a, b = a[both], b[both]
        off = np.full(a.size, -1.0 / h2, dtype=dtype)
        rows += [a, b]
        cols += [b, a]
        vals += [off, off]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return A.tocsr()


def spectral_bounds(spec: ProblemSpec) -> tuple[float, float]:
    """Gershgorin interval containing Re of the spectrum."""
    V = spec.potential().real
    h2 = spec.mask.h**2
    return float(V.min()), float(V.max() + 4 * spec.mask.dim / h2)


def _to_field(mask: DomainMask, v: np.ndarray) -> np.ndarray:
    psi = np.zeros(mask.shape, dtype=v.dtype)
    psi[mask.inside] = v
    return psi


def _normalize(v: np.ndarray, h: float, dim: int) -> np.ndarray:
    v = v / math.sqrt(h**dim * np.vdot(v, v).real)
    # fix the phase: largest entry real positive
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    v = v / phase
    if np.isrealobj(v) or np.all(np.abs(v.imag) <= 1e-14 * np.abs(v).max()):
        v = np.real(v).copy() if np.iscomplexobj(v) else v
    return v


def _parse_window(spec: ProblemSpec, window) -> tuple[float, float | None]:
    lo_b, hi_b = spectral_bounds(spec)
    if window is None:
        return lo_b, None
    if np.isscalar(window):
        shift, upper = float(window), None
    else:
        a, b = (float(w) for w in window)
        if not a < b:
            raise ArgumentError(f"window must satisfy a < b, got ({a}, {b})")
        shift, upper = a, b
    if not lo_b - 1.0 <= shift <= hi_b:
        raise ArgumentError(f"window start {shift} outside spectral bounds [{lo_b}, {hi_b}]")
    return shift, upper


def _rayleigh_ritz(A, X: np.ndarray, hermitian: bool):
    """Rotate a basis X to the Ritz vectors of A on span(X)."""
    Q, _ = np.linalg.qr(X)
    H = Q.conj().T @ (A @ Q)
    if hermitian:
        w, U = np.linalg.eigh((H + H.conj().T) / 2)
    else:
        w, U = np.linalg.eig(H)
    return w, Q @ U


def solve(spec: ProblemSpec, k: int = 1, window=None, tol: float = 0.0,
          max_iter: int = MAX_ITER) -> list[EigenPair]:
    """Up to k eigenpairs of -Laplace_h + V closest above ``window``.

    Parameters
    ----------
    spec : ProblemSpec
    k : int
        Number of pairs wanted.
    window : None, float or (a, b)
        None targets the bottom of the spectrum; a float is a shift; an
        interval targets eigenvalues from ``a`` upward and drops those with
        ``Re lambda > b`` (so fewer than k pairs may come back).
    tol : float
        ARPACK tolerance, 0 means machine precision.

    Returns
    -------
    list of EigenPair sorted by Re lambda, each with residual
    ``||(A - lambda) v|| / ||v||`` at most ``1e-8 |lambda|``.
    """
    if k < 1:
        raise ArgumentError("k must be >= 1")
    mask = spec.mask
    n = mask.n_inside
    A = assemble(spec)
    shift, upper = _parse_window(spec, window)
    hermitian = spec.is_real
    if not hermitian and upper is None and window is None:
        shift = spec.potential().real.min()
    if hermitian:
        A = A.real.tocsr() if np.iscomplexobj(A.data) else A
    k_eff = min(k, n)
    if n <= max(2 * k_eff + 2, 64):
        dense = A.toarray()
        w, X = (np.linalg.eigh(dense) if hermitian else np.linalg.eig(dense))
        order = np.argsort(np.abs(w - shift) if window is not None else w.real, kind="stable")
        w, X = w[order[:k_eff]], X[:, order[:k_eff]]
    else:
        # shift slightly below the target so an eigenvalue at the shift does not make the LU singular
        sigma = shift - 1e-7 * max(1.0, abs(shift))
        rng = np.random.default_rng(START_SEED)
        v0 = rng.standard_normal(n)
        try:
            if hermitian:
                w, X = eigsh(A, k=k_eff, sigma=sigma, which="LM", v0=v0, tol=tol,
                             maxiter=max_iter)
            else:
                w, X = eigs(A.astype(complex), k=k_eff, sigma=sigma, which="LM",
                            v0=v0.astype(complex), tol=tol, maxiter=max_iter)
        except ArpackNoConvergence as exc:
            best = np.inf
            for lam, vec in zip(exc.eigenvalues, exc.eigenvectors.T):
                r = np.linalg.norm(A @ vec - lam * vec) / np.linalg.norm(vec)
                best = min(best, r / max(abs(lam), 1.0))
            raise ConvergenceError(f"ARPACK did not converge within {max_iter} iterations",
                                   best_residual=float(best)) from exc
        w, X = _rayleigh_ritz(A, X, hermitian)
    pairs = []
    for lam, v in zip(w, X.T):
        if hermitian:
            lam = float(np.real(lam))
            v = np.real(v)
        if upper is not None and np.real(lam) > upper:
            continue
        res = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
        if res > RESIDUAL_RTOL * max(abs(lam), 1.0):
            raise ConvergenceError(f"eigenpair near {lam} has residual {res:.3e}", best_residual=res)
        v = _normalize(v, mask.h, mask.dim)
        pairs.append(EigenPair(lam if not hermitian else float(lam), _to_field(mask, v), res,
                               "discrete-solver", mask))
    pairs.sort(key=lambda p: (np.real(p.lam), np.imag(p.lam)))
    return pairs


def solve_window(spec: ProblemSpec, lo: float, hi: float, max_pairs: int = 2000) -> list[EigenPair]:
    """All eigenpairs with lo <= Re lambda <= hi.

    k is sized from Weyl's law (area * lambda / 4 pi) and doubled until the
    largest returned eigenvalue passes ``hi``.
    """
    if not lo < hi:
        raise ArgumentError("need lo < hi")
    area = spec.mask.n_inside * spec.mask.h**spec.mask.dim
    k = int(math.ceil(1.2 * area * (hi - min(lo, hi)) / (4 * math.pi))) + 12
    while True:
        k = min(k, max_pairs, spec.mask.n_inside)
        got = solve(spec, k=k, window=lo)
        inside = [p for p in got if lo <= p.lam_re <= hi]
        if got[-1].lam_re > hi or k >= max_pairs or k >= spec.mask.n_inside:
            return inside
        k *= 2


def accuracy_ceiling(mask: DomainMask) -> float:
    """Largest eigenvalue accepted by the experiments: 0.05 / h^2."""
    return ACCURACY_WINDOW / mask.h**2


# closed forms ------------------------------------------------------------------------


def discrete_box_eigenvalue(m: int, n: int, h: float) -> float:
    """Eigenvalue (4/h^2)(sin^2(mh/2) + sin^2(nh/2)) of the 5-point box Laplacian."""
    return 4 / h**2 * (math.sin(m * h / 2) ** 2 + math.sin(n * h / 2) ** 2)


def rectangle_oracle(m: int, n: int, N: int = 63) -> EigenPair:
    """sin(mx) sin(ny) sampled on the N x N lattice inside (0, pi)^2, lambda = m^2 + n^2.

    The field is left unnormalized (sup 1) and the continuum norms are kept in
    ``metadata``; the residual is that of the discrete operator.
    """
    if m < 1 or n < 1:
        raise ArgumentError("m and n must be >= 1")
    mask = rectangle_mask(N)
    X, Y = mask.coords()
    psi = np.sin(m * X) * np.sin(n * Y)
    lam = float(m * m + n * n)
    A = assemble(ProblemSpec(mask))
    v = psi[mask.inside]
    res = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
    meta = {"m": m, "n": n, "N": N, "l2_norm": math.pi / 2, "sup_norm": 1.0}
    return EigenPair(lam, psi, res, "closed-form", mask, meta)


# binary dump ----------------------------------------------------------------------------
# little-endian: header <qqdq> (nx, ny, h, k), then per pair <ddd> (lam_re, lam_im, residual)
# followed by nx*ny float64 values of Re psi in row-major (i, j) order.

_HEADER = struct.Struct("<qqdq")
_PAIR = struct.Struct("<ddd")


def write_pairs(path, pairs: list[EigenPair]) -> None:
    if not pairs:
        raise ArgumentError("no eigenpairs to write")
    mask = pairs[0].mask
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(mask.nx, mask.ny, mask.h, len(pairs)))
        for p in pairs:
            lam = complex(p.lam)
            fh.write(_PAIR.pack(lam.real, lam.imag, p.residual))
            fh.write(np.ascontiguousarray(np.real(p.psi), dtype="<f8").tobytes())


def read_pairs(path, mask: DomainMask | None = None) -> list[EigenPair]:
    """Read a pair dump; without ``mask`` the support of the first field is used."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ArgumentError(f"{path}: truncated header")
    nx, ny, h, k = _HEADER.unpack_from(data, 0)
    size = nx * ny * 8
    if len(data) != _HEADER.size + k * (_PAIR.size + size):
        raise ArgumentError(f"{path}: size does not match header ({nx}x{ny}, k={k})")
    off = _HEADER.size
    raw = []
    for _ in range(k):
        lr, li, res = _PAIR.unpack_from(data, off)
        off += _PAIR.size
        psi = np.frombuffer(data, dtype="<f8", count=nx * ny, offset=off).reshape(nx, ny).copy()
        off += size
        raw.append((complex(lr, li) if li else lr, res, psi))
    if mask is None:
        support = np.zeros((nx, ny), dtype=bool)
        for _, _, psi in raw:
            support |= psi != 0
        mask = DomainMask(support, h, (h, h), "from-pairs")
    elif mask.shape != (nx, ny):
        raise ArgumentError(f"mask shape {mask.shape} does not match dump ({nx}, {ny})")
    return [EigenPair(lam, psi, res, "discrete-solver", mask) for lam, res, psi in raw]

"""Nonnegative matrix arithmetic, structure and certified spectral radius.

Matrices are plain ``numpy`` float arrays; ``as_nonneg`` is the single point
where the nonnegativity/finiteness invariant is enforced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import InvariantViolation, ValidationError

_EPS = np.finfo(float).eps


def as_nonneg(X, name: str = "matrix") -> np.ndarray:
    X = np.array(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] < 1:
        raise ValidationError(f"{name}: expected a square N x N array with N >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name}: entries must be finite")
    if np.any(X < 0):
        raise ValidationError(f"{name}: entries must be nonnegative")
    return X


def as_diag(d, n: int | None = None, name: str = "d") -> np.ndarray:
    """Validate a diagonal vector: strictly positive, finite entries."""
    d = np.array(d, dtype=float)
    if d.ndim != 1 or (n is not None and d.shape[0] != n):
        raise ValidationError(f"{name}: expected a vector of length {n}, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise ValidationError(f"{name}: diagonal entries must be finite and strictly positive")
    return d


def matmul(X, Y) -> np.ndarray:
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    if X.shape[1] != Y.shape[0]:
        raise ValidationError(f"dimension mismatch: {X.shape} @ {Y.shape}")
    return X @ Y


def scale_columns(A, d) -> np.ndarray:
    """Return ``A @ diag(d)``, i.e. ``result[i, j] = A[i, j] * d[j]``."""
    A = np.asarray(A, dtype=float)
    d = np.asarray(d, dtype=float)
    if d.shape != (A.shape[1],):
        raise ValidationError(f"dimension mismatch: A is {A.shape}, d has shape {d.shape}")
    return A * d[np.newaxis, :]


def matrix_norm(X, which: str = "frobenius") -> float:
    X = np.asarray(X, dtype=float)
    if which not in ("frobenius", "operator2"):
        raise ValueError(f"unknown norm {which!r}")
    # rescale first so squares neither underflow nor overflow
    s = float(np.abs(X).max()) if X.size else 0.0
    if s == 0 or not math.isfinite(s):
        return s
    Y = X / s
    if which == "frobenius":
        return s * float(np.sqrt(np.sum(Y * Y)))
    return s * math.sqrt(spectral_radius(Y.T @ Y).mid)


def _bool_mult(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return (X.astype(np.int64) @ Y.astype(np.int64)) > 0


def _bool_power_at_least(P: np.ndarray, exponent: int) -> np.ndarray:
    """Boolean pattern of P**(2**j) for the first 2**j >= exponent."""
    Q = P.copy()
    k = 1
    while k < exponent:
        Q = _bool_mult(Q, Q)
        k *= 2
    return Q


def classify(A) -> str:
    """One of ``positive``, ``primitive``, ``irreducible``, ``reducible``.

    Decided on the zero pattern with integer arithmetic only. A 1x1 zero
    matrix is classed as reducible.
    """
    P = as_nonneg(A) > 0
    n = P.shape[0]
    if P.all():
        return "positive"
    if n == 1:
        return "reducible"
    reach = _bool_power_at_least(P | np.eye(n, dtype=bool), n - 1)
    if not reach.all():
        return "reducible"
    # Wielandt: a primitive matrix has P**k > 0 for every k >= (n-1)**2 + 1
    if _bool_power_at_least(P, (n - 1) ** 2 + 1).all():
        return "primitive"
    return "irreducible"


def is_primitive(A) -> bool:
    return classify(A) in ("positive", "primitive")


@dataclass(frozen=True)
class SpectralBracket:
    lower: float
    upper: float
    iterations: int
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        object.__setattr__(self, "converged", bool(self.converged))

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def log_rho(self) -> float:
        m = self.mid
        return math.log(m) if m > 0 else -math.inf

    @property
    def log_width(self) -> float:
        """Width of the bracket on ln(rho); infinite when the lower end is 0 but rho may not be."""
        if self.upper == 0:
            return 0.0
        if self.lower <= 0:
            return math.inf
        return math.log(self.upper) - math.log(self.lower)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _collatz_wielandt(B: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    if not np.all(x > 0) or not np.all(np.isfinite(x)):
        return 0.0, math.inf
    r = (B @ x) / x
    return float(r.min()), float(r.max())


def _perron_guess(B: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(B)
    k = int(np.argmax(vals.real))
    x = np.abs(vecs[:, k].real)
    if not np.all(x > 0):
        x = np.ones(B.shape[0])
    # B + cI is primitive with the same Perron vector, so this also settles periodic blocks
    M = B + np.abs(vals[k].real) * np.eye(B.shape[0])
    for _ in range(8):
        y = M @ x
        s = y.sum()
        if not (s > 0 and np.all(y > 0)):
            break
        x = y / s
    return x


def _irreducible_bracket(B: np.ndarray, tol: float, max_iter: int) -> SpectralBracket:
    lower, upper = 0.0, math.inf

    lo, hi = _collatz_wielandt(B, _perron_guess(B))
    lower, upper = max(lower, lo), min(upper, hi)

    # Gelfand repeated squaring on a unit-Frobenius representative with the
    # log of the true scale carried separately.
    nrm = matrix_norm(B)
    U = B / nrm
    logscale = math.log(nrm)
    power = 1
    k = 0
    while True:
        with np.errstate(divide="ignore"):
            log_norms = np.log([np.abs(U).sum(axis=0).max(), np.abs(U).sum(axis=1).max(), 1.0])
        upper = min(upper, math.exp((logscale + float(log_norms.min())) / power))
        dmax = float(np.diag(U).max())
        if dmax > 0:
            lower = max(lower, math.exp((logscale + math.log(dmax)) / power))
        lo, hi = _collatz_wielandt(B, U.sum(axis=1))
        lower, upper = max(lower, lo), min(upper, hi)
        if upper - lower <= tol * max(1.0, upper) or k >= max_iter:
            break
        U = U @ U
        s = matrix_norm(U)
        if s == 0 or not math.isfinite(s):
            break
        U /= s
        logscale = 2 * logscale + math.log(s)
        power *= 2
        k += 1
    converged = upper - lower <= tol * max(1.0, upper)
    return SpectralBracket(lower, upper, k, converged)


def spectral_radius(C, tol: float = 1e-12, max_iter: int = 64) -> SpectralBracket:
    """Two-sided bracket on the spectral radius of a nonnegative matrix.

    The radius is the maximum over the irreducible diagonal blocks of the
    Frobenius normal form. Each block is bracketed by Gelfand repeated
    squaring (norm upper bounds, diagonal lower bounds) intersected with
    Collatz-Wielandt bounds. ``tol`` is relative to ``max(1, upper)``.
    The ends are widened by a few ulps to absorb rounding.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    C = as_nonneg(C)
    if not C.any():
        return SpectralBracket(0.0, 0.0, 0, True)
    ncomp, labels = connected_components(C > 0, directed=True, connection="strong")
    lower = upper = 0.0
    iterations = 0
    converged = True
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if idx.size == 1:
            v = C[idx[0], idx[0]]
            lower, upper = max(lower, v), max(upper, v)
            continue
        b = _irreducible_bracket(C[np.ix_(idx, idx)], tol, max_iter)
        pad = 16 * idx.size * _EPS
        lower = max(lower, b.lower * (1 - pad))
        upper = max(upper, b.upper * (1 + pad))
        iterations = max(iterations, b.iterations)
        converged &= b.converged
    return SpectralBracket(lower, upper, iterations, converged)


@dataclass(frozen=True)
class ColumnStats:
    m_c: np.ndarray
    M_c: np.ndarray
    M: float
    kappa: float

    @property
    def kappa_finite(self) -> bool:
        return math.isfinite(self.kappa)


def column_kappa(A) -> float:
    """max over columns of (column max / column min); ``inf`` if some column has a zero."""
    A = np.asarray(A, dtype=float)
    cmin, cmax = A.min(axis=0), A.max(axis=0)
    if np.any(cmin <= 0):
        return math.inf
    return float((cmax / cmin).max())


def column_stats(A, d) -> ColumnStats:
    A = as_nonneg(A)
    d = as_diag(d, A.shape[0])
    return ColumnStats(
        m_c=d * A.min(axis=0),
        M_c=d * A.max(axis=0),
        M=float(scale_columns(A, d).max()),
        kappa=column_kappa(A),
    )


class Subinvariance(NamedTuple):
    holds: bool
    margin: float


def check_subinvariance(C, w, mu: float, tol: float = 1e-12) -> Subinvariance:
    """Test ``C w <= mu w + tol`` coordinatewise for a positive vector ``w``.

    ``margin`` is ``min_i (mu w_i - (C w)_i)``. When the test passes, the
    implied bound ``rho(C) <= mu + tol / min(w)`` is cross-checked against
    the spectral bracket.
    """
    C = as_nonneg(C)
    w = np.asarray(w, dtype=float)
    if w.shape != (C.shape[0],) or not np.all(w > 0):
        raise ValidationError("w must be a strictly positive vector matching C")
    if mu <= 0:
        raise ValidationError("mu must be positive")
    margin = float(np.min(mu * w - C @ w))
    holds = margin >= -tol
    if holds:
        bound = mu + tol / float(w.min())
        lo = spectral_radius(C).lower
        if lo > bound * (1 + 1e-12):
            raise InvariantViolation(f"subinvariant vector found but rho >= {lo} > {bound}")
    return Subinvariance(holds, margin)


def hilbert_distance(x, y) -> float:
    """Hilbert projective distance between two positive vectors."""
    r = np.log(np.asarray(x, dtype=float)) - np.log(np.asarray(y, dtype=float))
    return float(r.max() - r.min())


def projective_diameter(A) -> float:
    """Projective diameter of the image cone; infinite unless A is positive."""
    A = np.asarray(A, dtype=float)
    if not np.all(A > 0):
        return math.inf
    L = np.log(A)
    # max over column pairs (k, l) of the Hilbert distance between columns
    diff = L[:, :, None] - L[:, None, :]
    return float((diff.max(axis=0) - diff.min(axis=0)).max())


def birkhoff_contraction(A) -> float:
    """Birkhoff coefficient tanh(diam / 4) of a positive matrix."""
    return math.tanh(projective_diameter(A) / 4)

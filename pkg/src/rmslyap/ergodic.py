"""Ergodic base dynamics realized as seeded, two-sided environment paths.

Three drivers are provided: iid draws from a finite law, an ergodic finite
Markov chain, and an irrational rotation of the circle read through a finite
partition. A path is addressable at any integer time ``k``; index ``k``
stands for the point reached after ``k`` applications of the base map
(negative ``k`` for its inverse).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, ClassVar, Sequence, Union

import numpy as np
from numpy.random import Philox

from . import _kernels
from .errors import NotErgodicError, ValidationError
from .matrix import classify

_TWO64 = 2**64
_OFFSET = 2**63


def _probability_vector(p, name: str = "p") -> np.ndarray:
    p = np.array(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name}: expected a nonempty probability vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValidationError(f"{name}: probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValidationError(f"{name}: probabilities must sum to 1 (got {p.sum()!r})")
    return p


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


@dataclass(frozen=True)
class IIDDriver:
    p: tuple
    kind: ClassVar[str] = "iid"

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in _probability_vector(self.p)))

    @property
    def n_states(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class MarkovDriver:
    """Finite chain with row-stochastic transitions ``P``.

    A supplied ``pi`` is checked against ``pi P = pi``, never trusted.
    """

    P: tuple
    pi: tuple | None = None
    kind: ClassVar[str] = "markov"

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ValidationError("markov: P must be a nonempty square matrix")
        for i, row in enumerate(P):
            _probability_vector(row, name=f"markov: row {i} of P")
        structure = classify(P)
        if structure == "reducible":
            raise NotErgodicError("markov: not ergodic, transition graph is not irreducible")
        if structure == "irreducible":
            raise NotErgodicError("markov: not ergodic, aperiodicity check failed (periodic chain)")
        object.__setattr__(self, "P", tuple(tuple(float(x) for x in r) for r in P))
        pi = _solve_stationary(P)
        if self.pi is not None:
            given = _probability_vector(self.pi, name="markov: pi")
            if given.shape != pi.shape or np.abs(given @ P - given).max() > 1e-10:
                raise ValidationError("markov: supplied pi does not satisfy pi P = pi within 1e-10")
        object.__setattr__(self, "pi", tuple(float(x) for x in pi))

    @property
    def n_states(self) -> int:
        return len(self.P)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.P)

    def reversed_matrix(self) -> np.ndarray:
        """Transition matrix of the time-reversed stationary chain."""
        pi = np.array(self.pi)
        if np.any(pi <= 0):
            raise ValidationError("markov: degenerate stationary law (some pi_i = 0)")
        return self.matrix.T * pi[np.newaxis, :] / pi[:, np.newaxis]


def _solve_stationary(P: np.ndarray) -> np.ndarray:
    S = P.shape[0]
    M = P.T - np.eye(S)
    M[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(M, b)
    for _ in range(3):
        r = pi @ P - pi
        if np.abs(r).max() <= 1e-13:
            break
        pi = pi + np.linalg.solve(M, np.concatenate([r[:-1], [1.0 - pi.sum()]]))
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _is_near_rational(x: float, max_den: int = 10**6, tol: float = 1e-14) -> bool:
    q = Fraction(x).limit_denominator(max_den)
    return abs(x - float(q)) <= tol


@dataclass(frozen=True)
class RotationDriver:
    """Rotation ``x -> x + alpha mod 1`` labelled by the cells cut at ``cuts``.

    Points are held in 64-bit fixed point so that forward and inverse steps
    are exact; ``alpha`` is rejected if it lies within 1e-14 of a fraction
    with denominator at most 10**6.
    """

    alpha: float
    x0: float = 0.0
    cuts: tuple = (0.5,)
    kind: ClassVar[str] = "rotation"

    def __post_init__(self):
        a = float(self.alpha)
        if not 0.0 < a < 1.0:
            raise ValidationError("rotation: alpha must lie in (0, 1)")
        if _is_near_rational(a):
            raise ValidationError("rotation: alpha is (numerically) rational; irrational step required")
        if not 0.0 <= float(self.x0) < 1.0:
            raise ValidationError("rotation: x0 must lie in [0, 1)")
        cuts = tuple(float(c) for c in self.cuts)
        if any(not 0.0 < c < 1.0 for c in cuts) or any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValidationError("rotation: cuts must be strictly increasing inside (0, 1)")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "cuts", cuts)

    @property
    def n_states(self) -> int:
        return len(self.cuts) + 1

    @property
    def step(self) -> int:
        return int(self.alpha * _TWO64)

    @property
    def origin(self) -> int:
        return int(self.x0 * _TWO64)

    def advance(self, x: int, k: int = 1) -> int:
        return (x + k * self.step) % _TWO64

    def label(self, x) -> np.ndarray:
        cut_ints = np.array([int(c * _TWO64) for c in self.cuts], dtype=np.uint64)
        return np.searchsorted(cut_ints, np.asarray(x, dtype=np.uint64), side="right").astype(np.int64)


Driver = Union[IIDDriver, MarkovDriver, RotationDriver]


def stationary_distribution(driver: Driver) -> np.ndarray:
    if isinstance(driver, IIDDriver):
        return np.array(driver.p)
    if isinstance(driver, MarkovDriver):
        return np.array(driver.pi)
    raise ValidationError(f"{driver.kind}: no finite stationary representation")


def uniforms(seed: int, start: int, stop: int, stream: int = 0) -> np.ndarray:
    """Counter-based uniforms on [0, 1): entry ``k - start`` depends only on (seed, stream, k)."""
    if stop <= start:
        return np.empty(0)
    m0 = start + _OFFSET
    counter, skip = divmod(m0, 4)
    key = (int(seed) % _TWO64) + (int(stream) % _TWO64) * _TWO64
    raw = Philox(key=key, counter=counter).random_raw(skip + stop - start)[skip:]
    return (raw >> np.uint64(11)) * (1.0 / 2**53)


@dataclass(frozen=True)
class EnvPath:
    """Two-sided environment path; ``shift(m)`` gives the path seen from ``theta^m omega``.

    Markov realizations are materialized lazily outward from index 0 and
    shared by all shifts of the same path.
    """

    driver: Driver
    seed: int
    offset: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def shift(self, m: int = 1) -> "EnvPath":
        return EnvPath(self.driver, self.seed, self.offset + m, self._cache)

    def state_at(self, k: int) -> int:
        return int(self.states(k, k + 1)[0])

    def states(self, start: int, stop: int) -> np.ndarray:
        """States at indices ``start, ..., stop - 1`` as an int64 array."""
        start, stop = start + self.offset, stop + self.offset
        drv = self.driver
        if isinstance(drv, IIDDriver):
            return _inverse_cdf(np.cumsum(drv.p), uniforms(self.seed, start, stop)).astype(np.int64)
        if isinstance(drv, RotationDriver):
            return drv.label(self._points(start, stop))
        return self._markov_states(start, stop)

    def points(self, start: int, stop: int) -> np.ndarray:
        """Rotation only: fixed-point positions (uint64, unit = 2**-64)."""
        if not isinstance(self.driver, RotationDriver):
            raise ValidationError("points are defined for the rotation driver only")
        return self._points(start + self.offset, stop + self.offset)

    def _points(self, start: int, stop: int) -> np.ndarray:
        drv = self.driver
        k = np.arange(start, stop, dtype=np.int64).view(np.uint64)
        with np.errstate(over="ignore"):
            return np.uint64(drv.origin) + k * np.uint64(drv.step)

    def _markov_states(self, start: int, stop: int) -> np.ndarray:
        parts = []
        if start < 0:
            back = self._materialize("backward", -start)  # back[j] is index -1 - j
            lo, hi = max(start, -len(back)), min(stop, 0)
            parts.append(back[-1 - np.arange(lo, hi)])
        if stop > 0:
            fwd = self._materialize("forward", stop)
            parts.append(fwd[max(start, 0):stop])
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)

    def _materialize(self, direction: str, length: int) -> np.ndarray:
        cache = self._cache
        have = cache.get(direction)
        if have is not None and len(have) >= length:
            return have
        drv = self.driver
        if "x0" not in cache:
            cache["x0"] = int(_inverse_cdf(np.cumsum(drv.pi), uniforms(self.seed, 0, 1))[0])
        target = max(length, 2 * len(have) if have is not None else 1024)
        if direction == "forward":
            cdf = np.cumsum(drv.matrix, axis=1)
            u = uniforms(self.seed, 1, target)
            walk = _kernels.markov_walk(cache["x0"], cdf, u)
        else:
            cdf = np.cumsum(drv.reversed_matrix(), axis=1)
            u = uniforms(self.seed, -target, 0)[::-1].copy()  # u[j] is index -1 - j
            walk = _kernels.markov_walk(cache["x0"], cdf, u)[1:]
        cache[direction] = walk
        return walk


def backward_path_construction(driver: Driver, seed: int) -> EnvPath:
    """Two-sided path whose law is stationary on both half-lines.

    Negative indices use per-index uniforms (iid), the time-reversed chain
    run from index 0 (Markov), or exact inverse rotation.
    """
    if isinstance(driver, MarkovDriver):
        driver.reversed_matrix()  # rejects degenerate stationary laws
    return EnvPath(driver, seed)


def batch_means(x: np.ndarray, nbatches: int = 20) -> tuple[float, float]:
    """Mean and batch-means standard error of a (time-ordered) series."""
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = float(np.mean(x))
    if n < 2 or not math.isfinite(mean):
        return mean, 0.0
    if n < nbatches:
        return mean, float(np.std(x, ddof=1) / math.sqrt(n))
    edges = np.linspace(0, n, nbatches + 1).astype(int)
    bm = np.add.reduceat(x, edges[:-1]) / np.diff(edges)
    return mean, float(np.std(bm, ddof=1) / math.sqrt(nbatches))


StateFunction = Union[Sequence[float], np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _evaluate(f: StateFunction, states: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.asarray(f(states), dtype=float) * np.ones(states.shape)
    return np.asarray(f, dtype=float)[states]


def birkhoff_average(path: EnvPath, f: StateFunction, n: int) -> float:
    """(1/n) sum_{k<n} f(state_k).

    ``f`` is either a per-state table or a vectorized callable receiving the
    int array of states.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    return float(np.mean(_evaluate(f, path.states(0, n))))


def birkhoff_average_se(path: EnvPath, f: StateFunction, n: int, nbatches: int = 20) -> tuple[float, float]:
    if n < 1:
        raise ValidationError("n must be >= 1")
    return batch_means(_evaluate(f, path.states(0, n)), nbatches)

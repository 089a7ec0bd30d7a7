"""Random matrix systems ``S(omega) = A diag(d(omega))`` and top Lyapunov exponent estimators."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .ergodic import Driver, EnvPath, IIDDriver, RotationDriver, batch_means, stationary_distribution
from .errors import GatingError, ValidationError
from .matrix import as_nonneg, classify, matrix_norm

NORMS = ("frobenius", "operator2")
ENUMERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class RandomMatrixSystem:
    """Constant dispersal ``A`` with per-state fitness rows ``d_table[state]``."""

    A: np.ndarray
    d_table: np.ndarray
    driver: Driver

    def __post_init__(self):
        A = as_nonneg(self.A, "A")
        d = np.array(self.d_table, dtype=float)
        if d.ndim != 2 or d.shape != (self.driver.n_states, A.shape[0]):
            raise ValidationError(
                f"d_table: expected shape ({self.driver.n_states}, {A.shape[0]}) "
                f"(one row per environment state), got {d.shape}"
            )
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValidationError("d_table: fitness entries must be finite and strictly positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "d_table", d)

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def structure(self) -> str:
        return classify(self.A)

    def matrix(self, state: int) -> np.ndarray:
        return self.A * self.d_table[state][np.newaxis, :]

    def with_A(self, A) -> "RandomMatrixSystem":
        return RandomMatrixSystem(A, self.d_table, self.driver)

    def scaled(self, c: float) -> "RandomMatrixSystem":
        return RandomMatrixSystem(self.A, c * self.d_table, self.driver)


@dataclass(frozen=True, eq=False)
class ScaledProduct:
    """``exp(logscale) * unit`` with ``unit`` of norm one in the tagged norm."""

    unit: np.ndarray
    logscale: float
    norm: str = "frobenius"

    @property
    def log_norm(self) -> float:
        return self.logscale

    def dense(self) -> np.ndarray:
        return math.exp(self.logscale) * self.unit if self.logscale > -math.inf else np.zeros_like(self.unit)


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    method: str
    n: int
    samples: int
    stderr: float
    seed: int
    norm: str | None = None
    flags: tuple = ()
    checks: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return asdict(self)


def _unit_in_norm(U: np.ndarray, logscale: float, norm: str) -> ScaledProduct:
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}")
    if logscale == -math.inf:
        return ScaledProduct(np.zeros_like(U), -math.inf, norm)
    if norm == "operator2":
        c = matrix_norm(U, "operator2")
        return ScaledProduct(U / c, logscale + math.log(c), norm)
    return ScaledProduct(U, logscale, norm)


def cocycle_product(sys: RandomMatrixSystem, path: EnvPath, n: int, norm: str = "frobenius") -> ScaledProduct:
    """S^(n) = S(theta^{n-1} omega) ... S(omega), renormalized every step."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    inc, U = _kernels.matrix_increments(sys.A, sys.d_table, path.states(0, n), np.eye(sys.N))
    return _unit_in_norm(U, float(inc.sum()), norm)


def _gate_vector_mode(sys: RandomMatrixSystem) -> None:
    structure = sys.structure
    if structure not in ("positive", "primitive"):
        raise GatingError(
            f"vector mode needs a primitive A, but A is {structure}; use --mode matrix "
            "(matrix-norm growth is valid for every nonnegative A)"
        )


def trajectory_increments(sys: RandomMatrixSystem, path: EnvPath, n: int, mode: str = "matrix"):
    """Per-step log growth factors along ``path``; they sum to ln of the growth after n steps.

    Returns ``(increments, final_unit)`` where ``final_unit`` is a unit
    vector (vector mode) or a unit-Frobenius matrix (matrix mode).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    states = path.states(0, n)
    if mode == "vector":
        _gate_vector_mode(sys)
        return _kernels.vector_increments(sys.A, sys.d_table, states, np.full(sys.N, 1 / math.sqrt(sys.N)))
    if mode == "matrix":
        return _kernels.matrix_increments(sys.A, sys.d_table, states, np.eye(sys.N))
    raise ValueError(f"unknown mode {mode!r}")


def estimate_lyapunov_trajectory(
    sys: RandomMatrixSystem,
    n: int,
    seed: int,
    mode: str = "matrix",
    norm: str = "frobenius",
    path: EnvPath | None = None,
) -> LyapunovEstimate:
    """(1/n) ln of the growth along one trajectory; stderr from 20 batch means.

    ``norm`` only affects matrix mode, where it is applied to the final
    product (per-step renormalization is always Frobenius).
    """
    path = EnvPath(sys.driver, seed) if path is None else path
    inc, unit = trajectory_increments(sys, path, n, mode)
    value, stderr = batch_means(inc)
    if mode == "matrix" and norm == "operator2" and value > -math.inf:
        value += math.log(matrix_norm(unit, "operator2")) / n
    return LyapunovEstimate(
        value=float(value),
        method=f"trajectory-{mode}",
        n=n,
        samples=1,
        stderr=float(stderr),
        seed=int(seed),
        norm=norm if mode == "matrix" else "euclidean-vector",
    )


def default_mode(sys: RandomMatrixSystem) -> str:
    return "vector" if sys.structure in ("positive", "primitive") else "matrix"


def _batched_log_norms(P: np.ndarray, norm: str) -> np.ndarray:
    with np.errstate(divide="ignore"):
        if norm == "frobenius":
            return 0.5 * np.log(np.einsum("wij,wij->w", P, P))
        if norm == "operator2":
            # batched LAPACK SVD; the scalar path goes through the spectral bracket
            return np.log(np.linalg.norm(P, 2, axis=(1, 2)))
    raise ValueError(f"unknown norm {norm!r}")


def enumeration_size(driver: Driver, n: int) -> int | None:
    if isinstance(driver, RotationDriver):
        return None
    return driver.n_states**n


def kingman_exact(sys: RandomMatrixSystem, n: int, norm: str = "frobenius") -> float:
    """(1/n) E ln||S^(n)||, enumerating every state word of length n."""
    size = enumeration_size(sys.driver, n)
    if size is None:
        raise ValidationError("exact Kingman enumeration needs a finite-state driver")
    if size > ENUMERATION_CAP:
        raise ValidationError(f"exact Kingman enumeration of {size} words exceeds the cap {ENUMERATION_CAP}")
    drv = sys.driver
    S = drv.n_states
    mats = np.stack([sys.matrix(s) for s in range(S)])
    with np.errstate(divide="ignore"):
        if isinstance(drv, IIDDriver):
            logp0 = np.log(np.array(drv.p))
            logT = np.tile(logp0, (S, 1))
        else:
            logp0 = np.log(stationary_distribution(drv))
            logT = np.log(drv.matrix)
    keep = np.isfinite(logp0)
    prods = mats[keep]
    logscale = np.zeros(prods.shape[0])
    logp = logp0[keep]
    last = np.flatnonzero(keep)
    for _ in range(n - 1):
        lp = (logp[:, None] + logT[last]).ravel()
        nxt = np.tile(np.arange(S), last.size)
        prev = np.repeat(np.arange(last.size), S)
        ok = np.isfinite(lp)
        lp, nxt, prev = lp[ok], nxt[ok], prev[ok]
        prods = mats[nxt] @ prods[prev]
        logscale = logscale[prev]
        nrm = np.sqrt(np.einsum("wij,wij->w", prods, prods))
        nz = nrm > 0
        prods[nz] /= nrm[nz, None, None]
        with np.errstate(divide="ignore"):
            logscale = logscale + np.log(nrm)
        logp, last = lp, nxt
    log_norms = logscale + _batched_log_norms(prods, norm)
    if np.any(log_norms == -np.inf):
        return -math.inf
    # probabilities are summed in word order, which is fixed
    return float(np.sum(np.exp(logp) * log_norms) / n)


def _path_for_sample(driver: Driver, seed: int, j: int, n: int) -> EnvPath:
    if isinstance(driver, RotationDriver):
        return EnvPath(driver, seed).shift(j * n)
    sub = int(np.random.SeedSequence([int(seed) % 2**64, j]).generate_state(1, np.uint64)[0])
    return EnvPath(driver, sub)


def estimate_kingman_bound(
    sys: RandomMatrixSystem,
    n: int,
    num_paths: int = 100,
    seed: int = 0,
    norm: str = "frobenius",
    exact: bool | None = None,
) -> LyapunovEstimate:
    """Upper bound (1/n) E ln||S^(n)|| on the top exponent for fixed n.

    ``exact=None`` enumerates whenever the word count is within the cap and
    samples ``num_paths`` independent paths otherwise.
    """
    if n < 1 or num_paths < 1:
        raise ValidationError("n and num_paths must be >= 1")
    size = enumeration_size(sys.driver, n)
    if exact is None:
        exact = size is not None and size <= ENUMERATION_CAP
    if exact:
        return LyapunovEstimate(kingman_exact(sys, n, norm), "kingman-exact", n, size, 0.0, int(seed), norm)
    vals = np.array(
        [cocycle_product(sys, _path_for_sample(sys.driver, seed, j, n), n, norm).logscale / n for j in range(num_paths)]
    )
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(num_paths)) if num_paths > 1 and math.isfinite(mean) else 0.0
    return LyapunovEstimate(mean, "kingman-sampled", n, num_paths, se, int(seed), norm)


def lyapunov_bestof(
    sys: RandomMatrixSystem,
    budget: int = 100_000,
    seed: int = 0,
    norm: str = "frobenius",
    mode: str | None = None,
    kingman_ns=range(1, 9),
) -> LyapunovEstimate:
    """Trajectory estimate cross-checked against every affordable exact Kingman bound.

    Exact bounds are computed for the lengths in ``kingman_ns`` whose
    enumeration costs at most a tenth of ``budget``; the rest of the budget
    goes to the trajectory. The result is flagged ``inconsistent`` if it
    exceeds a bound by more than 3 stderr.
    """
    mode = default_mode(sys) if mode is None else mode
    kingman = {}
    spent = 0
    for k in kingman_ns:
        size = enumeration_size(sys.driver, k)
        if size is None or size * k + spent > budget // 10:
            break
        kingman[k] = kingman_exact(sys, k, norm)
        spent += size * k
    est = estimate_lyapunov_trajectory(sys, max(1, budget - spent), seed, mode=mode, norm=norm)
    flags = tuple(
        f"inconsistent: trajectory exceeds exact Kingman bound at n={k}"
        for k, v in kingman.items()
        if est.value > v + 3 * est.stderr + 1e-12
    )
    return LyapunovEstimate(
        est.value, est.method, est.n, est.samples, est.stderr, est.seed, est.norm, flags,
        checks={"kingman_exact": {str(k): v for k, v in kingman.items()}},
    )

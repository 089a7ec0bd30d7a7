"""Principal pair (w, rho) for positive A and a replay of the Cesaro-mean argument.

For positive ``A`` every ``S(omega)`` contracts the positive cone in the
Hilbert projective metric (diagonal scalings are isometries), so the unit
vector field ``w`` with ``S(omega) w(omega) = rho(omega) w(theta omega)``
is obtained by pushing the uniform vector forward from far enough in the
past.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cocycle import LyapunovEstimate, RandomMatrixSystem
from .ergodic import EnvPath, batch_means
from .errors import ConvergenceError, GatingError, InvariantViolation, ValidationError
from .matrix import birkhoff_contraction, check_subinvariance, column_kappa, projective_diameter, spectral_radius

MAX_DEPTH = 2**16
CSV_HEADER = ["k", "i", "w_i", "rho", "d_i"]


def _require_positive(sys: RandomMatrixSystem) -> None:
    if not np.all(sys.A > 0):
        raise GatingError("principal-pair construction requires a strictly positive A")


def required_depth(A, tol: float, start: int = 1) -> int:
    """Smallest doubling of ``start`` with tau**depth * diam <= tol / 10 (capped at 2**16)."""
    diam = projective_diameter(A)
    tau = birkhoff_contraction(A)
    depth = max(1, int(start))
    while depth < MAX_DEPTH and diam > 0 and tau**depth * diam > tol / 10:
        depth *= 2
    return min(depth, MAX_DEPTH)


def pull_back(sys: RandomMatrixSystem, path: EnvPath, indices, depth: int) -> np.ndarray:
    """Unit vectors S^(depth)(theta^{k-depth} omega) v0 / ||.|| for each k in ``indices``."""
    idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    lo, hi = int(idx.min()) - depth, int(idx.max())
    window = path.states(lo, hi)
    V = np.full((idx.size, sys.N), 1 / math.sqrt(sys.N))
    At = sys.A.T
    for j in range(depth):
        d = sys.d_table[window[idx - depth + j - lo]]
        V = (V * d) @ At
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    return V


@dataclass(frozen=True, eq=False)
class PrincipalPair:
    w: np.ndarray
    rho: float
    residual: float
    backward_depth: int
    index: int = 0


def principal_pairs(sys, path, indices, depth: int = 1, tol: float = 1e-8) -> list[PrincipalPair]:
    """Vectorized ``principal_pair`` over many indices, sharing one depth."""
    _require_positive(sys)
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    depth = required_depth(sys.A, tol, depth)
    W = pull_back(sys, path, idx, depth)
    W_next = pull_back(sys, path, idx + 1, depth)
    lo = int(idx.min())
    d = sys.d_table[path.states(lo, int(idx.max()) + 1)[idx - lo]]
    SW = (W * d) @ sys.A.T
    rho = np.linalg.norm(SW, axis=1)
    residual = np.linalg.norm(SW - rho[:, None] * W_next, axis=1)
    if np.any(residual > tol):
        worst = int(np.argmax(residual))
        raise ConvergenceError(
            f"principal pair not converged at index {int(idx[worst])}: residual {residual[worst]:.3e} > {tol} "
            f"at depth {depth}"
        )
    return [PrincipalPair(W[i], float(rho[i]), float(residual[i]), depth, int(idx[i])) for i in range(idx.size)]


def principal_pair(sys, path, at_index: int = 0, depth: int = 1, tol: float = 1e-8) -> PrincipalPair:
    """(w, rho) at ``at_index`` with the invariance residual checked against an
    independent pull-back at ``at_index + 1``."""
    return principal_pairs(sys, path, [at_index], depth, tol)[0]


def lambda_from_rho(sys, path: EnvPath, n: int, depth: int = 1, tol: float = 1e-8) -> LyapunovEstimate:
    """Birkhoff mean of ln rho(k) over k < n, from one pull-back then the forward recursion."""
    pair = principal_pair(sys, path, 0, depth, tol)
    _, rho = _kernels.principal_forward(sys.A, sys.d_table, path.states(0, n), pair.w)
    value, se = batch_means(np.log(rho))
    return LyapunovEstimate(value, "principal-rho", n, 1, se, int(path.seed), "euclidean-vector")


def integrability_bound_check(A, pairs) -> tuple[bool, float]:
    """Check min_i w_i >= 1 / (sqrt(N) kappa) on every pair; returns (ok, worst margin)."""
    A = np.asarray(A, dtype=float)
    kappa = column_kappa(A)
    if not math.isfinite(kappa):
        raise ValidationError("kappa is infinite: A must be positive")
    bound = 1.0 / (math.sqrt(A.shape[0]) * kappa)
    ws = np.array([p.w if isinstance(p, PrincipalPair) else p for p in pairs])
    margin = float(ws.min() - bound)
    return margin >= -1e-12, margin


@dataclass(eq=False)
class CesaroTrace:
    """Records along an orbit: ``W[k] = w(k)`` for k <= n, ``rho[k]``, ``D[k] = d(k)`` for k < n."""

    A: np.ndarray
    W: np.ndarray
    rho: np.ndarray
    D: np.ndarray
    report: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rho.size

    def means(self, m: int | None = None) -> dict:
        """Geometric means w~, w^, d~, rho~ over the first ``m`` steps."""
        m = self.n if m is None else m
        lw = np.log(self.W)
        return {
            "w_tilde": np.exp(lw[:m].mean(axis=0)),
            "w_hat": np.exp(lw[1 : m + 1].mean(axis=0)),
            "d_tilde": np.exp(np.log(self.D[:m]).mean(axis=0)),
            "rho_tilde": float(np.exp(np.log(self.rho[:m]).mean())),
        }

    def rows(self):
        """(k, i, w_i(k), rho(k), d_i(k)) for k < n, one row per coordinate."""
        for k in range(self.n):
            for i in range(self.W.shape[1]):
                yield k, i, float(self.W[k, i]), float(self.rho[k]), float(self.D[k, i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(CSV_HEADER)
            for k, i, w, rho, d in self.rows():
                out.writerow([k, i, format(w, ".17g"), format(rho, ".17g"), format(d, ".17g")])


def prefix_slacks(trace: CesaroTrace) -> np.ndarray:
    """Relative slack (rhs - lhs) / rhs of sum_j a_ij d~_j w~_j <= rho~ w^_i for every prefix m and i.

    Row ``m - 1`` holds prefix length ``m``.
    """
    m = np.arange(1, trace.n + 1)[:, None]

    def running_mean(x):
        # centred on the first record so constant stretches accumulate no rounding
        return x[0] + np.cumsum(x - x[0], axis=0) / m

    lw = np.log(trace.W)
    lw_tilde = running_mean(lw[:-1])
    lw_hat = running_mean(lw[1:])
    ld_tilde = running_mean(np.log(trace.D))
    lrho_tilde = running_mean(np.log(trace.rho)[:, None])
    lhs = np.exp(ld_tilde + lw_tilde) @ trace.A.T
    rhs = np.exp(lrho_tilde + lw_hat)
    return (rhs - lhs) / rhs


def cesaro_proof_trace(
    sys: RandomMatrixSystem,
    path: EnvPath,
    n: int,
    depth: int = 1,
    tol: float = 1e-8,
    rel_tol: float = 1e-10,
    strict: bool = True,
) -> CesaroTrace:
    """Replay the Cesaro/AM-GM argument along ``n`` steps of ``path``.

    The report records: (a) the step recursion residual, (b) the worst
    per-prefix slack of the averaged inequality, (c) the algebraic
    identity between the two shifted geometric means, (d) a subinvariance
    certificate for ``A diag(d~(n))``. With ``strict`` any failure beyond
    ``rel_tol`` raises ``InvariantViolation`` carrying the failure records.
    """
    _require_positive(sys)
    if n < 1:
        raise ValidationError("n must be >= 1")
    # a tighter pull-back than the residual tolerance keeps constant systems exactly stationary
    w0 = principal_pair(sys, path, 0, required_depth(sys.A, 1e-15, depth), tol).w
    states = path.states(0, n)
    W, rho = _kernels.principal_forward(sys.A, sys.d_table, states, w0)
    trace = CesaroTrace(sys.A, W, rho, sys.d_table[states])
    failures = []

    # (a) w_i(k+1) rho(k) = sum_j a_ij d_j(k) w_j(k)
    lhs = W[1:] * rho[:, None]
    rhs = (W[:-1] * trace.D) @ sys.A.T
    step_err = np.abs(lhs - rhs) / rhs
    a_max = float(step_err.max())
    if a_max > rel_tol:
        k, i = np.unravel_index(int(np.argmax(step_err)), step_err.shape)
        failures.append({"check": "step", "k": int(k), "i": int(i), "lhs": float(lhs[k, i]), "rhs": float(rhs[k, i])})

    # (b) averaged inequality at every prefix
    slack = prefix_slacks(trace)
    b_min = float(slack.min())
    if b_min < -rel_tol:
        m, i = np.unravel_index(int(np.argmin(slack)), slack.shape)
        failures.append({"check": "prefix", "prefix": int(m) + 1, "i": int(i), "relative_slack": float(slack[m, i])})

    # (c) w^_i / w~_i = (w_i(n) / w_i(0))**(1/n)
    g = trace.means()
    ratio = g["w_hat"] / g["w_tilde"]
    expected = np.exp((np.log(W[n]) - np.log(W[0])) / n)
    c_max = float(np.abs(ratio / expected - 1).max())
    if c_max > rel_tol:
        failures.append({"check": "identity", "max_relative_error": c_max})

    # (d) A D~ w~ <= rho~ w^ <= (rho~ max_i w^_i / w~_i) w~
    C = sys.A * g["d_tilde"][None, :]
    mu = g["rho_tilde"] * float(ratio.max())
    sub = check_subinvariance(C, g["w_tilde"], mu, tol=rel_tol * mu)
    bracket = spectral_radius(C)
    if not sub.holds:
        failures.append({"check": "subinvariance", "margin": sub.margin, "mu": mu})

    trace.report = {
        "n": n,
        "step_max_relative_error": a_max,
        "prefix_min_relative_slack": b_min,
        "prefix_min_slack_series": slack.min(axis=1),
        "identity_max_relative_error": c_max,
        "subinvariance": {"holds": sub.holds, "margin": sub.margin, "mu": mu,
                          "rho_lower": bracket.lower, "rho_upper": bracket.upper},
        "failures": failures,
    }
    if strict and failures:
        raise InvariantViolation(f"proof-trace check failed: {failures}")
    return trace

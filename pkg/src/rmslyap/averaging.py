"""Geometrically averaged system and the lower bound lambda >= ln rho(A Dbar).

Verdict tolerance is ``3 * (stderr of lambda + stderr of ln rho) + width of
the ln rho bracket``; both error sources are treated additively. A floor of
64 ulps of the larger magnitude keeps deterministic equality cases from
being decided by rounding.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cocycle import (
    LyapunovEstimate,
    RandomMatrixSystem,
    cocycle_product,
    default_mode,
    estimate_lyapunov_trajectory,
    lyapunov_bestof,
)
from .ergodic import EnvPath, RotationDriver, birkhoff_average_se, stationary_distribution
from .errors import ConvergenceError, InvariantViolation, ValidationError
from .matrix import SpectralBracket, scale_columns, spectral_radius

DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3, 1e-4)
HOLDS = "holds"
EQUALITY = "holds-with-equality"
VIOLATED = "violated-beyond-tolerance"


@dataclass(frozen=True, eq=False)
class AveragedSystem:
    dbar: np.ndarray
    ADbar: np.ndarray
    bracket: SpectralBracket
    exactness: str
    log_dbar_stderr: np.ndarray

    @property
    def log_rho(self) -> float:
        return self.bracket.log_rho

    @property
    def log_rho_width(self) -> float:
        return self.bracket.log_width

    @property
    def log_rho_stderr(self) -> float:
        # d ln rho / d ln dbar_j are Perron weights in [0, 1] summing to 1
        return float(self.log_dbar_stderr.max())

    def to_dict(self) -> dict:
        return {
            "dbar": self.dbar.tolist(),
            "log_rho": self.log_rho,
            "rho_lower": self.bracket.lower,
            "rho_upper": self.bracket.upper,
            "log_rho_width": self.log_rho_width,
            "log_rho_stderr": self.log_rho_stderr,
            "exactness": self.exactness,
        }


def averaged_system(sys: RandomMatrixSystem, n_mc: int = 100_000, seed: int = 0) -> AveragedSystem:
    """dbar_i = exp E[ln d_i]: exact for finite drivers, a Birkhoff average (with stderr) for rotations."""
    logd = np.log(sys.d_table)
    if isinstance(sys.driver, RotationDriver):
        path = EnvPath(sys.driver, seed)
        est = [birkhoff_average_se(path, logd[:, i], n_mc) for i in range(sys.N)]
        log_dbar = np.array([m for m, _ in est])
        se = np.array([s for _, s in est])
        exactness = "monte-carlo"
    else:
        log_dbar = stationary_distribution(sys.driver) @ logd
        se = np.zeros(sys.N)
        exactness = "exact"
    dbar = np.exp(log_dbar)
    ADbar = scale_columns(sys.A, dbar)
    bracket = spectral_radius(ADbar)
    if not bracket.converged:
        raise ConvergenceError(f"spectral bracket for A Dbar did not close: [{bracket.lower}, {bracket.upper}]")
    return AveragedSystem(dbar, ADbar, bracket, exactness, se)


@dataclass(frozen=True)
class TheoremReport:
    lam: LyapunovEstimate
    log_rho_avg: float
    margin: float
    tolerance: float
    verdict: str
    log_rho_width: float = 0.0
    routes: dict = field(default_factory=dict)
    agreement: bool = True
    diagnostics: tuple = ()
    ladder: "EpsilonLadder | None" = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def classify_margin(margin: float, tolerance: float) -> str:
    if abs(margin) <= tolerance:
        return EQUALITY
    return HOLDS if margin > 0 else VIOLATED


def _report(lam: LyapunovEstimate, avg: AveragedSystem) -> TheoremReport:
    log_rho = avg.log_rho
    if avg.bracket.upper == 0:
        # zero spectral radius: nothing to prove
        return TheoremReport(lam, -math.inf, math.inf, 0.0, HOLDS, 0.0)
    margin = lam.value - log_rho
    scale = max(1.0, abs(log_rho), abs(lam.value) if math.isfinite(lam.value) else 0.0)
    rounding = 64 * np.finfo(float).eps * scale
    tol = 3 * (lam.stderr + avg.log_rho_stderr) + avg.log_rho_width + rounding
    return TheoremReport(lam, log_rho, margin, tol, classify_margin(margin, tol), avg.log_rho_width)


def check_main_theorem(
    sys: RandomMatrixSystem, budget: int = 100_000, seed: int = 0, norm: str = "frobenius"
) -> TheoremReport:
    avg = averaged_system(sys, seed=seed)
    if avg.bracket.upper == 0:
        lam = estimate_lyapunov_trajectory(sys, 1, seed, "matrix", norm)
        return _report(lam, avg)
    return _report(lyapunov_bestof(sys, budget, seed, norm), avg)


@dataclass(frozen=True)
class EpsilonLadder:
    epsilons: tuple
    lambdas: tuple
    base: LyapunovEstimate
    chains: tuple
    extrapolated_limit: float
    extrapolated_stderr: float
    bracket: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def perturbed(sys: RandomMatrixSystem, eps: float) -> RandomMatrixSystem:
    """System with A replaced by A + eps * (all-ones)."""
    return sys.with_A(sys.A + eps)


def norm_chain(sys: RandomMatrixSystem, path: EnvPath, epsilons, n: int, norm: str = "frobenius") -> list[float]:
    """ln||S^(n)|| for eps = 0 followed by each eps in increasing order, on one shared path."""
    return [cocycle_product(sys, path, n, norm).logscale] + [
        cocycle_product(perturbed(sys, e), path, n, norm).logscale for e in sorted(epsilons)
    ]


def epsilon_ladder(
    sys: RandomMatrixSystem,
    epsilons=DEFAULT_EPSILONS,
    budget: int = 100_000,
    seed: int = 0,
    check_ns=(1, 10, 100),
    rel_tol: float = 1e-12,
) -> EpsilonLadder:
    """lambda_eps for A + eps B on common random numbers, with exact pathwise norm chains.

    No limit model is fitted: the reported limit is the smallest-eps
    estimate, and ``bracket`` is [lambda_0, lambda_{eps_min}] from the
    direct and smallest-eps estimates.
    """
    eps = tuple(float(e) for e in epsilons)
    if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValidationError("epsilons must be positive and strictly decreasing")
    path = EnvPath(sys.driver, seed)
    chains = []
    for n in check_ns:
        logs = norm_chain(sys, path, eps, n)
        for lo, hi in zip(logs, logs[1:]):
            if lo > hi + rel_tol * max(1.0, abs(hi)):
                raise InvariantViolation(f"pathwise norm chain broken at n={n}: {logs}")
        chains.append({"n": n, "epsilons": sorted(eps), "log_norms": logs})
    base = estimate_lyapunov_trajectory(sys, budget, seed, default_mode(sys), path=path)
    lambdas = tuple(
        estimate_lyapunov_trajectory(perturbed(sys, e), budget, seed, "vector", path=path) for e in eps
    )
    last = lambdas[-1]
    return EpsilonLadder(eps, lambdas, base, tuple(chains), last.value, last.stderr, (base.value, last.value))


def check_main_theorem_general(
    sys: RandomMatrixSystem, epsilons=DEFAULT_EPSILONS, budget: int = 100_000, seed: int = 0
) -> TheoremReport:
    """Direct check plus the check on A + eps B at the smallest eps; the routes must agree
    on whether the bound is violated."""
    direct = check_main_theorem(sys, budget, seed)
    if direct.log_rho_avg == -math.inf:
        return TheoremReport(direct.lam, direct.log_rho_avg, direct.margin, direct.tolerance, direct.verdict,
                             routes={"direct": direct.verdict, "epsilon": direct.verdict})
    ladder = epsilon_ladder(sys, epsilons, budget, seed)
    eps = ladder.epsilons[-1]
    via_eps = _report(ladder.lambdas[-1], averaged_system(perturbed(sys, eps), seed=seed))
    agree = (direct.verdict == VIOLATED) == (via_eps.verdict == VIOLATED)
    diagnostics = () if agree else (
        f"route disagreement: direct {direct.verdict} (margin {direct.margin:.6g}) vs "
        f"eps={eps:g} {via_eps.verdict} (margin {via_eps.margin:.6g})",
    )
    return TheoremReport(
        direct.lam, direct.log_rho_avg, direct.margin, direct.tolerance, direct.verdict, direct.log_rho_width,
        routes={"direct": direct.verdict, "epsilon": via_eps.verdict, "epsilon_value": eps,
                "epsilon_margin": via_eps.margin, "epsilon_tolerance": via_eps.tolerance},
        agreement=agree, diagnostics=diagnostics, ladder=ladder,
    )

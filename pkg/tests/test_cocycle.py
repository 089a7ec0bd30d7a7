import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rmslyap.cocycle import (
    ENUMERATION_CAP,
    RandomMatrixSystem,
    cocycle_product,
    default_mode,
    estimate_kingman_bound,
    estimate_lyapunov_trajectory,
    kingman_exact,
    lyapunov_bestof,
)
from rmslyap.ergodic import EnvPath, IIDDriver, MarkovDriver, RotationDriver
from rmslyap.errors import GatingError, ValidationError

from conftest import D_PAIRS, IID4, constant_system
from oracles import kingman_bruteforce, kingman_bruteforce_markov

QUARTER_LN_400 = 0.25 * math.log(400)
KINGMAN1_OP2 = math.log(math.sqrt(2)) + math.log(18496) / 8


def small_systems(max_n=3, max_states=3):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_n))
        s = draw(st.integers(1, max_states))
        A = draw(arrays(np.float64, (n, n), elements=st.sampled_from([0.0, 0.5, 1.0, 2.0])))
        d = draw(arrays(np.float64, (s, n), elements=st.floats(0.1, 10.0)))
        w = np.array(draw(st.lists(st.integers(1, 5), min_size=s, max_size=s)), dtype=float)
        return RandomMatrixSystem(A, d, IIDDriver(w / w.sum()))
    return build()


def test_system_validation():
    with pytest.raises(ValidationError, match="shape"):
        RandomMatrixSystem(np.ones((2, 2)), [[1, 1]], IID4)
    with pytest.raises(ValidationError, match="positive"):
        RandomMatrixSystem(np.ones((2, 2)), [[1, 0]], IIDDriver([1.0]))
    with pytest.raises(ValidationError):
        RandomMatrixSystem([[1, -1], [0, 1]], [[1, 1]], IIDDriver([1.0]))


def test_matrix_is_a_times_diag(all_ones):
    np.testing.assert_array_equal(all_ones.matrix(1), np.ones((2, 2)) @ np.diag([1.0, 4.0]))


def test_cocycle_product_matches_dense(all_ones):
    path = EnvPath(all_ones.driver, 5)
    states = path.states(0, 12)
    M = np.eye(2)
    for s in states:
        M = all_ones.matrix(s) @ M
    prod = cocycle_product(all_ones, path, 12)
    np.testing.assert_allclose(prod.dense(), M, rtol=1e-12)
    assert prod.logscale == pytest.approx(math.log(np.linalg.norm(M)), rel=1e-14)
    op = cocycle_product(all_ones, path, 12, "operator2")
    assert op.logscale == pytest.approx(math.log(np.linalg.norm(M, 2)), rel=1e-12)


def test_cocycle_identity():
    # S^(m+n)(omega) = S^(n)(theta^m omega) S^(m)(omega)
    sys = RandomMatrixSystem([[0.5, 1.0], [2.0, 0.0]], [[1, 3], [2, 0.5]], IIDDriver([0.3, 0.7]))
    path = EnvPath(sys.driver, 4)
    lhs = cocycle_product(sys, path, 15).dense()
    rhs = cocycle_product(sys, path.shift(6), 9).dense() @ cocycle_product(sys, path, 6).dense()
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_all_ones_trajectory_value(all_ones):
    est = estimate_lyapunov_trajectory(all_ones, 200_000, seed=1, mode="vector")
    assert abs(est.value - QUARTER_LN_400) <= 3 * est.stderr + 1e-3
    assert est.method == "trajectory-vector"


def test_all_ones_kingman_n1_operator2(all_ones):
    assert kingman_exact(all_ones, 1, "operator2") == pytest.approx(KINGMAN1_OP2, abs=1e-12)


@pytest.mark.parametrize("norm", ["frobenius", "operator2"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_kingman_exact_matches_bruteforce_iid(all_ones, norm, n):
    mats = [all_ones.matrix(s) for s in range(4)]
    assert kingman_exact(all_ones, n, norm) == pytest.approx(kingman_bruteforce(mats, [0.25] * 4, n, norm), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_kingman_exact_matches_bruteforce_markov(n):
    drv = MarkovDriver([[0.6, 0.4, 0.0], [0.0, 0.5, 0.5], [0.3, 0.3, 0.4]])
    sys = RandomMatrixSystem([[1, 2], [0.5, 1]], [[1, 2], [3, 0.5], [0.2, 4]], drv)
    mats = [sys.matrix(s) for s in range(3)]
    oracle = kingman_bruteforce_markov(mats, drv.pi, drv.P, n)
    assert kingman_exact(sys, n) == pytest.approx(oracle, rel=1e-12)


@given(small_systems())
def test_kingman_subadditive(sys):
    k1, k2 = kingman_exact(sys, 1), kingman_exact(sys, 2)
    if math.isfinite(k2):
        assert k2 <= k1 + 1e-12 * max(1.0, abs(k1))


@given(small_systems(), st.floats(0.1, 10.0))
def test_scaling_shifts_exponent(sys, c):
    base = kingman_exact(sys, 2)
    assert kingman_exact(sys.scaled(c), 2) == pytest.approx(base + math.log(c), rel=1e-10, abs=1e-10)
    e1 = estimate_lyapunov_trajectory(sys, 500, 3)
    e2 = estimate_lyapunov_trajectory(sys.scaled(c), 500, 3)
    if math.isfinite(e1.value):
        assert e2.value == pytest.approx(e1.value + math.log(c), rel=1e-9, abs=1e-9)


def test_kingman_cap_and_rotation():
    big = RandomMatrixSystem(np.ones((2, 2)), np.ones((10, 2)), IIDDriver([0.1] * 10))
    with pytest.raises(ValidationError, match="cap"):
        kingman_exact(big, 7)
    assert 10**6 == ENUMERATION_CAP
    est = estimate_kingman_bound(big, 7, num_paths=20, seed=1)
    assert est.method == "kingman-sampled" and est.samples == 20
    rot = RandomMatrixSystem(np.ones((2, 2)), [[1, 1], [1, 4]], RotationDriver((math.sqrt(5) - 1) / 2))
    with pytest.raises(ValidationError):
        kingman_exact(rot, 2)
    assert estimate_kingman_bound(rot, 4, num_paths=10).method == "kingman-sampled"


def test_sampled_kingman_agrees_with_exact(all_ones):
    exact = estimate_kingman_bound(all_ones, 4)
    sampled = estimate_kingman_bound(all_ones, 4, num_paths=4000, seed=2, exact=False)
    assert exact.method == "kingman-exact"
    assert abs(sampled.value - exact.value) <= 4 * sampled.stderr


def test_vector_mode_gate():
    perm = RandomMatrixSystem([[0, 1], [1, 0]], D_PAIRS, IID4)
    with pytest.raises(GatingError, match="--mode matrix"):
        estimate_lyapunov_trajectory(perm, 100, 0, mode="vector")
    assert default_mode(perm) == "matrix"


def test_vector_and_matrix_modes_agree(all_ones):
    v = estimate_lyapunov_trajectory(all_ones, 100_000, 7, "vector")
    m = estimate_lyapunov_trajectory(all_ones, 100_000, 7, "matrix")
    assert abs(v.value - m.value) <= 5 / 100_000


def test_norm_choice_vanishes_asymptotically(all_ones):
    f = estimate_lyapunov_trajectory(all_ones, 10_000, 1, "matrix", "frobenius")
    o = estimate_lyapunov_trajectory(all_ones, 10_000, 1, "matrix", "operator2")
    # 1 <= ||X||_F / ||X||_2 <= sqrt(N)
    assert 0 <= f.value - o.value <= 0.5 * math.log(2) / 10_000 + 1e-15


def test_zero_matrix_gives_minus_infinity():
    sys = constant_system(np.zeros((2, 2)), [1.0, 2.0])
    est = estimate_lyapunov_trajectory(sys, 50, 0)
    assert est.value == -math.inf and est.stderr == 0.0
    assert kingman_exact(sys, 2) == -math.inf


def test_reducible_identity_trajectory_small():
    sys = constant_system([[1, 1], [0, 1]], [1.0, 1.0])
    n = 100_000
    est = estimate_lyapunov_trajectory(sys, n, 0)
    assert abs(est.value) <= 2 * math.log(n) / n


def test_bestof_consistency_and_reproducibility(all_ones):
    a = lyapunov_bestof(all_ones, 50_000, seed=3)
    b = lyapunov_bestof(all_ones, 50_000, seed=3)
    assert a == b
    assert not a.flags
    ks = a.checks["kingman_exact"]
    # word counts 4**k * k must fit in a tenth of the budget
    assert set(ks) == {"1", "2", "3", "4"}
    assert a.checks == b.checks
    assert all(a.value <= v + 3 * a.stderr for v in ks.values())


def test_estimate_to_dict_roundtrip(all_ones):
    d = estimate_lyapunov_trajectory(all_ones, 100, 0).to_dict()
    assert set(d) >= {"value", "method", "n", "samples", "stderr", "seed", "norm"}


def _pack_systems():
    from rmslyap.scenario import load_scenario
    from pathlib import Path

    pack = Path(__file__).resolve().parent.parent / "scenarios"
    return [load_scenario(p) for p in sorted(pack.glob("*.json"))]


@pytest.mark.parametrize("sc", _pack_systems(), ids=lambda s: s.name)
def test_norm_independence_at_1e5(sc):
    f = estimate_lyapunov_trajectory(sc.system, 100_000, 1, "matrix", "frobenius")
    o = estimate_lyapunov_trajectory(sc.system, 100_000, 1, "matrix", "operator2")
    if math.isfinite(f.value):
        assert abs(f.value - o.value) <= 3 * (f.stderr + o.stderr) + 1e-12
    else:
        assert o.value == -math.inf


@pytest.mark.parametrize("sc", [s for s in _pack_systems() if s.system.structure in ("positive", "primitive")],
                         ids=lambda s: s.name)
def test_vector_matrix_agreement_pack(sc):
    v = estimate_lyapunov_trajectory(sc.system, 100_000, 2, "vector")
    m = estimate_lyapunov_trajectory(sc.system, 100_000, 2, "matrix")
    assert abs(v.value - m.value) <= 3 * math.hypot(v.stderr, m.stderr) + 1e-12


@given(small_systems(), st.integers(1, 30), st.integers(0, 1000))
def test_zero_pattern_positive(sys, n, seed):
    sys = sys.with_A(sys.A + 0.01)
    prod = cocycle_product(sys, EnvPath(sys.driver, seed), n)
    assert np.all(prod.unit > 0)

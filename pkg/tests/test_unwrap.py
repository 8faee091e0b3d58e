import numpy as np
import pytest

from oscunwrap.code import DELTA, centered_modulo
from oscunwrap.errors import BudgetExceeded, DimensionError, DomainError, NumericalFailure
from oscunwrap.noise import GaussianDensity
from oscunwrap.unwrap import (
    DecodeResult,
    UnwrapProblem,
    brute_force_estimate,
    decode_success,
    map_estimate,
    map_estimate_batch,
    modulo_reduce,
)


def _random_problem(rng, n, k, cond_cap=100.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    evals = np.exp(rng.uniform(0, np.log(cond_cap), size=n))
    evals /= evals.min()
    cov = (q * evals) @ q.T
    return UnwrapProblem(n, k, DELTA, GaussianDensity(0.5 * (cov + cov.T)))


def _random_syndrome(rng, m):
    return rng.uniform(-DELTA / 2, DELTA / 2 - 1e-9, size=m)


def test_modulo_reduce_passthrough():
    assert modulo_reduce(np.array([0.3, -0.4]), DELTA) == pytest.approx([0.3, -0.4])


def test_modulo_reduce_period_and_boundary():
    r = modulo_reduce(np.array([DELTA, -DELTA / 2]), DELTA)
    assert r == pytest.approx([0.0, -DELTA / 2], abs=1e-12)


def test_modulo_reduce_arithmetic():
    r = modulo_reduce(np.array([1.9, -1.9]), DELTA)
    assert r == pytest.approx([1.9 - DELTA, DELTA - 1.9], abs=1e-12)


def test_isotropic_covariance_decodes_to_zero_shift():
    p = UnwrapProblem(3, 1, DELTA, GaussianDensity(0.25 * np.eye(3)))
    u = np.array([0.9, -1.1])
    res = map_estimate(p, u)
    assert np.array_equal(res.b, [0, 0])
    assert res.x_hat == pytest.approx([0.0, 0.9, -1.1], abs=1e-12)


def test_correlated_example_matches_grid_oracle():
    p = UnwrapProblem(
        2, 1, DELTA, GaussianDensity(np.array([[1.0, 0.9], [0.9, 1.0]]))
    )
    u = np.array([1.2])
    exact = map_estimate(p, u)
    bf = brute_force_estimate(p, u, h_grid_halfwidth=6.0, h_grid_step=1e-3, b_range=4)
    assert np.array_equal(exact.b, bf.b)
    assert np.max(np.abs(exact.x_hat - bf.x_hat)) <= 2e-3


def test_oracle_equivalence_n3():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p = _random_problem(rng, 3, 1)
        u = _random_syndrome(rng, 2)
        exact = map_estimate(p, u)
        bf = brute_force_estimate(p, u, 4.0, 0.05, 3)
        assert exact.objective <= bf.objective + 1e-6


def test_syndrome_consistency_invariant():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(0, n))
        p = _random_problem(rng, n, k)
        u = _random_syndrome(rng, n - k)
        res = map_estimate(p, u)
        back = centered_modulo(res.x_hat[k:], DELTA)
        assert np.max(np.abs(back - u)) <= 1e-9


def test_a_block_parametrization_invariant():
    rng = np.random.default_rng(6)
    for _ in range(30):
        p = _random_problem(rng, 4, 2)
        u = _random_syndrome(rng, 2)
        res = map_estimate(p, u)
        assert np.max(np.abs(res.x_hat[:2] - p.lambda_hat @ res.x_hat[2:])) <= 1e-9


def test_a_block_first_order_optimality():
    rng = np.random.default_rng(7)
    p = _random_problem(rng, 3, 1)
    u = _random_syndrome(rng, 2)
    res = map_estimate(p, u)
    base = p.density.log_density(res.x_hat)
    for _ in range(100):
        d = np.zeros(3)
        d[0] = 1e-3 * rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
        assert p.density.log_density(res.x_hat + d) < base


def test_shift_covariance():
    rng = np.random.default_rng(8)
    p = _random_problem(rng, 3, 1)
    u = _random_syndrome(rng, 2)
    b0 = np.array([2, -3])
    u_shifted = centered_modulo(u + DELTA * b0, DELTA)
    r1, r2 = map_estimate(p, u), map_estimate(p, u_shifted)
    assert np.max(np.abs(r1.x_hat - r2.x_hat)) <= 1e-9


def test_scaling_invariance_of_argmax():
    rng = np.random.default_rng(9)
    cov = np.array([[1.0, 0.6, 0.1], [0.6, 1.0, 0.2], [0.1, 0.2, 1.0]])
    u = _random_syndrome(rng, 2)
    r1 = map_estimate(UnwrapProblem(3, 1, DELTA, GaussianDensity(cov)), u)
    r2 = map_estimate(UnwrapProblem(3, 1, DELTA, GaussianDensity(7.3 * cov)), u)
    assert np.max(np.abs(r1.x_hat - r2.x_hat)) <= 1e-9


def test_k_zero_pure_unwrapping():
    p = UnwrapProblem(2, 0, DELTA, GaussianDensity(np.eye(2)))
    u = np.array([0.3, 0.4])
    res = brute_force_estimate(p, u, 0.0, 1.0, 3)
    assert res.x_hat == pytest.approx([0.3, 0.4], abs=1e-12)
    exact = map_estimate(p, u)
    assert exact.x_hat == pytest.approx([0.3, 0.4], abs=1e-12)


def test_k_zero_success_semantics():
    p = UnwrapProblem(2, 0, DELTA, GaussianDensity(np.eye(2)))
    u = np.array([0.3, 0.4])
    res = map_estimate(p, u)
    assert decode_success(p, np.array([0.3, 0.4]), res, eps=0.1)
    assert not decode_success(p, np.array([0.3, 0.4 + DELTA]), res, eps=10.0)


def test_brute_force_k1_trivial():
    p = UnwrapProblem(2, 1, DELTA, GaussianDensity(np.eye(2)))
    res = brute_force_estimate(p, np.array([0.5]), 2.0, 0.01, 2)
    assert res.x_hat == pytest.approx([0.0, 0.5], abs=1e-9)


def test_brute_force_grid_error_bounded():
    rng = np.random.default_rng(10)
    step = 0.02
    for _ in range(100):
        p = _random_problem(rng, 2, 1)
        u = _random_syndrome(rng, 1)
        exact = map_estimate(p, u)
        bf = brute_force_estimate(p, u, 5.0, step, 3)
        # objective is quadratic: grid misses the optimum by O(step^2) times
        # the largest precision eigenvalue
        lip = float(np.linalg.eigvalsh(p.density.inverse)[-1])
        assert bf.objective <= exact.objective + 2 * lip * step**2 + 1e-9


def test_brute_force_budget():
    p = UnwrapProblem(3, 1, DELTA, GaussianDensity(np.eye(3)))
    with pytest.raises(BudgetExceeded):
        brute_force_estimate(p, np.zeros(2), 100.0, 1e-5, 50)


def test_brute_force_rejects_large_n():
    p = UnwrapProblem(6, 1, DELTA, GaussianDensity(np.eye(6)))
    with pytest.raises(DimensionError):
        brute_force_estimate(p, np.zeros(5), 1.0, 0.1, 1)


def test_decode_success_boundary_is_closed():
    p = UnwrapProblem(2, 1, DELTA, GaussianDensity(np.eye(2)))
    res = map_estimate(p, np.array([0.2]))
    x_true = res.x_hat.copy()
    x_true[0] += 0.4
    assert decode_success(p, x_true, res, eps=0.4)  # exactly on the sphere
    assert not decode_success(p, x_true, res, eps=0.4 - 1e-9)


def test_tie_flag_and_lexicographic_choice():
    # syndrome exactly halfway between lattice representatives
    p = UnwrapProblem(2, 1, DELTA, GaussianDensity(np.eye(2)))
    res = map_estimate(p, np.array([-DELTA / 2]))
    assert res.tie
    assert np.array_equal(res.b, [0])  # b=0 beats b=1 lexicographically


def test_babai_method_flagged_not_exact():
    rng = np.random.default_rng(14)
    p = _random_problem(rng, 3, 1)
    u = _random_syndrome(rng, 2)
    res = map_estimate(p, u, method="babai")
    exact = map_estimate(p, u)
    assert res.objective >= exact.objective - 1e-12
    with pytest.raises(DomainError):
        map_estimate(p, u, method="approximate")


def test_batch_matches_single():
    rng = np.random.default_rng(15)
    for trial in range(10):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(0, n))
        p = _random_problem(rng, n, k)
        u_rows = np.array([_random_syndrome(rng, n - k) for _ in range(32)])
        x_hat, b, tie = map_estimate_batch(p, u_rows)
        for i in range(len(u_rows)):
            single = map_estimate(p, u_rows[i])
            assert single.objective == pytest.approx(
                float(p.density.mahalanobis_sq(x_hat[i])), abs=1e-9
            )
            assert np.array_equal(b[i], single.b)


def test_schur_identity_guard_rejects_corruption():
    class Corrupted(GaussianDensity):
        def __init__(self):
            super().__init__(np.array([[1.0, 0.5], [0.5, 1.0]]))
            inv = self.inverse.copy()
            inv[0, 0] *= 1.5
            object.__setattr__(self, "inverse", inv)

    with pytest.raises(NumericalFailure):
        UnwrapProblem(2, 1, DELTA, Corrupted())


def test_syndrome_out_of_range_rejected():
    p = UnwrapProblem(2, 1, DELTA, GaussianDensity(np.eye(2)))
    with pytest.raises(DomainError):
        map_estimate(p, np.array([DELTA]))


def test_dimension_checks():
    p = UnwrapProblem(3, 1, DELTA, GaussianDensity(np.eye(3)))
    with pytest.raises(DimensionError):
        map_estimate(p, np.zeros(3))
    with pytest.raises(DimensionError):
        UnwrapProblem(2, 2, DELTA, GaussianDensity(np.eye(2)))

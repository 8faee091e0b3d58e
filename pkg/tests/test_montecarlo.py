import numpy as np
import pytest
from scipy.stats import binom

from oscunwrap.code import OscillatorCode
from oscunwrap.errors import DomainError
from oscunwrap.montecarlo import (
    ExperimentSpec,
    clopper_pearson,
    estimate_psucc,
    logical_error_samples,
)
from oscunwrap.symplectic import identity_code_matrix, squeezing_measure, two_mode_squeezer


def _identity_code():
    return OscillatorCode(2, 1, identity_code_matrix(2))


def test_clopper_pearson_edges():
    low, high = clopper_pearson(0, 100)
    assert low == 0.0 and 0 < high < 0.1
    low, high = clopper_pearson(100, 100)
    assert high == 1.0 and 0.9 < low < 1.0


def test_clopper_pearson_exact_coverage_property():
    # interval endpoints invert the binomial tail at alpha/2
    s, n = 37, 200
    low, high = clopper_pearson(s, n, confidence=0.99)
    assert binom.sf(s - 1, n, low) == pytest.approx(0.005, abs=1e-9)
    assert binom.cdf(s, n, high) == pytest.approx(0.005, abs=1e-9)


def test_clopper_pearson_brackets_p_hat():
    for s, n in [(0, 10), (3, 10), (10, 10), (500, 1000)]:
        low, high = clopper_pearson(s, n)
        assert 0.0 <= low <= s / n <= high <= 1.0


def test_identity_code_matches_closed_form():
    # for S = I the logical block is independent of the syndrome; the MAP
    # estimate of the A-block is 0 and P_succ(eps) = 1 - exp(-eps^2/(2 sigma^2))
    spec = ExperimentSpec(
        code=_identity_code(), sigma=0.5, eps_list=(0.5,), trials=100_000, master_seed=1
    )
    rep = estimate_psucc(spec)
    expected = 1 - np.exp(-0.5)
    rec = rep.records[0]
    assert rec.ci_low <= expected <= rec.ci_high


def test_identity_code_closed_form_grid():
    for sigma in (0.2, 0.3, 0.5):
        spec = ExperimentSpec(
            code=_identity_code(),
            sigma=sigma,
            eps_list=(0.1, 0.25, 0.5),
            trials=20_000,
            master_seed=3,
        )
        rep = estimate_psucc(spec)
        for rec in rep.records:
            expected = 1 - np.exp(-rec.eps**2 / (2 * sigma**2))
            assert rec.ci_low <= expected <= rec.ci_high


def test_large_eps_near_certain_success():
    code = OscillatorCode(2, 1, two_mode_squeezer(2.0))
    sigma = 0.3
    eps = 10 * sigma * squeezing_measure(code.encoder) * np.sqrt(2)
    spec = ExperimentSpec(
        code=code, sigma=sigma, eps_list=(eps,), trials=5_000, master_seed=4
    )
    rep = estimate_psucc(spec)
    assert rep.records[0].p_hat >= 0.99


def test_determinism_across_thread_counts():
    code = OscillatorCode(2, 1, two_mode_squeezer(1.5))
    spec = ExperimentSpec(
        code=code, sigma=0.3, eps_list=(0.2, 0.4), trials=20_000, master_seed=5
    )
    r1 = estimate_psucc(spec, threads=1)
    r2 = estimate_psucc(spec, threads=3)
    for a, b in zip(r1.records, r2.records):
        assert a == b
    assert r1.logical_summary.mean_norm == r2.logical_summary.mean_norm
    assert np.array_equal(
        r1.logical_summary.per_coord_std, r2.logical_summary.per_coord_std
    )


def test_single_trial_determinism():
    spec = ExperimentSpec(
        code=_identity_code(), sigma=0.5, eps_list=(0.5,), trials=1, master_seed=6
    )
    assert estimate_psucc(spec).records == estimate_psucc(spec).records


def test_monotonicity_in_eps():
    spec = ExperimentSpec(
        code=OscillatorCode(2, 1, two_mode_squeezer(2.0)),
        sigma=0.25,
        eps_list=(0.05, 0.1, 0.2, 0.4, 0.8),
        trials=10_000,
        master_seed=7,
    )
    rep = estimate_psucc(spec)
    p = [r.p_hat for r in rep.records]
    assert all(a <= b for a, b in zip(p, p[1:]))


def test_report_invariants():
    spec = ExperimentSpec(
        code=_identity_code(), sigma=0.4, eps_list=(0.3,), trials=5_000, master_seed=8
    )
    rep = estimate_psucc(spec)
    rec = rep.records[0]
    assert 0 <= rec.ci_low <= rec.p_hat <= rec.ci_high <= 1
    assert rec.successes == round(rec.p_hat * rec.trials)
    assert rep.wall_time > 0
    assert rep.decode_failures == 0


def test_logical_samples_identity_std():
    spec = ExperimentSpec(
        code=_identity_code(), sigma=0.3, eps_list=(0.3,), trials=1, master_seed=9
    )
    samples = logical_error_samples(spec, 20_000)
    values = np.array([s.values for s in samples])
    # identity-code logical error equals the raw logical-block noise
    se = 0.3 / np.sqrt(2 * len(values))
    assert np.all(np.abs(values.std(axis=0) - 0.3) < 3 * se + 0.003)


def test_logical_samples_deterministic_prefix():
    spec = ExperimentSpec(
        code=OscillatorCode(2, 1, two_mode_squeezer(2.0)),
        sigma=0.2,
        eps_list=(0.1,),
        trials=1,
        master_seed=10,
    )
    a = logical_error_samples(spec, 50)
    b = logical_error_samples(spec, 100)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)


def test_super_linear_suppression_with_tuned_gain():
    gains = (1.5, 2.0, 4.0, 8.0)

    def best_std(sigma):
        stds = []
        for g in gains:
            spec = ExperimentSpec(
                code=OscillatorCode(2, 1, two_mode_squeezer(g)),
                sigma=sigma,
                eps_list=(0.1,),
                trials=20_000,
                master_seed=11,
            )
            samples = logical_error_samples(spec, 20_000)
            stds.append(np.std([s.norm for s in samples]))
        return min(stds)

    assert best_std(0.05) < best_std(0.2) * (0.05 / 0.2)


def test_spec_validation():
    with pytest.raises(DomainError):
        ExperimentSpec(_identity_code(), sigma=0.5, eps_list=(0.5,), trials=0, master_seed=0)
    with pytest.raises(DomainError):
        ExperimentSpec(_identity_code(), sigma=-1, eps_list=(0.5,), trials=10, master_seed=0)
    with pytest.raises(DomainError):
        ExperimentSpec(_identity_code(), sigma=0.5, eps_list=(), trials=10, master_seed=0)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscunwrap.code import (
    DELTA,
    OscillatorCode,
    centered_modulo,
    code_from_fields,
    load_code_file,
)
from oscunwrap.errors import (
    ConfigError,
    DimensionError,
    DomainError,
    NumericalFailure,
)
from oscunwrap.symplectic import (
    identity_code_matrix,
    random_symplectic,
    save_matrix_file,
    two_mode_squeezer,
    validate_symplectic,
)


@pytest.fixture
def identity_code():
    return OscillatorCode(2, 1, identity_code_matrix(2))


def test_delta_value():
    assert DELTA == pytest.approx(np.sqrt(2 * np.pi), abs=1e-15)


def test_centered_modulo_range():
    x = np.linspace(-20, 20, 4001)
    r = centered_modulo(x, DELTA)
    assert np.all(r >= -DELTA / 2)
    assert np.all(r < DELTA / 2)


def test_centered_modulo_period_and_boundary():
    r = centered_modulo(np.array([DELTA, -DELTA / 2]), DELTA)
    assert r == pytest.approx([0.0, -DELTA / 2], abs=1e-12)


def test_centered_modulo_upper_boundary_wraps():
    assert centered_modulo(np.array([DELTA / 2]), DELTA)[0] == pytest.approx(
        -DELTA / 2
    )


def test_centered_modulo_arithmetic():
    r = centered_modulo(np.array([1.9, -1.9]), DELTA)
    assert r == pytest.approx([1.9 - DELTA, DELTA - 1.9], abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_centered_modulo_congruence(x):
    r = centered_modulo(np.array([x]), DELTA)[0]
    k = (x - r) / DELTA
    assert abs(k - round(k)) < 1e-6
    assert -DELTA / 2 <= r < DELTA / 2


def test_syndrome_zero(identity_code):
    s = identity_code.syndrome(np.zeros(4))
    assert np.array_equal(s.values, np.zeros(2))


def test_syndrome_identity_encoder(identity_code):
    s = identity_code.syndrome(np.array([0.1, 0.2, 0.3, -0.4]))
    assert s.values == pytest.approx([0.3, -0.4], abs=1e-12)


def test_syndrome_full_period_reduces_to_zero(identity_code):
    s = identity_code.syndrome(np.array([0.0, 0.0, DELTA, 0.0]))
    assert s.values == pytest.approx([0.0, 0.0], abs=1e-12)


def test_syndrome_dimension_check(identity_code):
    with pytest.raises(DimensionError):
        identity_code.syndrome(np.zeros(3))


def test_syndrome_stabilizer_invariance():
    # displacements of the form Delta S^-1 (0, b) leave the syndrome fixed
    rng = np.random.default_rng(8)
    code = OscillatorCode(2, 1, two_mode_squeezer(2.0))
    s_inv = np.linalg.inv(code.encoder.entries)
    for _ in range(50):
        xi = rng.normal(size=4)
        b = rng.integers(-3, 4, size=2)
        shift = DELTA * s_inv @ np.concatenate([np.zeros(2), b])
        s0 = code.syndrome(xi).values
        s1 = code.syndrome(xi + shift).values
        diff = centered_modulo(s1 - s0, DELTA)
        assert np.max(np.abs(diff)) <= 1e-9


def test_syndrome_linearity_mod_delta():
    rng = np.random.default_rng(12)
    code = OscillatorCode(2, 1, two_mode_squeezer(4.0))
    for _ in range(50):
        x1, x2 = rng.normal(size=4), rng.normal(size=4)
        lhs = code.syndrome(x1 + x2).values
        rhs = centered_modulo(code.syndrome(x1).values + code.syndrome(x2).values, DELTA)
        assert np.max(np.abs(centered_modulo(lhs - rhs, DELTA))) <= 1e-9


def test_covariance_identity(identity_code):
    d = identity_code.covariance(0.3)
    assert np.allclose(d.covariance, 0.09 * np.eye(4), atol=1e-15)


def test_covariance_diagonal_squeezer():
    s = validate_symplectic(np.diag([2.0, 0.5]))
    # K < N required, so embed in a 2-mode code with identity second mode
    m = np.eye(4)
    m[2:, 2:] = s.entries
    code = OscillatorCode(2, 1, validate_symplectic(m))
    d = code.covariance(1.0)
    assert np.allclose(np.diag(d.covariance), [1, 1, 0.25, 4.0], atol=1e-12)


def test_covariance_matches_independent_solver():
    code = OscillatorCode(2, 1, two_mode_squeezer(2.0))
    d = code.covariance(0.2)
    gram = code.encoder.entries.T @ code.encoder.entries
    expected = 0.04 * np.linalg.solve(gram, np.eye(4))
    assert np.max(np.abs(d.covariance - expected)) <= 1e-10


def test_covariance_eigenvalue_range():
    rng = np.random.default_rng(15)
    for _ in range(20):
        enc = random_symplectic(3, rng)
        code = OscillatorCode(3, 1, enc)
        sq = float(np.sqrt(np.linalg.eigvalsh(enc.entries.T @ enc.entries)[-1]))
        evals = np.linalg.eigvalsh(code.covariance(0.4).covariance)
        assert evals[0] >= 0.16 / sq**2 * (1 - 1e-9)
        assert evals[-1] <= 0.16 * sq**2 * (1 + 1e-9)


def test_covariance_condition_guard():
    code = OscillatorCode(2, 1, two_mode_squeezer(1e7))
    with pytest.raises(NumericalFailure):
        code.covariance(0.2)


def test_logical_error_exact_recovery(identity_code):
    xi = np.array([0.1, 0.2, 0.3, -0.4])
    le = identity_code.logical_error(xi, xi)
    assert le.norm == 0.0


def test_logical_error_identity(identity_code):
    le = identity_code.logical_error(np.array([0.3, -0.4, 7.0, 7.0]), np.zeros(4))
    assert le.values == pytest.approx([0.3, -0.4])
    assert le.norm == pytest.approx(0.5)


def test_logical_error_reads_encoder_column():
    code = OscillatorCode(2, 1, two_mode_squeezer(2.0))
    e1 = np.zeros(4)
    e1[0] = 1.0
    le = code.logical_error(e1, np.zeros(4))
    assert le.values == pytest.approx(code.encoder.entries[:2, 0])
    assert le.norm == pytest.approx(np.sqrt(2))


def test_code_requires_k_less_than_n():
    with pytest.raises(DomainError):
        OscillatorCode(2, 2, identity_code_matrix(2))


def test_code_file_gain(tmp_path):
    p = tmp_path / "code.txt"
    p.write_text("# two-mode squeezing code\nN: 2\nK: 1\ngain: 2.0\n")
    code = load_code_file(p)
    assert np.allclose(code.encoder.entries, two_mode_squeezer(2.0).entries)


def test_code_file_matrix(tmp_path):
    rng = np.random.default_rng(19)
    s = random_symplectic(3, rng)
    save_matrix_file(tmp_path / "m.txt", s)
    p = tmp_path / "code.txt"
    p.write_text("N: 3\nK: 1\nmatrix_file: m.txt\n")
    code = load_code_file(p)
    assert np.array_equal(code.encoder.entries, s.entries)


def test_code_file_defaults_to_identity(tmp_path):
    p = tmp_path / "code.txt"
    p.write_text("N: 2\nK: 1\n")
    assert np.allclose(load_code_file(p).encoder.entries, np.eye(4))


def test_code_file_gain_requires_two_modes():
    with pytest.raises(ConfigError):
        code_from_fields({"N": "3", "K": "1", "gain": "2"})


def test_code_file_rejects_both_gain_and_matrix():
    with pytest.raises(ConfigError):
        code_from_fields({"N": "2", "K": "1", "gain": "2", "matrix_file": "x"})


def test_code_file_missing_fields():
    with pytest.raises(ConfigError):
        code_from_fields({"N": "2"})

"""Oscillator-to-oscillator code: syndromes, covariance, logical errors.

Conventions: logical modes are the first K modes (rows 1..2K of the encoder),
syndromes come from rows 2K+1..2N. The modular spacing is fixed to
Delta = sqrt(2 pi).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, NumericalFailure
from .noise import GaussianDensity
from .symplectic import (
    SymplecticMatrix,
    identity_code_matrix,
    load_matrix_file,
    two_mode_squeezer,
)

DELTA = float(np.sqrt(2.0 * np.pi))

# Squeezing beyond ~10^6 is unphysical and numerically meaningless in doubles.
COND_LIMIT = 1e12


def centered_modulo(x: np.ndarray, delta: float) -> np.ndarray:
    """Entrywise reduction into [-delta/2, delta/2), half-open at the top."""
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    x = np.asarray(x, dtype=float)
    r = np.mod(x + delta / 2.0, delta) - delta / 2.0
    # np.mod can return delta for inputs just below a period boundary.
    r[r >= delta / 2.0] -= delta
    return r


@dataclass(frozen=True)
class Syndrome:
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


@dataclass(frozen=True)
class LogicalError:
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


class OscillatorCode:
    """Encoding of K logical modes into N physical modes via a symplectic matrix."""

    def __init__(self, n_modes: int, k_logical: int, encoder: SymplecticMatrix):
        if not 0 < k_logical < n_modes:
            raise DomainError(f"need 0 < K < N, got K={k_logical}, N={n_modes}")
        if encoder.dim_modes != n_modes:
            raise DimensionError(
                f"encoder acts on {encoder.dim_modes} modes, code declares {n_modes}"
            )
        self.n_modes = n_modes
        self.k_logical = k_logical
        self.encoder = encoder
        self.delta = DELTA

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def logical_dim(self) -> int:
        return 2 * self.k_logical

    @property
    def syndrome_dim(self) -> int:
        return 2 * (self.n_modes - self.k_logical)

    def syndrome(self, xi: np.ndarray) -> Syndrome:
        """Modulo-Delta reduced rows 2K+1..2N of S applied to the displacement."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.dim,):
            raise DimensionError(f"expected displacement of length {self.dim}")
        raw = self.encoder.entries[self.logical_dim :, :] @ xi
        return Syndrome(centered_modulo(raw, self.delta))

    def covariance(self, sigma: float) -> GaussianDensity:
        """Covariance sigma^2 (S^T S)^{-1} of the transformed error x = S xi."""
        if sigma <= 0:
            raise DomainError(f"sigma must be positive, got {sigma}")
        gram = self.encoder.entries.T @ self.encoder.entries
        cond = float(np.linalg.cond(gram))
        if cond > COND_LIMIT:
            raise NumericalFailure(
                f"cond(S^T S) = {cond:.3e} exceeds {COND_LIMIT:.0e}; "
                "encoder squeezing is too strong for double precision"
            )
        cov = sigma**2 * np.linalg.inv(gram)
        return GaussianDensity(0.5 * (cov + cov.T))

    def logical_error(self, xi: np.ndarray, xi_hat: np.ndarray) -> LogicalError:
        """First 2K components of S (xi - xi_hat)."""
        xi = np.asarray(xi, dtype=float)
        xi_hat = np.asarray(xi_hat, dtype=float)
        if xi.shape != (self.dim,) or xi_hat.shape != (self.dim,):
            raise DimensionError(f"expected vectors of length {self.dim}")
        x = self.encoder.entries @ (xi - xi_hat)
        return LogicalError(x[: self.logical_dim])


def _parse_kv_lines(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, value = line.split(":", 1)
        out[key.strip()] = value.strip()
    return out


def load_code_file(path: str | os.PathLike) -> OscillatorCode:
    """Code definition file: fields N, K, and either gain or matrix_file."""
    with open(path) as fh:
        fields = _parse_kv_lines(fh.read())
    return code_from_fields(fields, base_dir=os.path.dirname(os.fspath(path)))


def code_from_fields(fields: dict[str, str], base_dir: str = "") -> OscillatorCode:
    """Build a code from parsed key-value fields (shared with the CLI config)."""
    try:
        n_modes = int(fields["N"])
        k_logical = int(fields["K"])
    except KeyError as exc:
        raise ConfigError(f"missing required code field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"N and K must be integers: {exc}") from exc

    if "gain" in fields and "matrix_file" in fields:
        raise ConfigError("specify either 'gain' or 'matrix_file', not both")
    if "gain" in fields:
        if (n_modes, k_logical) != (2, 1):
            raise ConfigError("'gain' builds a two-mode squeezer and requires N=2, K=1")
        encoder = two_mode_squeezer(float(fields["gain"]))
    elif "matrix_file" in fields:
        matrix_path = fields["matrix_file"]
        if base_dir and not os.path.isabs(matrix_path):
            matrix_path = os.path.join(base_dir, matrix_path)
        encoder = load_matrix_file(matrix_path)
    else:
        encoder = identity_code_matrix(n_modes)
    return OscillatorCode(n_modes, k_logical, encoder)

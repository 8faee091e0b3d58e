"""Gaussian displacement noise: sampling streams and multivariate densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError, NumericalFailure


@dataclass(frozen=True)
class NoiseModel:
    """i.i.d. centered normal displacement per quadrature, std sigma."""

    sigma: float
    modes: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.modes < 1:
            raise DomainError(f"mode count must be positive, got {self.modes}")


def trial_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream: identical draws in serial and parallel runs."""
    return np.random.default_rng([master_seed, trial_index])


def sample_displacement(model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Draw xi ~ N(0, sigma^2 I_{2N})."""
    return model.sigma * rng.standard_normal(2 * model.modes)


class GaussianDensity:
    """Centered multivariate normal with cached Cholesky-based solver.

    Refuses covariance matrices that are not symmetric positive definite.
    """

    def __init__(self, covariance: np.ndarray):
        cov = np.asarray(covariance, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {cov.shape}")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise NumericalFailure("covariance matrix is not symmetric")
        try:
            self._chol = scipy.linalg.cholesky(cov, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalFailure("covariance matrix is not positive definite") from exc
        self.covariance = 0.5 * (cov + cov.T)
        self.covariance.setflags(write=False)
        self.dim = cov.shape[0]
        self._log_det = 2.0 * float(np.sum(np.log(np.diagonal(self._chol))))
        inv = scipy.linalg.cho_solve((self._chol, True), np.eye(self.dim))
        self.inverse = 0.5 * (inv + inv.T)
        self.inverse.setflags(write=False)
        if np.max(np.abs(self.covariance @ self.inverse - np.eye(self.dim))) > 1e-8:
            raise NumericalFailure("covariance inversion inaccurate; matrix too ill-conditioned")

    @property
    def log_det(self) -> float:
        return self._log_det

    def mahalanobis_sq(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected vector of length {self.dim}, got shape {x.shape}")
        y = scipy.linalg.solve_triangular(self._chol, x, lower=True)
        return float(y @ y)

    def log_density(self, x: np.ndarray) -> float:
        """log f_Sigma(x) = -(n/2) log(2 pi) - (1/2) log det Sigma - (1/2) x^T Sigma^-1 x."""
        return (
            -0.5 * self.dim * np.log(2.0 * np.pi)
            - 0.5 * self._log_det
            - 0.5 * self.mahalanobis_sq(x)
        )


def log_density(d: GaussianDensity, x: np.ndarray) -> float:
    return d.log_density(x)

"""Analytic upper bounds on the decoding success probability and numeric
verification of the supporting geometric facts.

The headline bounds compare the Gaussian mass of a centered ball against the
Monte-Carlo estimate: ball radius eps*sq(U)/sigma in the squeezing form,
eps/sqrt(lambda_min(Sigma)) in the eigenvalue form, and the sharper variant
with the Schur complement Sigma* of the covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gammainc

from .code import OscillatorCode
from .errors import BudgetExceeded, DimensionError, DomainError, NumericalFailure
from .lattice import cvp_enumerate
from .symplectic import squeezing_measure
from .unwrap import UnwrapProblem

LINEAR_TOL = 1e-9
QFORM_TOL = 1e-12


def ball_mass(dim: int, radius: float) -> float:
    """Pr(||Z|| <= radius) for Z ~ N(0, I_dim).

    Closed-form Poisson series for even dim, regularized incomplete gamma
    otherwise.
    """
    if radius < 0:
        raise DomainError(f"radius must be nonnegative, got {radius}")
    if dim < 1:
        raise DomainError(f"dimension must be positive, got {dim}")
    t = 0.5 * radius * radius
    if dim % 2 == 0:
        term = np.exp(-t)
        total = term
        for m in range(1, dim // 2):
            term *= t / m
            total += term
        return float(1.0 - total)
    return float(gammainc(dim / 2.0, t))


def theorem_bound(code: OscillatorCode, sigma: float, eps: float) -> float:
    """Ball mass in dimension 2K at radius eps * sq(U) / sigma."""
    if sigma <= 0 or eps <= 0:
        raise DomainError("sigma and eps must be positive")
    sq = squeezing_measure(code.encoder)
    return ball_mass(code.logical_dim, eps * sq / sigma)


def corollary_bound(p: UnwrapProblem, eps: float) -> float:
    """Ball mass in dimension k at radius eps / sqrt(lambda_min(Sigma))."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    lam_min = float(np.linalg.eigvalsh(p.density.covariance)[0])
    return ball_mass(p.k, eps / np.sqrt(lam_min))


def schur_variant_bound(p: UnwrapProblem, eps: float) -> float:
    """Sharper variant using lambda_min of the Schur complement Sigma*."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    star = schur_complement(p.density.covariance, p.k)
    lam_min = float(np.linalg.eigvalsh(star)[0])
    return ball_mass(p.k, eps / np.sqrt(lam_min))


def schur_complement(sigma_matrix: np.ndarray, k: int) -> np.ndarray:
    """Sigma* = Sigma_AA - Sigma_AB (Sigma_BB)^{-1} Sigma_BA."""
    sigma = np.asarray(sigma_matrix, dtype=float)
    n = sigma.shape[0]
    if sigma.ndim != 2 or sigma.shape[1] != n:
        raise DimensionError("covariance must be square")
    if not 0 < k < n:
        raise DimensionError(f"block split needs 0 < k < n, got k={k}, n={n}")
    saa = sigma[:k, :k]
    sab = sigma[:k, k:]
    sbb = sigma[k:, k:]
    try:
        chol = scipy.linalg.cho_factor(sbb, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure("Sigma_BB is not positive definite") from exc
    star = saa - sab @ scipy.linalg.cho_solve(chol, sab.T)
    return 0.5 * (star + star.T)


def check_schur_eigen_bound(sigma_matrix: np.ndarray, k: int):
    """Returns (lambda_min(Sigma), lambda_min(Sigma*), holds)."""
    sigma = np.asarray(sigma_matrix, dtype=float)
    lam_sigma = float(np.linalg.eigvalsh(sigma)[0])
    lam_star = float(np.linalg.eigvalsh(schur_complement(sigma, k))[0])
    return lam_sigma, lam_star, lam_star >= lam_sigma - 1e-9


@dataclass(frozen=True)
class BoundReport:
    eps: float
    theorem_bound: float
    corollary_bound: float
    schur_bound: float
    lambda_min_sigma: float
    lambda_min_schur: float
    sq_u: float


def bound_report(code: OscillatorCode, sigma: float, eps: float) -> BoundReport:
    from .montecarlo import build_problem

    p = build_problem(code, sigma)
    lam_sigma = float(np.linalg.eigvalsh(p.density.covariance)[0])
    lam_star = float(np.linalg.eigvalsh(schur_complement(p.density.covariance, p.k))[0])
    return BoundReport(
        eps=eps,
        theorem_bound=theorem_bound(code, sigma, eps),
        corollary_bound=corollary_bound(p, eps),
        schur_bound=schur_variant_bound(p, eps),
        lambda_min_sigma=lam_sigma,
        lambda_min_schur=lam_star,
        sq_u=squeezing_measure(code.encoder),
    )


def _inv_sqrt_pd(sigma: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(sigma)
    if evals[0] < 1e-12:
        raise NumericalFailure(
            f"covariance eigenvalue {evals[0]:.3e} below 1e-12; refusing inverse sqrt"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


class DegenerateVoronoiGeometry:
    """Geometry of the degenerate Voronoi cell of Lambda (R^k x Delta Z^{n-k}).

    Lambda = Sigma^{-1/2}; the auxiliary lattice L = Lambda [[I, D Lh],[0, D I]]
    whose Voronoi cell contains the degenerate cell.
    """

    def __init__(self, sigma: np.ndarray, k: int, delta: float):
        sigma = np.asarray(sigma, dtype=float)
        n = sigma.shape[0]
        if not 0 < k < n:
            raise DimensionError(f"need 0 < k < n, got k={k}, n={n}")
        if delta <= 0:
            raise DomainError("delta must be positive")
        self.n, self.k, self.delta = n, k, float(delta)
        self.sigma = 0.5 * (sigma + sigma.T)

        lam = _inv_sqrt_pd(self.sigma)
        self.lam = lam
        prec = lam @ lam  # = Sigma^{-1}
        self.prec = prec
        self.omega = prec[:k, :k]
        self.lambda_hat = -scipy.linalg.solve(self.omega, prec[:k, k:], assume_a="pos")

        m = n - k
        top = np.concatenate([np.eye(k), self.delta * self.lambda_hat], axis=1)
        bottom = np.concatenate([np.zeros((m, k)), self.delta * np.eye(m)], axis=1)
        self.lattice_basis = lam @ np.vstack([top, bottom])

        self.schur = schur_complement(self.sigma, k)
        prec_aa_inv = np.linalg.inv(self.omega)
        g2 = prec_aa_inv @ prec[:k, k:]
        self.gamma2 = g2
        self.gamma1 = -g2 - self.sigma[:k, k:] @ np.linalg.inv(self.sigma[k:, k:])

        # Distance from the origin to the affine subspace {Lambda (h; Delta b)}
        # grows like delta * s_min(T) * ||b||, with T the component of the
        # B-columns of Lambda orthogonal to its A-columns. Once that distance
        # exceeds 2||z||, q_b(z) >= 0 automatically, giving a finite cutoff.
        cols_a = lam[:, :k]
        q_a, _ = np.linalg.qr(cols_a)
        proj_perp = np.eye(n) - q_a @ q_a.T
        t_mat = proj_perp @ lam[:, k:]
        self._subspace_smin = float(np.linalg.svd(t_mat, compute_uv=False)[-1])

    def ball_center(self, xi: np.ndarray, b: np.ndarray) -> np.ndarray:
        """c(xi, Delta b) = Gamma1 xi + Gamma2 Delta b."""
        return self.gamma1 @ xi + self.gamma2 @ (self.delta * np.asarray(b, dtype=float))

    def q_form(self, b: np.ndarray, z: np.ndarray) -> float:
        """Quadratic form whose nonnegativity defines membership in E_b."""
        b = np.asarray(b, dtype=float)
        z = np.asarray(z, dtype=float)
        v_b = self.lam[:, self.k :] @ (self.delta * b)
        gamma = float(v_b @ v_b - 2.0 * z @ v_b)
        w_b = self.prec[: self.k, self.k :] @ (self.delta * b) - self.lam[: self.k] @ z
        return gamma - float(w_b @ scipy.linalg.solve(self.omega, w_b, assume_a="pos"))

    def probe_cutoff(self, z: np.ndarray) -> int:
        """Smallest radius r such that all ||b||_inf > r satisfy q_b(z) >= 0."""
        norm_z = float(np.linalg.norm(z))
        return int(np.ceil(2.0 * norm_z / (self.delta * self._subspace_smin)))

    def linear_conditions(self, z: np.ndarray) -> float:
        """Max violation of <Lambda e_j, z> = 0 over the k A-directions."""
        return float(np.max(np.abs(self.lam[:, : self.k].T @ np.asarray(z, dtype=float))))

    def in_lattice_voronoi(self, z: np.ndarray, tol: float = LINEAR_TOL) -> bool:
        """Exact CVP certificate that 0 is a closest point of lattice L to z."""
        z = np.asarray(z, dtype=float)
        _, dist_sq, _ = cvp_enumerate(self.lattice_basis, z)
        return bool(np.sqrt(dist_sq) >= np.linalg.norm(z) - tol)


def in_polytope(g: DegenerateVoronoiGeometry, z: np.ndarray) -> bool:
    """Membership in the (n-k)-dimensional proxy polytope."""
    z = np.asarray(z, dtype=float)
    if z.shape != (g.n,):
        raise DimensionError(f"expected vector of length {g.n}")
    if g.linear_conditions(z) > LINEAR_TOL:
        return False
    return g.in_lattice_voronoi(z)


def in_degenerate_voronoi(
    g: DegenerateVoronoiGeometry, z: np.ndarray, probe_budget: int = 5
) -> str:
    """Tri-state membership test for the degenerate Voronoi cell.

    'out' on any violated probe, 'in' when the finite probe set is provably
    sufficient and all pass, 'undecided' when the cutoff exceeds the budget.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (g.n,):
        raise DimensionError(f"expected vector of length {g.n}")
    if g.linear_conditions(z) > LINEAR_TOL:
        return "out"

    cutoff = g.probe_cutoff(z)
    radius = min(cutoff, probe_budget)
    m = g.n - g.k
    if (2 * radius + 1) ** m > 10_000_000:
        return "undecided"
    axes = [np.arange(-radius, radius + 1)] * m
    for b in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m):
        if not np.any(b):
            continue
        if g.q_form(b, z) < -QFORM_TOL:
            return "out"
    if not g.in_lattice_voronoi(z):
        # V_Lambda is contained in the lattice Voronoi cell.
        return "out"
    if cutoff > probe_budget:
        return "undecided"
    return "in"


@dataclass(frozen=True)
class LemmaCheckResult:
    name: str
    instances: int
    failures: int
    max_violation: float

    def line(self) -> str:
        return (
            f"{self.name}: instances={self.instances} failures={self.failures} "
            f"max_violation={self.max_violation:.3e}"
        )


def _random_pd(rng: np.random.Generator, dim: int, cond_cap: float = 100.0) -> np.ndarray:
    """Random PD matrix with bounded condition number."""
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    evals = np.exp(rng.uniform(0.0, np.log(cond_cap), size=dim))
    evals = evals / evals.min()
    return (q * evals) @ q.T


def schur_eigen_sweep(rng: np.random.Generator, count: int = 1000, max_dim: int = 8) -> LemmaCheckResult:
    failures = 0
    worst = 0.0
    for _ in range(count):
        dim = int(rng.integers(2, max_dim + 1))
        k = int(rng.integers(1, dim))
        sigma = _random_pd(rng, dim, cond_cap=1000.0)
        lam_sigma, lam_star, holds = check_schur_eigen_bound(sigma, k)
        worst = max(worst, lam_sigma - lam_star)
        if not holds:
            failures += 1
    return LemmaCheckResult("schur-eigenvalue-bound", count, failures, worst)


def quadratic_form_sweep(rng: np.random.Generator, count: int = 1000) -> LemmaCheckResult:
    """q_b(z) against an independent inner minimization over the A-block."""
    failures = 0
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n))
        g = DegenerateVoronoiGeometry(_random_pd(rng, n), k, delta=np.sqrt(2 * np.pi))
        z = rng.normal(scale=2.0, size=n)
        b = rng.integers(-3, 4, size=n - k)
        if not np.any(b):
            b[0] = 1
        q_val = g.q_form(b, z)
        # Independent route: least squares distance from z to the affine
        # subspace {Lambda (h; Delta b) : h}, minus ||z||^2.
        cols = g.lam[:, : g.k]
        d = g.lam[:, g.k :] @ (g.delta * b.astype(float))
        h_opt, *_ = np.linalg.lstsq(cols, z - d, rcond=None)
        resid = cols @ h_opt + d - z
        direct = float(resid @ resid - z @ z)
        err = abs(q_val - direct) / max(1.0, abs(direct))
        worst = max(worst, err)
        if err > 1e-8 or (q_val >= 0) != (direct >= -1e-10):
            failures += 1
    return LemmaCheckResult("quadratic-form-consistency", count, failures, worst)


def parametrization_sweep(rng: np.random.Generator, count: int = 1000) -> LemmaCheckResult:
    """Lifted points phi(z) satisfy the polytope's defining linear constraints."""
    failures = 0
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        g = DegenerateVoronoiGeometry(_random_pd(rng, n), k, delta=np.sqrt(2 * np.pi))
        z = rng.normal(size=n - k)
        w = np.concatenate([g.lambda_hat @ z, z])
        block_err = float(np.max(np.abs(w[:k] - g.lambda_hat @ w[k:])))
        constraint_err = g.linear_conditions(g.lam @ w)
        err = max(block_err, constraint_err)
        worst = max(worst, err)
        if err > 1e-10:
            failures += 1
    return LemmaCheckResult("polytope-parametrization", count, failures, worst)


def containment_sweep(
    g: DegenerateVoronoiGeometry, rng: np.random.Generator, count: int = 10_000
) -> LemmaCheckResult:
    """No point certified inside the degenerate cell may fall outside the polytope."""
    failures = 0
    m = g.n - g.k
    # Sample in the cell's B-parametrization so a useful fraction lands inside,
    # then lift and perturb off the constraint surface occasionally.
    basis_scale = float(np.linalg.norm(g.lattice_basis, 2))
    for i in range(count):
        z_b = rng.normal(scale=0.7 * basis_scale, size=m)
        z = g.lam @ np.concatenate([g.lambda_hat @ z_b, z_b])
        if i % 3 == 0:
            z = z + rng.normal(scale=0.05 * basis_scale, size=g.n)
        state = in_degenerate_voronoi(g, z, probe_budget=6)
        if state == "in" and not in_polytope(g, z):
            failures += 1
    return LemmaCheckResult("voronoi-polytope-containment", count, failures, float(failures))


def _in_projected_polytope(g: DegenerateVoronoiGeometry, z_b: np.ndarray, tol: float) -> bool:
    """Membership of z_b in the B-projection of Lambda^{-1} P_Lambda."""
    w = np.concatenate([g.lambda_hat @ z_b, z_b])
    v = g.lam @ w
    _, dist_sq, _ = cvp_enumerate(g.lattice_basis, v)
    return bool(np.sqrt(dist_sq) >= np.linalg.norm(v) - tol)


def translate_overlap_sweep(
    rng: np.random.Generator,
    directions: int = 80,
    max_shift: int = 2,
) -> LemmaCheckResult:
    """Shared points of projected polytope translates lie on a hyperplane.

    Runs in B-dimension 2 (n=3, k=1): boundary points of the base projected
    polytope that also belong to a translate are collected by ray bisection
    and fitted with an affine line; the worst fit residual is the violation.
    """
    g = DegenerateVoronoiGeometry(_random_pd(rng, 3), 1, delta=np.sqrt(2 * np.pi))
    worst = 0.0
    instances = 0
    failures = 0
    shifts = [
        np.array([i, j])
        for i in range(-max_shift, max_shift + 1)
        for j in range(-max_shift, max_shift + 1)
        if (i, j) != (0, 0)
    ]
    for b in shifts:
        points = []
        for t in range(directions):
            angle = 2 * np.pi * (t + rng.random()) / directions
            d = np.array([np.cos(angle), np.sin(angle)])
            # The projected polytope is convex and contains the origin.
            lo, hi = 0.0, 1e-3
            while _in_projected_polytope(g, hi * d, tol=1e-9) and hi < 1e3:
                hi *= 2.0
            if hi >= 1e3:
                continue
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _in_projected_polytope(g, mid * d, tol=1e-9):
                    lo = mid
                else:
                    hi = mid
            p = lo * d
            if _in_projected_polytope(g, p - g.delta * b, tol=1e-8):
                points.append(p)
        if len(points) < 3:
            continue
        instances += 1
        pts = np.array(points)
        centered = pts - pts.mean(axis=0)
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        resid = float(np.max(np.abs(centered @ vt[-1])))
        worst = max(worst, resid)
        if resid > 1e-6:
            failures += 1
    return LemmaCheckResult("translate-overlap-hyperplane", max(instances, 1), failures, worst)


def run_lemma_checks(
    master_seed: int,
    schur_count: int = 1000,
    qform_count: int = 1000,
    param_count: int = 1000,
    containment_count: int = 10_000,
    geometry_count: int = 3,
    lambda_hat_override: np.ndarray | None = None,
) -> list[LemmaCheckResult]:
    """Full verification sweep; lambda_hat_override is a test hook that
    injects a corrupted parametrization matrix into the sweeps."""
    rng = np.random.default_rng([master_seed, 0])
    results = [
        schur_eigen_sweep(rng, schur_count),
        quadratic_form_sweep(rng, qform_count),
    ]
    if lambda_hat_override is None:
        results.append(parametrization_sweep(rng, param_count))
    else:
        results.append(_corrupted_parametrization_check(rng, lambda_hat_override))
    per_geometry = max(containment_count // max(geometry_count, 1), 1)
    for _ in range(geometry_count):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(1, n))
        g = DegenerateVoronoiGeometry(_random_pd(rng, n), k, delta=np.sqrt(2 * np.pi))
        results.append(containment_sweep(g, rng, per_geometry))
    results.append(translate_overlap_sweep(rng))
    return results


def _corrupted_parametrization_check(
    rng: np.random.Generator, lambda_hat: np.ndarray
) -> LemmaCheckResult:
    """Test hook: evaluate the parametrization constraint for a supplied
    (deliberately wrong) Lambda_hat on a fixed geometry."""
    n = lambda_hat.shape[0] + lambda_hat.shape[1]
    k = lambda_hat.shape[0]
    g = DegenerateVoronoiGeometry(_random_pd(rng, n), k, delta=np.sqrt(2 * np.pi))
    worst = 0.0
    failures = 0
    count = 100
    for _ in range(count):
        z = rng.normal(size=n - k)
        w = np.concatenate([lambda_hat @ z, z])
        err = g.linear_conditions(g.lam @ w)
        worst = max(worst, err)
        if err > 1e-10:
            failures += 1
    return LemmaCheckResult("polytope-parametrization", count, failures, worst)

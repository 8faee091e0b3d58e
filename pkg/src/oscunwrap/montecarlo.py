"""Seeded, parallel Monte-Carlo estimation of the decoding success probability.

Per-trial randomness comes from counter-based streams keyed by
(master_seed, trial_index), so results are bit-identical for any worker
count and chunking.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .code import LogicalError, OscillatorCode, centered_modulo
from .errors import DomainError, SearchBudgetExceeded
from .noise import trial_stream
from .symplectic import symplectic_form
from .unwrap import UnwrapProblem, map_estimate_batch

CHUNK_TRIALS = 8192
CONFIDENCE = 0.99
MAX_FAILURE_FRACTION = 1e-3


@dataclass(frozen=True)
class ExperimentSpec:
    code: OscillatorCode
    sigma: float
    eps_list: tuple[float, ...]
    trials: int
    master_seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.eps_list or any(e <= 0 for e in self.eps_list):
            raise DomainError("eps_list must be non-empty with positive entries")
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))


@dataclass(frozen=True)
class EpsRecord:
    eps: float
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class LogicalSummary:
    mean_norm: float
    std_norm: float
    per_coord_std: np.ndarray


@dataclass(frozen=True)
class EstimateReport:
    records: tuple[EpsRecord, ...]
    logical_summary: LogicalSummary
    master_seed: int
    trials: int
    wall_time: float
    decode_failures: int


def clopper_pearson(successes: int, trials: int, confidence: float = CONFIDENCE):
    """Exact binomial confidence interval."""
    alpha = 1.0 - confidence
    if successes == 0:
        low = 0.0
    else:
        low = float(beta.ppf(alpha / 2.0, successes, trials - successes + 1))
    if successes == trials:
        high = 1.0
    else:
        high = float(beta.ppf(1.0 - alpha / 2.0, successes + 1, trials - successes))
    return low, high


def build_problem(code: OscillatorCode, sigma: float) -> UnwrapProblem:
    return UnwrapProblem(
        n=code.dim,
        k=code.logical_dim,
        delta=code.delta,
        density=code.covariance(sigma),
    )


def _draw_chunk(spec: ExperimentSpec, start: int, stop: int) -> np.ndarray:
    dim = spec.code.dim
    xi = np.empty((stop - start, dim))
    for i, t in enumerate(range(start, stop)):
        rng = trial_stream(spec.master_seed, t)
        xi[i] = spec.sigma * rng.standard_normal(dim)
    return xi

def _transform_matrix(code: OscillatorCode) -> np.ndarray:
    """Map from the raw noise draw xi ~ N(0, sigma^2 I) to the estimation
    vector x ~ N(0, sigma^2 (S^T S)^{-1}): x = S^{-1} xi, with the inverse
    taken symplectically (J^T S^T J) so no linear solve is involved."""
    J = symplectic_form(code.n_modes)
    return J.T @ code.encoder.entries.T @ J


def _chunk_stats(args) -> tuple:
    """Decode one contiguous chunk of trials; returns associative partials."""
    spec, problem, start, stop = args
    xi = _draw_chunk(spec, start, stop)
    x = xi @ _transform_matrix(spec.code).T
    ka = spec.code.logical_dim
    u = centered_modulo(x[:, ka:], spec.code.delta)
    failures = 0
    try:
        x_hat, _, _ = map_estimate_batch(problem, u)
        logical = x[:, :ka] - x_hat[:, :ka]
    except SearchBudgetExceeded:
        # Retry one trial at a time so isolated pathological draws are
        # counted as failures instead of aborting the chunk.
        from .unwrap import map_estimate

        logical = np.empty((stop - start, ka))
        for i in range(stop - start):
            try:
                res = map_estimate(problem, u[i])
                logical[i] = x[i, :ka] - res.x_hat[:ka]
            except SearchBudgetExceeded:
                logical[i] = np.inf  # counts as failure at every eps
                failures += 1

    norms = np.linalg.norm(logical, axis=1)
    succ = np.array(
        [int(np.sum(norms <= e)) for e in spec.eps_list], dtype=np.int64
    )
    finite = np.isfinite(norms)
    return (
        succ,
        float(np.sum(norms[finite])),
        float(np.sum(norms[finite] ** 2)),
        np.sum(logical[finite], axis=0),
        np.sum(logical[finite] ** 2, axis=0),
        failures,
    )


def estimate_psucc(spec: ExperimentSpec, threads: int = 1) -> EstimateReport:
    """Monte-Carlo estimate of P_succ(eps) for every eps in the spec."""
    t0 = time.perf_counter()
    problem = build_problem(spec.code, spec.sigma)
    bounds_list = [
        (s, min(s + CHUNK_TRIALS, spec.trials))
        for s in range(0, spec.trials, CHUNK_TRIALS)
    ]
    jobs = [(spec, problem, a, b) for a, b in bounds_list]

    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(_chunk_stats, jobs))
    else:
        partials = [_chunk_stats(j) for j in jobs]

    ka = spec.code.logical_dim
    succ = np.zeros(len(spec.eps_list), dtype=np.int64)
    s_norm = 0.0
    s_norm2 = 0.0
    s_coord = np.zeros(ka)
    s_coord2 = np.zeros(ka)
    failures = 0
    # Fixed reduction order keeps floating-point sums worker-count independent.
    for part in partials:
        succ += part[0]
        s_norm += part[1]
        s_norm2 += part[2]
        s_coord += part[3]
        s_coord2 += part[4]
        failures += part[5]

    if failures > MAX_FAILURE_FRACTION * spec.trials:
        raise SearchBudgetExceeded(
            f"{failures} of {spec.trials} trials exceeded the decoder budget"
        )

    n = spec.trials
    records = []
    for e, s in zip(spec.eps_list, succ):
        low, high = clopper_pearson(int(s), n)
        records.append(
            EpsRecord(
                eps=e, successes=int(s), trials=n,
                p_hat=s / n, ci_low=low, ci_high=high,
            )
        )
    n_ok = n - failures
    mean_norm = s_norm / n_ok
    var_norm = max(s_norm2 / n_ok - mean_norm**2, 0.0)
    coord_mean = s_coord / n_ok
    coord_var = np.maximum(s_coord2 / n_ok - coord_mean**2, 0.0)
    summary = LogicalSummary(
        mean_norm=mean_norm,
        std_norm=float(np.sqrt(var_norm)),
        per_coord_std=np.sqrt(coord_var),
    )
    return EstimateReport(
        records=tuple(records),
        logical_summary=summary,
        master_seed=spec.master_seed,
        trials=n,
        wall_time=time.perf_counter() - t0,
        decode_failures=failures,
    )


def logical_error_samples(spec: ExperimentSpec, sample_count: int) -> list[LogicalError]:
    """First sample_count logical-error vectors from the deterministic stream."""
    if sample_count < 1:
        raise DomainError("sample_count must be >= 1")
    problem = build_problem(spec.code, spec.sigma)
    out: list[LogicalError] = []
    for start in range(0, sample_count, CHUNK_TRIALS):
        stop = min(start + CHUNK_TRIALS, sample_count)
        xi = _draw_chunk(spec, start, stop)
        x = xi @ _transform_matrix(spec.code).T
        ka = spec.code.logical_dim
        u = centered_modulo(x[:, ka:], spec.code.delta)
        x_hat, _, _ = map_estimate_batch(problem, u)
        for row in x[:, :ka] - x_hat[:, :ka]:
            out.append(LogicalError(row.copy()))
    return out

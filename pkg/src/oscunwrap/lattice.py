"""Lattice primitives: LLL basis reduction and exact closest-vector search.

All bases are column matrices; a lattice point is ``basis @ c`` for integer c.
Dimensions here are small (<= 12), so clarity beats asymptotics.
"""

from __future__ import annotations

import numpy as np

from .errors import SearchBudgetExceeded

ENUM_BUDGET = 10_000_000
TIE_TOL = 1e-9


def _gram_schmidt(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = B.shape[1]
    Bs = np.zeros_like(B)
    mu = np.zeros((n, n))
    for i in range(n):
        v = B[:, i].copy()
        for j in range(i):
            denom = Bs[:, j] @ Bs[:, j]
            mu[i, j] = (B[:, i] @ Bs[:, j]) / denom
            v -= mu[i, j] * Bs[:, j]
        Bs[:, i] = v
    return Bs, mu


def lll_reduce(basis: np.ndarray, delta: float = 0.75) -> tuple[np.ndarray, np.ndarray]:
    """LLL reduction. Returns (reduced, U) with reduced = basis @ U, U unimodular."""
    B = np.array(basis, dtype=float)
    n = B.shape[1]
    U = np.eye(n, dtype=np.int64)
    Bs, mu = _gram_schmidt(B)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = int(round(mu[k, j]))
            if q != 0:
                B[:, k] -= q * B[:, j]
                U[:, k] -= q * U[:, j]
                Bs, mu = _gram_schmidt(B)
        if Bs[:, k] @ Bs[:, k] >= (delta - mu[k, k - 1] ** 2) * (Bs[:, k - 1] @ Bs[:, k - 1]):
            k += 1
        else:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            Bs, mu = _gram_schmidt(B)
            k = max(k - 1, 1)
    return B, U


def babai_nearest(basis: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Babai nearest-plane heuristic; returns integer coefficients."""
    B = np.asarray(basis, dtype=float)
    q, r = np.linalg.qr(B)
    y = q.T @ np.asarray(target, dtype=float)
    n = B.shape[1]
    c = np.zeros(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        resid = y[i] - r[i, i + 1 :] @ c[i + 1 :]
        c[i] = int(round(resid / r[i, i]))
    return c


def cvp_enumerate(
    basis: np.ndarray,
    target: np.ndarray,
    budget: int = ENUM_BUDGET,
    tie_tol: float = TIE_TOL,
) -> tuple[np.ndarray, float, list[np.ndarray]]:
    """Exact CVP by Schnorr-Euchner sphere enumeration.

    Returns (coefficients, squared distance, near-tie coefficient list). The
    near-tie list holds every candidate whose squared distance is within
    tie_tol of the optimum (including the optimum itself). Raises
    SearchBudgetExceeded when more than ``budget`` leaves are visited.
    """
    B = np.asarray(basis, dtype=float)
    n = B.shape[1]
    q, r = np.linalg.qr(B)
    # Normalize R to a positive diagonal so rounding centers are well-defined.
    signs = np.sign(np.diagonal(r))
    r = signs[:, None] * r
    y = signs * (q.T @ np.asarray(target, dtype=float))

    # Babai point seeds the search radius so pruning kicks in immediately.
    c0 = babai_nearest(B, target)
    best_d = float(np.sum((B @ c0 - np.asarray(target, dtype=float)) ** 2))
    best_c = c0.copy()
    ties: list[tuple[float, np.ndarray]] = [(best_d, c0.copy())]

    c = np.zeros(n, dtype=np.int64)
    visited = 0

    def recurse(level: int, partial: float) -> None:
        nonlocal best_d, best_c, visited
        if level < 0:
            visited += 1
            if visited > budget:
                raise SearchBudgetExceeded(
                    f"CVP enumeration exceeded {budget} candidates"
                )
            if partial < best_d - tie_tol:
                ties[:] = [(partial, c.copy())]
                best_d, best_c = partial, c.copy()
            elif partial <= best_d + tie_tol:
                ties.append((partial, c.copy()))
                if partial < best_d:
                    best_d, best_c = partial, c.copy()
            return
        center = (y[level] - r[level, level + 1 :] @ c[level + 1 :]) / r[level, level]
        base = int(round(center))
        # Zig-zag enumeration around the rounded center.
        step = 0
        while True:
            for cand in {base + step, base - step}:
                c[level] = cand
                d = r[level, level] * (cand - center)
                new_partial = partial + d * d
                if new_partial <= best_d + tie_tol:
                    recurse(level - 1, new_partial)
            # The interval of admissible cand values is contiguous; once both
            # sides exceed the radius we can stop.
            lo = r[level, level] * (base - step - center)
            hi = r[level, level] * (base + step - center)
            if partial + lo * lo > best_d + tie_tol and partial + hi * hi > best_d + tie_tol:
                break
            step += 1

    recurse(n - 1, 0.0)
    keep = [cc for dd, cc in ties if dd <= best_d + tie_tol]
    return best_c, best_d, keep

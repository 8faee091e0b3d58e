"""Real symplectic matrices: validation, Euler decomposition, squeezing measure.

Quadrature ordering is (Q1, P1, ..., QN, PN) throughout, so the symplectic
form J is block-diagonal with 2x2 blocks [[0, 1], [-1, 0]].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, NotSymplectic, NumericalFailure

TOL_SYMP = 1e-9
TOL_RECON = 1e-8


def symplectic_form(n_modes: int) -> np.ndarray:
    """The 2N x 2N symplectic form J in interleaved quadrature ordering."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    J = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        J[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = block
    return J


@dataclass(frozen=True)
class SymplecticMatrix:
    """Validated element of Sp(2N, R).

    Construct via :func:`validate_symplectic`; the entries array is frozen.
    """

    entries: np.ndarray
    dim_modes: int

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2 * self.dim_modes

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return compose(self, other)


@dataclass(frozen=True)
class EulerDecomposition:
    """Factors S = o1 @ diag(z1, 1/z1, ..., zN, 1/zN) @ o2 with o1, o2 in K(N)."""

    o1: np.ndarray
    z: np.ndarray
    o2: np.ndarray

    def z_matrix(self) -> np.ndarray:
        d = np.empty(2 * len(self.z))
        d[0::2] = self.z
        d[1::2] = 1.0 / self.z
        return np.diag(d)

    def reconstruct(self) -> np.ndarray:
        return self.o1 @ self.z_matrix() @ self.o2


def symplectic_defect(M: np.ndarray) -> float:
    """Max-norm of S^T J S - J."""
    n_modes = M.shape[0] // 2
    J = symplectic_form(n_modes)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def validate_symplectic(M: np.ndarray, tol: float = TOL_SYMP) -> SymplecticMatrix:
    """Check membership in Sp(2N, R) and wrap the matrix.

    Raises DimensionError for non-square or odd dimension, NotSymplectic when
    the invariant ||S^T J S - J||_max exceeds tol.
    """
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] % 2 != 0:
        raise DimensionError(f"symplectic matrices have even dimension, got {M.shape[0]}")
    defect = symplectic_defect(M)
    if defect > tol:
        raise NotSymplectic(
            f"matrix is not symplectic: ||S^T J S - J||_max = {defect:.3e} > {tol:.1e}",
            defect,
        )
    # S^T S is automatically symmetric PSD; symplectic S is invertible so PD.
    return SymplecticMatrix(entries=M.copy(), dim_modes=M.shape[0] // 2)


def squeezing_measure(S: SymplecticMatrix) -> float:
    """sqrt of the largest eigenvalue of S^T S (>= 1, = 1 iff S orthogonal)."""
    gram = S.entries.T @ S.entries
    lam_max = float(np.linalg.eigvalsh(gram)[-1])
    return float(np.sqrt(lam_max))


def two_mode_squeezer(gain: float) -> SymplecticMatrix:
    """Symplectic matrix of a two-mode squeezer with the given gain g >= 1.

    Blocks: sqrt(g) I_2 on the diagonal, sqrt(g-1) diag(1, -1) off-diagonal,
    in (Q1, P1, Q2, P2) ordering.
    """
    if gain < 1:
        raise DomainError(f"gain must be >= 1, got {gain}")
    c = np.sqrt(gain)
    s = np.sqrt(gain - 1.0)
    off = np.diag([s, -s])
    M = np.block([[c * np.eye(2), off], [off, c * np.eye(2)]])
    return validate_symplectic(M, tol=1e-12 * max(1.0, gain))


def identity_code_matrix(n_modes: int) -> SymplecticMatrix:
    return validate_symplectic(np.eye(2 * n_modes))


def compose(S1: SymplecticMatrix, S2: SymplecticMatrix) -> SymplecticMatrix:
    if S1.dim_modes != S2.dim_modes:
        raise DimensionError(
            f"cannot compose symplectic matrices on {S1.dim_modes} and {S2.dim_modes} modes"
        )
    # Product of symplectic matrices is symplectic; revalidate with a tolerance
    # scaled by the factors' norms to absorb rounding.
    scale = float(np.linalg.norm(S1.entries, 2) * np.linalg.norm(S2.entries, 2))
    tol = max(TOL_SYMP, 1e-13 * scale**2)
    return validate_symplectic(S1.entries @ S2.entries, tol=tol)


def inverse(S: SymplecticMatrix) -> SymplecticMatrix:
    """Symplectic inverse S^{-1} = J^T S^T J (exact up to rounding)."""
    J = symplectic_form(S.dim_modes)
    return validate_symplectic(J.T @ S.entries.T @ J)


def _pair_columns(P: np.ndarray, J: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Build K in K(N) and z-list with P = K diag(z1,1/z1,...) K^T.

    P must be symmetric positive definite and symplectic. Eigenvalues come in
    (lam, 1/lam) pairs with eigenvectors (v, Jv); columns are arranged as
    (v_j, -J v_j) which makes K orthogonal and symplectic.
    """
    dim = P.shape[0]
    evals, evecs = np.linalg.eigh(P)
    order = np.argsort(-evals)  # largest first
    evals, evecs = evals[order], evecs[:, order]

    cols = np.zeros((dim, dim))
    zs = []
    chosen: list[np.ndarray] = []
    used = np.zeros(dim, dtype=bool)
    for i in range(dim):
        if used[i]:
            continue
        lam = evals[i]
        if lam < 1.0 - tol:
            break  # only partners of already-processed eigenvalues remain
        v = evecs[:, i]
        # Within near-degenerate clusters eigh may return vectors that are not
        # orthogonal to previously chosen partner columns; project them out.
        for c in chosen:
            v = v - np.dot(c, v) * c
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            used[i] = True
            continue
        v = v / nv
        w = -J @ v  # eigenvector for 1/lam, unit norm since J is orthogonal
        j = len(zs)
        cols[:, 2 * j] = v
        cols[:, 2 * j + 1] = w
        zs.append(lam)
        chosen.extend([v, w])
        used[i] = True
        # Mark the eigh vector most aligned with the partner as consumed.
        overlaps = np.abs(evecs.T @ w)
        overlaps[used] = -1.0
        used[int(np.argmax(overlaps))] = True

    if 2 * len(zs) != dim:
        raise NumericalFailure(
            "failed to pair eigenvectors of the polar factor into symplectic planes"
        )
    return cols, np.array(zs)


def euler_decompose(S: SymplecticMatrix, tol_recon: float = TOL_RECON) -> EulerDecomposition:
    """Euler (Bloch-Messiah) decomposition S = O1 Z O2.

    Computed via the polar decomposition S = P O with P = (S S^T)^{1/2},
    followed by a symplectic eigenbasis of P. Raises NumericalFailure when
    the reconstruction misses S by more than tol_recon.
    """
    M = S.entries
    dim = M.shape[0]
    J = symplectic_form(S.dim_modes)

    u, svals, vt = np.linalg.svd(M)
    # Polar factors: P = u diag(svals) u^T,  O = u vt.
    P = (u * svals) @ u.T
    P = 0.5 * (P + P.T)
    O = u @ vt

    K, zs = _pair_columns(P, J, tol=1e-10)
    o1 = K
    o2 = K.T @ O

    dec = EulerDecomposition(o1=o1, z=zs, o2=o2)
    err = float(np.max(np.abs(dec.reconstruct() - M)))
    if err > tol_recon:
        raise NumericalFailure(
            f"Euler decomposition reconstruction error {err:.3e} exceeds {tol_recon:.1e}"
        )
    return dec


def _interleave_from_qqpp(n_modes: int) -> np.ndarray:
    """Permutation matrix mapping (Q1..QN, P1..PN) coordinates to interleaved."""
    perm = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        perm[2 * j, j] = 1.0
        perm[2 * j + 1, n_modes + j] = 1.0
    return perm


def random_orthogonal_symplectic(n_modes: int, rng: np.random.Generator) -> SymplecticMatrix:
    """Random element of K(N) via a Haar-random unitary U = X + iY."""
    z = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    X, Y = q.real, q.imag
    qqpp = np.block([[X, -Y], [Y, X]])
    perm = _interleave_from_qqpp(n_modes)
    return validate_symplectic(perm @ qqpp @ perm.T)


def random_symplectic(
    n_modes: int,
    rng: np.random.Generator,
    z_low: float = 0.1,
    z_high: float = 10.0,
) -> SymplecticMatrix:
    """Random symplectic matrix built as O1 Z O2 (membership by construction)."""
    o1 = random_orthogonal_symplectic(n_modes, rng)
    o2 = random_orthogonal_symplectic(n_modes, rng)
    zj = np.exp(rng.uniform(np.log(z_low), np.log(z_high), size=n_modes))
    d = np.empty(2 * n_modes)
    d[0::2] = zj
    d[1::2] = 1.0 / zj
    return validate_symplectic(o1.entries @ np.diag(d) @ o2.entries, tol=1e-8)


def load_matrix_file(path: str | os.PathLike) -> SymplecticMatrix:
    """Read a symplectic matrix from plain text: first line N, then 2N rows."""
    with open(path) as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln and not ln.startswith("#")]
    if not lines:
        raise DimensionError(f"matrix file {path} is empty")
    try:
        n_modes = int(lines[0])
    except ValueError as exc:
        raise DimensionError(f"matrix file {path}: first line must be the mode count") from exc
    rows = lines[1:]
    if len(rows) != 2 * n_modes:
        raise DimensionError(
            f"matrix file {path}: expected {2 * n_modes} rows, found {len(rows)}"
        )
    M = np.array([[float(tok) for tok in row.split()] for row in rows])
    if M.shape != (2 * n_modes, 2 * n_modes):
        raise DimensionError(f"matrix file {path}: rows have wrong length")
    return validate_symplectic(M)


def save_matrix_file(path: str | os.PathLike, S: SymplecticMatrix) -> None:
    """Write the matrix in the plain-text format with 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(f"{S.dim_modes}\n")
        for row in S.entries:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")

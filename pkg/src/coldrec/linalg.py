"""Dense linear-algebra kernels for the bandit policies and the imputers.

Everything here is a pure function of its inputs: closed-form inverses of
rank-one identity updates, ridge solves, the Loewner-order check used to
justify the frozen confidence width, and the two factorization routines
(truncated SVD, masked ALS with weighted regularization) that back the
matrix-completion imputers.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "rank_one_identity_inverse",
    "fixed_quadratic_form",
    "ridge_solve",
    "psd_order_holds",
    "truncated_svd",
    "als_wr_factorize",
    "als_wr_objective",
]


def _finite_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"expected a non-empty 1-d vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector contains non-finite entries")
    return x


def _finite_matrix(M, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def rank_one_identity_inverse(x) -> np.ndarray:
    """Exact inverse of (I + x xᵀ).

    Sherman-Morrison collapses the inverse to I − x xᵀ / (1 + ‖x‖²), so no
    factorization is needed; the result is symmetric positive definite.
    """
    x = _finite_vector(x)
    k = x.size
    return np.eye(k) - np.outer(x, x) / (1.0 + x @ x)


def fixed_quadratic_form(x) -> float:
    """xᵀ (I + x xᵀ)⁻¹ x, which reduces to ‖x‖² / (1 + ‖x‖²).

    This is the (squared) confidence width of an arm whose design matrix is
    frozen at I + x xᵀ.  Always in [0, 1) and increasing in ‖x‖².
    """
    x = _finite_vector(x)
    s = float(x @ x)
    return s / (1.0 + s)


def ridge_solve(D, b, lam: float = 1.0) -> np.ndarray:
    """Minimizer of ‖Dθ − b‖² + λ‖θ‖², via the normal equations.

    Unique for any λ > 0 by strict convexity, even when D is rank deficient.
    """
    D = _finite_matrix(D, "design matrix")
    b = _finite_vector(b)
    if lam <= 0:
        raise ValueError(f"ridge penalty must be positive, got {lam}")
    t, k = D.shape
    if b.size != t:
        raise ValueError(f"design matrix has {t} rows but target has {b.size} entries")
    return np.linalg.solve(D.T @ D + lam * np.eye(k), D.T @ b)


def psd_order_holds(A, B, tol: float = 1e-12) -> bool:
    """True iff A ≤ B in the Loewner (positive-semidefinite) order.

    Checked as: smallest eigenvalue of (B − A) ≥ −tol.  Both inputs must be
    symmetric within tol; anything else is a usage bug, not a "false".
    """
    A = _finite_matrix(A, "A")
    B = _finite_matrix(B, "B")
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"need square matrices of equal shape, got {A.shape} and {B.shape}")
    for name, M in (("A", A), ("B", B)):
        if np.abs(M - M.T).max() > tol:
            raise ValueError(f"{name} is not symmetric within tol={tol}")
    diff = B - A
    diff = 0.5 * (diff + diff.T)
    return bool(np.linalg.eigvalsh(diff)[0] >= -tol)


def truncated_svd(M, rank: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best rank-`rank` factorization of M in the Frobenius norm.

    Returns (U, s, V) with orthonormal-column U (p×r) and V (q×r) and
    nonincreasing singular values s (length r), so that M ≈ U @ diag(s) @ V.T.
    Inputs of lower actual rank simply come back with trailing zero singular
    values.
    """
    M = _finite_matrix(M)
    p, q = M.shape
    if not 1 <= rank <= min(p, q):
        raise ValueError(f"rank must be in [1, {min(p, q)}] for a {p}x{q} matrix, got {rank}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U[:, :rank].copy(), s[:rank].copy(), Vt[:rank].T.copy()


def als_wr_objective(M, mask, U, V, lam: float) -> float:
    """Regularized observed-entry objective of a masked factorization.

    Σ_obs (M − U Vᵀ)² + λ(Σ_i n_i‖u_i‖² + Σ_j n_j‖v_j‖²), where n_i / n_j
    count the observations in row i / column j (the weighted-λ convention).
    """
    M = np.asarray(M, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    resid = (M - U @ V.T)[mask]
    n_row = mask.sum(axis=1)
    n_col = mask.sum(axis=0)
    penalty = lam * (n_row @ np.sum(U * U, axis=1) + n_col @ np.sum(V * V, axis=1))
    return float(resid @ resid + penalty)


def _als_half_sweep(M, mask, fixed, lam, axis):
    """Exactly re-solve one side of the factorization, observed entries only.

    axis=0 solves the row factors against `fixed` (the column factors);
    axis=1 the reverse, on the transposed view.
    """
    if axis == 1:
        M, mask = M.T, mask.T
    rank = fixed.shape[1]
    out = np.zeros((M.shape[0], rank))
    eye = np.eye(rank)
    for i in range(M.shape[0]):
        obs = mask[i]
        F = fixed[obs]
        n_obs = F.shape[0]
        G = F.T @ F + (lam * n_obs) * eye
        out[i] = np.linalg.solve(G, F.T @ M[i, obs])
    return out


def als_wr_factorize(
    M,
    mask,
    rank: int,
    lam: float,
    iters: int,
    rng=None,
    return_objective: bool = False,
):
    """Alternating least squares with weighted-λ regularization on a mask.

    Factors M ≈ U Vᵀ using only the entries where `mask` is True.  Each half
    sweep solves its block of the joint objective exactly, so the value
    reported by :func:`als_wr_objective` never increases across iterations.

    Every row and column of `mask` must contain at least one observation;
    callers with deficient slices pre-fill them (the imputer does).

    V is initialized with per-column observed means in its first factor and
    small uniform noise in [−0.5/rank, 0.5/rank] elsewhere, drawn from `rng`.

    Returns (U, V), or (U, V, objective_per_iteration) when
    `return_objective` is set.
    """
    M = _finite_matrix(M)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != M.shape:
        raise ValueError(f"mask shape {mask.shape} does not match matrix shape {M.shape}")
    p, q = M.shape
    if not 1 <= rank <= min(p, q):
        raise ValueError(f"rank must be in [1, {min(p, q)}] for a {p}x{q} matrix, got {rank}")
    if lam <= 0:
        raise ValueError(f"regularization must be positive, got {lam}")
    if iters < 1:
        raise ValueError(f"need at least one iteration, got {iters}")
    row_counts = mask.sum(axis=1)
    col_counts = mask.sum(axis=0)
    if (row_counts == 0).any():
        raise ValueError(f"row {int(np.argmin(row_counts))} of the observation mask has no entries")
    if (col_counts == 0).any():
        raise ValueError(f"column {int(np.argmin(col_counts))} of the observation mask has no entries")

    rng = np.random.default_rng(rng)
    V = np.zeros((q, rank))
    with np.errstate(invalid="ignore"):
        col_means = np.where(mask, M, 0.0).sum(axis=0) / col_counts
    V[:, 0] = col_means
    if rank > 1:
        V[:, 1:] = rng.uniform(-0.5 / rank, 0.5 / rank, size=(q, rank - 1))

    history = np.empty(iters)
    U = np.zeros((p, rank))
    for it in range(iters):
        U = _als_half_sweep(M, mask, V, lam, axis=0)
        V = _als_half_sweep(M, mask, U, lam, axis=1)
        history[it] = als_wr_objective(M, mask, U, V, lam)

    if return_objective:
        return U, V, history
    return U, V

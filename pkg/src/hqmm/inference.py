"""Inference rules on kernel-embedded states.

Three conditioning/propagation rules, each in an operator (primal) and a
Gram-matrix (dual) form:

  * the kernel sum rule, which pushes an embedded belief through a
    conditional embedding operator;
  * Nadaraya-Watson conditioning, the cheap elementwise Bayes update the
    sequence model uses;
  * the kernel Bayes rule, kept as the expensive comparison path.

Linear systems are solved with a Cholesky factorization after adding the
ridge to the diagonal; no explicit inverses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .quantum import DegenerateStateError, unvectorize, vec_identity

DENOM_TOL = 1e-12


def ridge_solve(gram: np.ndarray, rhs: np.ndarray, lam: float) -> np.ndarray:
    """Solve (gram + lam I) x = rhs for a Hermitian PSD ``gram``."""
    gram = np.asarray(gram)
    n = gram.shape[0]
    if gram.shape != (n, n):
        raise ValueError(f"gram matrix must be square, got {gram.shape}")
    if lam < 0:
        raise ValueError("ridge must be nonnegative")
    if not np.allclose(gram, gram.conj().T, atol=1e-8 * max(1.0, np.abs(gram).max())):
        raise ValueError("gram matrix is not symmetric")
    try:
        cf = scipy.linalg.cho_factor(gram + lam * np.eye(n), check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "gram system is singular or not PSD; a ridge lam > 0 is required"
        ) from exc
    return scipy.linalg.cho_solve(cf, rhs, check_finite=False)


@dataclass(frozen=True)
class ConditionalOperator:
    """Ridge-regressed conditional embedding operator (output dim x input dim)."""

    matrix: np.ndarray
    lam: float

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v


def fit_conditional(phi_out: np.ndarray, ups_in: np.ndarray,
                    lam: float) -> ConditionalOperator:
    """Least-squares conditional operator mapping input to output embeddings.

    ``phi_out`` and ``ups_in`` hold one embedding per column. Solved in
    whichever of the primal/dual forms gives the smaller system; both agree
    for lam > 0.
    """
    phi_out = np.asarray(phi_out)
    ups_in = np.asarray(ups_in)
    if phi_out.shape[1] != ups_in.shape[1]:
        raise ValueError(
            f"sample counts differ: {phi_out.shape[1]} vs {ups_in.shape[1]}"
        )
    n = ups_in.shape[1]
    d_in = ups_in.shape[0]
    if n <= d_in:
        k = ups_in.conj().T @ ups_in
        matrix = phi_out @ ridge_solve(k, ups_in.conj().T, lam)
    else:
        g = ups_in @ ups_in.conj().T
        matrix = ridge_solve(g, ups_in @ phi_out.conj().T, lam).conj().T
    return ConditionalOperator(matrix=matrix, lam=float(lam))


def kernel_sum_rule(alpha: np.ndarray, k_xx: np.ndarray, k_cross: np.ndarray,
                    lam: float) -> np.ndarray:
    """Dual-form belief propagation: (K_xx + lam I)^{-1} K_cross alpha.

    ``k_cross`` is the Gram block between the input basis and the
    propagated basis; with ``k_cross = k_xx`` this is the plain sum rule.
    """
    alpha = np.asarray(alpha).ravel()
    if k_cross.shape != (k_xx.shape[0], alpha.size):
        raise ValueError(
            f"cross gram {k_cross.shape} incompatible with gram {k_xx.shape} "
            f"and weights of length {alpha.size}"
        )
    return ridge_solve(k_xx, k_cross @ alpha, lam)


def nw_condition(alpha: np.ndarray, kernel_col: np.ndarray,
                 tol: float = DENOM_TOL) -> np.ndarray:
    """Elementwise Bayes update of belief weights: alpha_i k(y_i, y), renormalized.

    ``kernel_col`` must be nonnegative (use the squared kernel / density
    features); raises on a (numerically) zero-density observation.
    """
    alpha = np.asarray(alpha, dtype=float).ravel()
    kernel_col = np.asarray(kernel_col, dtype=float).ravel()
    if alpha.size != kernel_col.size:
        raise ValueError(f"lengths differ: {alpha.size} vs {kernel_col.size}")
    if kernel_col.min() < -tol:
        raise ValueError("kernel column has negative entries; use a squared kernel")
    w = alpha * np.maximum(kernel_col, 0.0)
    den = w.sum()
    if den <= tol:
        raise DegenerateStateError(f"observation has density {den:.3e} under the belief")
    return w / den


def nw_condition_primal(c_xy_pi: np.ndarray, rho_y_vec: np.ndarray,
                        tol: float = DENOM_TOL) -> np.ndarray:
    """Primal conditioning: (C_XY rho_y) / trace, trace by vec-identity contraction."""
    c_xy_pi = np.asarray(c_xy_pi)
    rho_y_vec = np.asarray(rho_y_vec).ravel()
    if c_xy_pi.shape[1] != rho_y_vec.size:
        raise ValueError(
            f"cross matrix {c_xy_pi.shape} incompatible with observation of "
            f"length {rho_y_vec.size}"
        )
    v = c_xy_pi @ rho_y_vec
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError("output embedding length is not a square")
    den = (vec_identity(n) @ v).real
    if den <= tol:
        raise DegenerateStateError(f"observation has density {den:.3e} under the belief")
    return v / den


def kernel_bayes_rule(ups: np.ndarray, k_xx: np.ndarray, k_yy: np.ndarray,
                      k_col: np.ndarray, alpha: np.ndarray,
                      lam: float) -> np.ndarray:
    """Gram-form posterior embedding; needs the squared, shifted K_yy inverted.

    Returns Ups D K_yy ((D K_yy)^2 + lam I)^{-1} D k_col with
    D = diag((K_xx + lam I)^{-1} K_xx alpha). Kept for comparison and
    benchmarking; the model path conditions with ``nw_condition`` instead.
    """
    ups = np.asarray(ups)
    alpha = np.asarray(alpha).ravel()
    k_col = np.asarray(k_col).ravel()
    n = alpha.size
    if k_xx.shape != (n, n) or k_yy.shape != (n, n) or k_col.size != n \
            or ups.shape[1] != n:
        raise ValueError("gram/weight shapes inconsistent")
    if lam <= 0:
        raise ValueError("kernel Bayes rule needs lam > 0")
    d = ridge_solve(k_xx, k_xx @ alpha, lam)
    dk = d[:, None] * k_yy
    z = np.linalg.solve(dk @ dk + lam * np.eye(n), d * k_col)
    return ups @ (d * (k_yy @ z))


def contract_mode3(tensor: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Collapse the third mode of a 3-mode tensor against a state vector."""
    tensor = np.asarray(tensor)
    state = np.asarray(state).ravel()
    if tensor.ndim != 3 or tensor.shape[2] != state.size:
        raise ValueError(
            f"tensor shape {tensor.shape} incompatible with state of length {state.size}"
        )
    return np.einsum("abj,j->ab", tensor, state)


def tensor_from_matrix(matrix: np.ndarray, obs_dim: int) -> np.ndarray:
    """Reshape a stacked (out*obs x in) regression output into 3 modes.

    Rows are laid out with the output-state index slow and the observation
    index fast, matching the Kronecker order of the extended-future columns.
    """
    matrix = np.asarray(matrix)
    rows, d_in = matrix.shape
    if rows % obs_dim:
        raise ValueError(f"{rows} rows not divisible by observation dim {obs_dim}")
    return np.ascontiguousarray(matrix.reshape(rows // obs_dim, obs_dim, d_in))


def belief_trace(ups: np.ndarray, alpha: np.ndarray) -> float:
    """Trace of the density represented by weighted vec-density columns."""
    v = ups @ np.asarray(alpha).ravel()
    n = int(round(np.sqrt(v.size)))
    return float((vec_identity(n) @ v).real)


def unvectorize_embedding(mu: np.ndarray) -> np.ndarray:
    """Reshape an embedding vector back to its (possibly invalid) density."""
    return unvectorize(np.asarray(mu).ravel())

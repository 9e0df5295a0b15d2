"""Dense linear-algebra primitives for quantum belief states.

States are plain numpy arrays: a pure state is a unit-norm (complex)
vector, a density matrix is a Hermitian PSD matrix with unit trace.
Vectorization is column-stacking throughout, so the conjugate sits on
the left Kronecker factor:  vec(U rho U^dag) = (conj(U) o U) vec(rho).

All functions are pure; nothing here mutates its inputs.
"""

from __future__ import annotations

import numpy as np

ATOL_VALID = 1e-9   # validation tolerance for state invariants
ATOL_EQUIV = 1e-10  # tolerance for path-equivalence assertions


class DegenerateStateError(ValueError):
    """A state or observation collapsed to (numerically) zero weight."""


# ---------------------------------------------------------------------------
# validation

def is_hermitian(m: np.ndarray, atol: float = ATOL_VALID) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1] and \
        np.max(np.abs(m - m.conj().T)) <= atol


def is_unitary(u: np.ndarray, atol: float = ATOL_VALID) -> bool:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0.0)


def is_density(rho: np.ndarray, atol: float = ATOL_VALID,
               normalized: bool = True) -> bool:
    """Hermitian, PSD, and (unless ``normalized=False``) unit trace."""
    if not is_hermitian(rho, atol):
        return False
    if np.linalg.eigvalsh(rho).min() < -atol:
        return False
    if normalized and abs(np.trace(rho).real - 1.0) > atol:
        return False
    return True


def check_density(rho: np.ndarray, atol: float = ATOL_VALID,
                  normalized: bool = True, name: str = "rho") -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be square, got shape {rho.shape}")
    if not is_hermitian(rho, atol):
        raise ValueError(f"{name} is not Hermitian within {atol}")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -atol:
        raise ValueError(f"{name} is not PSD (min eigenvalue {lo:.3e})")
    if normalized and abs(np.trace(rho).real - 1.0) > atol:
        raise ValueError(f"{name} trace is {np.trace(rho).real!r}, expected 1")
    return rho


def check_pure_state(psi: np.ndarray, atol: float = ATOL_VALID) -> np.ndarray:
    psi = np.asarray(psi).ravel()
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"pure state norm is {nrm!r}, expected 1")
    return psi


# ---------------------------------------------------------------------------
# constructors

def pure_density(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| for a unit amplitude vector."""
    psi = np.asarray(psi).ravel()
    return np.outer(psi, psi.conj())


def basis_state(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(n) / n


def random_pure_state(n: int, rng: np.random.Generator,
                      complex_amplitudes: bool = True) -> np.ndarray:
    psi = rng.standard_normal(n)
    if complex_amplitudes:
        psi = psi + 1j * rng.standard_normal(n)
    return psi / np.linalg.norm(psi)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None,
                   complex_amplitudes: bool = True) -> np.ndarray:
    """Random mixed state: convex mixture of ``rank`` random pure states."""
    rank = n if rank is None else rank
    w = rng.random(rank)
    w /= w.sum()
    rho = np.zeros((n, n), dtype=complex if complex_amplitudes else float)
    for p in w:
        rho += p * pure_density(random_pure_state(n, rng, complex_amplitudes))
    return rho


def random_unitary(n: int, rng: np.random.Generator,
                   complex_entries: bool = True) -> np.ndarray:
    """Haar-ish random unitary via QR of a Gaussian matrix."""
    g = rng.standard_normal((n, n))
    if complex_entries:
        g = g + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity so the distribution is invariant
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------------------
# composition and marginalization

def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Joint state of independent subsystems; ``a`` is the slow index."""
    return np.kron(a, b)


def partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out all subsystems except ``keep`` (an index or index tuple).

    ``dims`` lists the subsystem dimensions in tensor order (slow first);
    their product must equal the composite dimension. ``keep=()`` traces
    everything, returning the 1x1 matrix [trace(rho)].
    """
    rho = np.asarray(rho)
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"subsystem dims must be >= 1, got {dims}")
    n = int(np.prod(dims))
    if rho.shape != (n, n):
        raise ValueError(f"shape {rho.shape} inconsistent with dims {dims}")
    keep_t = (int(keep),) if np.isscalar(keep) else tuple(int(k) for k in keep)
    if any(k < 0 or k >= len(dims) for k in keep_t):
        raise ValueError(f"keep={keep_t} out of range for {len(dims)} subsystems")

    nd = len(dims)
    tens = rho.reshape(dims + dims)
    letters = "abcdefghijklm"
    row = [letters[i] for i in range(nd)]
    col = [letters[i].upper() for i in range(nd)]
    for i in range(nd):
        if i not in keep_t:
            col[i] = row[i]  # contract that subsystem
    out = "".join(letters[k] for k in keep_t) + "".join(letters[k].upper() for k in keep_t)
    reduced = np.einsum("".join(row + col) + "->" + out, tens)
    d_keep = int(np.prod([dims[k] for k in keep_t])) if keep_t else 1
    return reduced.reshape(d_keep, d_keep)


# ---------------------------------------------------------------------------
# vectorization

def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vec: columns concatenated top to bottom."""
    return np.asarray(rho).reshape(-1, order="F")


def unvectorize(v: np.ndarray, n: int | None = None) -> np.ndarray:
    v = np.asarray(v).ravel()
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"length {v.size} is not a square")
    return v.reshape(n, n, order="F")


def vec_identity(n: int) -> np.ndarray:
    """vec(I_n); inner product with vec(rho) evaluates trace(rho)."""
    return vectorize(np.eye(n))


def linearized_unitary(u: np.ndarray) -> np.ndarray:
    """Matrix L with L vec(rho) = vec(u rho u^dag)."""
    return np.kron(u.conj(), u)


def apply_unitary_linearized(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Conjugation u . u^dag acting on a vectorized density."""
    v = np.asarray(v).ravel()
    n = u.shape[0]
    if u.shape != (n, n) or v.size != n * n:
        raise ValueError(f"unitary {u.shape} incompatible with vector of length {v.size}")
    return linearized_unitary(u) @ v


def reshape_joint(rho_ab: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Realign a joint density on A x B into the a^2 x b^2 cross matrix.

    The defining property: reshape_joint(kron(rho_a, rho_b)) equals
    outer(vec(rho_a), vec(rho_b)).
    """
    rho_ab = np.asarray(rho_ab)
    n = dim_a * dim_b
    if rho_ab.shape != (n, n):
        raise ValueError(f"shape {rho_ab.shape} inconsistent with {dim_a}x{dim_b} split")
    t = rho_ab.reshape(dim_a, dim_b, dim_a, dim_b)  # [ia, ib, ja, jb]
    return t.transpose(2, 0, 3, 1).reshape(dim_a * dim_a, dim_b * dim_b)


def unreshape_joint(c: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Inverse of :func:`reshape_joint`."""
    c = np.asarray(c)
    if c.shape != (dim_a * dim_a, dim_b * dim_b):
        raise ValueError(f"shape {c.shape} inconsistent with dims ({dim_a}, {dim_b})")
    t = c.reshape(dim_a, dim_a, dim_b, dim_b)  # [ja, ia, jb, ib]
    return t.transpose(1, 3, 0, 2).reshape(dim_a * dim_b, dim_a * dim_b)


# ---------------------------------------------------------------------------
# projection back to a valid state

def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    positive = u + (1.0 - css) / idx > 0
    rho = idx[positive][-1]
    theta = (css[rho - 1] - 1.0) / rho
    return np.maximum(v - theta, 0.0)


def project_to_density(m: np.ndarray, atol: float = ATOL_VALID) -> np.ndarray:
    """Nearest (Frobenius) valid density matrix to an arbitrary square matrix.

    Hermitize, eigendecompose, project the spectrum onto the probability
    simplex, reconstruct. Idempotent on valid inputs.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    h = (m + m.conj().T) / 2.0
    if np.max(np.abs(h)) <= atol * atol:
        raise DegenerateStateError("cannot project an (almost) zero matrix to a state")
    w, vecs = np.linalg.eigh(h)
    w = project_simplex(w.real)
    out = (vecs * w) @ vecs.conj().T
    return out if np.iscomplexobj(m) else out.real

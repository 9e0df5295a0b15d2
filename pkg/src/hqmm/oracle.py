"""Brute-force circuit simulator and classical probability rules.

This module is ground truth, not a fast path: every update is simulated
with explicit joint density matrices, environment registers, and partial
traces, so the kernel-space implementations can be checked against it.
Classical sum/Bayes rules and the forward algorithm live here too.
"""

from __future__ import annotations

import numpy as np

from .quantum import (
    DegenerateStateError,
    basis_state,
    check_density,
    partial_trace,
    pure_density,
    tensor_product,
)

DEGENERATE_TRACE = 1e-12


# ---------------------------------------------------------------------------
# classical rules

def check_stochastic(a: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D likelihood table")
    if a.min() < -atol:
        raise ValueError("stochastic matrix entries must be nonnegative")
    col = a.sum(axis=0)
    if np.max(np.abs(col - 1.0)) > atol:
        raise ValueError("columns must each sum to 1")
    return a


def classical_sum_rule(a: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """P(Y) = A pi: push the prior through the likelihood table."""
    a = check_stochastic(a)
    pi = np.asarray(pi, dtype=float).ravel()
    if a.shape[1] != pi.size:
        raise ValueError(f"likelihood {a.shape} incompatible with prior of length {pi.size}")
    return a @ pi


def classical_bayes(a: np.ndarray, pi: np.ndarray, y: int) -> np.ndarray:
    """Posterior over X after observing row ``y`` of the likelihood table."""
    a = check_stochastic(a)
    pi = np.asarray(pi, dtype=float).ravel()
    if not 0 <= y < a.shape[0]:
        raise ValueError(f"observation index {y} out of range")
    w = a[y, :] * pi
    den = w.sum()
    if den <= DEGENERATE_TRACE:
        raise DegenerateStateError(f"observation {y} has probability {den:.3e}")
    return w / den


def linear_bayes_form(a: np.ndarray, pi: np.ndarray, y: int) -> np.ndarray:
    """Bayes conditioning written as one linear map applied to an indicator.

    Builds the column-normalized joint table (A diag(pi))^T diag(A pi)^{-1}
    and selects its column ``y``; must agree with :func:`classical_bayes`.
    """
    a = check_stochastic(a)
    pi = np.asarray(pi, dtype=float).ravel()
    marg = a @ pi
    if marg[y] <= DEGENERATE_TRACE:
        raise DegenerateStateError(f"observation {y} has probability {marg[y]:.3e}")
    joint_t = (a * pi[None, :]).T  # entry (x, y) = pi_x A_{y,x}
    e = basis_state(a.shape[0], y)
    return joint_t @ (e / marg)


def stationary_distribution(t: np.ndarray) -> np.ndarray:
    """Stationary distribution of a column-stochastic transition matrix."""
    t = check_stochastic(t)
    w, v = np.linalg.eig(t)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.abs(v[:, i].real)
    return pi / pi.sum()


def forward_algorithm(t: np.ndarray, o: np.ndarray, pi0: np.ndarray,
                      observations) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled forward recursion for a discrete HMM.

    ``t`` is the column-stochastic transition matrix P(x'|x), ``o`` the
    column-stochastic emission matrix P(y|x), ``pi0`` the initial belief.
    Per step: predict with ``t``, weight by the observation row of ``o``,
    renormalize.

    Returns (posteriors, likelihoods, predictives): posteriors[i] is the
    filtered belief after observations[:i+1]; likelihoods[i] is
    P(y_i | y_{<i}); predictives[i] is the distribution over y_i given
    y_{<i} (so predictives[i][observations[i]] == likelihoods[i]).
    """
    t = check_stochastic(t)
    o = check_stochastic(o)
    alpha = np.asarray(pi0, dtype=float).ravel().copy()
    n_steps = len(observations)
    posts = np.zeros((n_steps, t.shape[0]))
    likes = np.zeros(n_steps)
    preds = np.zeros((n_steps, o.shape[0]))
    for i, y in enumerate(observations):
        predicted = t @ alpha
        preds[i] = o @ predicted
        w = o[int(y), :] * predicted
        c = w.sum()
        if c <= DEGENERATE_TRACE:
            raise DegenerateStateError(f"observation {y} at step {i} has probability {c:.3e}")
        alpha = w / c
        posts[i] = alpha
        likes[i] = c
    return posts, likes, preds


# ---------------------------------------------------------------------------
# stochastic-matrix-to-unitary encoding

def build_sum_rule_unitary(a: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """Encode an m x n likelihood table in an nm x nm unitary.

    Column x*m of the result (the image of |x, 0>) stacks sqrt(A[y, x]) at
    composite index (x, y); the remaining columns are an arbitrary
    orthonormal completion built by Gram-Schmidt against random complex
    vectors. Any completion yields the same circuit output because the
    environment register is always prepared in basis state 0.
    """
    a = check_stochastic(a)
    m, n = a.shape
    dim = n * m
    rng = np.random.default_rng(0) if rng is None else rng
    u = np.zeros((dim, dim), dtype=complex)
    cols: list[np.ndarray] = []
    for x in range(n):
        v = np.zeros(dim, dtype=complex)
        v[x * m:(x + 1) * m] = np.sqrt(a[:, x])
        u[:, x * m] = v
        cols.append(v)
    for c in range(dim):
        if c % m == 0:
            continue
        # modified Gram-Schmidt against everything placed so far
        for _ in range(100):
            v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
            for b in cols:
                v -= (b.conj() @ v) * b
            nrm = np.linalg.norm(v)
            if nrm > 1e-8:
                break
        else:  # pragma: no cover - probability zero
            raise RuntimeError("failed to complete unitary")
        v /= nrm
        u[:, c] = v
        cols.append(v)
    return u


def env_state(s: int) -> np.ndarray:
    """Environment register: all zeros except the (0, 0) entry."""
    return pure_density(basis_state(s, 0))


def env_embedding(n: int, s: int) -> np.ndarray:
    """W with W rho W^dag = rho (x) env_state(s); maps n -> ns."""
    return np.kron(np.eye(n), basis_state(s, 0).reshape(s, 1))


def trace_first_slices(d_traced: int, d_kept: int) -> list[np.ndarray]:
    """Slice maps V_j with sum_j V_j rho V_j^dag = partial trace over the
    first register of a (d_traced x d_kept)-shaped composite."""
    return [np.kron(basis_state(d_traced, j).reshape(1, d_traced), np.eye(d_kept))
            for j in range(d_traced)]


# ---------------------------------------------------------------------------
# circuits

def quantum_sum_rule_circuit(rho_x: np.ndarray, u1: np.ndarray,
                             env_dim: int | None = None) -> np.ndarray:
    """Entangle the state with a fresh environment register and marginalize.

    Returns tr_X( U1 (rho_x (x) env) U1^dag ); the environment register
    carries the result.
    """
    rho_x = check_density(rho_x, name="rho_x")
    n = rho_x.shape[0]
    if u1.shape[0] % n != 0:
        raise ValueError(f"unitary dim {u1.shape[0]} not a multiple of state dim {n}")
    s = u1.shape[0] // n if env_dim is None else env_dim
    if u1.shape != (n * s, n * s):
        raise ValueError(f"unitary shape {u1.shape} inconsistent with dims ({n}, {s})")
    joint = u1 @ tensor_product(rho_x, env_state(s)) @ u1.conj().T
    return partial_trace(joint, (n, s), keep=1)


def sum_rule_linear_operator(u1: np.ndarray, w: np.ndarray,
                             v_list) -> np.ndarray:
    """Single matrix acting on vectorized densities, equivalent to the circuit.

    A = sum_i conj(V_i U1 W) (x) (V_i U1 W); then A vec(rho_x) equals
    vec(quantum_sum_rule_circuit(rho_x, u1)) for every density rho_x.
    """
    if u1.shape[1] != w.shape[0]:
        raise ValueError(f"W shape {w.shape} incompatible with unitary {u1.shape}")
    total = None
    for v in v_list:
        if v.shape[1] != u1.shape[0]:
            raise ValueError(f"slice shape {v.shape} incompatible with unitary {u1.shape}")
        m = v @ u1 @ w
        term = np.kron(m.conj(), m)
        total = term if total is None else total + term
    if total is None:
        raise ValueError("need at least one partial-trace slice")
    return total


def projection_operator(n: int, s: int, y: int) -> np.ndarray:
    """Von Neumann projection I_n (x) |y><y| on an n x s composite."""
    if not 0 <= y < s:
        raise ValueError(f"observation index {y} out of range for dim {s}")
    return np.kron(np.eye(n), pure_density(basis_state(s, y)))


def quantum_bayes_projection(rho_x: np.ndarray, u2: np.ndarray,
                             p: np.ndarray) -> np.ndarray:
    """Conditioning with an explicit projection operator on the joint state.

    Returns the renormalized tr_env( P U2 (rho_x (x) env) U2^dag P^dag ).
    """
    rho_x = check_density(rho_x, name="rho_x")
    n = rho_x.shape[0]
    s = u2.shape[0] // n
    joint = u2 @ tensor_product(rho_x, env_state(s)) @ u2.conj().T
    selected = p @ joint @ p.conj().T
    unnorm = partial_trace(selected, (n, s), keep=0)
    c = np.trace(unnorm).real
    if c <= DEGENERATE_TRACE:
        raise DegenerateStateError(f"zero-probability observation (trace {c:.3e})")
    return unnorm / c


def quantum_bayes_circuit(rho_x: np.ndarray, u2: np.ndarray,
                          rho_y: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """Conditioning on a rank-1 observation state measured in any basis.

    Internally diagonalizes rho_y = u Lambda u^dag (Lambda has a single
    unit entry, placed first), runs the rotate-measure-rotate form with
    P = I (x) Lambda, checks that it collapses to the direct
    (I (x) rho_y)-sandwich form, and returns the renormalized result.
    """
    rho_x = check_density(rho_x, name="rho_x")
    rho_y = check_density(rho_y, name="rho_y")
    n = rho_x.shape[0]
    s = rho_y.shape[0]
    if u2.shape != (n * s, n * s):
        raise ValueError(f"unitary shape {u2.shape} inconsistent with dims ({n}, {s})")

    w, vecs = np.linalg.eigh(rho_y)
    order = np.argsort(w)[::-1]
    w, vecs = w[order], vecs[:, order]
    if w[0] < 1 - atol or (s > 1 and w[1] > atol):
        raise ValueError("observation state must be rank 1")
    u_rot = vecs  # u_rot @ diag(1,0,...) @ u_rot^dag == rho_y
    lam = np.zeros((s, s))
    lam[0, 0] = 1.0

    rotated_proj = np.kron(np.eye(n), u_rot) @ np.kron(np.eye(n), lam) \
        @ np.kron(np.eye(n), u_rot.conj().T)
    if np.max(np.abs(rotated_proj - np.kron(np.eye(n), rho_y))) > atol:
        raise AssertionError("basis-rotation identity violated; observation not rank 1?")

    joint = u2 @ tensor_product(rho_x, env_state(s)) @ u2.conj().T
    sandwich = np.kron(np.eye(n), rho_y)
    direct = partial_trace(sandwich @ joint @ sandwich.conj().T, (n, s), keep=0)
    rotated = partial_trace(rotated_proj @ joint @ rotated_proj.conj().T, (n, s), keep=0)
    if np.max(np.abs(direct - rotated)) > 1e-10:
        raise AssertionError("rotate-measure path disagrees with rank-1 sandwich path")

    c = np.trace(direct).real
    if c <= DEGENERATE_TRACE:
        raise DegenerateStateError(f"zero-probability observation (trace {c:.3e})")
    return direct / c


# ---------------------------------------------------------------------------
# discrete sequence-model tensor built from circuits

def hmm_circuit_tensor(t: np.ndarray, o: np.ndarray,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Single-update 3-mode tensor for a discrete HMM, built from unitaries.

    The update tensored against a vectorized belief density produces the
    vectorized joint over (next state, observation):

        transition: entangle with a fresh state register via U1 (from the
            transition table) and trace out the old register, which kills
            off-diagonal coherences;
        emission: entangle with a fresh observation register via U2 (from
            the emission table).

    Result has shape (n^2, m^2, n^2) with modes (state-out, observation,
    state-in); chained with basis-state conditioning it reproduces the
    classical forward algorithm exactly on the diagonal.
    """
    t = check_stochastic(t)
    o = check_stochastic(o)
    n = t.shape[0]
    m = o.shape[0]
    if t.shape != (n, n) or o.shape[1] != n:
        raise ValueError("transition must be n x n and emission m x n")
    rng = np.random.default_rng(0) if rng is None else rng
    u1 = build_sum_rule_unitary(t, rng)       # on old (x) new registers
    u2 = build_sum_rule_unitary(o, rng)       # on state (x) obs registers
    w1 = env_embedding(n, n)                  # old state joins fresh register
    w2 = env_embedding(n, m)
    b = None
    for v in trace_first_slices(n, n):        # trace out the old register
        path = u2 @ w2 @ v @ u1 @ w1          # (n m) x n
        term = np.kron(path.conj(), path)
        b = term if b is None else b + term
    # rows of b index vec over the (n m)-dim joint; realign to 3 modes
    b4 = b.reshape(n, m, n, m, n * n)         # (jx, jy, ix, iy, col)
    return np.ascontiguousarray(
        b4.transpose(0, 2, 1, 3, 4).reshape(n * n, m * m, n * n).real
    )

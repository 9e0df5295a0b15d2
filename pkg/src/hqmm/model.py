"""The sequence model: recursive filtering and density-based prediction.

The model parameter is a 3-mode tensor contracted against the current
state along mode 3 and against the observation feature along mode 2.
Two state representations are supported:

  * pure mode (default): the state is a unit feature vector; an update is
    (K x3 w) phi(y), renormalized in 2-norm, and the observation density
    is the squared norm of the unnormalized update;
  * mixed mode: the state is a vectorized density; an update is
    (T x3 mu) vec(rho_y), trace-renormalized and projected back to a
    valid density. Circuit-built discrete models live here.

Multi-step (open-loop) prediction marginalizes the observation mode
instead of conditioning, which in pure mode turns the state into a small
density matrix over the state features; the rollout carries that matrix
exactly rather than forcing it back to rank 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMap, OneHotMap
from .inference import contract_mode3
from .oracle import hmm_circuit_tensor, stationary_distribution
from .quantum import (
    DegenerateStateError,
    project_to_density,
    unvectorize,
    vec_identity,
    vectorize,
)

DENSITY_TOL = 1e-12


@dataclass
class HqmmConfig:
    """Hyperparameters; defaults follow the experimental settings."""

    n_features: int = 1000        # observation feature count
    state_size: int = 20          # history/future feature count (state dim)
    ridge_lambda: float = 0.05
    window: int = 10
    learning_rate: float = 0.1
    bptt_horizon: int = 20
    epochs: int = 50
    batch_size: int = 20
    grad_clip: float = 0.25
    prediction_horizon: int = 10
    n_density_samples: int = 0    # 0 = use every training observation
    mode: str = "pure"            # "pure" | "mixed"
    features: str = "rff"         # "rff" | "onehot"
    n_symbols: int = 0            # required for onehot features
    bandwidth: float = 0.0        # 0 = median heuristic
    loss: str = "mse"             # "mse" | "xent"

    def validate(self) -> "HqmmConfig":
        positive = {
            "n_features": self.n_features, "state_size": self.state_size,
            "window": self.window, "learning_rate": self.learning_rate,
            "bptt_horizon": self.bptt_horizon, "epochs": self.epochs,
            "batch_size": self.batch_size, "grad_clip": self.grad_clip,
            "prediction_horizon": self.prediction_horizon,
        }
        for key, val in positive.items():
            if val <= 0:
                raise ValueError(f"config key {key} must be positive, got {val}")
        if self.ridge_lambda < 0 or self.n_density_samples < 0 or self.bandwidth < 0:
            raise ValueError("ridge_lambda, n_density_samples, bandwidth must be >= 0")
        if self.mode not in ("pure", "mixed"):
            raise ValueError(f"mode must be 'pure' or 'mixed', got {self.mode!r}")
        if self.features not in ("rff", "onehot"):
            raise ValueError(f"features must be 'rff' or 'onehot', got {self.features!r}")
        if self.features == "onehot" and self.n_symbols < 2:
            raise ValueError("onehot features need n_symbols >= 2")
        if self.loss not in ("mse", "xent"):
            raise ValueError(f"loss must be 'mse' or 'xent', got {self.loss!r}")
        return self


@dataclass
class HqmmModel:
    tensor: np.ndarray            # (state_out, obs_feat, state_in)
    fmap_y: FeatureMap
    fmap_state: FeatureMap | None
    initial_state: np.ndarray     # unit vector (pure) or vec density (mixed)
    mode: str
    config: HqmmConfig
    prediction_samples: np.ndarray  # (n, d) candidate observations
    trained_by: str = "2sr"

    @property
    def state_dim(self) -> int:
        return self.tensor.shape[2]

    @property
    def obs_feature_dim(self) -> int:
        return self.tensor.shape[1]


@dataclass
class FilterState:
    mu: np.ndarray
    t: int
    last_density: float


@dataclass
class ConstraintStats:
    """Counters for quantum-constraint violations seen during inference."""

    density_queries: int = 0
    density_clamped: int = 0

    @property
    def violation_rate(self) -> float:
        if self.density_queries == 0:
            return 0.0
        return self.density_clamped / self.density_queries


# ---------------------------------------------------------------------------
# observation features

def obs_feature(model: HqmmModel, y) -> np.ndarray:
    """Observation feature in the space the tensor's mode 2 expects."""
    phi = model.fmap_y.embed(np.asarray(y, dtype=float).ravel())
    if model.mode == "mixed":
        return np.kron(phi.conj(), phi)
    return phi


def obs_features_many(model: HqmmModel, ys: np.ndarray) -> np.ndarray:
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    phi = model.fmap_y.embed_many(ys)
    if model.mode == "mixed":
        d = phi.shape[0]
        return np.einsum("in,jn->ijn", phi.conj(), phi).reshape(d * d, ys.shape[0])
    return phi


# ---------------------------------------------------------------------------
# filtering

def initial_filter_state(model: HqmmModel) -> FilterState:
    return FilterState(mu=model.initial_state.copy(), t=0, last_density=np.nan)


def filter_step(model: HqmmModel, state: FilterState, y) -> FilterState:
    """Advance one step: contract, condition on y, renormalize, revalidate."""
    m = contract_mode3(model.tensor, state.mu)
    v = m @ obs_feature(model, y)
    if model.mode == "pure":
        den = float(v @ v.conj()).real if np.iscomplexobj(v) else float(v @ v)
        if den <= DENSITY_TOL:
            raise DegenerateStateError(
                f"observation at step {state.t} has density {den:.3e}"
            )
        mu = v / np.sqrt(den)
    else:
        n = int(round(np.sqrt(v.size)))
        den = float((vec_identity(n) @ v).real)
        if den <= DENSITY_TOL:
            raise DegenerateStateError(
                f"observation at step {state.t} has density {den:.3e}"
            )
        mu = vectorize(project_to_density(unvectorize(v / den, n)))
    return FilterState(mu=mu, t=state.t + 1, last_density=den)


def filter_sequence(model: HqmmModel, seq: np.ndarray,
                    state: FilterState | None = None) -> list[FilterState]:
    """States after each observation of ``seq`` (rows), in order."""
    state = initial_filter_state(model) if state is None else state
    out = []
    for y in np.atleast_2d(np.asarray(seq, dtype=float)):
        state = filter_step(model, state, y)
        out.append(state)
    return out


# ---------------------------------------------------------------------------
# densities

def _raw_density(model: HqmmModel, mu_repr, y_feats: np.ndarray) -> np.ndarray:
    """Unnormalized densities for feature columns, given a state representation.

    ``mu_repr`` is a ('pure', w) / ('mixed', mu) filter state, or
    ('rho', R) for the density-matrix representation pure-mode rollouts
    produce.
    """
    kind, val = mu_repr
    if kind == "pure":
        m = contract_mode3(model.tensor, val)
        u = m @ y_feats
        return np.sum((u * u.conj()).real, axis=0)
    if kind == "mixed":
        m = contract_mode3(model.tensor, val)
        n = int(round(np.sqrt(m.shape[0])))
        w = unvectorize(m.T @ vec_identity(n), int(round(np.sqrt(m.shape[1]))))
        d = model.fmap_y.dim
        phi = y_feats.reshape(d, d, -1)  # columns are kron(conj(phi), phi)
        # tr over the observation register, then pair with each rho_y
        return np.einsum("ij,jik->k", w, phi).real
    # rho: state is a density matrix over state features (pure-mode rollout)
    g = np.einsum("abj,bk->ajk", model.tensor, y_feats)
    return np.einsum("ajk,ji,aik->k", g, val, g.conj()).real


def _state_repr(model: HqmmModel, state: FilterState):
    return (model.mode, state.mu)


def observation_density(model: HqmmModel, state: FilterState, y,
                        stats: ConstraintStats | None = None) -> float:
    """Unnormalized density of observing ``y`` next, clamped to [0, 1].

    Learned tensors only approximately satisfy the quantum constraints, so
    the raw trace can leave [0, 1]; clamping events are counted in
    ``stats`` when provided.
    """
    y = np.asarray(y, dtype=float).reshape(1, -1)
    raw = float(_raw_density(model, _state_repr(model, state),
                             obs_features_many(model, y))[0])
    clamped = min(max(raw, 0.0), 1.0)
    if stats is not None:
        stats.density_queries += 1
        if clamped != raw:
            stats.density_clamped += 1
    return clamped


def density_bounds(model: HqmmModel, state: FilterState) -> tuple[float, float]:
    """Eigenvalue range of the reduced observation-side density.

    For any unit observation feature the unnormalized density is a
    Rayleigh quotient of this matrix, so (lo, hi) bound every
    observation_density output of a constraint-satisfying model.
    """
    m = contract_mode3(model.tensor, state.mu)
    if model.mode == "pure":
        rho_y = m.conj().T @ m
    else:
        n = int(round(np.sqrt(m.shape[0])))
        s = int(round(np.sqrt(m.shape[1])))
        rho_y = unvectorize(m.T @ vec_identity(n), s)
        rho_y = (rho_y + rho_y.conj().T) / 2
    w = np.linalg.eigvalsh(rho_y)
    return float(w[0]), float(w[-1])


# ---------------------------------------------------------------------------
# prediction

def _clamped_weights(raw: np.ndarray, stats: ConstraintStats | None) -> np.ndarray:
    clamped = np.clip(raw, 0.0, 1.0)
    if stats is not None:
        stats.density_queries += raw.size
        stats.density_clamped += int(np.sum(clamped != raw))
    return clamped


def _point_predict_repr(model: HqmmModel, mu_repr, samples: np.ndarray,
                        stats: ConstraintStats | None = None) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("need at least one candidate observation")
    raw = _raw_density(model, mu_repr, obs_features_many(model, samples))
    w = _clamped_weights(raw, stats)
    total = w.sum()
    if total <= DENSITY_TOL:
        raise DegenerateStateError("all candidate observations have zero density")
    return samples.T @ (w / total)


def point_predict(model: HqmmModel, state: FilterState, samples=None,
                  stats: ConstraintStats | None = None) -> np.ndarray:
    """Density-weighted average of candidate observations."""
    samples = model.prediction_samples if samples is None else samples
    return _point_predict_repr(model, _state_repr(model, state), samples, stats)


def _transition_only(model: HqmmModel, mu_repr):
    """Advance one step marginalizing (not conditioning on) the observation."""
    kind, val = mu_repr
    tensor = model.tensor
    if model.mode == "mixed":
        m = contract_mode3(tensor, val)
        s = int(round(np.sqrt(m.shape[1])))
        v = m @ vec_identity(s)
        n = int(round(np.sqrt(v.size)))
        tr = float((vec_identity(n) @ v).real)
        if tr <= DENSITY_TOL:
            raise DegenerateStateError("state collapsed during rollout")
        return ("mixed", vectorize(project_to_density(unvectorize(v / tr, n))))
    if kind == "pure":
        m = contract_mode3(tensor, val)
        rho = m @ m.conj().T
    else:
        rho = np.einsum("abj,jk,cbk->ac", tensor, val, tensor.conj())
    tr = float(np.trace(rho).real)
    if tr <= DENSITY_TOL:
        raise DegenerateStateError("state collapsed during rollout")
    return ("rho", project_to_density(rho / tr))


def predict_horizon(model: HqmmModel, state: FilterState, horizon: int,
                    samples=None, stats: ConstraintStats | None = None) -> np.ndarray:
    """Open-loop prediction ``horizon`` steps ahead of the filtered state."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    samples = model.prediction_samples if samples is None else samples
    repr_ = _state_repr(model, state)
    for _ in range(horizon - 1):
        repr_ = _transition_only(model, repr_)
    return _point_predict_repr(model, repr_, samples, stats)


def predict_curve(model: HqmmModel, state: FilterState, horizon: int,
                  samples=None, stats: ConstraintStats | None = None) -> np.ndarray:
    """Predictions at every horizon 1..horizon; row h-1 predicts t+h."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    samples = model.prediction_samples if samples is None else samples
    repr_ = _state_repr(model, state)
    rows = [_point_predict_repr(model, repr_, samples, stats)]
    for _ in range(horizon - 1):
        repr_ = _transition_only(model, repr_)
        rows.append(_point_predict_repr(model, repr_, samples, stats))
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# marginal densities over a value grid

def marginal_density_grid(model: HqmmModel, states, feature_index: int,
                          value_grid: np.ndarray, fill_samples: np.ndarray,
                          n_draws: int = 64, seed: int = 0) -> np.ndarray:
    """Per-state marginal density of one feature over a value grid.

    Multi-dimensional observations are marginalized by Monte-Carlo: the
    remaining features are drawn from ``fill_samples`` rows and the joint
    density is averaged over draws. Each row (one state/time step) is
    normalized to sum 1.
    """
    value_grid = np.asarray(value_grid, dtype=float).ravel()
    if value_grid.size == 0:
        raise ValueError("value grid is empty")
    fill_samples = np.atleast_2d(np.asarray(fill_samples, dtype=float))
    d = fill_samples.shape[1]
    if not 0 <= feature_index < d:
        raise ValueError(f"feature index {feature_index} out of range for dim {d}")
    rng = np.random.default_rng(seed)
    if d == 1:
        queries = value_grid.reshape(-1, 1)
        per_value = 1
    else:
        per_value = n_draws
        draws = fill_samples[rng.integers(0, fill_samples.shape[0],
                                          size=value_grid.size * n_draws)]
        queries = draws.copy()
        queries[:, feature_index] = np.repeat(value_grid, n_draws)
    feats = obs_features_many(model, queries)

    grid = np.zeros((len(states), value_grid.size))
    for i, state in enumerate(states):
        raw = _raw_density(model, _state_repr(model, state), feats)
        raw = np.clip(raw, 0.0, 1.0)
        row = raw.reshape(value_grid.size, per_value).mean(axis=1)
        total = row.sum()
        grid[i] = row / total if total > DENSITY_TOL else 1.0 / value_grid.size
    return grid


# ---------------------------------------------------------------------------
# oracle-built discrete models

def model_from_hmm(transition: np.ndarray, emission: np.ndarray,
                   pi0: np.ndarray | None = None,
                   rng: np.random.Generator | None = None) -> HqmmModel:
    """Mixed-mode model assembled from circuit encodings of an HMM.

    The resulting tensor satisfies the quantum constraints exactly, so
    filtering it reproduces the classical forward algorithm; observation
    features are one-hot symbol indicators.
    """
    transition = np.asarray(transition, dtype=float)
    emission = np.asarray(emission, dtype=float)
    n = transition.shape[0]
    m = emission.shape[0]
    rng = np.random.default_rng(0) if rng is None else rng
    tensor = hmm_circuit_tensor(transition, emission, rng)
    pi = stationary_distribution(transition) if pi0 is None else np.asarray(pi0, float)
    cfg = HqmmConfig(n_features=m, state_size=n, mode="mixed",
                     features="onehot", n_symbols=m)
    return HqmmModel(
        tensor=tensor,
        fmap_y=OneHotMap(n_symbols=m),
        fmap_state=OneHotMap(n_symbols=n),
        initial_state=vectorize(np.diag(pi)),
        mode="mixed",
        config=cfg,
        prediction_samples=np.arange(m, dtype=float).reshape(-1, 1),
        trained_by="oracle",
    )

"""Feature maps and empirical embeddings.

Random Fourier features approximate the Gaussian kernel; each feature
vector is normalized to unit 2-norm so its outer product is a valid pure
state (trace exactly 1), not just one in expectation. A one-hot map with
the same interface covers discrete systems, where the equivalences with
classical inference are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum import DegenerateStateError, vectorize


@dataclass(frozen=True)
class RffMap:
    """Frozen random-Fourier-feature parameters for the Gaussian kernel.

    ``frequencies`` (D x d) are sampled N(0, 1/sigma^2), ``phases`` (D)
    uniform on [0, 2pi). Embeddings are sqrt(2/D) cos(Wx + b), then unit
    normalized.
    """

    frequencies: np.ndarray
    phases: np.ndarray
    sigma: float
    seed: int

    def __post_init__(self):
        self.frequencies.setflags(write=False)
        self.phases.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.frequencies.shape[0]

    @property
    def input_dim(self) -> int:
        return self.frequencies.shape[1]

    def embed(self, x: np.ndarray) -> np.ndarray:
        return self.embed_many(np.asarray(x, dtype=float).reshape(1, -1))[:, 0]

    def embed_many(self, xs: np.ndarray) -> np.ndarray:
        """Columns phi(x_i) for rows x_i of ``xs``; unit norm each."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.input_dim:
            raise ValueError(f"expected rows of dim {self.input_dim}, got shape {xs.shape}")
        z = np.sqrt(2.0 / self.dim) * np.cos(self.frequencies @ xs.T + self.phases[:, None])
        norms = np.linalg.norm(z, axis=0)
        if np.any(norms < 1e-12):
            raise DegenerateStateError("feature vector collapsed to zero norm")
        return z / norms


@dataclass(frozen=True)
class OneHotMap:
    """Indicator features for integer-coded symbols, one block per window slot.

    Inputs are windows of ``input_dim`` symbol codes; the embedding
    concatenates one indicator block per slot and scales by
    1/sqrt(input_dim) so the result is a unit vector. Inner products are
    {0, 1/input_dim, ..., 1}, and for single symbols exactly the Kronecker
    delta, which is what makes discrete-system equivalences exact.
    """

    n_symbols: int
    input_dim: int = 1

    @property
    def dim(self) -> int:
        return self.n_symbols * self.input_dim

    def embed(self, x: np.ndarray) -> np.ndarray:
        return self.embed_many(np.asarray(x, dtype=float).reshape(1, -1))[:, 0]

    def embed_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        if xs.ndim != 2 or xs.shape[1] != self.input_dim:
            raise ValueError(f"expected rows of dim {self.input_dim}, got shape {xs.shape}")
        codes = np.rint(xs).astype(int)
        if codes.min() < 0 or codes.max() >= self.n_symbols:
            raise ValueError(f"symbol codes must lie in [0, {self.n_symbols})")
        n = xs.shape[0]
        out = np.zeros((self.dim, n))
        for slot in range(self.input_dim):
            out[slot * self.n_symbols + codes[:, slot], np.arange(n)] = 1.0
        return out / np.sqrt(self.input_dim)


FeatureMap = RffMap | OneHotMap


# ---------------------------------------------------------------------------
# construction

def sample_rff(d: int, n_features: int, sigma: float, seed: int) -> RffMap:
    """Draw a frozen feature map; deterministic in ``seed``."""
    if n_features < 1:
        raise ValueError("need at least one feature")
    if sigma <= 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    freqs = rng.normal(0.0, 1.0 / sigma, size=(n_features, d))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_features)
    return RffMap(frequencies=freqs, phases=phases, sigma=float(sigma), seed=int(seed))


def median_bandwidth(sequences) -> float:
    """Median distance between consecutive observations across sequences.

    Raises if fewer than two consecutive pairs exist or the median is zero
    (caller must then supply a bandwidth explicitly).
    """
    dists = []
    for seq in sequences:
        seq = np.atleast_2d(np.asarray(seq, dtype=float))
        if seq.shape[0] >= 2:
            dists.append(np.linalg.norm(np.diff(seq, axis=0), axis=1))
    if not dists:
        raise ValueError("need at least one consecutive observation pair")
    med = float(np.median(np.concatenate(dists)))
    if med <= 0.0:
        raise ValueError("median consecutive distance is zero; supply a bandwidth")
    return med


# ---------------------------------------------------------------------------
# embeddings

def embed(fmap: FeatureMap, x: np.ndarray) -> np.ndarray:
    return fmap.embed(x)


def embed_many(fmap: FeatureMap, xs: np.ndarray) -> np.ndarray:
    return fmap.embed_many(xs)


def density_feature(fmap: FeatureMap, x: np.ndarray) -> np.ndarray:
    """vec(phi phi^dag): a vectorized rank-1 density with unit trace."""
    phi = fmap.embed(x)
    return np.kron(phi.conj(), phi)


def density_features(features: np.ndarray) -> np.ndarray:
    """Lift feature columns to vectorized rank-1 density columns."""
    return np.einsum("in,jn->ijn", features.conj(), features).reshape(
        features.shape[0] ** 2, features.shape[1]
    )


def mean_map(features: np.ndarray) -> np.ndarray:
    """Average of the vectorized pure states built from feature columns.

    Equals vec( (1/n) Phi Phi^dag ); unvectorized it is a valid density
    with the state probabilities on its diagonal.
    """
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[1] == 0:
        raise ValueError("expected a nonempty matrix of feature columns")
    n = features.shape[1]
    return vectorize(features @ features.conj().T / n)


def cross_covariance(vd_out: np.ndarray, vd_in: np.ndarray) -> np.ndarray:
    """Empirical joint embedding (1/n) sum_i vd_out_i vd_in_i^dag.

    Inputs are matrices whose columns are vectorized densities; the result
    is the cross matrix mapping input-side embeddings to output-side ones.
    """
    vd_out = np.asarray(vd_out)
    vd_in = np.asarray(vd_in)
    if vd_out.shape[1] != vd_in.shape[1]:
        raise ValueError(
            f"sample counts differ: {vd_out.shape[1]} vs {vd_in.shape[1]}"
        )
    return vd_out @ vd_in.conj().T / vd_in.shape[1]


def gaussian_kernel(x: np.ndarray, y: np.ndarray, sigma: float) -> float:
    """Exact Gaussian kernel, the oracle the feature maps approximate."""
    d = np.asarray(x, dtype=float).ravel() - np.asarray(y, dtype=float).ravel()
    return float(np.exp(-(d @ d) / (2.0 * sigma ** 2)))

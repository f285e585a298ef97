"""Itakura-Saito NMF: per-source dictionary training, fixed-dictionary
mixture decomposition, and ratio-mask initial source estimates.

The cost is D(V || BG) = sum(V/(BG) - log(V/(BG)) - 1), driven down by
alternating multiplicative updates of the gains G and the dictionary B.
All matrices are floored at EPS_FLOOR after every update, and V is floored
on entry, so ratios and log terms stay finite on silent bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class NmfModel:
    """Nonnegative spectral dictionary for one source, (n_features, rank)."""

    dictionary: np.ndarray
    source_id: int

    def __post_init__(self) -> None:
        if self.source_id not in (1, 2):
            raise ValueError(f"source_id must be 1 or 2, got {self.source_id}")
        if self.dictionary.ndim != 2:
            raise ValueError("dictionary must be a 2-D matrix")
        if np.any(self.dictionary < EPS_FLOOR):
            raise ValueError("dictionary entries must be >= EPS_FLOOR")

    @property
    def n_features(self) -> int:
        return self.dictionary.shape[0]

    @property
    def rank(self) -> int:
        return self.dictionary.shape[1]


@dataclass(frozen=True)
class GainMatrix:
    """Per-frame activation weights, (rank or 2*rank, n_frames)."""

    gains: np.ndarray

    def __post_init__(self) -> None:
        if self.gains.ndim != 2:
            raise ValueError("gains must be a 2-D matrix")
        if np.any(self.gains < EPS_FLOOR):
            raise ValueError("gain entries must be >= EPS_FLOOR")


def _check_factorization_shapes(V: np.ndarray, B: np.ndarray, G: np.ndarray) -> None:
    if B.ndim != 2 or G.ndim != 2 or V.ndim != 2:
        raise ValueError("V, B, G must all be 2-D matrices")
    if B.shape[1] != G.shape[0] or V.shape != (B.shape[0], G.shape[1]):
        raise ValueError(
            f"shapes not conformable: V {V.shape}, B {B.shape}, G {G.shape}"
        )


def is_divergence(V: np.ndarray, W: np.ndarray) -> float:
    """Itakura-Saito divergence sum(V/W - log(V/W) - 1).

    W (the model, e.g. B@G) must be elementwise positive; zero entries of V
    are replaced by EPS_FLOOR so the log stays finite.
    """
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if V.shape != W.shape:
        raise ValueError(f"shape mismatch: {V.shape} vs {W.shape}")
    if np.any(W <= 0):
        raise ValueError("model matrix must be elementwise positive")
    ratio = np.maximum(V, EPS_FLOOR) / W
    return float(np.sum(ratio - np.log(ratio) - 1.0))


def update_gains(V: np.ndarray, B: np.ndarray, G: np.ndarray) -> np.ndarray:
    """One multiplicative gain update: G * [B^T(V/(BG)^2)] / [B^T(1/(BG))]."""
    V = np.asarray(V, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    _check_factorization_shapes(V, B, G)
    R = B @ G
    num = B.T @ (V / (R * R))
    den = B.T @ (1.0 / R)
    return np.maximum(G * num / den, EPS_FLOOR)


def update_dictionary(V: np.ndarray, B: np.ndarray, G: np.ndarray) -> np.ndarray:
    """One multiplicative dictionary update: B * [(V/(BG)^2)G^T] / [(1/(BG))G^T]."""
    V = np.asarray(V, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    _check_factorization_shapes(V, B, G)
    R = B @ G
    num = (V / (R * R)) @ G.T
    den = (1.0 / R) @ G.T
    return np.maximum(B * num / den, EPS_FLOOR)


def _init_gains(rng: np.random.Generator, V: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Positive random init, rescaled to the data's magnitude so the first
    # updates start near the right scale. The rescale also makes the fit
    # scale-equivariant: scaling V by c scales the init, hence every
    # multiplicative iterate, by c, leaving the ratio masks unchanged.
    G = rng.uniform(0.1, 1.1, size=(B.shape[1], V.shape[1]))
    return G * (np.mean(V) / np.mean(B @ G))


def train_dictionary(
    S_train: np.ndarray,
    rank: int,
    n_iter: int = 200,
    seed: int = 0,
    source_id: int = 1,
) -> tuple[NmfModel, np.ndarray]:
    """Factorize a training spectrogram into (dictionary, gains) by
    alternating multiplicative updates; returns the model and the
    per-iteration divergence trace (non-increasing)."""
    S = np.asarray(S_train, dtype=np.float64)
    if S.ndim != 2:
        raise ValueError("training spectrogram must be 2-D")
    if np.any(S < 0):
        raise ValueError("training spectrogram must be nonnegative")
    n_features, n_frames = S.shape
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if n_frames < rank:
        raise ValueError(f"need at least rank={rank} training frames, got {n_frames}")
    V = np.maximum(S, EPS_FLOOR)
    rng = np.random.default_rng(seed)
    B = rng.uniform(0.1, 1.1, size=(n_features, rank))
    G = _init_gains(rng, V, B)
    trace = np.empty(n_iter)
    for it in range(n_iter):
        G = update_gains(V, B, G)
        B = update_dictionary(V, B, G)
        trace[it] = is_divergence(V, B @ G)
    return NmfModel(B, source_id), trace


def _dictionary_of(model) -> np.ndarray:
    return model.dictionary if isinstance(model, NmfModel) else np.asarray(model, dtype=np.float64)


def decompose_mixture(
    Y_mag: np.ndarray,
    model1,
    model2,
    n_iter: int = 100,
    seed: int = 0,
) -> tuple[GainMatrix, np.ndarray]:
    """Fit the mixture spectrogram against the fixed concatenated
    dictionaries [B1, B2]; only the stacked gains [G1; G2] are updated."""
    Y = np.asarray(Y_mag, dtype=np.float64)
    B1, B2 = _dictionary_of(model1), _dictionary_of(model2)
    if Y.ndim != 2:
        raise ValueError("mixture magnitude must be 2-D")
    if B1.shape[0] != Y.shape[0] or B2.shape[0] != Y.shape[0]:
        raise ValueError(
            f"dictionary feature counts ({B1.shape[0]}, {B2.shape[0]}) do not "
            f"match the spectrogram ({Y.shape[0]} bins)"
        )
    B = np.hstack([B1, B2])
    V = np.maximum(Y, EPS_FLOOR)
    rng = np.random.default_rng(seed)
    G = _init_gains(rng, V, B)
    trace = np.empty(n_iter)
    for it in range(n_iter):
        G = update_gains(V, B, G)
        trace[it] = is_divergence(V, B @ G)
    return GainMatrix(G), trace


def soft_masks(model1, model2, gains: GainMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Ratio masks B_i G_i / (B1 G1 + B2 G2); masks sum to 1 elementwise.

    Where the denominator underflows the floor, silence is split evenly
    (0.5 each).
    """
    B1, B2 = _dictionary_of(model1), _dictionary_of(model2)
    G = gains.gains if isinstance(gains, GainMatrix) else np.asarray(gains, dtype=np.float64)
    r1 = B1.shape[1]
    if G.shape[0] != r1 + B2.shape[1]:
        raise ValueError(
            f"gains have {G.shape[0]} rows, expected {r1 + B2.shape[1]} "
            "(stacked per-source gains)"
        )
    P1 = B1 @ G[:r1]
    P2 = B2 @ G[r1:]
    denom = P1 + P2
    mask1 = np.where(denom > EPS_FLOOR, P1 / np.maximum(denom, EPS_FLOOR), 0.5)
    return mask1, 1.0 - mask1


def initial_estimates(
    Y_mag: np.ndarray, model1, model2, gains: GainMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Mask the mixture magnitude by the ratio masks; the two estimates
    partition the mixture (S1 + S2 == Y elementwise)."""
    mag = Y_mag.mag if hasattr(Y_mag, "mag") else np.asarray(Y_mag, dtype=np.float64)
    mask1, mask2 = soft_masks(model1, model2, gains)
    if mask1.shape != mag.shape:
        raise ValueError(
            f"gain frame count {mask1.shape[1]} does not match spectrogram "
            f"frames {mag.shape[1]}"
        )
    return mask1 * mag, mask2 * mag

"""End-to-end orchestration: train both source models, then separate
mixtures frame by frame.

Separation runs STFT -> dictionary-based initial estimates -> per-frame
energy minimization -> Wiener-style masking of the original mixture
magnitude -> overlap-add synthesis with the mixture phase.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from unmix.config import RunConfig
from unmix.dnn import DnnModel, pretrain_rbm_stack, train_supervised
from unmix.energymin import (
    FrameProblem,
    FrameSolution,
    center_frame,
    solve_frame,
)
from unmix.nmf import NmfModel, decompose_mixture, initial_estimates, soft_masks, train_dictionary
from unmix.signal import Spectrogram, istft, normalize_frame, stack_frames, stft

_MASK_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainedModels:
    nmf1: NmfModel
    nmf2: NmfModel
    dnn: DnnModel | None


@dataclass(frozen=True)
class SeparationResult:
    """Everything the separation stage produces for one mixture."""

    s1_hat: Spectrogram
    s2_hat: Spectrogram
    masks: tuple[np.ndarray, np.ndarray]
    gains: tuple[np.ndarray, np.ndarray]
    energy_traces: np.ndarray | None  # (n_frames, 2) initial/final totals
    skipped: np.ndarray  # silent frames, excluded from the solver
    audio1: np.ndarray
    audio2: np.ndarray


def _normalized_columns(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=0)
    keep = norms > 0
    return mat[:, keep] / norms[keep]


def build_frame_dataset(
    spec1: Spectrogram, spec2: Spectrogram, n_stack: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked, L2-normalized magnitude frames from both training sources,
    with one-hot labels (source 1 -> (1,0), source 2 -> (0,1)). Silent
    frames are dropped."""
    X1 = _normalized_columns(stack_frames(spec1, n_stack))
    X2 = _normalized_columns(stack_frames(spec2, n_stack))
    X = np.hstack([X1, X2])
    labels = np.zeros((2, X.shape[1]))
    labels[0, : X1.shape[1]] = 1.0
    labels[1, X1.shape[1] :] = 1.0
    return X, labels


def train_dnn_classifier(
    spec1: Spectrogram, spec2: Spectrogram, cfg: RunConfig
) -> tuple[DnnModel, list[float]]:
    """RBM-pretrain and fine-tune the joint classifier on labeled frames."""
    X, labels = build_frame_dataset(spec1, spec2, cfg.dnn.frames)
    layer_sizes = [X.shape[0], *cfg.dnn.resolved_hidden_sizes(), 2]
    train_cfg = cfg.dnn.train_config()
    init = pretrain_rbm_stack(X, layer_sizes, train_cfg)
    return train_supervised(init, X, labels, train_cfg)


def train_all(
    source1_audio: np.ndarray, source2_audio: np.ndarray, cfg: RunConfig
) -> TrainedModels:
    """Train both dictionaries and the joint classifier from raw audio."""
    spec1 = stft(source1_audio, cfg.stft)
    spec2 = stft(source2_audio, cfg.stft)
    nmf1, _ = train_dictionary(
        spec1.mag, cfg.nmf.rank, cfg.nmf.train_iters, seed=cfg.nmf.seed, source_id=1
    )
    nmf2, _ = train_dictionary(
        spec2.mag, cfg.nmf.rank, cfg.nmf.train_iters, seed=cfg.nmf.seed + 1, source_id=2
    )
    model, _ = train_dnn_classifier(spec1, spec2, cfg)
    return TrainedModels(nmf1, nmf2, model)


def initialize_frame(
    y_col: np.ndarray,
    s_init1_col: np.ndarray,
    s_init2_col: np.ndarray,
    lam: float = 5.0,
    beta: float = 3.0,
) -> FrameProblem:
    """Frame unknowns from the dictionary-based estimates.

    Estimates are L2-normalized; each gain starts at that estimate's norm
    over the mixture norm, and y is normalized by its own norm, so when the
    estimates partition the mixture the reconstruction residual starts at
    zero. A silent mixture frame comes back as the all-zero problem, which
    the solver skips.
    """
    y = np.asarray(y_col, dtype=np.float64)
    norm_y = float(np.linalg.norm(y))
    x1, norm1 = normalize_frame(s_init1_col)
    x2, norm2 = normalize_frame(s_init2_col)
    if norm_y == 0.0:
        return FrameProblem(
            y=np.zeros_like(y), x1=np.zeros_like(x1), x2=np.zeros_like(x2),
            u=0.0, v=0.0, lam=lam, beta=beta,
        )
    return FrameProblem(
        y=y / norm_y, x1=x1, x2=x2, u=norm1 / norm_y, v=norm2 / norm_y,
        lam=lam, beta=beta,
    )


def wiener_masks(
    x1: np.ndarray, x2: np.ndarray, u: float, v: float
) -> tuple[np.ndarray, np.ndarray]:
    """Masks from the squared scaled estimates: (u x1)^2 / ((u x1)^2 + (v x2)^2).

    Bins where both squared estimates underflow split evenly; the two masks
    always sum to 1.
    """
    p1 = np.square(u * np.asarray(x1, dtype=np.float64))
    p2 = np.square(v * np.asarray(x2, dtype=np.float64))
    denom = p1 + p2
    mask1 = np.where(denom > _MASK_FLOOR, p1 / np.maximum(denom, _MASK_FLOOR), 0.5)
    return mask1, 1.0 - mask1


def wiener_reconstruct(
    x1: np.ndarray, x2: np.ndarray, u: float, v: float, y_col: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Apply the squared-estimate masks to the (unnormalized) mixture column."""
    mask1, mask2 = wiener_masks(x1, x2, u, v)
    y = np.asarray(y_col, dtype=np.float64)
    return mask1 * y, mask2 * y


def separate(
    mix_audio: np.ndarray,
    models: TrainedModels,
    cfg: RunConfig,
    nmf_only: bool = False,
) -> SeparationResult:
    """Separate one mixture into two sources.

    With nmf_only=True the ratio-mask estimates are returned directly
    (no classifier, no per-frame solve) -- the baseline the full method is
    measured against.
    """
    audio = np.asarray(mix_audio, dtype=np.float64)
    mixture = stft(audio, cfg.stft)
    n_bins = mixture.mag.shape[0]
    n_stack = cfg.dnn.frames
    if models.nmf1.n_features != n_bins or models.nmf2.n_features != n_bins:
        raise ValueError(
            f"dictionary feature count ({models.nmf1.n_features}, "
            f"{models.nmf2.n_features}) does not match n_bins={n_bins}"
        )
    if not nmf_only:
        if models.dnn is None:
            raise ValueError("no classifier model supplied")
        if models.dnn.input_dim != n_stack * n_bins:
            raise ValueError(
                f"classifier expects {models.dnn.input_dim} inputs but the "
                f"configuration provides {n_stack}*{n_bins}"
            )

    gains, _ = decompose_mixture(
        mixture.mag, models.nmf1, models.nmf2, cfg.nmf.separate_iters, seed=cfg.nmf.seed
    )
    s_init1, s_init2 = initial_estimates(mixture.mag, models.nmf1, models.nmf2, gains)
    n_frames = mixture.n_frames
    col_norms = np.linalg.norm(mixture.mag, axis=0)
    skipped = col_norms == 0.0

    if nmf_only:
        mask1, mask2 = soft_masks(models.nmf1, models.nmf2, gains)
        safe = np.where(col_norms > 0.0, col_norms, 1.0)
        gain_u = np.where(skipped, 0.0, np.linalg.norm(s_init1, axis=0) / safe)
        gain_v = np.where(skipped, 0.0, np.linalg.norm(s_init2, axis=0) / safe)
        traces = None
    else:
        stacked1 = stack_frames(s_init1, n_stack)
        stacked2 = stack_frames(s_init2, n_stack)
        solver_cfg = cfg.energy.solver_config()

        def solve_one(t: int) -> FrameSolution:
            prob = initialize_frame(
                mixture.mag[:, t], stacked1[:, t], stacked2[:, t],
                cfg.energy.lam, cfg.energy.beta,
            )
            return solve_frame(models.dnn, prob, solver_cfg)

        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                solutions = list(pool.map(solve_one, range(n_frames)))
        else:
            solutions = [solve_one(t) for t in range(n_frames)]

        mask1 = np.empty_like(mixture.mag)
        mask2 = np.empty_like(mixture.mag)
        gain_u = np.empty(n_frames)
        gain_v = np.empty(n_frames)
        traces = np.zeros((n_frames, 2))
        for t, sol in enumerate(solutions):
            prob = sol.problem
            m1, m2 = wiener_masks(
                center_frame(prob.x1, n_bins), center_frame(prob.x2, n_bins),
                prob.u, prob.v,
            )
            mask1[:, t] = m1
            mask2[:, t] = m2
            gain_u[t] = prob.u
            gain_v[t] = prob.v
            if not sol.skipped:
                traces[t] = (sol.initial.total, sol.final.total)

    s1_mag = mask1 * mixture.mag
    s2_mag = mask2 * mixture.mag
    s1_hat = Spectrogram(s1_mag, mixture.phase, cfg.stft)
    s2_hat = Spectrogram(s2_mag, mixture.phase, cfg.stft)

    def _resynth(spec: Spectrogram) -> np.ndarray:
        out = istft(spec)[: audio.size]
        # frame grid may stop short of the last samples; keep lengths equal
        return np.pad(out, (0, audio.size - out.size))

    return SeparationResult(
        s1_hat=s1_hat,
        s2_hat=s2_hat,
        masks=(mask1, mask2),
        gains=(gain_u, gain_v),
        energy_traces=traces,
        skipped=skipped,
        audio1=_resynth(s1_hat),
        audio2=_resynth(s2_hat),
    )

"""Two-source single-channel audio separation.

Training builds, per source, a nonnegative spectral dictionary
(Itakura-Saito NMF) and, jointly, a two-output sigmoid classifier over
normalized magnitude frames. Separation decomposes the mixture against
the fixed dictionaries for initial estimates, refines every frame by
minimizing a classifier-fitness + reconstruction + nonnegativity
objective, and rebuilds waveforms through squared-estimate masks and the
mixture phase.
"""

from unmix.config import DnnSettings, EnergySettings, NmfSettings, RunConfig, load_config
from unmix.dnn import DnnModel, TrainConfig, forward, input_gradient
from unmix.energymin import (
    EnergyBreakdown,
    FrameProblem,
    FrameSolution,
    SolverConfig,
    solve_frame,
    total_energy,
    total_gradient,
)
from unmix.metrics import EvalReport, evaluate_separation, mix_at_smr, sdr, sir, snr
from unmix.nmf import GainMatrix, NmfModel, decompose_mixture, initial_estimates, train_dictionary
from unmix.pipeline import SeparationResult, TrainedModels, separate, train_all
from unmix.signal import Spectrogram, StftConfig, istft, load_wav, save_wav, stft

__version__ = "0.1.0"

__all__ = [
    "DnnModel",
    "DnnSettings",
    "EnergyBreakdown",
    "EnergySettings",
    "EvalReport",
    "FrameProblem",
    "FrameSolution",
    "GainMatrix",
    "NmfModel",
    "NmfSettings",
    "RunConfig",
    "SeparationResult",
    "SolverConfig",
    "Spectrogram",
    "StftConfig",
    "TrainConfig",
    "TrainedModels",
    "decompose_mixture",
    "evaluate_separation",
    "forward",
    "initial_estimates",
    "input_gradient",
    "istft",
    "load_config",
    "load_wav",
    "mix_at_smr",
    "save_wav",
    "sdr",
    "separate",
    "sir",
    "snr",
    "solve_frame",
    "stft",
    "total_energy",
    "total_gradient",
    "train_all",
    "train_dictionary",
]

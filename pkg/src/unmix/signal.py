"""STFT analysis/synthesis, frame utilities, and WAV I/O.

Spectra are stored as nonnegative magnitude matrices of shape
(n_bins, n_frames) with the phase kept alongside, so waveforms can be
resynthesized after the magnitudes have been modified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

# Overlap-add denominator floor; avoids division by ~0 at the outer edges.
_OLA_FLOOR = 1e-12


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters. Hamming window; hop < window_len <= fft_len."""

    window_len: int = 480
    hop: int = 192
    fft_len: int = 512
    sample_rate: int = 16000

    def __post_init__(self) -> None:
        for name in ("window_len", "hop", "fft_len", "sample_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.hop < self.window_len <= self.fft_len:
            raise ValueError(
                "need hop < window_len <= fft_len, got "
                f"hop={self.hop} window_len={self.window_len} fft_len={self.fft_len}"
            )

    @property
    def n_bins(self) -> int:
        return self.fft_len // 2 + 1

    def window(self) -> np.ndarray:
        return np.hamming(self.window_len)

    def n_frames(self, n_samples: int) -> int:
        """Frame count for a signal of the given length.

        Signals shorter than one window are zero-padded into a single frame;
        otherwise frame t covers samples [t*hop, t*hop + window_len).
        """
        if n_samples <= 0:
            raise ValueError("signal must be non-empty")
        if n_samples < self.window_len:
            return 1
        return (n_samples - self.window_len) // self.hop + 1


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude/phase pair sharing one shape (n_bins, n_frames)."""

    mag: np.ndarray
    phase: np.ndarray
    config: StftConfig

    def __post_init__(self) -> None:
        if self.mag.ndim != 2:
            raise ValueError("mag must be a 2-D matrix (n_bins, n_frames)")
        if self.mag.shape != self.phase.shape:
            raise ValueError(
                f"mag {self.mag.shape} and phase {self.phase.shape} differ in shape"
            )
        if self.mag.shape[0] != self.config.n_bins:
            raise ValueError(
                f"expected {self.config.n_bins} frequency bins, got {self.mag.shape[0]}"
            )
        if np.any(self.mag < 0):
            raise ValueError("magnitudes must be nonnegative")

    @property
    def n_frames(self) -> int:
        return self.mag.shape[1]


def stft(audio: np.ndarray, cfg: StftConfig = StftConfig()) -> Spectrogram:
    """Magnitude/phase STFT of a mono signal.

    Frame t covers samples [t*hop, t*hop + window_len); only the first
    n_bins = fft_len/2 + 1 frequency points are kept (real input).
    """
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1:
        raise ValueError("expected a 1-D mono sample sequence")
    if audio.size == 0:
        raise ValueError("audio is empty")
    n_frames = cfg.n_frames(audio.size)
    needed = (n_frames - 1) * cfg.hop + cfg.window_len
    if needed > audio.size:
        audio = np.pad(audio, (0, needed - audio.size))
    starts = np.arange(n_frames) * cfg.hop
    frames = np.lib.stride_tricks.sliding_window_view(audio, cfg.window_len)[starts].T
    spec = np.fft.rfft(frames * cfg.window()[:, None], n=cfg.fft_len, axis=0)
    return Spectrogram(np.abs(spec), np.angle(spec), cfg)


def istft(spec: Spectrogram) -> np.ndarray:
    """Weighted overlap-add synthesis; inverse of stft on the interior.

    The analysis window is reused for synthesis and the output is
    normalized by the summed squared window, so istft(stft(x)) matches x
    away from the first/last window_len samples.
    """
    cfg = spec.config
    win = cfg.window()
    frames = np.fft.irfft(spec.mag * np.exp(1j * spec.phase), n=cfg.fft_len, axis=0)
    frames = frames[: cfg.window_len]
    out = np.zeros((spec.n_frames - 1) * cfg.hop + cfg.window_len)
    wsum = np.zeros_like(out)
    wsq = win * win
    for t in range(spec.n_frames):
        lo = t * cfg.hop
        out[lo : lo + cfg.window_len] += frames[:, t] * win
        wsum[lo : lo + cfg.window_len] += wsq
    return out / np.maximum(wsum, _OLA_FLOOR)


def normalize_frame(col: np.ndarray) -> tuple[np.ndarray, float]:
    """Return (col / ||col||_2, ||col||_2); the all-zero column maps to
    (zero vector, 0) so silent frames can be skipped downstream."""
    col = np.asarray(col, dtype=np.float64)
    if np.any(col < 0):
        raise ValueError("expected a nonnegative column")
    norm = float(np.linalg.norm(col))
    if norm == 0.0:
        return np.zeros_like(col), 0.0
    return col / norm, norm


def stack_frames(spec: Spectrogram | np.ndarray, n_stack: int) -> np.ndarray:
    """Vertically stack each magnitude column with its n_stack-1 neighbors.

    Column t becomes concat(col[t-h] ... col[t+h]) for h = n_stack // 2;
    out-of-range neighbors replicate the edge column. n_stack must be odd.
    """
    mag = spec.mag if isinstance(spec, Spectrogram) else np.asarray(spec, dtype=np.float64)
    if n_stack < 1 or n_stack % 2 == 0:
        raise ValueError(f"n_stack must be odd and >= 1, got {n_stack}")
    if n_stack == 1:
        return mag.copy()
    half = n_stack // 2
    t = np.arange(mag.shape[1])
    blocks = [
        mag[:, np.clip(t + off, 0, mag.shape[1] - 1)] for off in range(-half, half + 1)
    ]
    return np.vstack(blocks)


def load_wav(path, expected_rate: int | None = None) -> tuple[np.ndarray, int]:
    """Read a 16-bit PCM mono WAV as float64 samples in [-1, 1).

    No resampling: if expected_rate is given and the file's rate differs,
    this is an error.
    """
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype != np.int16:
        raise ValueError(f"{path}: expected 16-bit PCM samples, got dtype {data.dtype}")
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(
            f"{path}: sample rate {rate} Hz does not match configured "
            f"{expected_rate} Hz (resampling is not supported)"
        )
    return data.astype(np.float64) / 32768.0, rate


def save_wav(path, audio: np.ndarray, rate: int) -> None:
    """Write float samples as 16-bit PCM mono, clipping to [-1, 1].

    Writes to a temp file and renames, so a failed run leaves no partial file.
    """
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1:
        raise ValueError("expected a 1-D mono sample sequence")
    pcm = np.clip(np.round(audio * 32768.0), -32768, 32767).astype(np.int16)
    import os

    tmp = f"{path}.part"
    wavfile.write(tmp, rate, pcm)
    os.replace(tmp, path)

"""Projection-based separation quality metrics and level-matched mixing.

SDR and SIR follow the simple projection definitions: the target is the
projection of the estimate onto the reference, and ratios are reported in
dB, capped at +/-300 dB so degenerate cases stay finite.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

DB_CAP = 300.0

CSV_COLUMNS = ("utterance", "smr_db", "method", "sdr", "sir", "snr")


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D signal")
    return x


def project(estimate, reference) -> np.ndarray:
    """Projection of the estimate onto the reference: (<e,r>/<r,r>) r."""
    e = _as_signal(estimate)
    r = _as_signal(reference)
    if e.shape != r.shape:
        raise ValueError(f"length mismatch: {e.size} vs {r.size}")
    rr = float(r @ r)
    if rr == 0.0:
        raise ValueError("reference signal is all zeros")
    return (float(e @ r) / rr) * r


def _ratio_db(signal_energy: float, error_energy: float) -> float:
    if signal_energy <= 0.0:
        return -DB_CAP
    if error_energy <= 0.0:
        return DB_CAP
    return float(np.clip(10.0 * np.log10(signal_energy / error_energy), -DB_CAP, DB_CAP))


def sdr(estimate, reference) -> float:
    """Target energy over all error energy in the estimate, in dB."""
    e = _as_signal(estimate)
    target = project(e, reference)
    err = e - target
    return _ratio_db(float(target @ target), float(err @ err))


def sir(estimate, reference, interference) -> float:
    """Target energy over the error component explained by the interfering
    source, in dB."""
    e = _as_signal(estimate)
    target = project(e, reference)
    interf_part = project(e - target, interference)
    return _ratio_db(float(target @ target), float(interf_part @ interf_part))


def snr(estimate, reference) -> float:
    """Reference energy over the residual ||reference - estimate||^2, in dB."""
    e = _as_signal(estimate)
    r = _as_signal(reference)
    if e.shape != r.shape:
        raise ValueError(f"length mismatch: {e.size} vs {r.size}")
    rr = float(r @ r)
    if rr == 0.0:
        raise ValueError("reference signal is all zeros")
    err = r - e
    return _ratio_db(rr, float(err @ err))


def rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(_as_signal(x)))))


def mix_at_smr(speech, music, smr_db: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale the second signal so the RMS level ratio equals smr_db, then sum.

    Signals are truncated to the shorter length. Returns (mixture,
    speech reference, scaled music reference); the references sum exactly
    to the mixture.
    """
    s = _as_signal(speech)
    m = _as_signal(music)
    n = min(s.size, m.size)
    s, m = s[:n], m[:n]
    rms_s, rms_m = rms(s), rms(m)
    if rms_s == 0.0 or rms_m == 0.0:
        raise ValueError("cannot mix a zero-energy signal")
    m = m * (rms_s / (rms_m * 10.0 ** (smr_db / 20.0)))
    return s + m, s, m


@dataclass(frozen=True)
class EvalReport:
    """Per-source metrics for one separated mixture."""

    smr_db: float
    sdr_db: tuple[float, float]
    sir_db: tuple[float, float]
    snr_db: tuple[float, float]


def evaluate_separation(est1, est2, ref1, ref2, smr_db: float = 0.0) -> EvalReport:
    """SDR/SIR/SNR for both estimated sources against their references."""
    return EvalReport(
        smr_db=smr_db,
        sdr_db=(sdr(est1, ref1), sdr(est2, ref2)),
        sir_db=(sir(est1, ref1, ref2), sir(est2, ref2, ref1)),
        snr_db=(snr(est1, ref1), snr(est2, ref2)),
    )


def write_eval_csv(path, rows: list[dict]) -> None:
    """Write result rows with the fixed column order; atomic on success."""
    tmp = f"{path}.part"
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(row[k]) for k in CSV_COLUMNS})
    os.replace(tmp, path)


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)

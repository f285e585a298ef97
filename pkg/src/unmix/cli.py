"""Batch command-line interface: train-nmf, train-dnn, separate, evaluate, mix."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from unmix import container, metrics
from unmix.config import RunConfig, default_config_text, load_config
from unmix.nmf import train_dictionary
from unmix.pipeline import TrainedModels, separate, train_dnn_classifier
from unmix.signal import load_wav, save_wav, stft


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file (defaults used otherwise)")
    parser.add_argument("--seed", type=int, help="override all stage seeds")
    parser.add_argument("--frames", type=int, help="stacked neighbor frames fed to the classifier (odd)")
    parser.add_argument("--threads", type=int, help="parallel frame solves during separation")


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(
            cfg,
            nmf=replace(cfg.nmf, seed=args.seed),
            dnn=replace(cfg.dnn, seed=args.seed),
        )
    if args.frames is not None:
        cfg = replace(cfg, dnn=replace(cfg.dnn, frames=args.frames))
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    return cfg


def _load_concatenated(paths, cfg: RunConfig) -> np.ndarray:
    return np.concatenate([load_wav(p, cfg.stft.sample_rate)[0] for p in paths])


def _cmd_train_nmf(args) -> int:
    cfg = _resolve_config(args)
    audio = _load_concatenated(args.wavs, cfg)
    spec = stft(audio, cfg.stft)
    model, trace = train_dictionary(
        spec.mag, cfg.nmf.rank, cfg.nmf.train_iters,
        seed=cfg.nmf.seed, source_id=args.source_id,
    )
    container.save_nmf(args.out, model)
    print(
        f"trained source-{args.source_id} dictionary: rank {model.rank}, "
        f"{spec.n_frames} frames, divergence {trace[0]:.6g} -> {trace[-1]:.6g} "
        f"over {trace.size} iterations"
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_train_dnn(args) -> int:
    cfg = _resolve_config(args)
    spec1 = stft(_load_concatenated(args.source1, cfg), cfg.stft)
    spec2 = stft(_load_concatenated(args.source2, cfg), cfg.stft)
    model, losses = train_dnn_classifier(spec1, spec2, cfg)
    container.save_dnn(args.out, model)
    print(
        f"trained classifier {model.layer_sizes}: loss {losses[0]:.6g} -> "
        f"{losses[-1]:.6g} over {len(losses)} epochs"
    )
    print(f"wrote {args.out}")
    return 0


def _write_report(path, result, nmf_only: bool) -> None:
    lines = [
        f"# frames={result.masks[0].shape[1]} n_bins={result.masks[0].shape[0]} "
        f"nmf_only={int(nmf_only)}"
    ]
    mask1 = result.masks[0]
    for t in range(mask1.shape[1]):
        if result.energy_traces is None:
            e_init = e_final = 0.0
        else:
            e_init, e_final = result.energy_traces[t]
        lines.append(
            f"frame={t} skipped={int(result.skipped[t])} "
            f"u={result.gains[0][t]:.6g} v={result.gains[1][t]:.6g} "
            f"energy_init={e_init:.6g} energy_final={e_final:.6g} "
            f"mask1_mean={float(np.mean(mask1[:, t])):.6g}"
        )
    tmp = f"{path}.part"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _cmd_separate(args) -> int:
    cfg = _resolve_config(args)
    if not args.nmf_only and not args.dnn:
        raise ValueError("--dnn is required unless --nmf-only is given")
    audio, _ = load_wav(args.mix_wav, cfg.stft.sample_rate)
    models = TrainedModels(
        nmf1=container.load_nmf(args.nmf1),
        nmf2=container.load_nmf(args.nmf2),
        dnn=container.load_dnn(args.dnn) if args.dnn else None,
    )
    result = separate(audio, models, cfg, nmf_only=args.nmf_only)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.mix_wav).stem
    out1 = out_dir / f"{stem}_source1.wav"
    out2 = out_dir / f"{stem}_source2.wav"
    report = out_dir / f"{stem}_report.txt"
    save_wav(out1, result.audio1, cfg.stft.sample_rate)
    save_wav(out2, result.audio2, cfg.stft.sample_rate)
    _write_report(report, result, args.nmf_only)
    print(f"wrote {out1}")
    print(f"wrote {out2}")
    print(f"wrote {report}")
    return 0


def _cmd_evaluate(args) -> int:
    if len(args.est) != 2 or len(args.ref) != 2:
        raise ValueError("evaluate expects exactly two estimated and two reference files")
    est = [load_wav(p)[0] for p in args.est]
    ref = [load_wav(p)[0] for p in args.ref]
    report = metrics.evaluate_separation(est[0], est[1], ref[0], ref[1], args.smr_db)
    rows = []
    for i in range(2):
        rows.append(
            {
                "utterance": Path(args.est[i]).stem,
                "smr_db": args.smr_db,
                "method": args.method,
                "sdr": report.sdr_db[i],
                "sir": report.sir_db[i],
                "snr": report.snr_db[i],
            }
        )
    rows.append(
        {
            "utterance": "mean",
            "smr_db": args.smr_db,
            "method": args.method,
            "sdr": float(np.mean(report.sdr_db)),
            "sir": float(np.mean(report.sir_db)),
            "snr": float(np.mean(report.snr_db)),
        }
    )
    metrics.write_eval_csv(args.out, rows)
    for row in rows:
        print(
            f"{row['utterance']}: SDR {row['sdr']:.2f} dB, "
            f"SIR {row['sir']:.2f} dB, SNR {row['snr']:.2f} dB"
        )
    print(f"wrote {args.out}")
    return 0


def _cmd_mix(args) -> int:
    speech, rate_s = load_wav(args.speech)
    music, rate_m = load_wav(args.music)
    if rate_s != rate_m:
        raise ValueError(f"sample rates differ: {rate_s} vs {rate_m}")
    mixture, speech_ref, music_ref = metrics.mix_at_smr(speech, music, args.smr_db)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, sig in (
        ("mixture.wav", mixture),
        ("speech_ref.wav", speech_ref),
        ("music_ref.wav", music_ref),
    ):
        save_wav(out_dir / name, sig, rate_s)
        print(f"wrote {out_dir / name}")
    return 0


def _cmd_init_config(args) -> int:
    tmp = f"{args.out}.part"
    with open(tmp, "w") as fh:
        fh.write(default_config_text())
    os.replace(tmp, args.out)
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unmix",
        description="Two-source single-channel separation: dictionary + classifier training and energy-minimization decoding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-nmf", help="train one source's spectral dictionary")
    p.add_argument("wavs", nargs="+", help="training WAV files for this source")
    p.add_argument("--source-id", type=int, choices=(1, 2), required=True)
    p.add_argument("--out", required=True, help="output model file")
    _add_common(p)
    p.set_defaults(func=_cmd_train_nmf)

    p = sub.add_parser("train-dnn", help="train the joint source classifier")
    p.add_argument("--source1", nargs="+", required=True, help="source-1 training WAVs")
    p.add_argument("--source2", nargs="+", required=True, help="source-2 training WAVs")
    p.add_argument("--out", required=True, help="output model file")
    _add_common(p)
    p.set_defaults(func=_cmd_train_dnn)

    p = sub.add_parser("separate", help="separate a two-source mixture")
    p.add_argument("mix_wav", help="mixture WAV file")
    p.add_argument("--nmf1", required=True, help="source-1 dictionary model")
    p.add_argument("--nmf2", required=True, help="source-2 dictionary model")
    p.add_argument("--dnn", help="classifier model (omit with --nmf-only)")
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--nmf-only", action="store_true",
        help="skip the per-frame solver and emit the ratio-mask baseline",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_separate)

    p = sub.add_parser("evaluate", help="score separated sources against references")
    p.add_argument("--est", nargs="+", required=True, help="estimated source WAVs (2)")
    p.add_argument("--ref", nargs="+", required=True, help="reference source WAVs (2)")
    p.add_argument("--smr-db", type=float, default=0.0, help="mixing condition label")
    p.add_argument("--method", default="dnn", help="method label for the CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("mix", help="mix two signals at a given level ratio")
    p.add_argument("--speech", required=True)
    p.add_argument("--music", required=True)
    p.add_argument("--smr-db", type=float, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("init-config", help="write a config template with all defaults")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_init_config)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

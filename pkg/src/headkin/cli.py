"""Command-line front end: ``headkin <subcommand>``.

One JSON run configuration drives every subcommand; the global flags
``--seed``, ``--workers`` and ``--out`` override the file. Every output is
either a JSON document embedding the full configuration or a CSV table with
a ``.meta.json`` sidecar that does.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from headkin import __version__
from headkin.config import RunConfig, load_config
from headkin.errors import ConfigError, HeadkinError
from headkin.evaluation import (
    ablate_chunk_length,
    ablate_dims,
    fit_run_model,
    load_dataset,
    recording_features,
    run_protocol,
    write_table,
)
from headkin.features import ChunkFeatures, write_feature_table
from headkin.kineme import KinemeModel, reconstruct_all
from headkin.synth import SynthConfig, gen_benchmark

log = logging.getLogger("headkin")

BENCHMARK_DIR = "benchmark"
MODEL_FILE = "kinemes.json"


def _write_meta(path: Path, cfg: RunConfig, command: str, **extra):
    meta = {"format": "headkin", "version": 1, "kind": "metadata", "command": command,
            "seed": cfg.seed, "config": cfg.to_dict(), **extra}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=1) + "\n")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _with_dataset(cfg: RunConfig) -> RunConfig:
    """Fall back to the benchmark written by ``synth`` when no manifest is set."""
    if cfg.dataset.manifest:
        return cfg
    default = Path(cfg.out) / BENCHMARK_DIR / "manifest.json"
    if not default.exists():
        raise ConfigError("dataset.manifest is not set and no synthetic benchmark exists "
                          f"at {default} (run `headkin synth` first)")
    return cfg.with_overrides(**{"dataset.manifest": str(default)})


def _training_recordings(dataset):
    """Recordings of the ``train`` split when splits exist, else all of them."""
    train = [r for r in dataset.recordings if r.split == "train"]
    return train or list(dataset.recordings)


def _model_path(cfg: RunConfig) -> Path:
    return Path(cfg.kineme.model) if cfg.kineme.model else Path(cfg.out) / MODEL_FILE


# ---------------------------------------------------------------- commands

def cmd_synth(cfg: RunConfig, args=None) -> Path:
    params = dict(cfg.synth)
    params.setdefault("seed", cfg.seed)
    scfg = SynthConfig.from_dict(params)
    target = _out_dir(cfg) / BENCHMARK_DIR
    manifest, _ = gen_benchmark(scfg, target)
    _write_meta(target / "manifest.json", cfg, "synth", synth=scfg.to_dict(),
                n_recordings=len(manifest.records))
    log.info("wrote %d recordings to %s", len(manifest.records), target)
    return target / "manifest.json"


def _fit(cfg: RunConfig, dataset):
    model, dset = fit_run_model(dataset, cfg, _training_recordings(dataset), cfg.seed)
    model = dataclasses.replace(model, config={**model.config, "run_config": cfg.to_dict(),
                                               "seed": cfg.seed, "mode": cfg.mode})
    return model, dset


def cmd_fit_kinemes(cfg: RunConfig, args=None) -> Path:
    cfg = _with_dataset(cfg)
    dataset = load_dataset(cfg)
    model, _ = _fit(cfg, dataset)
    _out_dir(cfg)
    path = _model_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    model.save(path)
    log.info("kineme model (K=%d, d=%d) written to %s", model.K, model.dim, path)
    return path


def cmd_featurize(cfg: RunConfig, args=None) -> Path:
    cfg = _with_dataset(cfg)
    dataset = load_dataset(cfg)
    model, dset = _fit(cfg, dataset)
    if cfg.kineme.model and cfg.mode == "HCKD":
        # a persisted model fully determines HCKD features
        model = KinemeModel.load(cfg.kineme.model)
    seg = cfg.seg_config()
    feats = []
    for rec in dataset.recordings:
        idx, X = recording_features(rec, model, dset, cfg.mode, seg)
        feats.extend(ChunkFeatures(cfg.mode, x, rec.recording_id, int(i), rec.label)
                     for i, x in zip(idx, X))
    path = _out_dir(cfg) / f"features_{cfg.mode}.csv"
    write_feature_table(feats, path, cfg.mode)
    extra = {"discriminative_ids": None}
    if dset is not None:
        extra["discriminative_ids"] = {"control": list(map(int, dset.control_ids)),
                                       "patient": list(map(int, dset.patient_ids))}
    _write_meta(path, cfg, "featurize", n_chunks=len(feats), **extra)
    log.info("%d chunk feature rows written to %s", len(feats), path)
    return path


def cmd_train_eval(cfg: RunConfig, args=None) -> list:
    cfg = _with_dataset(cfg)
    dataset = load_dataset(cfg)
    chunk, video = run_protocol(dataset, cfg)
    out = _out_dir(cfg)
    paths = []
    for rep in (chunk, video):
        p = out / f"report_{rep.level}.json"
        doc = {"format": "headkin", "version": 1, "kind": "eval_report",
               "seed": cfg.seed, **rep.to_dict()}
        p.write_text(json.dumps(doc, indent=1) + "\n")
        paths.append(p)
        m, s = rep.aggregate["f1"]
        log.info("%s-level weighted F1 %.3f +/- %.3f", rep.level, m, s)
    return paths


def cmd_ablate(cfg: RunConfig, args) -> Path:
    cfg = _with_dataset(cfg)
    dataset = load_dataset(cfg)
    out = _out_dir(cfg)
    if args.which == "chunk-length":
        rows = ablate_chunk_length(dataset, cfg)
    else:
        rows, _ = ablate_dims(dataset, cfg)
    path = out / f"ablate_{args.which}.csv"
    write_table(rows, path)
    _write_meta(path, cfg, f"ablate {args.which}")
    return path


def export_table(model: KinemeModel, path) -> np.ndarray:
    """Write K blocks of ℓ rows (kineme_id, frame, pitch, yaw, roll)."""
    traj = reconstruct_all(model)  # (K, ℓ, 3)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kineme_id", "frame", "time_s", "pitch", "yaw", "roll"])
        for k in range(traj.shape[0]):
            for t in range(traj.shape[1]):
                w.writerow([k, t, format(t / model.fps, ".17g"),
                            *(format(v, ".17g") for v in traj[k, t])])
    return traj


def cmd_export_kinemes(cfg: RunConfig, args) -> Path:
    src = Path(args.model) if args.model else _model_path(cfg)
    if not src.exists():
        raise ConfigError(f"kineme model not found: {src}")
    model = KinemeModel.load(src)
    path = _out_dir(cfg) / "kineme_trajectories.csv"
    export_table(model, path)
    _write_meta(path, cfg, "export-kinemes", model=str(src), K=model.K,
                seg_len_frames=model.seg_len_frames, fps=model.fps,
                mixture_weights=[float(w) for w in model.mixture_weights])
    return path


COMMANDS = {
    "synth": cmd_synth,
    "fit-kinemes": cmd_fit_kinemes,
    "featurize": cmd_featurize,
    "train-eval": cmd_train_eval,
    "ablate": cmd_ablate,
    "export-kinemes": cmd_export_kinemes,
}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="headkin", description="Kineme-based head-motion analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes (overrides the config)")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("synth", help="generate the synthetic benchmark")
    sub.add_parser("fit-kinemes", help="fit and persist a kineme model")
    sub.add_parser("featurize", help="write the per-chunk feature table")
    sub.add_parser("train-eval", help="run the evaluation protocol")
    a = sub.add_parser("ablate", help="chunk-length or angle-dimension ablation")
    a.add_argument("--which", choices=["chunk-length", "dims"], required=True)
    e = sub.add_parser("export-kinemes", help="export reconstructed kineme trajectories")
    e.add_argument("--model", metavar="PATH", help="kineme model (default: OUT/kinemes.json)")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {k: v for k, v in (("seed", args.seed), ("workers", args.workers), ("out", args.out))
            if v is not None}
    return cfg.with_overrides(**over) if over else cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2; map to 1
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except HeadkinError as exc:
        print(f"headkin {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"headkin {args.command}: missing file: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

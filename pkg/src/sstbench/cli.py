"""Command-line interface.

Verbs: scan, featurize, vocode, trials, fit, embed, eval-sv, eval-sc,
matrix, report.  ``matrix`` is the one-shot experiment reproduction; the
other verbs expose the individual pipeline stages.  Every verb honors
``--seed``; omitting it picks a random seed which is printed, so any run can
be replayed.  Logs are line-oriented ``key=value`` pairs.
"""

from __future__ import annotations

import argparse
import csv
import secrets
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import runner as runner_mod
from .audio import read_audio
from .corpus import Manifest, build_sv_trials, scan_corpus
from .errors import ConfigError, HarnessError
from .frontend import FeatureStore, FrontendConfig, mel_spectrogram, stft_spectrogram
from .metrics import eer_from_scores, hier_cluster, load_scores_csv, misclassification_rate
from .models import (
    EmbeddingModelRef,
    ModelState,
    adapter_embed,
    adapter_fit,
    write_labels_csv,
    write_segments_csv,
    write_segments_tensor,
)
from .scramble import draw_plan, segment_frames
from .seeds import ROLE_EVAL_DRAW, ROLE_TRAIN_DRAW, mix
from .tensorfile import read_tensor, write_tensor
from .vocoder import VocoderConfig, design_bands, vocode_corpus


def _log(**kv):
    print(" ".join(f"{k}={v}" for k, v in kv.items()))


def _resolve_seed(args) -> int:
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = secrets.randbits(48)
    _log(seed=seed)
    return seed


def _add_common(parser, jobs=False):
    parser.add_argument("--seed", type=int, default=None, help="master seed (random if omitted, always printed)")
    if jobs:
        parser.add_argument("--jobs", type=int, default=None, help="worker cap (default: cpu count)")


def _frontend_from_args(args) -> FrontendConfig:
    return FrontendConfig(
        sample_rate=args.sample_rate,
        win_length=args.win_length,
        hop_length=args.hop_length,
        n_fft=args.n_fft,
        n_mels=args.n_mels,
        fmin=args.fmin,
        fmax=args.fmax,
        normalization=args.normalization,
    )


def _add_frontend_args(parser):
    parser.add_argument("--sample-rate", type=int, default=16000, dest="sample_rate")
    parser.add_argument("--win-length", type=float, default=0.025, dest="win_length")
    parser.add_argument("--hop-length", type=float, default=0.010, dest="hop_length")
    parser.add_argument("--n-fft", type=int, default=512, dest="n_fft")
    parser.add_argument("--n-mels", type=int, default=40, dest="n_mels")
    parser.add_argument("--fmin", type=float, default=0.0)
    parser.add_argument("--fmax", type=float, default=8000.0)
    parser.add_argument("--normalization", choices=["none", "per-utterance-meanvar"],
                        default="per-utterance-meanvar")
    parser.add_argument("--feature-space", choices=["mel", "linear-stft"], default="mel",
                        dest="feature_space")


def cmd_scan(args) -> int:
    _resolve_seed(args)
    manifest = scan_corpus(args.root, args.layout, exclude_sa=args.exclude_sa)
    # The CSV resolves audio paths against its own directory; rebase when the
    # manifest is written outside the corpus root.
    out_parent = Path(args.out).resolve().parent
    if out_parent != Path(args.root).resolve():
        manifest = manifest.rebase(out_parent)
    manifest.save_csv(args.out)
    _log(event="scan", layout=args.layout, entries=len(manifest),
         speakers=len(manifest.speakers()), out=args.out)
    return 0


def cmd_featurize(args) -> int:
    _resolve_seed(args)
    manifest = Manifest.load_csv(args.manifest)
    config = _frontend_from_args(args)
    extract = mel_spectrogram if args.feature_space == "mel" else stft_spectrogram
    store = FeatureStore(hop_length=config.hop_length)

    def featurize_one(entry):
        clip = read_audio(manifest.resolve(entry))
        spec = extract(clip, config)
        spec.utterance_id = entry.utterance_id
        return spec

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for spec in pool.map(featurize_one, manifest.entries):
            store.put(spec)
    store.save_dir(args.out, config)
    _log(event="featurize", utterances=len(manifest), out=args.out)
    return 0


def cmd_vocode(args) -> int:
    seed = _resolve_seed(args)
    manifest = Manifest.load_csv(args.manifest)
    config = VocoderConfig(
        n_bands=args.bands,
        band_edges=design_bands(args.bands, args.fmin, args.fmax),
        env_cutoff=args.env_cutoff,
        filter_order=args.filter_order,
        noise_seed=seed,
    )
    derived = vocode_corpus(manifest, args.out, config, jobs=args.jobs)
    _log(event="vocode", bands=args.bands, utterances=len(derived), out=args.out)
    return 0


def cmd_trials(args) -> int:
    _resolve_seed(args)
    manifest = Manifest.load_csv(args.manifest)
    trials = build_sv_trials(manifest, args.convention)
    trials.save_text(args.out)
    _log(event="trials", convention=args.convention, count=len(trials),
         targets=trials.n_target, out=args.out)
    return 0


def _load_store(features_dir) -> FeatureStore:
    return FeatureStore.open_dir(features_dir)


def cmd_fit(args) -> int:
    seed = _resolve_seed(args)
    if args.model == "avg-baseline":
        _log(event="fit", model="avg-baseline", skipped="stateless model, nothing to fit")
        return 0
    manifest = Manifest.load_csv(args.manifest)
    store = _load_store(args.features)
    length = segment_frames(args.t, store.hop_length)
    plan = draw_plan(manifest, args.epochs, args.strategy, length,
                     mix(seed, ROLE_TRAIN_DRAW), run=args.run, split="train")
    segments = [plan.realize(rec, store.get(rec.utterance_id)) for rec in plan.records]
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    features = workdir / "segments.sstf"
    labels = workdir / "labels.csv"
    write_segments_tensor(features, segments)
    write_labels_csv(labels, segments, manifest.speaker_of)
    model = EmbeddingModelRef("external-adapter", args.adapter_cmd)
    params = dict(kv.split("=", 1) for kv in args.param or [])
    state = adapter_fit(model, features, labels, workdir, seed=seed,
                        params=params, timeout_s=args.timeout)
    _log(event="fit", segments=len(segments), model_path=state.model_path)
    return 0


def cmd_embed(args) -> int:
    seed = _resolve_seed(args)
    manifest = Manifest.load_csv(args.manifest)
    store = _load_store(args.features)
    length = segment_frames(args.t, store.hop_length)
    utterances = manifest.utterance_ids(args.split)
    plan = draw_plan(utterances, args.eval_segments, args.strategy, length,
                     mix(seed, ROLE_EVAL_DRAW), run=args.run)
    segments = [plan.realize(rec, store.get(rec.utterance_id)) for rec in plan.records]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.model == "avg-baseline":
        embedder = runner_mod.BaselineEmbedder()
        embeddings = embedder.embed(segments)
    else:
        model = EmbeddingModelRef("external-adapter", args.adapter_cmd)
        features = out_dir / "segments.sstf"
        segments_csv = out_dir / "segments.csv"
        write_segments_tensor(features, segments)
        write_segments_csv(segments_csv, segments)
        embeddings = adapter_embed(model, ModelState(args.model_path, out_dir),
                                   features, segments_csv, out_dir, timeout_s=args.timeout)
    order = [u for u in utterances if u in embeddings]
    matrix = np.stack([embeddings[u].vector for u in order]).astype(np.float32)
    write_tensor(out_dir / "embeddings.sstf", matrix)
    with open(out_dir / "ids.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "utterance_id", "speaker_id"])
        for i, u in enumerate(order):
            writer.writerow([i, u, manifest.speaker_of(u)])
    _log(event="embed", utterances=len(order), dim=matrix.shape[1], out=str(out_dir))
    return 0


def cmd_eval_sv(args) -> int:
    _resolve_seed(args)
    is_target, scores = load_scores_csv(args.scores)
    result = eer_from_scores(scores[is_target], scores[~is_target])
    _log(event="eval-sv", trials=len(scores), eer_pct=f"{100 * result.eer:.4f}",
         threshold=result.threshold)
    return 0


def cmd_eval_sc(args) -> int:
    _resolve_seed(args)
    matrix = read_tensor(args.embeddings)
    labels = []
    with open(args.ids, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            labels.append(row[2])
    k = args.k or len(set(labels))
    partition = hier_cluster(list(matrix.astype(np.float64)), k,
                             linkage=args.linkage, distance=args.distance)
    mr = misclassification_rate(partition, labels, majority=args.mr_majority)
    _log(event="eval-sc", items=len(labels), k=k, mr_pct=f"{100 * mr:.4f}")
    return 0


def cmd_matrix(args) -> int:
    overrides = dict(kv.split("=", 1) for kv in args.set or [])
    if args.seed is not None:
        overrides["master_seed"] = str(args.seed)
    try:
        cfg = runner_mod.load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        _log(event="matrix", config_error=repr(str(exc)))
        return 1
    _log(seed=cfg.master_seed)
    report = runner_mod.run_matrix(cfg)
    out_dir = args.out or cfg.out_dir
    written = runner_mod.emit_report(report, cfg.formats, out_dir)
    for fmt, path in written.items():
        _log(event="report", format=fmt, path=str(path))
    for key in report.failed_cells:
        _log(event="cell-error", cell="/".join(key), error=repr(report.cells[key].error))
    return 2 if report.failed_cells else 0


def cmd_report(args) -> int:
    _resolve_seed(args)
    report = runner_mod.load_report_csv(args.csv)
    formats = tuple(f.strip() for f in args.formats.split(","))
    written = runner_mod.emit_report(report, formats, args.out)
    for fmt, path in written.items():
        _log(event="report", format=fmt, path=str(path))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sstbench",
        description="Quantify reliance on frame-level vs temporal speaker information "
                    "by training/evaluating under time-scrambled conditions.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("scan", help="build a manifest from a corpus tree")
    p.add_argument("--root", required=True)
    p.add_argument("--layout", choices=["timit-tree", "flat-with-csv"], default="timit-tree")
    p.add_argument("--out", required=True)
    p.add_argument("--exclude-sa", action="store_true", help="drop SA1/SA2 calibration sentences")
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("featurize", help="precompute spectrograms into a cache directory")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_frontend_args(p)
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("vocode", help="noise-vocode a corpus into a mirrored tree")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bands", type=int, default=4)
    p.add_argument("--fmin", type=float, default=100.0)
    p.add_argument("--fmax", type=float, default=8000.0)
    p.add_argument("--env-cutoff", type=float, default=160.0, dest="env_cutoff")
    p.add_argument("--filter-order", type=int, default=4, dest="filter_order")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_vocode)

    p = sub.add_parser("trials", help="write the verification trial list")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--convention", choices=["ordered", "unordered"], default="ordered")
    _add_common(p)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("fit", help="train an external adapter model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True, help="featurize output directory")
    p.add_argument("--model", choices=["avg-baseline", "external-adapter"], required=True)
    p.add_argument("--adapter-cmd", default="", dest="adapter_cmd")
    p.add_argument("--workdir", default="fit-work")
    p.add_argument("--strategy", choices=["OS", "SU", "SS"], default="OS")
    p.add_argument("--t", type=float, default=1.0, help="training segment length, seconds")
    p.add_argument("--epochs", type=int, default=128)
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--timeout", type=float, default=600.0)
    p.add_argument("--param", action="append", help="adapter hyperparameter key=value")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("embed", help="extract per-utterance embeddings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=["avg-baseline", "external-adapter"], required=True)
    p.add_argument("--adapter-cmd", default="", dest="adapter_cmd")
    p.add_argument("--model-path", default="", dest="model_path")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", choices=["OS", "SU", "SS"], default="OS")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--eval-segments", type=int, default=1, dest="eval_segments")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--timeout", type=float, default=600.0)
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval-sv", help="EER from a scores CSV (enroll,test,is_target,score)")
    p.add_argument("--scores", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_eval_sv)

    p = sub.add_parser("eval-sc", help="clustering misclassification rate from embeddings")
    p.add_argument("--embeddings", required=True, help="tensor file of embedding rows")
    p.add_argument("--ids", required=True, help="ids.csv (index,utterance_id,speaker_id)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--linkage", choices=["complete", "average", "single"], default="complete")
    p.add_argument("--distance", choices=["cosine", "euclidean"], default="cosine")
    p.add_argument("--mr-majority", action="store_true", dest="mr_majority")
    _add_common(p)
    p.set_defaults(func=cmd_eval_sc)

    p = sub.add_parser("matrix", help="run the full train/test strategy matrix from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", help="override a config key, e.g. --set runs=1")
    p.add_argument("--out", default="", help="report directory (default: config out_dir)")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("report", help="re-render human-readable reports from a report CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--formats", default="markdown,html")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code or 0
        return 0 if code == 0 else 1  # --help exits 0, usage errors exit 1
    try:
        return args.func(args)
    except HarnessError as exc:
        _log(event="error", kind=type(exc).__name__, message=repr(str(exc)))
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

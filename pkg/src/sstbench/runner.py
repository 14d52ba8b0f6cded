"""Experiment orchestration: the (train strategy x test strategy) matrix.

One model is fitted per (train strategy, run) and reused across its row of
test strategies and tasks.  All randomness derives from the master seed via
role-tagged streams, so adding a task or a test strategy never perturbs
another cell's draws.  Reports aggregate mean and sample standard deviation
over runs.
"""

from __future__ import annotations

import hashlib
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

from .audio import read_audio
from .corpus import Manifest, TrialList, build_cluster_task, build_sv_trials
from .errors import ConfigError, HarnessError
from .frontend import FeatureStore, FrontendConfig, mel_spectrogram, stft_spectrogram
from .metrics import compute_eer, hier_cluster, misclassification_rate
from .models import (
    Embedding,
    EmbeddingModelRef,
    adapter_embed,
    adapter_fit,
    avg_embed,
    score_pairs,
    write_labels_csv,
    write_segments_csv,
    write_segments_tensor,
)
from .scramble import STRATEGIES, check_strategy, draw_plan, segment_frames
from .seeds import (
    ROLE_CLUSTER_SAMPLE,
    ROLE_EVAL_DRAW,
    ROLE_TRAIN_DRAW,
    ROLE_VOCODER_NOISE,
    SeedStream,
    fnv1a64,
    mix,
)
from .vocoder import VocoderConfig, design_bands, noise_vocode, utterance_config

TASKS = ("SV", "SC")
TASK_METRIC = {"SV": "eer", "SC": "mr"}
REPORT_FORMATS = ("csv", "markdown", "html")
REPORT_CSV_COLUMNS = "model,task,train_strategy,test_strategy,metric,mean,sd,n_runs"


@dataclass
class ExperimentConfig:
    corpus: str = ""
    frontend: FrontendConfig = field(default_factory=FrontendConfig)
    model: EmbeddingModelRef = field(default_factory=EmbeddingModelRef)
    tasks: tuple[str, ...] = ("SV",)
    strategies_train: tuple[str, ...] = STRATEGIES
    strategies_test: tuple[str, ...] = STRATEGIES
    segment_t_train: float = 1.0
    segment_t_eval: float = 1.0
    eval_segments: int = 1
    runs: int = 5
    epochs: int = 128
    master_seed: int = 0
    scorer: str = ""  # empty = default for the model kind
    trial_convention: str = "ordered"
    sc_speakers: int = 40
    sc_part_sizes: tuple[int, int] = (2, 8)
    sc_linkage: str = "complete"
    sc_distance: str = "cosine"
    vocode: VocoderConfig | None = None
    features_dir: str = ""
    adapter_params: dict = field(default_factory=dict)
    adapter_timeout: float = 600.0
    out_dir: str = "results"
    formats: tuple[str, ...] = ("csv", "markdown", "html")

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not self.strategies_train or not self.strategies_test:
            raise ConfigError("strategy sets must be nonempty")
        for s in tuple(self.strategies_train) + tuple(self.strategies_test):
            check_strategy(s)
        for t in self.tasks:
            if t not in TASKS:
                raise ConfigError(f"unknown task {t!r}")
        if self.segment_t_train <= 0 or self.segment_t_eval <= 0:
            raise ConfigError("segment lengths must be positive")
        if self.eval_segments < 1:
            raise ConfigError("eval_segments must be >= 1")
        for f in self.formats:
            if f not in REPORT_FORMATS:
                raise ConfigError(f"unknown report format {f!r}")
        if self.scorer and self.scorer not in ("cosine", "neg-sq-euclidean"):
            raise ConfigError(f"unknown scorer {self.scorer!r}")

    @property
    def effective_scorer(self) -> str:
        if self.scorer:
            return self.scorer
        return "neg-sq-euclidean" if self.model.kind == "avg-baseline" else "cosine"

    def canonical_text(self) -> str:
        pairs = {
            "corpus": self.corpus,
            "model": self.model.kind,
            "adapter_command": self.model.adapter_command,
            "feature_space": self.model.feature_space,
            "tasks": ",".join(self.tasks),
            "strategies_train": ",".join(self.strategies_train),
            "strategies_test": ",".join(self.strategies_test),
            "segment_t_train": self.segment_t_train,
            "segment_t_eval": self.segment_t_eval,
            "eval_segments": self.eval_segments,
            "runs": self.runs,
            "epochs": self.epochs,
            "master_seed": self.master_seed,
            "scorer": self.effective_scorer,
            "trial_convention": self.trial_convention,
            "sc_speakers": self.sc_speakers,
            "sc_part_sizes": f"{self.sc_part_sizes[0]},{self.sc_part_sizes[1]}",
            "sc_linkage": self.sc_linkage,
            "sc_distance": self.sc_distance,
            "adapter_timeout": self.adapter_timeout,
        }
        for k, v in sorted(self.frontend.to_dict().items()):
            pairs[f"frontend.{k}"] = v
        if self.vocode is not None:
            pairs["vocode.n_bands"] = self.vocode.n_bands
            pairs["vocode.band_edges"] = ",".join(repr(e) for e in self.vocode.band_edges)
            pairs["vocode.env_cutoff"] = self.vocode.env_cutoff
            pairs["vocode.filter_order"] = self.vocode.filter_order
            pairs["vocode.noise_seed"] = self.vocode.noise_seed
        for k, v in sorted(self.adapter_params.items()):
            pairs[f"adapter.{k}"] = v
        return "\n".join(f"{k} = {v}" for k, v in sorted(pairs.items()))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Config files: flat "key = value" lines, dotted keys for subsections.

_LIST_KEYS = {"tasks", "strategies_train", "strategies_test", "formats"}
_TOP_KEYS = {
    "corpus", "model", "adapter_command", "feature_space", "scorer",
    "tasks", "strategies_train", "strategies_test",
    "segment_t_train", "segment_t_eval", "eval_segments",
    "runs", "epochs", "master_seed", "trial_convention",
    "sc_speakers", "sc_part1", "sc_part2", "sc_linkage", "sc_distance",
    "features_dir", "adapter_timeout", "out_dir", "formats",
}
_VOCODE_KEYS = {"enabled", "n_bands", "fmin", "fmax", "env_cutoff", "filter_order", "noise_seed"}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip().strip("\"'")
    return out


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def config_from_kv(kv: dict[str, str]) -> ExperimentConfig:
    """Build an ExperimentConfig from flat key/value pairs."""
    top: dict = {}
    frontend_kv: dict = {}
    vocode_kv: dict = {}
    adapter_params: dict = {}
    for key, raw in kv.items():
        value = _coerce(raw)
        if key.startswith("frontend."):
            frontend_kv[key.split(".", 1)[1]] = value
        elif key.startswith("vocode."):
            sub = key.split(".", 1)[1]
            if sub not in _VOCODE_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            vocode_kv[sub] = value
        elif key.startswith("adapter."):
            adapter_params[key.split(".", 1)[1]] = value
        elif key in _TOP_KEYS:
            top[key] = raw if key in _LIST_KEYS else value
        else:
            raise ConfigError(f"unknown config key {key!r}")

    frontend = FrontendConfig(**frontend_kv)
    model = EmbeddingModelRef(
        kind=top.get("model", "avg-baseline"),
        adapter_command=str(top.get("adapter_command", "")),
        feature_space=str(top.get("feature_space", "mel")),
    )
    kwargs: dict = {
        "corpus": str(top.get("corpus", "")),
        "frontend": frontend,
        "model": model,
        "features_dir": str(top.get("features_dir", "")),
        "out_dir": str(top.get("out_dir", "results")),
        "adapter_params": adapter_params,
    }
    for name in (
        "segment_t_train", "segment_t_eval", "eval_segments", "runs", "epochs",
        "master_seed", "trial_convention", "sc_speakers", "sc_linkage",
        "sc_distance", "adapter_timeout", "scorer",
    ):
        if name in top:
            kwargs[name] = top[name]
    for name, csv_key in (("tasks", "tasks"), ("strategies_train", "strategies_train"),
                          ("strategies_test", "strategies_test"), ("formats", "formats")):
        if csv_key in top:
            kwargs[name] = tuple(s.strip() for s in str(top[csv_key]).split(",") if s.strip())
    if "sc_part1" in top or "sc_part2" in top:
        kwargs["sc_part_sizes"] = (int(top.get("sc_part1", 2)), int(top.get("sc_part2", 8)))

    cfg = ExperimentConfig(**kwargs)
    if vocode_kv.pop("enabled", False):
        n_bands = int(vocode_kv.pop("n_bands", 4))
        fmin = float(vocode_kv.pop("fmin", 100.0))
        fmax = float(vocode_kv.pop("fmax", 8000.0))
        noise_seed = vocode_kv.pop("noise_seed", None)
        if noise_seed is None:
            noise_seed = mix(cfg.master_seed, ROLE_VOCODER_NOISE)
        cfg = replace(
            cfg,
            vocode=VocoderConfig(
                n_bands=n_bands,
                band_edges=design_bands(n_bands, fmin, fmax),
                noise_seed=int(noise_seed),
                **vocode_kv,
            ),
        )
    return cfg


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    kv = parse_config_text(Path(path).read_text())
    kv.update(overrides or {})
    return config_from_kv(kv)


# ---------------------------------------------------------------------------
# Feature preparation


def prepare_features(cfg: ExperimentConfig, manifest: Manifest) -> FeatureStore:
    """Spectrograms for every manifest entry, optionally vocoded and cached."""
    if cfg.features_dir:
        cache = Path(cfg.features_dir)
        if (cache / "frontend.json").is_file():
            return FeatureStore.open_dir(cache)
    extract = mel_spectrogram if cfg.model.feature_space == "mel" else stft_spectrogram
    store = FeatureStore(hop_length=cfg.frontend.hop_length)
    for entry in manifest.entries:
        clip = read_audio(manifest.resolve(entry))
        if cfg.vocode is not None:
            clip = noise_vocode(clip, utterance_config(cfg.vocode, entry.utterance_id))
        spec = extract(clip, cfg.frontend)
        spec.utterance_id = entry.utterance_id
        store.put(spec)
    if cfg.features_dir:
        store.save_dir(cfg.features_dir, cfg.frontend)
        # Reload through the cache so cached and fresh runs see identical
        # float32 values.
        return FeatureStore.open_dir(cfg.features_dir)
    return store


# ---------------------------------------------------------------------------
# Embedders


class BaselineEmbedder:
    """Stateless frame-averaging model; fitting is a no-op."""

    def embed(self, segments, tag: str = "") -> dict:
        grouped: dict[str, list] = {}
        for seg in segments:
            grouped.setdefault(seg.source_utterance, []).append(avg_embed(seg).vector)
        return {
            utt: Embedding(sum(vec) / len(vec) if len(vec) > 1 else vec[0])
            for utt, vec in grouped.items()
        }


class AdapterEmbedder:
    """File-exchange wrapper around one fitted external model."""

    def __init__(self, cfg: ExperimentConfig, workdir: Path, state=None):
        self.cfg = cfg
        self.workdir = Path(workdir)
        self.state = state

    def fit(self, segments, speaker_of, seed: int):
        fit_dir = self.workdir / "fit"
        fit_dir.mkdir(parents=True, exist_ok=True)
        features = fit_dir / "segments.sstf"
        labels = fit_dir / "labels.csv"
        write_segments_tensor(features, segments)
        write_labels_csv(labels, segments, speaker_of)
        self.state = adapter_fit(
            self.cfg.model,
            features,
            labels,
            fit_dir,
            seed=seed,
            params=self.cfg.adapter_params,
            timeout_s=self.cfg.adapter_timeout,
        )
        return self.state

    def embed(self, segments, tag: str = "embed") -> dict:
        embed_dir = self.workdir / tag
        embed_dir.mkdir(parents=True, exist_ok=True)
        features = embed_dir / "segments.sstf"
        segments_csv = embed_dir / "segments.csv"
        write_segments_tensor(features, segments)
        write_segments_csv(segments_csv, segments)
        return adapter_embed(
            self.cfg.model,
            self.state,
            features,
            segments_csv,
            embed_dir,
            timeout_s=self.cfg.adapter_timeout,
        )


# ---------------------------------------------------------------------------
# Matrix runner


@dataclass
class CellResult:
    per_run: list[float] = field(default_factory=list)
    error: str = ""
    # Summary overrides let a report round-trip through CSV without per-run data.
    summary: tuple[float, float, int] | None = None

    @property
    def ok(self) -> bool:
        return not self.error and (bool(self.per_run) or self.summary is not None)

    @property
    def n_runs(self) -> int:
        return self.summary[2] if self.summary is not None else len(self.per_run)

    @property
    def mean(self) -> float:
        if self.summary is not None:
            return self.summary[0]
        return statistics.fmean(self.per_run)

    @property
    def sd(self) -> float:
        if self.summary is not None:
            return self.summary[1]
        if len(self.per_run) < 2:
            return 0.0
        return statistics.stdev(self.per_run)


@dataclass
class MatrixReport:
    cells: dict[tuple[str, str, str], CellResult]
    model_name: str
    corpus_name: str
    config_digest: str
    runs: int
    strategies_train: tuple[str, ...]
    strategies_test: tuple[str, ...]
    tasks: tuple[str, ...]

    @property
    def failed_cells(self) -> list[tuple[str, str, str]]:
        return [k for k, c in self.cells.items() if c.error]


def _realize_plan(plan, store: FeatureStore):
    return [plan.realize(rec, store.get(rec.utterance_id)) for rec in plan.records]


def _fit_embedder(cfg: ExperimentConfig, manifest: Manifest, store: FeatureStore,
                  train_s: str, run: int):
    if cfg.model.kind == "avg-baseline":
        return BaselineEmbedder()
    length = segment_frames(cfg.segment_t_train, cfg.frontend.hop_length)
    plan = draw_plan(
        manifest, cfg.epochs, train_s, length,
        mix(cfg.master_seed, ROLE_TRAIN_DRAW), run, split="train",
    )
    segments = _realize_plan(plan, store)
    workdir = Path(cfg.out_dir) / "adapters" / f"run{run}_train{train_s}"
    embedder = AdapterEmbedder(cfg, workdir)
    embedder.fit(segments, manifest.speaker_of, seed=mix(cfg.master_seed, run, fnv1a64(train_s)))
    return embedder


def _evaluate_sv(cfg: ExperimentConfig, store: FeatureStore, trials: TrialList,
                 embedder, test_s: str, run: int) -> float:
    length = segment_frames(cfg.segment_t_eval, cfg.frontend.hop_length)
    plan = draw_plan(
        trials.utterance_ids, cfg.eval_segments, test_s, length,
        mix(cfg.master_seed, ROLE_EVAL_DRAW), run,
    )
    segments = _realize_plan(plan, store)
    embeddings = embedder.embed(segments, tag=f"embed_sv_run{run}_{test_s}")
    scores = score_pairs(embeddings, trials, cfg.effective_scorer)
    return compute_eer(scores, trials).eer


def _evaluate_sc(cfg: ExperimentConfig, manifest: Manifest, store: FeatureStore,
                 embedder, test_s: str, run: int) -> float:
    rng = SeedStream(mix(cfg.master_seed, ROLE_CLUSTER_SAMPLE, run))
    task = build_cluster_task(manifest, cfg.sc_speakers, cfg.sc_part_sizes, rng)
    composite_store = FeatureStore(hop_length=store.hop_length)
    labels = []
    composite_ids = []
    for group in task.groups:
        for part_no, utts in ((1, group.utterance_ids_part1), (2, group.utterance_ids_part2)):
            cid = f"{group.speaker_id}#part{part_no}"
            composite_store.put(store.concat(utts, cid))
            composite_ids.append(cid)
            labels.append(group.speaker_id)
    length = segment_frames(cfg.segment_t_eval, cfg.frontend.hop_length)
    plan = draw_plan(
        composite_ids, cfg.eval_segments, test_s, length,
        mix(cfg.master_seed, ROLE_EVAL_DRAW), run,
    )
    segments = _realize_plan(plan, composite_store)
    embeddings = embedder.embed(segments, tag=f"embed_sc_run{run}_{test_s}")
    vectors = [embeddings[cid] for cid in composite_ids]
    partition = hier_cluster(vectors, task.n_speakers, cfg.sc_linkage, cfg.sc_distance)
    return misclassification_rate(partition, labels)


def run_condition(
    cfg: ExperimentConfig,
    train_s: str,
    test_s: str,
    task: str,
    run_index: int,
    manifest: Manifest | None = None,
    store: FeatureStore | None = None,
) -> float:
    """Fit (if needed) and evaluate a single matrix cell for one run."""
    manifest, store, trials = _prepare(cfg, manifest, store, needs_trials=task == "SV")
    embedder = _fit_embedder(cfg, manifest, store, train_s, run_index)
    if task == "SV":
        return _evaluate_sv(cfg, store, trials, embedder, test_s, run_index)
    if task == "SC":
        return _evaluate_sc(cfg, manifest, store, embedder, test_s, run_index)
    raise ConfigError(f"unknown task {task!r}")


def _prepare(cfg, manifest, store, needs_trials: bool):
    if manifest is None:
        if not cfg.corpus:
            raise ConfigError("config has no corpus manifest path")
        manifest = Manifest.load_csv(cfg.corpus)
    if store is None:
        store = prepare_features(cfg, manifest)
    trials = build_sv_trials(manifest, cfg.trial_convention) if needs_trials else None
    return manifest, store, trials


def run_matrix(
    cfg: ExperimentConfig,
    manifest: Manifest | None = None,
    store: FeatureStore | None = None,
) -> MatrixReport:
    """Evaluate every (train strategy, test strategy, task) cell over all runs."""
    needs_trials = "SV" in cfg.tasks
    manifest, store, trials = _prepare(cfg, manifest, store, needs_trials)
    cells: dict[tuple[str, str, str], CellResult] = {
        (tr, te, task): CellResult()
        for tr in cfg.strategies_train
        for te in cfg.strategies_test
        for task in cfg.tasks
    }
    for run in range(cfg.runs):
        for train_s in cfg.strategies_train:
            try:
                embedder = _fit_embedder(cfg, manifest, store, train_s, run)
            except HarnessError as exc:
                for te in cfg.strategies_test:
                    for task in cfg.tasks:
                        cell = cells[(train_s, te, task)]
                        if not cell.error:
                            cell.error = f"fit: {type(exc).__name__}: {exc}"
                continue
            for test_s in cfg.strategies_test:
                for task in cfg.tasks:
                    cell = cells[(train_s, test_s, task)]
                    if cell.error:
                        continue
                    try:
                        if task == "SV":
                            value = _evaluate_sv(cfg, store, trials, embedder, test_s, run)
                        else:
                            value = _evaluate_sc(cfg, manifest, store, embedder, test_s, run)
                        cell.per_run.append(value)
                    except HarnessError as exc:
                        cell.error = f"{type(exc).__name__}: {exc}"
    if cfg.corpus:
        corpus_name = Path(cfg.corpus).parent.name or Path(cfg.corpus).name
    else:
        corpus_name = "in-memory"
    return MatrixReport(
        cells=cells,
        model_name=cfg.model.name,
        corpus_name=corpus_name,
        config_digest=cfg.digest(),
        runs=cfg.runs,
        strategies_train=tuple(cfg.strategies_train),
        strategies_test=tuple(cfg.strategies_test),
        tasks=tuple(cfg.tasks),
    )


# ---------------------------------------------------------------------------
# Report emission


def quality_color(value: float, lo: float, hi: float) -> tuple[int, int, int]:
    """Green (best=lo) through yellow to red (worst=hi)."""
    if hi <= lo:
        q = 0.0
    else:
        q = (value - lo) / (hi - lo)
    if q <= 0.5:
        return (int(round(510 * q)), 255, 0)
    return (255, int(round(510 * (1.0 - q))), 0)


def _cell_text(cell: CellResult) -> str:
    if not cell.ok:
        return "error"
    return f"{100 * cell.mean:.2f} σ{100 * cell.sd:.2f}"


def _bold_keys(report: MatrixReport, task: str) -> set:
    keyed = {
        (tr, te): report.cells[(tr, te, task)]
        for tr in report.strategies_train
        for te in report.strategies_test
    }
    means = {k: c.mean for k, c in keyed.items() if c.ok}
    if not means:
        return set()
    best = min(means.values())
    winners = {k for k, v in means.items() if v == best}
    if len(winners) == len(means):
        return set()  # every cell minimal: bolding all conveys nothing
    return winners


def emit_report(report: MatrixReport, formats, out_dir) -> dict[str, Path]:
    """Write the report in the requested formats; returns path per format."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for fmt in formats:
        if fmt == "csv":
            path = out_dir / "report.csv"
            path.write_text(render_csv(report))
        elif fmt == "markdown":
            path = out_dir / "report.md"
            path.write_text(render_markdown(report))
        elif fmt == "html":
            path = out_dir / "report.html"
            path.write_text(render_html(report))
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
        written[fmt] = path
    return written


def render_csv(report: MatrixReport) -> str:
    lines = [REPORT_CSV_COLUMNS]
    for task in report.tasks:
        for tr in report.strategies_train:
            for te in report.strategies_test:
                cell = report.cells[(tr, te, task)]
                if not cell.ok:
                    mean = sd = ""
                else:
                    mean = repr(100.0 * cell.mean)
                    sd = repr(100.0 * cell.sd)
                lines.append(
                    f"{report.model_name},{task},{tr},{te},{TASK_METRIC[task]},{mean},{sd},{cell.n_runs}"
                )
    return "\n".join(lines) + "\n"


def render_markdown(report: MatrixReport) -> str:
    out = [
        f"# {report.model_name} on {report.corpus_name}",
        "",
        f"config digest `{report.config_digest}`, {report.runs} runs; "
        "cells show metric mean (%) and sigma over runs.",
    ]
    for task in report.tasks:
        bold = _bold_keys(report, task)
        out += ["", f"## {task} — {TASK_METRIC[task].upper()} %", ""]
        header = ["train \\ test"] + list(report.strategies_test)
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "---|" * len(header))
        for tr in report.strategies_train:
            row = [tr]
            for te in report.strategies_test:
                text = _cell_text(report.cells[(tr, te, task)])
                row.append(f"**{text}**" if (tr, te) in bold else text)
            out.append("| " + " | ".join(row) + " |")
    return "\n".join(out) + "\n"


def render_html(report: MatrixReport) -> str:
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset=\"utf-8\">",
        f"<title>{report.model_name} on {report.corpus_name}</title></head><body>",
        f"<h1>{report.model_name} on {report.corpus_name}</h1>",
        f"<p>config digest <code>{report.config_digest}</code>, {report.runs} runs.</p>",
    ]
    for task in report.tasks:
        bold = _bold_keys(report, task)
        values = [
            report.cells[(tr, te, task)].mean
            for tr in report.strategies_train
            for te in report.strategies_test
            if report.cells[(tr, te, task)].ok
        ]
        lo, hi = (min(values), max(values)) if values else (0.0, 0.0)
        parts.append(f"<h2>{task} — {TASK_METRIC[task].upper()} %</h2>")
        parts.append('<table border="1" cellspacing="0" cellpadding="4">')
        header = "".join(f"<th>{te}</th>" for te in report.strategies_test)
        parts.append(f"<tr><th>train \\ test</th>{header}</tr>")
        for tr in report.strategies_train:
            cells_html = []
            for te in report.strategies_test:
                cell = report.cells[(tr, te, task)]
                text = _cell_text(cell)
                if (tr, te) in bold:
                    text = f"<b>{text}</b>"
                if not cell.ok:
                    style = ""
                else:
                    r, g, b = quality_color(cell.mean, lo, hi)
                    style = f' style="background-color: rgb({r},{g},{b})"'
                cells_html.append(f"<td{style}>{text}</td>")
            parts.append(f"<tr><th>{tr}</th>{''.join(cells_html)}</tr>")
        parts.append("</table>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def load_report_csv(path) -> MatrixReport:
    """Rebuild a (mean/sd only) report from its CSV for re-rendering."""
    text = Path(path).read_text().splitlines()
    if not text or text[0] != REPORT_CSV_COLUMNS:
        raise ConfigError(f"{path}: unexpected report header")
    cells: dict[tuple[str, str, str], CellResult] = {}
    model_name = ""
    tasks: list[str] = []
    trains: list[str] = []
    tests: list[str] = []
    max_runs = 1
    for line in text[1:]:
        if not line.strip():
            continue
        model, task, tr, te, _metric, mean, sd, n_runs = line.split(",")
        model_name = model
        if task not in tasks:
            tasks.append(task)
        if tr not in trains:
            trains.append(tr)
        if te not in tests:
            tests.append(te)
        n = int(n_runs)
        max_runs = max(max_runs, n)
        if mean == "":
            cells[(tr, te, task)] = CellResult([], error="recorded failure")
            continue
        cells[(tr, te, task)] = CellResult(
            summary=(float(mean) / 100.0, float(sd) / 100.0, n)
        )
    return MatrixReport(
        cells, model_name, Path(path).parent.name, "restored", max_runs,
        tuple(trains), tuple(tests), tuple(tasks),
    )

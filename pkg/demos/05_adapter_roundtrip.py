"""Plug a trainable model in through the subprocess adapter protocol.

Uses the refadapter package (a small conv net with a cosine-margin loss;
see refadapter/ at the repository root) as the external model.  The harness
writes segment tensors + job.json, the adapter trains and answers with
result.json / embeddings.bin, and the harness scores a small verification
matrix from those embeddings.
"""

import shutil
import tempfile

from sstbench import EmbeddingModelRef, ExperimentConfig, run_matrix
from sstbench.runner import render_markdown
from sstbench.synth import make_prototype_corpus

if shutil.which("refadapter") is None:
    raise SystemExit("refadapter is not installed; run: pip install -e refadapter/")

manifest, store = make_prototype_corpus(
    n_speakers=5, utts_per_speaker=6, n_frames=120, n_mels=20, train_fraction=0.5
)

with tempfile.TemporaryDirectory() as workdir:
    cfg = ExperimentConfig(
        model=EmbeddingModelRef("external-adapter", "refadapter"),
        tasks=("SV",),
        strategies_train=("OS", "SS"),
        strategies_test=("OS", "SS"),
        segment_t_train=0.6,
        segment_t_eval=0.6,
        runs=1,
        epochs=4,  # harness epochs: segments drawn per training utterance
        master_seed=3,
        adapter_params={"epochs": 3, "batch_size": 16, "embed_dim": 24},
        adapter_timeout=300.0,
        out_dir=workdir,
    )
    print("fitting one adapter model per training strategy (subprocess) ...")
    report = run_matrix(cfg, manifest, store)

print(render_markdown(report))
print("all exchange files (job.json, segments.sstf, labels.csv, embeddings.bin)")
print("lived in the adapter workdir; any language can implement the same protocol.")

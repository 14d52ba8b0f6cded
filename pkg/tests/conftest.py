import sys
import textwrap

import pytest

from sstbench.frontend import FeatureStore, Spectrogram
from sstbench.corpus import Manifest, ManifestEntry
from sstbench.synth import make_tone_corpus


@pytest.fixture
def tone_corpus(tmp_path):
    """Small on-disk WAV corpus (3 speakers x 4 utterances)."""
    root = tmp_path / "tones"
    return make_tone_corpus(root)


@pytest.fixture
def tiny_manifest():
    """In-memory manifest: 4 speakers x 3 test utterances, no files."""
    entries = []
    for s in range(4):
        for u in range(3):
            entries.append(
                ManifestEntry(f"S{s}", f"S{s}_U{u}", f"S{s}/U{u}.wav", "test", u)
            )
    return Manifest(entries)


def random_spectrogram(rng, n_mels=8, n_frames=20, utt="utt"):
    return Spectrogram(rng.standard_normal((n_mels, n_frames)), 0.010, utt)


def store_for(manifest, rng, n_frames=120, n_mels=8):
    store = FeatureStore(hop_length=0.010)
    for e in manifest.entries:
        store.put(random_spectrogram(rng, n_mels, n_frames, e.utterance_id))
    return store


ECHO_ADAPTER = textwrap.dedent(
    """\
    import json, sys
    import numpy as np
    from sstbench.tensorfile import read_tensor, write_tensor

    def main():
        workdir = sys.argv[sys.argv.index("--job") + 1]
        job = json.load(open(workdir + "/job.json"))
        if job["command"] == "fit":
            model_path = workdir + "/model.npz"
            feats = read_tensor(job["features_path"])
            np.savez(model_path, mean=feats.mean(axis=(0, 2)) if feats.size else np.zeros(1))
            json.dump({"status": "ok", "model_path": model_path},
                      open(workdir + "/result.json", "w"))
        elif job["command"] == "embed":
            feats = read_tensor(job["features_path"])
            emb = feats.mean(axis=2) if feats.size else np.zeros((feats.shape[0], 4), np.float32)
            write_tensor(job["output_path"], emb.astype(np.float32))
            json.dump({"status": "ok"}, open(workdir + "/result.json", "w"))
        else:
            print("unknown command", file=sys.stderr)
            sys.exit(1)

    main()
    """
)


@pytest.fixture
def echo_adapter_cmd(tmp_path):
    """Deterministic stub adapter: embedding = per-mel mean of the segment."""
    script = tmp_path / "echo_adapter.py"
    script.write_text(ECHO_ADAPTER)
    return f'"{sys.executable}" "{script}"'

"""Benchmark harness separating frame-level from temporal speaker cues.

The harness trains and evaluates speaker-embedding models on fixed-length
spectrogram segments drawn under three strategies: original frame order
(OS), frames shuffled inside the segment (SS), and frames shuffled across
the whole utterance before cutting (SU).  Comparing verification EER and
clustering misclassification rate across the train/test strategy matrix
quantifies how much a model relies on frame order; noise vocoding offers
the complementary probe of equalizing frame-level timbre while preserving
temporal envelopes.
"""

from .audio import AudioClip, read_audio, write_sphere, write_wav
from .corpus import (
    ClusterTaskSpec,
    Manifest,
    ManifestEntry,
    TrialList,
    build_cluster_task,
    build_sv_trials,
    scan_corpus,
)
from .frontend import (
    FeatureStore,
    FrontendConfig,
    Spectrogram,
    build_mel_filterbank,
    mel_spectrogram,
    stft_spectrogram,
)
from .metrics import (
    EerResult,
    Partition,
    compute_eer,
    eer_from_scores,
    hier_cluster,
    misclassification_rate,
)
from .models import (
    Embedding,
    EmbeddingModelRef,
    ScoreSet,
    adapter_embed,
    adapter_fit,
    avg_embed,
    score_pairs,
)
from .runner import (
    ExperimentConfig,
    MatrixReport,
    emit_report,
    load_config,
    run_condition,
    run_matrix,
)
from .scramble import DrawPlan, Segment, draw_plan, draw_segment, segment_frames
from .seeds import SeedStream, fnv1a64, mix
from .tensorfile import read_tensor, write_tensor
from .vocoder import VocoderConfig, band_envelope, design_bands, noise_vocode

__version__ = "0.1.0"

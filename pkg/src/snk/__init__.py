"""snk — spoken named-entity toolkit.

Inline entity-tag transcript codec, pseudo-annotated corpus pipeline,
WER/EER/micro-F1 scoring, a desk-scale CTC tag-emission engine with a
scikit-learn estimator front end, and a cross-lingual transfer protocol.
"""

from .tagcodec import (
    EntityLabel,
    EntitySpan,
    RepairEvent,
    TaggedTranscript,
    decode_inline,
    encode_inline,
    from_bio,
    strip_tags,
    to_bio,
)
from .corpus import (
    CleaningConfig,
    CorpusStats,
    Lang,
    UtteranceRecord,
    clean_text,
    compute_stats,
    entity_inventory,
    filter_corpus,
    merge_annotations,
    overlap_matrix,
    overlap_pct,
)
from .audio import audio_stddev, read_wav, write_wav
from .metrics import (
    AlignmentPath,
    EntityTriple,
    EvalReport,
    align,
    eer,
    entity_correctly_transcribed,
    entity_triples,
    f1_micro,
    wer,
)
from .ctc import CtcLattice, Vocab, beam_decode, collapse, ctc_lattice, ctc_loss, default_vocab, greedy_decode
from .model import (
    AffineFrameModel,
    CtcTagger,
    TrainConfig,
    forward_model,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .synth import SynthSpec, make_dataset, synth_generate
from .transfer import TransferPlan, TransferReport, run_transfer, sample_subset

__version__ = "0.1.0"

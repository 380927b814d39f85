"""tabprompt: build instruction-tuning corpora from tabular datasets and
evaluate generative tabular predictors end to end.

The pipeline: ingest CSVs, reformat metadata, serialize rows to feature
sentences, augment targets with calibrated class confidences, assemble
prompts, and score generations by parsing them back into class picks.
"""

from .ingest import (
    ColumnSchema,
    Dataset,
    IngestError,
    ManifestEntry,
    SplitSpec,
    TargetKind,
    apply_cutoff,
    detect_target_kind,
    load_dataset,
    load_from_manifest,
    load_manifest,
    split,
)
from .serializer import SerializationConfig, serialize_features
from .metadata import (
    ChatClientConfig,
    HttpChatClient,
    MetadataCache,
    ReformattedMetadata,
    build_reformat_prompt,
    fallback_reformat,
    parse_reformat_response,
    reformat,
)
from .augmentor import (
    AugmentedTarget,
    TargetSpace,
    TreeEnsembleModel,
    augment,
    bin_continuous,
    fit_external_predictor,
    fit_isotonic,
    one_hot_space,
    serialize_class,
    serialize_target,
)
from .outparse import ParsedPrediction, extract_probs, map_to_class, parse_generation
from .promptgen import (
    CorpusManifest,
    CorpusRecord,
    PreparedDataset,
    assemble_prompt,
    build_instruction,
    emit_corpus,
    read_corpus,
)
from .backends import (
    Backend,
    BackendError,
    GenerationRequest,
    GenerationResponse,
    OracleBackend,
    ProxyBackend,
    RemoteBackend,
    RemoteConfig,
    run_protocol_suite,
)
from .baselines import MlpModel, fit_mlp, predict_mlp
from .evalharness import (
    EvalResult,
    RankTable,
    RegistryEntry,
    SweepConfig,
    SweepReport,
    aggregate,
    emit_report,
    evaluate,
    fewshot_sweep,
    rank_models,
)

__version__ = "0.1.0"

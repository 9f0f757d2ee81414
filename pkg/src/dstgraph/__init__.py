"""Ontology-free dialogue state tracking over prompted language models.

The toolkit covers the full pipeline: prompt construction for several
reasoning strategies, completion backends (HTTP, replay, rule mock),
parsing of bracketed domain/slot/value lists into dialogue states,
tracking metrics, a bipartite dialogue-state graph, and a from-scratch
variational graph auto-encoder for ranking next-state candidates.
"""

from .backends import (
    BackendError,
    GenerationParams,
    HttpBackend,
    MalformedResponse,
    ReplayBackend,
    ReplayMiss,
    RequestFailed,
    RuleMockBackend,
    complete,
    prompt_hash,
    replay_store,
)
from .datasets import (
    AnnotatedDialogue,
    CorpusFormat,
    CorpusManifest,
    LoadResult,
    fixture_corpus_path,
    fixture_error_cases_path,
    fixture_keywords_path,
    fixture_replay_path,
    kfold_split,
    load_corpus,
    read_predictions,
    sniff_format,
    state_from_jsonable,
    state_to_jsonable,
    write_corpus,
    write_predictions,
)
from .dialogue import (
    NONE_VALUE,
    DialogueContext,
    DialogueState,
    Speaker,
    StateTriple,
    Turn,
    accumulate_state,
    append_turn,
    normalize_text,
    serialize_context,
)
from .graph import (
    DialogueNodes,
    EdgeSplit,
    NodeId,
    NodeKind,
    StateGraph,
    build_graph,
    dialogue_node_set,
    identity_features,
    load_graph,
    planted_graph,
    split_edges,
    write_edge_list,
    write_node_table,
)
from .linkpred import (
    CvReport,
    ScoredEdge,
    auc,
    average_precision,
    candidate_records,
    cross_validate,
    evaluate_split,
    rank_candidates,
)
from .metrics import PrfScore, TurnPair, jga, per_domain_f1, slot_accuracy, slot_f1
from .parsing import (
    Diagnostic,
    DiagnosticKind,
    ErrorReport,
    ParseOutcome,
    classify_errors,
    format_state,
    merge_error_reports,
    parse_state,
)
from .prompts import (
    ANTI_HALLUCINATION,
    COT_FRAME,
    STEP_SENTENCE,
    PromptSpec,
    PromptStrategy,
    build_prompt,
    default_instruction,
    load_exemplars,
    load_template_overrides,
    persona_text,
)
from .vgae import (
    EpochRecord,
    TrainConfig,
    TrainingDiverged,
    VgaeParams,
    decode_all,
    decode_edge,
    encode,
    glorot_init,
    gradient_check,
    kl_divergence,
    load_checkpoint,
    normalize_adjacency,
    reconstruction_loss,
    reparameterize,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ANTI_HALLUCINATION",
    "AnnotatedDialogue",
    "BackendError",
    "COT_FRAME",
    "CorpusFormat",
    "CorpusManifest",
    "CvReport",
    "Diagnostic",
    "DiagnosticKind",
    "DialogueContext",
    "DialogueNodes",
    "DialogueState",
    "EdgeSplit",
    "EpochRecord",
    "ErrorReport",
    "GenerationParams",
    "HttpBackend",
    "LoadResult",
    "MalformedResponse",
    "NONE_VALUE",
    "NodeId",
    "NodeKind",
    "ParseOutcome",
    "PrfScore",
    "PromptSpec",
    "PromptStrategy",
    "ReplayBackend",
    "ReplayMiss",
    "RequestFailed",
    "RuleMockBackend",
    "STEP_SENTENCE",
    "ScoredEdge",
    "Speaker",
    "StateGraph",
    "StateTriple",
    "TrainConfig",
    "TrainingDiverged",
    "Turn",
    "TurnPair",
    "VgaeParams",
    "accumulate_state",
    "append_turn",
    "auc",
    "average_precision",
    "build_graph",
    "build_prompt",
    "candidate_records",
    "classify_errors",
    "complete",
    "cross_validate",
    "decode_all",
    "decode_edge",
    "default_instruction",
    "dialogue_node_set",
    "encode",
    "evaluate_split",
    "fixture_corpus_path",
    "fixture_error_cases_path",
    "fixture_keywords_path",
    "fixture_replay_path",
    "format_state",
    "glorot_init",
    "gradient_check",
    "identity_features",
    "jga",
    "kfold_split",
    "kl_divergence",
    "load_checkpoint",
    "load_corpus",
    "load_exemplars",
    "load_graph",
    "load_template_overrides",
    "merge_error_reports",
    "normalize_adjacency",
    "normalize_text",
    "parse_state",
    "per_domain_f1",
    "persona_text",
    "planted_graph",
    "prompt_hash",
    "rank_candidates",
    "read_predictions",
    "reconstruction_loss",
    "reparameterize",
    "replay_store",
    "save_checkpoint",
    "serialize_context",
    "slot_accuracy",
    "slot_f1",
    "sniff_format",
    "split_edges",
    "state_from_jsonable",
    "state_to_jsonable",
    "train",
    "write_corpus",
    "write_edge_list",
    "write_node_table",
    "write_predictions",
]

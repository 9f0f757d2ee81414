"""Command-line pipeline: extract, evaluate, graph, train, predict, repl.

Every output file embeds the resolved run configuration and toolkit
version, so a result can always be traced back to the exact run that
produced it.  With the offline backends and fixed seeds, two identical
runs produce byte-identical outputs.

Exit codes: 0 success, 1 user/config error, 2 backend failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .backends import (
    BackendError,
    GenerationParams,
    HttpBackend,
    ReplayBackend,
    RuleMockBackend,
    complete,
)
from .datasets import (
    CorpusFormat,
    fixture_keywords_path,
    load_corpus,
    read_predictions,
    state_from_jsonable,
    state_to_jsonable,
    write_predictions,
)
from .dialogue import (
    DialogueContext,
    DialogueState,
    Speaker,
    Turn,
    accumulate_state,
    append_turn,
    serialize_context,
)
from .graph import (
    build_graph,
    dialogue_node_set,
    load_graph,
    split_edges,
    write_edge_list,
    write_node_table,
)
from .linkpred import candidate_records, evaluate_split, rank_candidates
from .metrics import TurnPair, jga, slot_accuracy, slot_f1
from .parsing import DiagnosticKind, classify_errors, merge_error_reports, parse_state
from .prompts import (
    PromptSpec,
    PromptStrategy,
    build_prompt,
    default_instruction,
    load_exemplars,
    load_template_overrides,
)
from .vgae import TrainConfig, load_checkpoint, save_checkpoint, train


class UsageError(ValueError):
    """Bad flags, bad config file, bad input data: the user can fix it."""


_FORMATS = {
    "auto": None,
    "plain": CorpusFormat.PLAIN_JSONL,
    "multiwoz": CorpusFormat.MULTIWOZ_JSON,
    "sgd": CorpusFormat.SGD_JSON,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one subcommand run."""

    backend: str = "rulemock"
    endpoint: str = ""
    model: str = ""
    strategy: str = "cot"
    anti_hallucination: bool = True
    instruction: str = ""
    exemplars_file: str = ""
    templates_file: str = ""
    keywords: str = ""
    replay: str = ""
    temperature: float = 0.0
    max_tokens: int = 256
    timeout: float = 30.0
    retries: int = 2
    jobs: int = 1
    seed: int = 0
    top_k: int = 5
    epochs: int = 200
    hidden_dim: int = 32
    latent_dim: int = 16
    learning_rate: float = 0.01
    kl_weight: float = 1.0
    train_frac: float = 0.85
    test_frac: float = 0.10
    val_frac: float = 0.05
    corpus: str = ""
    corpus_format: str = "auto"
    predictions: str = ""
    out: str = ""
    out_prefix: str = ""
    checkpoint: str = ""
    metrics_out: str = ""
    from_gold: bool = False

    def echo(self, keys: tuple[str, ...]) -> dict:
        """The config subset relevant to one subcommand, for output files."""
        return {k: getattr(self, k) for k in sorted(keys)}


def _meta(config: RunConfig, keys: tuple[str, ...], **extra) -> dict:
    meta = {"version": __version__, "config": config.echo(keys)}
    meta.update(extra)
    return meta


def make_backend(cfg: RunConfig):
    if cfg.backend == "rulemock":
        path = cfg.keywords or str(fixture_keywords_path())
        return RuleMockBackend.from_json(path)
    if cfg.backend == "replay":
        if not cfg.replay:
            raise UsageError("--replay PATH is required with the replay backend")
        return ReplayBackend(cfg.replay)
    if cfg.backend == "http":
        if not cfg.endpoint:
            raise UsageError("--endpoint URL is required with the http backend")
        return HttpBackend(cfg.endpoint)
    raise UsageError(f"unknown backend: {cfg.backend}")


def make_generation_params(cfg: RunConfig) -> GenerationParams:
    return GenerationParams(
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
        model_name=cfg.model,
        timeout=cfg.timeout,
        retries=cfg.retries,
    )


def make_prompt_spec(cfg: RunConfig, input_text: str) -> PromptSpec:
    try:
        strategy = PromptStrategy(cfg.strategy)
    except ValueError as exc:
        raise UsageError(f"unknown strategy: {cfg.strategy}") from exc
    exemplars = load_exemplars(cfg.exemplars_file) if cfg.exemplars_file else ()
    return PromptSpec(
        strategy=strategy,
        instruction=cfg.instruction or default_instruction(),
        input_text=input_text,
        anti_hallucination=cfg.anti_hallucination,
        exemplars=exemplars,
    )


def extract_records(
    dialogues, backend, cfg: RunConfig
) -> tuple[list[dict], BackendError | None]:
    """Run the prompt -> completion -> parse -> accumulate loop.

    Dialogues are processed in dialogue_id order for deterministic output.
    On a backend failure the records completed so far are returned with
    the error, so the caller can flush partial output before aborting.
    """
    params = make_generation_params(cfg)
    overrides = (
        load_template_overrides(cfg.templates_file) if cfg.templates_file else None
    )
    records: list[dict] = []
    for dialogue in sorted(dialogues, key=lambda d: d.dialogue_id):
        ctx = DialogueContext(turns=(), dialogue_id=dialogue.dialogue_id)
        state = DialogueState()
        turn_index = 0
        for turn in dialogue.turns:
            ctx = append_turn(ctx, turn)
            if turn.speaker is not Speaker.USER:
                continue
            spec = make_prompt_spec(cfg, serialize_context(ctx))
            prompt = build_prompt(spec, overrides)
            try:
                completion = complete(backend, prompt, params)
            except BackendError as exc:
                return records, exc
            outcome = parse_state(completion)
            state = accumulate_state(state, outcome.state.triples())
            records.append(
                {
                    "dialogue_id": dialogue.dialogue_id,
                    "turn": turn_index,
                    "predicted_state": state_to_jsonable(state),
                    "diagnostics": [
                        {"kind": d.kind.value, "detail": d.detail}
                        for d in outcome.diagnostics
                    ],
                }
            )
            turn_index += 1
    return records, None


_EXTRACT_KEYS = (
    "backend",
    "endpoint",
    "model",
    "strategy",
    "anti_hallucination",
    "instruction",
    "exemplars_file",
    "templates_file",
    "keywords",
    "replay",
    "temperature",
    "max_tokens",
    "corpus",
    "corpus_format",
    "out",
)


def cmd_extract(cfg: RunConfig) -> int:
    if not cfg.corpus or not cfg.out:
        raise UsageError("extract requires --corpus and --out")
    result = load_corpus(cfg.corpus, _FORMATS[cfg.corpus_format])
    backend = make_backend(cfg)
    records, failure = extract_records(result.dialogues, backend, cfg)
    meta = _meta(cfg, _EXTRACT_KEYS, corpus_skipped=result.skipped)
    if failure is not None:
        meta["failure"] = str(failure)
        write_predictions(cfg.out, records, meta=meta)
        print(
            f"extract aborted after {len(records)} turns: {failure}", file=sys.stderr
        )
        raise failure
    write_predictions(cfg.out, records, meta=meta)
    print(f"wrote {len(records)} turn predictions to {cfg.out}")
    return 0


def _pair_turns(
    records: list[dict], dialogues
) -> tuple[list[TurnPair], list]:
    """Align prediction records with gold states by (dialogue_id, turn)."""
    by_key = {(r["dialogue_id"], r["turn"]): r for r in records}
    pairs: list[TurnPair] = []
    contexts = []
    seen = set()
    for d in sorted(dialogues, key=lambda x: x.dialogue_id):
        if d.gold_states is None:
            raise UsageError(f"dialogue {d.dialogue_id} has no gold states")
        for i, gold in enumerate(d.gold_states):
            rec = by_key.get((d.dialogue_id, i))
            if rec is None:
                raise UsageError(
                    f"no prediction for dialogue {d.dialogue_id} turn {i}"
                )
            seen.add((d.dialogue_id, i))
            pairs.append(
                TurnPair(
                    predicted=state_from_jsonable(rec["predicted_state"]), gold=gold
                )
            )
            contexts.append((rec, d.turns))
    extra = set(by_key) - seen
    if extra:
        raise UsageError(
            f"predictions reference unknown turns: {sorted(extra)[:5]}"
        )
    return pairs, contexts


_EVALUATE_KEYS = ("predictions", "corpus", "corpus_format", "out")


def cmd_evaluate(cfg: RunConfig) -> int:
    if not cfg.predictions or not cfg.corpus or not cfg.out:
        raise UsageError("evaluate requires --predictions, --corpus and --out")
    records, _ = read_predictions(cfg.predictions)
    result = load_corpus(cfg.corpus, _FORMATS[cfg.corpus_format])
    pairs, contexts = _pair_turns(records, result.dialogues)

    prf = slot_f1(pairs)
    parse_failures = sum(
        1
        for rec, _ in contexts
        if any(
            d["kind"] == DiagnosticKind.PARSE_FAILURE.value
            for d in rec.get("diagnostics", [])
        )
    )
    error_report = merge_error_reports(
        classify_errors(pair.predicted, pair.gold, turns=turns)
        for pair, (_, turns) in zip(pairs, contexts)
    )
    report = {
        "jga": jga(pairs),
        "slot_precision": prf.precision,
        "slot_recall": prf.recall,
        "slot_f1": prf.f1,
        "slot_accuracy": slot_accuracy(pairs),
        "turn_count": len(pairs),
        "parse_failure_count": parse_failures,
        "error_report": {
            "nonexistent_value_count": error_report.nonexistent_value_count,
            "synonym_count": error_report.synonym_count,
            "total_errors": error_report.total_errors,
            "samples": list(error_report.samples),
        },
        **_meta(cfg, _EVALUATE_KEYS),
    }
    Path(cfg.out).write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"jga={report['jga']:.4f} slot_f1={report['slot_f1']:.4f} -> {cfg.out}")
    return 0


_GRAPH_KEYS = ("predictions", "corpus", "corpus_format", "from_gold", "out_prefix")


def cmd_graph(cfg: RunConfig) -> int:
    if not cfg.out_prefix:
        raise UsageError("graph requires --out-prefix")
    if cfg.from_gold:
        if not cfg.corpus:
            raise UsageError("graph --from-gold requires --corpus")
        result = load_corpus(cfg.corpus, _FORMATS[cfg.corpus_format])
        states = [
            s
            for d in result.dialogues
            if d.gold_states is not None
            for s in d.gold_states
        ]
    else:
        if not cfg.predictions:
            raise UsageError("graph requires --predictions (or --from-gold)")
        records, _ = read_predictions(cfg.predictions)
        states = [state_from_jsonable(r["predicted_state"]) for r in records]
    g = build_graph(states)
    if not g.edges:
        raise UsageError("state graph has no edges; nothing to train on")
    write_node_table(g, cfg.out_prefix + ".nodes.jsonl")
    write_edge_list(g, cfg.out_prefix + ".edges.txt")
    manifest = _meta(
        cfg, _GRAPH_KEYS, n_nodes=g.n_nodes, n_edges=len(g.edges)
    )
    Path(cfg.out_prefix + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"graph: {g.n_nodes} nodes, {len(g.edges)} edges -> {cfg.out_prefix}.*")
    return 0


def _load_graph_prefix(prefix: str):
    return load_graph(prefix + ".edges.txt", prefix + ".nodes.jsonl")


_TRAIN_KEYS = (
    "out_prefix",
    "checkpoint",
    "metrics_out",
    "seed",
    "epochs",
    "hidden_dim",
    "latent_dim",
    "learning_rate",
    "kl_weight",
    "train_frac",
    "test_frac",
    "val_frac",
)


def cmd_train(cfg: RunConfig) -> int:
    if not cfg.out_prefix or not cfg.checkpoint:
        raise UsageError("train requires --graph-prefix and --checkpoint")
    g = _load_graph_prefix(cfg.out_prefix)
    split = split_edges(g, cfg.train_frac, cfg.test_frac, cfg.val_frac, seed=cfg.seed)
    tc = TrainConfig(
        hidden_dim=cfg.hidden_dim,
        latent_dim=cfg.latent_dim,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        kl_weight=cfg.kl_weight,
        seed=cfg.seed,
    )
    params, history = train(g, split, tc)
    save_checkpoint(cfg.checkpoint, params, tc)
    result = evaluate_split(params, g, split)
    metrics = {
        "auc": result["auc"],
        "ap": result["ap"],
        "epochs": len(history),
        "final_bce": history[-1].bce if history else None,
        "final_kl": history[-1].kl if history else None,
        "final_total": history[-1].total if history else None,
        "final_val_auc": history[-1].val_auc if history else None,
        "n_nodes": g.n_nodes,
        "n_edges": len(g.edges),
        "split_sizes": {
            "train": len(split.train),
            "val": len(split.val),
            "test": len(split.test),
        },
        **_meta(cfg, _TRAIN_KEYS),
    }
    out = cfg.metrics_out or str(Path(cfg.checkpoint).with_suffix(".metrics.json"))
    Path(out).write_text(
        json.dumps(metrics, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(
        f"trained {len(history)} epochs: test auc={result['auc']:.4f} "
        f"ap={result['ap']:.4f} -> {cfg.checkpoint}"
    )
    return 0


_PREDICT_KEYS = ("out_prefix", "checkpoint", "predictions", "top_k", "out")


def cmd_predict(cfg: RunConfig) -> int:
    if not cfg.out_prefix or not cfg.checkpoint or not cfg.predictions or not cfg.out:
        raise UsageError(
            "predict requires --graph-prefix, --checkpoint, --predictions and --out"
        )
    g = _load_graph_prefix(cfg.out_prefix)
    params, _ = load_checkpoint(cfg.checkpoint)
    records, _ = read_predictions(cfg.predictions)

    by_dialogue: dict[str, list[DialogueState]] = {}
    for r in records:
        by_dialogue.setdefault(r["dialogue_id"], []).append(
            state_from_jsonable(r["predicted_state"])
        )

    out_records: list[dict] = []
    skipped: list[str] = []
    for dialogue_id in sorted(by_dialogue):
        found = dialogue_node_set(g, by_dialogue[dialogue_id])
        if not found.nodes:
            skipped.append(dialogue_id)
            continue
        ranked = rank_candidates(params, g, found.nodes, cfg.top_k)
        out_records.extend(candidate_records(dialogue_id, ranked))
    meta = _meta(cfg, _PREDICT_KEYS, skipped_dialogues=skipped)
    write_predictions(cfg.out, out_records, meta=meta)
    print(
        f"ranked candidates for {len(by_dialogue) - len(skipped)} dialogues -> {cfg.out}"
    )
    return 0


def cmd_repl(cfg: RunConfig) -> int:
    """Line-oriented tracker: one user utterance per line, tracked triples
    (and next-state candidates if a model is given) printed after each."""
    backend = make_backend(cfg)
    params = make_generation_params(cfg)
    g = vgae_params = None
    if cfg.checkpoint and cfg.out_prefix:
        g = _load_graph_prefix(cfg.out_prefix)
        vgae_params, _ = load_checkpoint(cfg.checkpoint)

    ctx = DialogueContext(turns=(), dialogue_id="repl")
    state = DialogueState()
    print("enter user utterances, one per line (ctrl-d to quit)")
    for line in sys.stdin:
        text = line.strip()
        if not text:
            continue
        ctx = append_turn(ctx, Turn(speaker=Speaker.USER, text=text))
        spec = make_prompt_spec(cfg, serialize_context(ctx))
        try:
            completion = complete(backend, build_prompt(spec), params)
        except BackendError as exc:
            print(f"! backend error: {exc}")
            continue
        outcome = parse_state(completion)
        for d in outcome.diagnostics:
            print(f"! {d.kind.value}: {d.detail}")
        state = accumulate_state(state, outcome.state.triples())
        for t in state.triples():
            print(f"({t.domain}, {t.slot}, {t.value})")
        if g is not None and vgae_params is not None:
            found = dialogue_node_set(g, [state])
            if found.nodes:
                for e in rank_candidates(vgae_params, g, found.nodes, cfg.top_k):
                    print(
                        f"next: ({e.pair[0].label}, {e.pair[1].label}) "
                        f"p={e.score:.4f}"
                    )
    return 0


def _parse_config_file(path: str) -> dict:
    """Key-value run configuration: one `key = value` per line, # comments."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected `key = value`")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_BOOL_FIELDS = {"anti_hallucination", "from_gold"}
_INT_FIELDS = {
    "max_tokens", "retries", "jobs", "seed", "top_k", "epochs",
    "hidden_dim", "latent_dim",
}
_FLOAT_FIELDS = {
    "temperature", "timeout", "learning_rate", "kl_weight",
    "train_frac", "test_frac", "val_frac",
}


def _coerce(key: str, value: str):
    if key in _BOOL_FIELDS:
        lowered = value.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise UsageError(f"config key {key}: expected a boolean, got {value!r}")
    try:
        if key in _INT_FIELDS:
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
    except ValueError as exc:
        raise UsageError(f"config key {key}: {exc}") from exc
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dstgraph", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="key = value settings file")

    def add_backend_flags(p):
        p.add_argument("--backend", choices=["rulemock", "replay", "http"])
        p.add_argument("--endpoint", help="chat-completions base URL (http backend)")
        p.add_argument("--model", help="model name sent to the endpoint")
        p.add_argument("--keywords", help="keyword table JSON (rulemock backend)")
        p.add_argument("--replay", help="replay fixture JSONL (replay backend)")
        p.add_argument("--temperature", type=float)
        p.add_argument("--max-tokens", type=int, dest="max_tokens")
        p.add_argument("--timeout", type=float)
        p.add_argument("--retries", type=int)

    def add_prompt_flags(p):
        p.add_argument(
            "--strategy",
            choices=[s.value for s in PromptStrategy],
        )
        anti = p.add_mutually_exclusive_group()
        anti.add_argument(
            "--anti-hallucination", action="store_true", dest="anti_hallucination",
            default=None,
        )
        anti.add_argument(
            "--no-anti-hallucination", action="store_false", dest="anti_hallucination",
            default=None,
        )
        p.add_argument("--instruction", help="override the default instruction text")
        p.add_argument("--exemplars", dest="exemplars_file", help="exemplar JSONL")
        p.add_argument("--templates", dest="templates_file", help="template overrides")

    p = sub.add_parser("extract", help="extract dialogue states per user turn")
    add_common(p)
    add_backend_flags(p)
    add_prompt_flags(p)
    p.add_argument("--corpus")
    p.add_argument("--format", dest="corpus_format", choices=sorted(_FORMATS))
    p.add_argument("--jobs", type=int, help="max concurrent dialogues (bound only)")
    p.add_argument("--out")

    p = sub.add_parser("evaluate", help="score predictions against gold states")
    add_common(p)
    p.add_argument("--predictions")
    p.add_argument("--corpus")
    p.add_argument("--format", dest="corpus_format", choices=sorted(_FORMATS))
    p.add_argument("--out")

    p = sub.add_parser("graph", help="build the dialogue-state graph")
    add_common(p)
    p.add_argument("--predictions")
    p.add_argument("--corpus")
    p.add_argument("--format", dest="corpus_format", choices=sorted(_FORMATS))
    p.add_argument("--from-gold", action="store_true", dest="from_gold", default=None)
    p.add_argument("--out-prefix", dest="out_prefix")

    p = sub.add_parser("train", help="train the link predictor on a graph")
    add_common(p)
    p.add_argument("--graph-prefix", dest="out_prefix")
    p.add_argument("--checkpoint")
    p.add_argument("--metrics-out", dest="metrics_out")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--kl-weight", type=float, dest="kl_weight")
    p.add_argument("--train-frac", type=float, dest="train_frac")
    p.add_argument("--test-frac", type=float, dest="test_frac")
    p.add_argument("--val-frac", type=float, dest="val_frac")

    p = sub.add_parser("predict", help="rank next-state candidates per dialogue")
    add_common(p)
    p.add_argument("--graph-prefix", dest="out_prefix")
    p.add_argument("--checkpoint")
    p.add_argument("--predictions")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--out")

    p = sub.add_parser("repl", help="interactive line-oriented tracker")
    add_common(p)
    add_backend_flags(p)
    add_prompt_flags(p)
    p.add_argument("--graph-prefix", dest="out_prefix")
    p.add_argument("--checkpoint")
    p.add_argument("--top-k", type=int, dest="top_k")

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge precedence: command line > config file > defaults."""
    file_values: dict = {}
    if getattr(args, "config", None):
        raw = _parse_config_file(args.config)
        unknown = set(raw) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        file_values = {k: _coerce(k, v) for k, v in raw.items()}

    merged = {}
    for name in RunConfig.__dataclass_fields__:
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            merged[name] = cli_value
        elif name in file_values:
            merged[name] = file_values[name]
    return RunConfig(**merged)


_COMMANDS = {
    "extract": cmd_extract,
    "evaluate": cmd_evaluate,
    "graph": cmd_graph,
    "train": cmd_train,
    "predict": cmd_predict,
    "repl": cmd_repl,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal bug, not a user problem
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

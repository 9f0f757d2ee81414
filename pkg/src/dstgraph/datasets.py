"""Corpus loading, prediction persistence, fold arithmetic, bundled fixtures.

Three corpus shapes normalize to AnnotatedDialogue: a plain JSONL schema
(documented below), classic goal-oriented JSON with per-system-turn belief
metadata, and schema-guided JSON with per-frame slot_values.  Loaders skip
malformed dialogues with a count instead of crashing, because corpus files
in the wild are messy.

Plain JSONL schema, one dialogue per line:
    {"dialogue_id": str,
     "turns": [{"speaker": "user"|"system", "text": str}, ...],
     "gold": optional [[{"domain": str, "slot": str, "value": str}, ...], ...]}
where gold, when present, holds the cumulative state after each user turn.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dialogue import DialogueState, Speaker, StateTriple, Turn

_FIXTURES = Path(__file__).resolve().parent / "fixtures"


class CorpusFormat(Enum):
    MULTIWOZ_JSON = "multiwoz"
    SGD_JSON = "sgd"
    PLAIN_JSONL = "plain"


@dataclass(frozen=True)
class AnnotatedDialogue:
    dialogue_id: str
    turns: tuple[Turn, ...]
    gold_states: tuple[DialogueState, ...] | None = None

    def __post_init__(self):
        n_user = sum(1 for t in self.turns if t.speaker is Speaker.USER)
        if self.gold_states is not None and len(self.gold_states) != n_user:
            raise ValueError(
                f"{self.dialogue_id}: {len(self.gold_states)} gold states "
                f"for {n_user} user turns"
            )

    @property
    def user_turn_count(self) -> int:
        return sum(1 for t in self.turns if t.speaker is Speaker.USER)


@dataclass(frozen=True)
class CorpusManifest:
    format: CorpusFormat
    path: str
    dialogue_count: int
    has_gold: bool


@dataclass(frozen=True)
class LoadResult:
    dialogues: tuple[AnnotatedDialogue, ...]
    manifest: CorpusManifest
    skipped: int


def state_to_jsonable(state: DialogueState) -> list[dict]:
    return [
        {"domain": t.domain, "slot": t.slot, "value": t.value} for t in state.triples()
    ]


def state_from_jsonable(items: Sequence[dict]) -> DialogueState:
    return DialogueState(
        StateTriple(domain=i["domain"], slot=i["slot"], value=i["value"]) for i in items
    )


def _turn_from_json(rec: dict) -> Turn:
    speaker = {"user": Speaker.USER, "system": Speaker.SYSTEM}.get(
        str(rec["speaker"]).lower()
    )
    if speaker is None:
        raise ValueError(f"unknown speaker {rec['speaker']!r}")
    return Turn(speaker=speaker, text=str(rec["text"]))


def _load_plain_jsonl(path: Path) -> tuple[list[AnnotatedDialogue], int]:
    dialogues: list[AnnotatedDialogue] = []
    skipped = 0
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            turns = tuple(_turn_from_json(t) for t in rec["turns"])
            gold = None
            if rec.get("gold") is not None:
                gold = tuple(state_from_jsonable(items) for items in rec["gold"])
            dialogues.append(
                AnnotatedDialogue(
                    dialogue_id=str(rec["dialogue_id"]), turns=turns, gold_states=gold
                )
            )
        except (ValueError, KeyError, TypeError):
            skipped += 1
    return dialogues, skipped


_ABSENT_VALUES = {"", "not mentioned", "none"}


def _belief_triples(metadata: dict) -> list[StateTriple]:
    triples = []
    for domain, sections in metadata.items():
        if not isinstance(sections, dict):
            continue
        for section in ("semi", "book"):
            for slot, value in sections.get(section, {}).items():
                if slot == "booked" or not isinstance(value, str):
                    continue
                if value.strip().lower() in _ABSENT_VALUES:
                    continue
                triples.append(StateTriple(domain=domain, slot=slot, value=value))
    return triples


def _load_multiwoz_json(path: Path) -> tuple[list[AnnotatedDialogue], int]:
    """Classic goal-oriented format: {id: {"log": [...]}} with user/system
    turns alternating and the belief state on each system turn's metadata."""
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("expected a dialogue_id -> dialogue object mapping")
    dialogues: list[AnnotatedDialogue] = []
    skipped = 0
    for dialogue_id in sorted(raw):
        try:
            log = raw[dialogue_id]["log"]
            turns = []
            gold = []
            last_state = DialogueState()
            for idx, entry in enumerate(log):
                speaker = Speaker.USER if idx % 2 == 0 else Speaker.SYSTEM
                turns.append(Turn(speaker=speaker, text=str(entry["text"])))
                if speaker is Speaker.SYSTEM:
                    last_state = DialogueState(_belief_triples(entry.get("metadata", {})))
                    gold[-1] = last_state
                else:
                    # trailing user turn without a system reply keeps the
                    # previous cumulative state
                    gold.append(last_state)
            dialogues.append(
                AnnotatedDialogue(
                    dialogue_id=str(dialogue_id),
                    turns=tuple(turns),
                    gold_states=tuple(gold),
                )
            )
        except (ValueError, KeyError, TypeError):
            skipped += 1
    return dialogues, skipped


def _service_to_domain(service: str) -> str:
    # "Restaurants_1" -> "restaurants": the trailing schema counter is not
    # a domain distinction
    base = service.rsplit("_", 1)
    if len(base) == 2 and base[1].isdigit():
        return base[0]
    return service


def _load_sgd_json(path: Path) -> tuple[list[AnnotatedDialogue], int]:
    """Schema-guided format: a list of dialogues whose user turns carry
    frames with cumulative state.slot_values per service."""
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError("expected a list of dialogue objects")
    dialogues: list[AnnotatedDialogue] = []
    skipped = 0
    for rec in raw:
        try:
            turns = []
            gold = []
            for entry in rec["turns"]:
                speaker = {"USER": Speaker.USER, "SYSTEM": Speaker.SYSTEM}[
                    str(entry["speaker"]).upper()
                ]
                turns.append(Turn(speaker=speaker, text=str(entry["utterance"])))
                if speaker is Speaker.USER:
                    triples = []
                    for frame in entry.get("frames", []):
                        domain = _service_to_domain(str(frame["service"]))
                        slot_values = frame.get("state", {}).get("slot_values", {})
                        for slot, values in slot_values.items():
                            if values:
                                triples.append(
                                    StateTriple(domain=domain, slot=slot, value=values[0])
                                )
                    gold.append(DialogueState(triples))
            dialogues.append(
                AnnotatedDialogue(
                    dialogue_id=str(rec["dialogue_id"]),
                    turns=tuple(turns),
                    gold_states=tuple(gold),
                )
            )
        except (ValueError, KeyError, TypeError):
            skipped += 1
    return dialogues, skipped


def sniff_format(path: str | Path) -> CorpusFormat:
    """Guess the corpus format from the extension, then the JSON shape."""
    p = Path(path)
    if p.suffix == ".jsonl":
        return CorpusFormat.PLAIN_JSONL
    raw = json.loads(p.read_text(encoding="utf-8"))
    if isinstance(raw, dict):
        return CorpusFormat.MULTIWOZ_JSON
    if isinstance(raw, list):
        return CorpusFormat.SGD_JSON
    raise ValueError(f"unrecognized corpus shape in {path}")


_LOADERS = {
    CorpusFormat.PLAIN_JSONL: _load_plain_jsonl,
    CorpusFormat.MULTIWOZ_JSON: _load_multiwoz_json,
    CorpusFormat.SGD_JSON: _load_sgd_json,
}


def load_corpus(path: str | Path, format: CorpusFormat | None = None) -> LoadResult:
    """Load and normalize a corpus file; malformed dialogues are counted,
    not fatal.  Zero valid dialogues is an error."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    fmt = format or sniff_format(p)
    dialogues, skipped = _LOADERS[fmt](p)
    if not dialogues:
        raise ValueError(f"no valid dialogues in {path} ({skipped} skipped)")
    has_gold = all(d.gold_states is not None for d in dialogues)
    manifest = CorpusManifest(
        format=fmt, path=str(path), dialogue_count=len(dialogues), has_gold=has_gold
    )
    return LoadResult(dialogues=tuple(dialogues), manifest=manifest, skipped=skipped)


def load_dialogues(manifest: CorpusManifest) -> tuple[AnnotatedDialogue, ...]:
    return load_corpus(manifest.path, manifest.format).dialogues


def write_corpus(path: str | Path, dialogues: Iterable[AnnotatedDialogue]) -> None:
    """Write dialogues in the plain JSONL schema (the normal form)."""
    with open(path, "w", encoding="utf-8") as f:
        for d in dialogues:
            rec: dict = {
                "dialogue_id": d.dialogue_id,
                "turns": [
                    {"speaker": t.speaker.name.lower(), "text": t.text} for t in d.turns
                ],
            }
            if d.gold_states is not None:
                rec["gold"] = [state_to_jsonable(s) for s in d.gold_states]
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


META_KEY = "record_type"


def write_predictions(
    path: str | Path, records: Iterable[dict], meta: dict | None = None
) -> None:
    """Write prediction records as UTF-8 JSONL, one per user turn.

    When given, ``meta`` (run config, version) becomes a first line tagged
    record_type=meta so downstream readers can separate it from data.
    """
    with open(path, "w", encoding="utf-8") as f:
        if meta is not None:
            f.write(json.dumps({META_KEY: "meta", **meta}, ensure_ascii=False) + "\n")
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> tuple[list[dict], dict | None]:
    """Read a predictions JSONL file back; returns (records, meta or None)."""
    records: list[dict] = []
    meta: dict | None = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get(META_KEY) == "meta":
            meta = {k: v for k, v in rec.items() if k != META_KEY}
        else:
            records.append(rec)
    return records, meta


def kfold_split(items: Sequence, k: int, seed: int) -> list[list]:
    """Partition items into k seeded folds with sizes differing by <= 1."""
    if k <= 0:
        raise ValueError("k must be positive")
    if len(items) < k:
        raise ValueError(f"need at least {k} items for {k} folds, got {len(items)}")
    order = np.random.default_rng(seed).permutation(len(items))
    shuffled = [items[i] for i in order]
    return [shuffled[i::k] for i in range(k)]


def fixture_corpus_path() -> Path:
    """Bundled synthetic corpus: 20 dialogues, 3 domains, gold states."""
    return _FIXTURES / "corpus.jsonl"


def fixture_keywords_path() -> Path:
    """Keyword table driving the rule-mock backend over the fixture corpus."""
    return _FIXTURES / "keywords.json"


def fixture_replay_path() -> Path:
    """Recorded completions for the fixture corpus (default prompt settings)."""
    return _FIXTURES / "replay.jsonl"


def fixture_error_cases_path() -> Path:
    """Labelled wrong-prediction cases for the error taxonomy."""
    return _FIXTURES / "error_cases.json"

import json

import pytest

from dstgraph.datasets import (
    AnnotatedDialogue,
    CorpusFormat,
    fixture_corpus_path,
    fixture_error_cases_path,
    fixture_keywords_path,
    fixture_replay_path,
    kfold_split,
    load_corpus,
    load_dialogues,
    read_predictions,
    sniff_format,
    state_from_jsonable,
    state_to_jsonable,
    write_corpus,
    write_predictions,
)
from dstgraph.dialogue import DialogueState, Speaker, StateTriple, Turn

from conftest import make_state


def plain_record(dialogue_id="d1", gold=True):
    rec = {
        "dialogue_id": dialogue_id,
        "turns": [
            {"speaker": "user", "text": "i want thai food"},
            {"speaker": "system", "text": "any price range?"},
            {"speaker": "user", "text": "cheap please"},
        ],
    }
    if gold:
        rec["gold"] = [
            [{"domain": "restaurant", "slot": "food", "value": "thai"}],
            [
                {"domain": "restaurant", "slot": "food", "value": "thai"},
                {"domain": "restaurant", "slot": "pricerange", "value": "cheap"},
            ],
        ]
    return rec


# --- plain JSONL ---


def test_plain_jsonl_round_trip(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(plain_record()) + "\n", encoding="utf-8")
    result = load_corpus(path)
    assert result.manifest.format is CorpusFormat.PLAIN_JSONL
    assert result.manifest.dialogue_count == 1
    assert result.manifest.has_gold
    assert result.skipped == 0
    d = result.dialogues[0]
    assert d.dialogue_id == "d1"
    assert d.user_turn_count == 2
    assert d.gold_states[1] == make_state(
        ("restaurant", "food", "thai"), ("restaurant", "pricerange", "cheap")
    )
    # normal-form writer reproduces the corpus
    out = tmp_path / "copy.jsonl"
    write_corpus(out, result.dialogues)
    assert load_corpus(out).dialogues == result.dialogues


def test_plain_jsonl_counts_malformed_lines(tmp_path):
    path = tmp_path / "c.jsonl"
    bad_speaker = plain_record("d2")
    bad_speaker["turns"][0]["speaker"] = "narrator"
    bad_gold = plain_record("d3")
    bad_gold["gold"] = bad_gold["gold"][:1]  # one state for two user turns
    lines = [json.dumps(plain_record()), json.dumps(bad_speaker), json.dumps(bad_gold)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    result = load_corpus(path)
    assert result.manifest.dialogue_count == 1
    assert result.skipped == 2


def test_plain_jsonl_gold_optional(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(plain_record(gold=False)) + "\n", encoding="utf-8")
    result = load_corpus(path)
    assert result.dialogues[0].gold_states is None
    assert not result.manifest.has_gold


def test_annotated_dialogue_validates_gold_length():
    turns = (Turn(speaker=Speaker.USER, text="hi"),)
    with pytest.raises(ValueError):
        AnnotatedDialogue(dialogue_id="d", turns=turns, gold_states=(DialogueState(), DialogueState()))


# --- goal-oriented JSON with belief metadata ---


MULTIWOZ = {
    "PMUL0001.json": {
        "log": [
            {"text": "i need a cheap restaurant", "metadata": {}},
            {
                "text": "sure, which area?",
                "metadata": {
                    "restaurant": {
                        "semi": {"pricerange": "cheap", "area": "not mentioned"},
                        "book": {"people": "", "booked": []},
                    }
                },
            },
            {"text": "the centre, for 4 people", "metadata": {}},
            {
                "text": "booked!",
                "metadata": {
                    "restaurant": {
                        "semi": {"pricerange": "cheap", "area": "centre"},
                        "book": {"people": "4", "booked": [{"name": "x"}]},
                    }
                },
            },
        ]
    }
}


def test_multiwoz_loader_reads_belief_state(tmp_path):
    path = tmp_path / "data.json"
    path.write_text(json.dumps(MULTIWOZ), encoding="utf-8")
    result = load_corpus(path)
    assert result.manifest.format is CorpusFormat.MULTIWOZ_JSON
    d = result.dialogues[0]
    assert d.user_turn_count == 2
    assert [t.speaker for t in d.turns] == [
        Speaker.USER,
        Speaker.SYSTEM,
        Speaker.USER,
        Speaker.SYSTEM,
    ]
    # absent markers and the booked list are filtered out
    assert d.gold_states[0] == make_state(("restaurant", "pricerange", "cheap"))
    assert d.gold_states[1] == make_state(
        ("restaurant", "pricerange", "cheap"),
        ("restaurant", "area", "centre"),
        ("restaurant", "people", "4"),
    )


def test_multiwoz_trailing_user_turn_keeps_state(tmp_path):
    raw = {
        "A.json": {
            "log": MULTIWOZ["PMUL0001.json"]["log"][:2]
            + [{"text": "thanks, goodbye", "metadata": {}}]
        }
    }
    path = tmp_path / "data.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    d = load_corpus(path).dialogues[0]
    assert d.user_turn_count == 2
    assert d.gold_states[1] == d.gold_states[0]


# --- schema-guided JSON ---


SGD = [
    {
        "dialogue_id": "1_00000",
        "turns": [
            {
                "speaker": "USER",
                "utterance": "find me a restaurant",
                "frames": [
                    {
                        "service": "Restaurants_1",
                        "state": {"slot_values": {"cuisine": ["thai", "siamese"]}},
                    }
                ],
            },
            {"speaker": "SYSTEM", "utterance": "where?"},
            {
                "speaker": "USER",
                "utterance": "in cambridge, and a hotel too",
                "frames": [
                    {
                        "service": "Restaurants_1",
                        "state": {
                            "slot_values": {"cuisine": ["thai"], "city": ["cambridge"]}
                        },
                    },
                    {
                        "service": "Hotels_2",
                        "state": {"slot_values": {"city": ["cambridge"]}},
                    },
                ],
            },
        ],
    }
]


def test_sgd_loader_takes_first_value_and_strips_service_counter(tmp_path):
    path = tmp_path / "data.json"
    path.write_text(json.dumps(SGD), encoding="utf-8")
    result = load_corpus(path)
    assert result.manifest.format is CorpusFormat.SGD_JSON
    d = result.dialogues[0]
    assert d.gold_states[0] == make_state(("restaurants", "cuisine", "thai"))
    assert d.gold_states[1] == make_state(
        ("restaurants", "cuisine", "thai"),
        ("restaurants", "city", "cambridge"),
        ("hotels", "city", "cambridge"),
    )


# --- format sniffing and error handling ---


def test_sniff_format_by_extension_then_shape(tmp_path):
    jl = tmp_path / "a.jsonl"
    jl.write_text("{}", encoding="utf-8")
    assert sniff_format(jl) is CorpusFormat.PLAIN_JSONL
    dj = tmp_path / "b.json"
    dj.write_text("{}", encoding="utf-8")
    assert sniff_format(dj) is CorpusFormat.MULTIWOZ_JSON
    lj = tmp_path / "c.json"
    lj.write_text("[]", encoding="utf-8")
    assert sniff_format(lj) is CorpusFormat.SGD_JSON
    bad = tmp_path / "d.json"
    bad.write_text('"just a string"', encoding="utf-8")
    with pytest.raises(ValueError):
        sniff_format(bad)


def test_load_corpus_missing_file():
    with pytest.raises(FileNotFoundError):
        load_corpus("/nonexistent/corpus.jsonl")


def test_load_corpus_zero_valid_dialogues(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"dialogue_id": "d"}\n', encoding="utf-8")
    with pytest.raises(ValueError):
        load_corpus(path)


def test_load_dialogues_from_manifest(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(plain_record()) + "\n", encoding="utf-8")
    result = load_corpus(path)
    assert load_dialogues(result.manifest) == result.dialogues


# --- state (de)serialization ---


def test_state_jsonable_round_trip():
    state = make_state(("restaurant", "food", "thai"), ("hotel", "stars", "4"))
    items = state_to_jsonable(state)
    assert items == [
        {"domain": "hotel", "slot": "stars", "value": "4"},
        {"domain": "restaurant", "slot": "food", "value": "thai"},
    ]
    assert state_from_jsonable(items) == state


# --- prediction persistence ---


def test_write_read_predictions_with_meta(tmp_path):
    path = tmp_path / "pred.jsonl"
    records = [{"dialogue_id": "d1", "turn": 1, "predicted_state": []}]
    write_predictions(path, records, meta={"version": "0.1.0", "seed": 3})
    got_records, got_meta = read_predictions(path)
    assert got_records == records
    assert got_meta == {"version": "0.1.0", "seed": 3}
    first_line = json.loads(path.read_text().splitlines()[0])
    assert first_line["record_type"] == "meta"


def test_write_read_predictions_without_meta(tmp_path):
    path = tmp_path / "pred.jsonl"
    write_predictions(path, [{"a": 1}])
    records, meta = read_predictions(path)
    assert records == [{"a": 1}]
    assert meta is None


# --- fold arithmetic ---


def test_kfold_sizes_and_partition():
    items = list(range(23))
    folds = kfold_split(items, 5, seed=0)
    sizes = sorted(len(f) for f in folds)
    assert sizes == [4, 4, 5, 5, 5]
    flat = sorted(x for f in folds for x in f)
    assert flat == items


def test_kfold_deterministic_and_seed_sensitive():
    items = list(range(30))
    assert kfold_split(items, 4, seed=7) == kfold_split(items, 4, seed=7)
    assert kfold_split(items, 4, seed=7) != kfold_split(items, 4, seed=8)


def test_kfold_validates_arguments():
    with pytest.raises(ValueError):
        kfold_split([1, 2], 0, seed=0)
    with pytest.raises(ValueError):
        kfold_split([1, 2], 3, seed=0)


# --- bundled fixtures ---


def test_fixture_corpus_loads():
    result = load_corpus(fixture_corpus_path())
    assert result.manifest.dialogue_count == 20
    assert result.manifest.has_gold
    assert result.skipped == 0
    domains = {
        t.domain for d in result.dialogues for s in d.gold_states for t in s.triples()
    }
    assert domains == {"restaurant", "hotel", "attraction"}


def test_fixture_keywords_shape():
    raw = json.loads(fixture_keywords_path().read_text(encoding="utf-8"))
    assert len(raw) == 27
    for rec in raw.values():
        assert set(rec) == {"domain", "slot", "value"}


def test_fixture_replay_covers_every_user_turn():
    lines = [
        l for l in fixture_replay_path().read_text(encoding="utf-8").splitlines() if l
    ]
    result = load_corpus(fixture_corpus_path())
    total_user_turns = sum(d.user_turn_count for d in result.dialogues)
    assert len(lines) == total_user_turns == 41


def test_fixture_error_cases_shape():
    raw = json.loads(fixture_error_cases_path().read_text(encoding="utf-8"))
    assert len(raw["cases"]) == 4
    for case in raw["cases"]:
        assert {"name", "predicted", "gold", "expected"} <= set(case)

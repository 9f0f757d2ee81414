import json

import pytest

from dstgraph.backends import (
    GenerationParams,
    HttpBackend,
    MalformedResponse,
    ReplayBackend,
    ReplayMiss,
    RequestFailed,
    RuleMockBackend,
    TOKEN_ENV_VAR,
    complete,
    live_input_section,
    prompt_hash,
)


PARAMS = GenerationParams()


class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self._text = text

    def json(self):
        if self._payload is None:
            raise ValueError("not json")
        return self._payload


def completion_payload(content):
    return {"choices": [{"message": {"content": content}}]}


class FakeSession:
    """Scripted transport: pops one canned response (or exception) per post."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        item = self.script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def http_backend(script, **kw):
    sleeps = []
    backend = HttpBackend(
        "https://api.example.test/v1",
        sleep=sleeps.append,
        session=FakeSession(script),
        **kw,
    )
    return backend, sleeps


# --- generation parameters ---


def test_generation_params_defaults_and_validation():
    p = GenerationParams()
    assert p.temperature == 0.0
    assert p.max_tokens == 256
    for bad in (
        dict(temperature=-0.1),
        dict(max_tokens=0),
        dict(timeout=0),
        dict(retries=-1),
    ):
        with pytest.raises(ValueError):
            GenerationParams(**bad)


def test_prompt_hash_is_sha256_of_utf8():
    import hashlib

    text = "Track the state. café"
    assert prompt_hash(text) == hashlib.sha256(text.encode("utf-8")).hexdigest()
    assert prompt_hash(text) != prompt_hash(text + " ")


# --- HTTP client ---


def test_http_success_posts_chat_completions_shape(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
    backend, sleeps = http_backend([FakeResponse(200, completion_payload("ok"))])
    got = backend.complete("a prompt", GenerationParams(model_name="m1"))
    assert got == "ok"
    assert sleeps == []
    call = backend._session.calls[0]
    assert call["url"] == "https://api.example.test/v1/chat/completions"
    assert call["json"]["model"] == "m1"
    assert call["json"]["messages"] == [{"role": "user", "content": "a prompt"}]
    assert "Authorization" not in call["headers"]


def test_http_token_only_from_environment(monkeypatch):
    monkeypatch.setenv(TOKEN_ENV_VAR, "sk-test-123")
    backend, _ = http_backend([FakeResponse(200, completion_payload("ok"))])
    backend.complete("p", PARAMS)
    headers = backend._session.calls[0]["headers"]
    assert headers["Authorization"] == "Bearer sk-test-123"


def test_http_retries_on_429_and_5xx_with_backoff(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
    backend, sleeps = http_backend(
        [
            FakeResponse(429),
            FakeResponse(503),
            FakeResponse(200, completion_payload("eventually")),
        ]
    )
    assert backend.complete("p", GenerationParams(retries=2)) == "eventually"
    assert sleeps == [0.5, 1.0]  # exponential backoff between attempts


def test_http_retries_on_connection_error(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
    backend, _ = http_backend(
        [OSError("refused"), FakeResponse(200, completion_payload("ok"))]
    )
    assert backend.complete("p", GenerationParams(retries=1)) == "ok"


def test_http_gives_up_after_retry_budget(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
    backend, sleeps = http_backend([FakeResponse(500)] * 3)
    with pytest.raises(RequestFailed):
        backend.complete("p", GenerationParams(retries=2))
    assert len(backend._session.calls) == 3
    assert len(sleeps) == 2


def test_http_client_error_fails_immediately(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
    backend, _ = http_backend([FakeResponse(404)])
    with pytest.raises(RequestFailed):
        backend.complete("p", GenerationParams(retries=5))
    assert len(backend._session.calls) == 1  # 4xx (except 429) is not transient


def test_http_malformed_payloads(monkeypatch):
    monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
    for payload in (
        None,  # non-JSON body
        {"choices": []},
        {"choices": [{"message": {}}]},
        {"choices": [{"message": {"content": 42}}]},
    ):
        backend, _ = http_backend([FakeResponse(200, payload)])
        with pytest.raises(MalformedResponse):
            backend.complete("p", PARAMS)


def test_http_rejects_empty_arguments():
    with pytest.raises(ValueError):
        HttpBackend("")
    backend, _ = http_backend([])
    with pytest.raises(ValueError):
        backend.complete("", PARAMS)


# --- replay fixtures ---


def test_replay_store_and_complete(tmp_path):
    path = tmp_path / "replay.jsonl"
    backend = ReplayBackend(path)
    backend.store("prompt one", "completion one")
    assert backend.complete("prompt one", PARAMS) == "completion one"
    with pytest.raises(ReplayMiss) as exc_info:
        backend.complete("never recorded", PARAMS)
    assert exc_info.value.prompt_hash == prompt_hash("never recorded")


def test_replay_latest_record_wins(tmp_path):
    path = tmp_path / "replay.jsonl"
    first = ReplayBackend(path)
    first.store("p", "old")
    first.store("p", "new")
    assert first.complete("p", PARAMS) == "new"
    # appended file preserves both, reload resolves to the latest
    assert len(path.read_text().splitlines()) == 2
    assert ReplayBackend(path).complete("p", PARAMS) == "new"


def test_replay_without_path_is_memory_only():
    backend = ReplayBackend()
    backend.store("p", "c")
    assert backend.complete("p", PARAMS) == "c"


def test_replay_skips_blank_lines(tmp_path):
    path = tmp_path / "replay.jsonl"
    rec = json.dumps({"prompt_hash": prompt_hash("p"), "completion": "c"})
    path.write_text(rec + "\n\n" + "\n", encoding="utf-8")
    assert ReplayBackend(path).complete("p", PARAMS) == "c"


# --- live input extraction ---


def test_live_input_section_takes_final_block():
    prompt = (
        "Instruction: track Input: exemplar text Response: the answer "
        "Instruction: track Input: [user] i want thai food Response:"
    )
    assert live_input_section(prompt) == " [user] i want thai food "


def test_live_input_section_without_markers_returns_whole_prompt():
    assert live_input_section("no markers here") == "no markers here"


# --- keyword-rule mock ---


TABLE = {
    "thai food": ("restaurant", "food", "thai"),
    "cheap": ("restaurant", "pricerange", "cheap"),
    "in the centre": ("restaurant", "area", "centre"),
    "Expensive": ("hotel", "pricerange", "expensive"),
}


def wrap(text):
    return f"Instruction: track the state Input: {text} Response:"


def test_rulemock_emits_canonical_bracketed_lists():
    backend = RuleMockBackend(TABLE)
    got = backend.complete(wrap("[user] somewhere cheap with thai food"), PARAMS)
    assert got == (
        "Domain : [`restaurant', `restaurant'] , "
        "Slot : [`food', `pricerange'] , "
        "Value : [`thai', `cheap']"
    )


def test_rulemock_latest_mention_wins_for_same_key():
    backend = RuleMockBackend(TABLE)
    got = backend.complete(wrap("cheap for now, actually Expensive"), PARAMS)
    # different domains, so both keys survive
    assert "`expensive'" in got and "`cheap'" in got
    backend2 = RuleMockBackend(
        {"cheap": ("restaurant", "pricerange", "cheap"),
         "moderately priced": ("restaurant", "pricerange", "moderate")}
    )
    got2 = backend2.complete(wrap("cheap... no wait, moderately priced"), PARAMS)
    assert got2 == "Domain : [`restaurant'] , Slot : [`pricerange'] , Value : [`moderate']"


def test_rulemock_matches_are_case_insensitive():
    backend = RuleMockBackend(TABLE)
    got = backend.complete(wrap("EXPENSIVE please"), PARAMS)
    assert "`expensive'" in got


def test_rulemock_scans_live_input_only():
    backend = RuleMockBackend(TABLE)
    prompt = (
        "Instruction: track Input: [user] thai food Response: "
        "Domain : [`restaurant'] , Slot : [`food'] , Value : [`thai'] "
        "Instruction: track Input: [user] just cheap Response:"
    )
    got = backend.complete(prompt, PARAMS)
    assert got == "Domain : [`restaurant'] , Slot : [`pricerange'] , Value : [`cheap']"


def test_rulemock_no_hits_gives_empty_lists():
    backend = RuleMockBackend(TABLE)
    assert (
        backend.complete(wrap("nothing relevant"), PARAMS)
        == "Domain : [] , Slot : [] , Value : []"
    )


def test_rulemock_from_json_round_trip(tmp_path):
    path = tmp_path / "kw.json"
    path.write_text(
        json.dumps(
            {"thai food": {"domain": "restaurant", "slot": "food", "value": "thai"}}
        ),
        encoding="utf-8",
    )
    backend = RuleMockBackend.from_json(path)
    got = backend.complete(wrap("thai food"), PARAMS)
    assert got == "Domain : [`restaurant'] , Slot : [`food'] , Value : [`thai']"


def test_rulemock_rejects_empty_table():
    with pytest.raises(ValueError):
        RuleMockBackend({})


# --- dispatcher ---


def test_complete_dispatches_to_any_backend():
    backend = ReplayBackend()
    backend.store("p", "c")
    assert complete(backend, "p", PARAMS) == "c"

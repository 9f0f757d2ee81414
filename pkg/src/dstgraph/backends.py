"""Completion backends: a chat-completions HTTP client plus two
deterministic offline stand-ins (replay fixtures and a keyword-rule mock).

Replay and RuleMock make the whole pipeline runnable with no network and
bit-identical across process restarts, which the golden-file tests rely on.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .dialogue import DialogueState, StateTriple, normalize_text
from .parsing import format_state


class BackendError(Exception):
    """Base class for completion failures; maps to the backend exit code."""


class ReplayMiss(BackendError):
    def __init__(self, prompt_hash: str):
        super().__init__(f"no recorded completion for prompt hash {prompt_hash}")
        self.prompt_hash = prompt_hash


class MalformedResponse(BackendError):
    pass


class RequestFailed(BackendError):
    """Transport failure or retry budget exhausted."""


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    max_tokens: int = 256
    model_name: str = ""
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


def prompt_hash(prompt: str) -> str:
    """Stable fixture key: SHA-256 of the UTF-8 prompt."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


TOKEN_ENV_VAR = "DSTGRAPH_API_TOKEN"


class HttpBackend:
    """Client for a chat-completions wire-protocol endpoint.

    The bearer token comes from the environment only (never a CLI flag).
    Transient failures (connection errors, HTTP 429/5xx) retry with
    exponential backoff up to ``params.retries`` extra attempts.
    """

    kind = "http"

    def __init__(
        self,
        base_url: str,
        token_env: str = TOKEN_ENV_VAR,
        sleep: Callable[[float], None] = time.sleep,
        session=None,
    ):
        if not base_url:
            raise ValueError("base_url must be non-empty")
        self.base_url = base_url.rstrip("/")
        self.token_env = token_env
        self._sleep = sleep
        if session is None:
            import requests

            session = requests.Session()
        self._session = session

    def complete(self, prompt: str, params: GenerationParams) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        url = f"{self.base_url}/chat/completions"

        last_error: Exception | None = None
        for attempt in range(params.retries + 1):
            if attempt:
                self._sleep(0.5 * 2 ** (attempt - 1))
            try:
                resp = self._session.post(
                    url, json=body, headers=headers, timeout=params.timeout
                )
            except Exception as exc:  # connection errors, timeouts
                last_error = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = RequestFailed(f"HTTP {resp.status_code} from {url}")
                continue
            if resp.status_code != 200:
                raise RequestFailed(f"HTTP {resp.status_code} from {url}")
            try:
                payload = resp.json()
                content = payload["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(f"completion field missing: {exc}") from exc
            if not isinstance(content, str):
                raise MalformedResponse("completion content is not a string")
            return content
        raise RequestFailed(
            f"gave up after {params.retries + 1} attempts: {last_error}"
        ) from last_error


class ReplayBackend:
    """Fixture-backed completions keyed by prompt hash.

    Records live in a JSONL file of {prompt_hash, completion}; the latest
    record for a hash wins, so fixtures can be amended append-only.
    """

    kind = "replay"

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._completions: dict[str, str] = {}
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._completions[rec["prompt_hash"]] = rec["completion"]

    def complete(self, prompt: str, params: GenerationParams) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        key = prompt_hash(prompt)
        if key not in self._completions:
            raise ReplayMiss(key)
        return self._completions[key]

    def store(self, prompt: str, completion: str) -> None:
        """Record a completion; later stores for the same prompt win."""
        key = prompt_hash(prompt)
        self._completions[key] = completion
        if self.path is not None:
            record = json.dumps(
                {"prompt_hash": key, "completion": completion}, ensure_ascii=False
            )
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(record + "\n")


def replay_store(backend: ReplayBackend, prompt: str, completion: str) -> None:
    backend.store(prompt, completion)


_INPUT_MARKER = "Input:"
_RESPONSE_MARKER = "Response:"


def live_input_section(prompt: str) -> str:
    """The text of the prompt's final Input block, exemplars excluded."""
    start = prompt.rfind(_INPUT_MARKER)
    if start < 0:
        return prompt
    section = prompt[start + len(_INPUT_MARKER) :]
    end = section.rfind(_RESPONSE_MARKER)
    if end >= 0:
        section = section[:end]
    return section


class RuleMockBackend:
    """Deterministic completions from a keyword table.

    Scans only the live input section for keyword substrings and emits the
    matched triples in canonical completion format.  Matches are ordered
    by first occurrence so a later mention overrides an earlier value for
    the same (domain, slot) key.
    """

    kind = "rulemock"

    def __init__(self, keyword_table: dict[str, tuple[str, str, str]]):
        if not keyword_table:
            raise ValueError("keyword table must be non-empty")
        self._table = {
            normalize_text(k): (str(d), str(s), str(v))
            for k, (d, s, v) in keyword_table.items()
        }

    @classmethod
    def from_json(cls, path: str | Path) -> "RuleMockBackend":
        """Load {keyword: {domain, slot, value}} from a JSON file."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        table = {
            k: (rec["domain"], rec["slot"], rec["value"]) for k, rec in raw.items()
        }
        return cls(table)

    def complete(self, prompt: str, params: GenerationParams) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        text = normalize_text(live_input_section(prompt))
        hits = []
        for keyword, triple in self._table.items():
            pos = text.find(keyword)
            if pos >= 0:
                hits.append((pos, keyword, triple))
        hits.sort()
        triples = [StateTriple(domain=d, slot=s, value=v) for _, _, (d, s, v) in hits]
        return format_state(DialogueState(triples))


Backend = HttpBackend | ReplayBackend | RuleMockBackend


def complete(backend: Backend, prompt: str, params: GenerationParams) -> str:
    """Obtain a completion for a rendered prompt from any backend."""
    return backend.complete(prompt, params)

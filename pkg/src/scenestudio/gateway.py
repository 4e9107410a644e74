"""Chat-completion gateway with live, replay, and mock backends.

Every agent exchange flows through one Gateway. Requests are content-
addressed: fingerprint = sha256 over system, user, and tag joined by a unit
separator (sampling knobs stay out of the key). Replay cassettes are keyed
by that fingerprint (suffixed with "#<attempt>" past the first attempt), so
a recorded session replays without any network access and a changed prompt
misses loudly instead of silently reusing a stale answer.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .callspec import FailureRecord
from .hashing import sha256_hex

CASSETTE_VERSION = 1
BACKEND_NAMES = ("live", "replay", "mock")


@dataclass(frozen=True)
class ChatRequest:
    """One system+user exchange. `tag` names the agent step (for humans and
    for scripted mocks); it participates in the fingerprint. The sampling
    knobs do not: a cassette recorded at one temperature replays at any."""

    system: str
    user: str
    tag: str
    temperature: float = 0.0
    max_output: int = 1024

    def __post_init__(self):
        if not self.system or not self.user:
            raise ValueError("chat request needs non-empty system and user text")
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output <= 0:
            raise ValueError("max_output must be positive")


@dataclass(frozen=True)
class ChatResponse:
    """A completed exchange: the text plus where and when it came from."""

    text: str
    backend: str
    latency: float
    attempt: int

    def __post_init__(self):
        if self.backend not in BACKEND_NAMES:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.attempt < 1:
            raise ValueError("attempt counts from 1")


def fingerprint(request: ChatRequest) -> str:
    return sha256_hex("\x1f".join((request.system, request.user, request.tag)))


def cassette_key(request: ChatRequest, attempt: int) -> str:
    fp = fingerprint(request)
    return fp if attempt <= 1 else f"{fp}#{attempt}"


class GatewayError(RuntimeError):
    pass


class CassetteMiss(GatewayError):
    def __init__(self, key: str, tag: str):
        super().__init__(f"cassette has no response for key {key} (tag {tag})")
        self.key = key
        self.tag = tag


class RetryExhausted(GatewayError):
    """Every attempt failed validation; carries the per-attempt records."""

    def __init__(self, attempts: int, failures: list[FailureRecord]):
        super().__init__(f"no valid response after {attempts} attempt(s)")
        self.attempts = attempts
        self.failures = list(failures)


class Cassette:
    """Recorded responses, keyed by request fingerprint."""

    def __init__(self, responses: dict[str, str] | None = None):
        self.responses = dict(responses or {})

    def __len__(self) -> int:
        return len(self.responses)

    def put(self, request: ChatRequest, attempt: int, response: str):
        self.responses[cassette_key(request, attempt)] = response

    def get(self, request: ChatRequest, attempt: int) -> str | None:
        return self.responses.get(cassette_key(request, attempt))

    def save(self, path: str | Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"version": CASSETTE_VERSION, "responses": self.responses}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict) or doc.get("version") != CASSETTE_VERSION:
            raise GatewayError(f"{path}: not a version-{CASSETTE_VERSION} cassette")
        responses = doc.get("responses")
        if not isinstance(responses, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in responses.items()
        ):
            raise GatewayError(f"{path}: cassette responses must map strings to strings")
        return cls(responses)


class ReplayBackend:
    name = "replay"

    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def complete(self, request: ChatRequest, attempt: int) -> str:
        response = self.cassette.get(request, attempt)
        if response is None:
            raise CassetteMiss(cassette_key(request, attempt), request.tag)
        return response


class MockBackend:
    """Deterministic offline stand-in.

    `scripted` maps a request tag to a canned response, or to a list consumed
    one entry per call with that tag (the last entry repeats). Unscripted tags
    fall through to `responder(request, attempt)`; with no responder they
    fail loudly rather than inventing text.
    """

    name = "mock"

    def __init__(self, responder=None, scripted: dict[str, str | list[str]] | None = None):
        self.responder = responder
        self.scripted = dict(scripted or {})
        self._cursor: dict[str, int] = {}

    def complete(self, request: ChatRequest, attempt: int) -> str:
        if request.tag in self.scripted:
            entry = self.scripted[request.tag]
            if isinstance(entry, str):
                return entry
            i = self._cursor.get(request.tag, 0)
            self._cursor[request.tag] = i + 1
            return entry[min(i, len(entry) - 1)]
        if self.responder is None:
            raise GatewayError(f"responder-unset({request.tag})")
        return self.responder(request, attempt)


class LiveBackend:
    """OpenAI-style chat-completions over HTTP.

    Reads LLM_ENDPOINT (full URL of the completions route), LLM_MODEL, and
    optionally LLM_API_KEY from the environment when not passed explicitly.
    """

    name = "live"

    def __init__(self, endpoint: str | None = None, model: str | None = None,
                 api_key: str | None = None, timeout: float = 120.0):
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT", "")
        self.model = model or os.environ.get("LLM_MODEL", "")
        self.api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY", "")
        self.timeout = timeout
        if not self.endpoint or not self.model:
            raise GatewayError("live backend needs LLM_ENDPOINT and LLM_MODEL")

    def complete(self, request: ChatRequest, attempt: int) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output,
        }
        resp = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        if resp.status_code != 200:
            raise GatewayError(f"live backend HTTP {resp.status_code}: {resp.text[:500]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise GatewayError(f"live backend returned an unexpected payload: {e}") from e


@dataclass
class Exchange:
    """One logged request/response pair. Latency is kept off this record so
    transcripts stay byte-identical across runs."""

    tag: str
    attempt: int
    fingerprint: str
    system: str
    user: str
    response: str
    backend: str

    def to_plain(self) -> dict:
        return {
            "tag": self.tag,
            "attempt": self.attempt,
            "fingerprint": self.fingerprint,
            "system": self.system,
            "user": self.user,
            "response": self.response,
            "backend": self.backend,
        }


@dataclass
class Gateway:
    """Backend plus exchange log plus optional recording cassette."""

    backend: object
    record_to: Cassette | None = None
    exchanges: list[Exchange] = field(default_factory=list)

    def complete(self, request: ChatRequest, attempt: int = 1) -> ChatResponse:
        started = time.monotonic()
        text = self.backend.complete(request, attempt)
        latency = time.monotonic() - started
        if self.record_to is not None:
            self.record_to.put(request, attempt, text)
        self.exchanges.append(
            Exchange(
                tag=request.tag,
                attempt=attempt,
                fingerprint=fingerprint(request),
                system=request.system,
                user=request.user,
                response=text,
                backend=self.backend.name,
            )
        )
        return ChatResponse(text=text, backend=self.backend.name, latency=latency, attempt=attempt)

    def complete_with_retry(self, make_request, attempts: int, validate,
                            stage: str, instruction_index: int = 0,
                            function: str | None = None) -> tuple[ChatResponse, list[FailureRecord]]:
        """Run up to `attempts` exchanges until one validates.

        `make_request(attempt, last_failure)` builds the request for each
        attempt (a bare ChatRequest is accepted for single-shot use).
        `validate(text, attempt) -> FailureRecord | None` judges a response.
        Returns the first accepted response and the failures recorded on the
        way; raises RetryExhausted carrying every record when no attempt
        validates. A cassette miss exhausts immediately: replaying past a
        hole would diverge from the recorded run.
        """
        if isinstance(make_request, ChatRequest):
            fixed = make_request
            make_request = lambda attempt, last_failure: fixed
        failures: list[FailureRecord] = []
        last_failure: FailureRecord | None = None
        for attempt in range(1, attempts + 1):
            request = make_request(attempt, last_failure)
            try:
                response = self.complete(request, attempt)
            except CassetteMiss as e:
                failures.append(
                    FailureRecord(
                        stage=stage,
                        kind="cassette-miss",
                        detail=str(e),
                        attempt=attempt,
                        instruction_index=instruction_index,
                        function=function,
                    )
                )
                raise RetryExhausted(attempt, failures) from e
            failure = validate(response.text, attempt)
            if failure is None:
                return response, failures
            failures.append(failure)
            last_failure = failure
        raise RetryExhausted(attempts, failures)


def replay_gateway(cassette_path: str | Path) -> Gateway:
    return Gateway(ReplayBackend(Cassette.load(cassette_path)))

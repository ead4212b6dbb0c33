"""Chat-completion gateway with record/replay caching.

Every request goes through :meth:`Gateway.complete`. In ``live`` mode it hits
an OpenAI-compatible ``/chat/completions`` endpoint, in ``record`` mode it
does the same and appends the outcome to a JSONL cache, and in ``replay``
mode it answers from that cache without touching the network.

Cache file format (one JSON object per line)::

    {"key": "<sha256 hex>", "request": {...}, "outcome": {...}, "timestamp": "..."}
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Union

import httpx

from .errors import CacheMiss, InvalidArgument, MalformedRecord

log = logging.getLogger(__name__)

LIVE, RECORD, REPLAY = "live", "record", "replay"
CACHE_MODES = (LIVE, RECORD, REPLAY)
ROLES = ("system", "user", "assistant")

TRANSIENT_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise InvalidArgument(f"bad role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    provider_id: str
    model: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        object.__setattr__(self, "temperature", float(self.temperature))
        if not any(m.role == "user" for m in self.messages):
            raise InvalidArgument("a chat request needs at least one user message")
        if self.temperature < 0:
            raise InvalidArgument("temperature must be >= 0")

    def to_dict(self) -> dict:
        return {
            "provider_id": self.provider_id,
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChatRequest":
        return cls(
            provider_id=d["provider_id"],
            model=d["model"],
            messages=tuple(Message(m["role"], m["content"]) for m in d["messages"]),
            temperature=d.get("temperature", 0.0),
            max_tokens=d.get("max_tokens"),
        )


# --- outcomes -------------------------------------------------------------

@dataclass(frozen=True)
class Text:
    content: str


@dataclass(frozen=True)
class ContentFiltered:
    detail: str = ""


@dataclass(frozen=True)
class TransportError:
    detail: str


@dataclass(frozen=True)
class MalformedResponse:
    detail: str


ChatOutcome = Union[Text, ContentFiltered, TransportError, MalformedResponse]

_KINDS = {Text: "text", ContentFiltered: "content_filtered",
          TransportError: "transport_error", MalformedResponse: "malformed_response"}
_BY_KIND = {v: k for k, v in _KINDS.items()}


def outcome_to_dict(outcome: ChatOutcome) -> dict:
    if isinstance(outcome, Text):
        return {"kind": "text", "content": outcome.content}
    return {"kind": _KINDS[type(outcome)], "detail": outcome.detail}


def outcome_from_dict(d: dict) -> ChatOutcome:
    cls = _BY_KIND.get(d.get("kind"))
    if cls is None:
        raise MalformedRecord(f"unknown outcome kind {d.get('kind')!r}")
    if cls is Text:
        return Text(d["content"])
    return cls(d.get("detail", ""))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_key(request: ChatRequest | dict) -> str:
    """Lowercase hex SHA-256 of the sorted-key, whitespace-free request JSON."""
    if isinstance(request, dict):
        request = ChatRequest.from_dict(request)
    return hashlib.sha256(canonical_json(request.to_dict()).encode("utf-8")).hexdigest()


# --- provider profiles ----------------------------------------------------

@dataclass
class ProviderProfile:
    id: str
    model: str
    endpoint: str = ""
    api_key_env: str = ""
    #: wraps the prompt before dispatch, e.g. "[INST] {prompt} [/INST]"
    instruction_template: str = "{prompt}"
    system_prompt: Optional[str] = None
    max_tokens: Optional[int] = None
    max_in_flight: int = 4
    auth_header: str = "Authorization"

    def wrap(self, prompt: str) -> str:
        return self.instruction_template.replace("{prompt}", prompt)

    def headers(self) -> dict:
        key = os.environ.get(self.api_key_env, "") if self.api_key_env else ""
        if not key:
            return {}
        if self.auth_header.lower() == "authorization":
            return {"Authorization": f"Bearer {key}"}
        return {self.auth_header: key}

    def request(self, prompt: str) -> ChatRequest:
        messages = []
        if self.system_prompt:
            messages.append(Message("system", self.system_prompt))
        messages.append(Message("user", self.wrap(prompt)))
        return ChatRequest(self.id, self.model, tuple(messages), 0.0, self.max_tokens)


class FifoLimiter:
    """Counting semaphore that admits waiters strictly in arrival order."""

    def __init__(self, slots: int):
        if slots < 1:
            raise InvalidArgument("need at least one slot")
        self._free = slots
        self._queue: deque = deque()
        self._cond = threading.Condition()

    def __enter__(self):
        ticket = object()
        with self._cond:
            self._queue.append(ticket)
            while self._queue[0] is not ticket or self._free == 0:
                self._cond.wait()
            self._queue.popleft()
            self._free -= 1
            self._cond.notify_all()
        return self

    def __exit__(self, *exc):
        with self._cond:
            self._free += 1
            self._cond.notify_all()


# --- cache ----------------------------------------------------------------

@dataclass
class CacheRecord:
    key: str
    request: ChatRequest
    outcome: ChatOutcome
    timestamp: str = ""

    def to_json(self) -> str:
        return canonical_json({
            "key": self.key,
            "request": self.request.to_dict(),
            "outcome": outcome_to_dict(self.outcome),
            "timestamp": self.timestamp,
        })


class ReplayCache:
    """Append-only JSONL cache. Later records for the same key win."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._records: dict[str, CacheRecord] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    req = ChatRequest.from_dict(d["request"])
                    rec = CacheRecord(d["key"], req, outcome_from_dict(d["outcome"]),
                                      d.get("timestamp", ""))
                except (KeyError, TypeError, ValueError, InvalidArgument) as exc:
                    raise MalformedRecord(f"bad cache line in {self.path}: {exc}", i) from exc
                self._records[rec.key] = rec

    def __len__(self):
        return len(self._records)

    def __contains__(self, key):
        return key in self._records

    def get(self, key: str) -> CacheRecord | None:
        return self._records.get(key)

    def put(self, record: CacheRecord) -> None:
        with self._lock:
            self._records[record.key] = record
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write(record.to_json() + "\n")


# --- gateway --------------------------------------------------------------

def _is_content_filter_error(body) -> bool:
    if not isinstance(body, dict):
        return False
    err = body.get("error")
    if not isinstance(err, dict):
        return False
    if err.get("code") == "content_filter":
        return True
    inner = err.get("innererror")
    return isinstance(inner, dict) and inner.get("code") == "ResponsibleAIPolicyViolation"


def parse_completion(body) -> ChatOutcome:
    try:
        choice = body["choices"][0]
    except (KeyError, IndexError, TypeError):
        return MalformedResponse("response has no choices")
    if choice.get("finish_reason") == "content_filter":
        return ContentFiltered("finish_reason=content_filter")
    content = (choice.get("message") or {}).get("content")
    if not isinstance(content, str):
        return MalformedResponse("choice has no message content")
    return Text(content)


@dataclass
class Gateway:
    profiles: dict[str, ProviderProfile]
    mode: str = REPLAY
    cache: ReplayCache = field(default_factory=ReplayCache)
    client: Optional[httpx.Client] = None
    max_retries: int = 3
    backoff: float = 1.0
    timeout: float = 120.0
    sleep: Callable[[float], None] = time.sleep

    def __post_init__(self):
        if self.mode not in CACHE_MODES:
            raise InvalidArgument(f"cache mode must be one of {CACHE_MODES}, got {self.mode!r}")
        self._limiters = {pid: FifoLimiter(p.max_in_flight) for pid, p in self.profiles.items()}
        self._client_lock = threading.Lock()

    def _http(self) -> httpx.Client:
        with self._client_lock:
            if self.client is None:
                self.client = httpx.Client(timeout=self.timeout)
            return self.client

    def chat(self, provider_id: str, prompt: str) -> ChatOutcome:
        """Send ``prompt`` as a single user turn through a provider profile."""
        try:
            profile = self.profiles[provider_id]
        except KeyError:
            raise InvalidArgument(f"no provider profile {provider_id!r}") from None
        return self.complete(profile.request(prompt))

    def complete(self, request: ChatRequest) -> ChatOutcome:
        if request.temperature != 0:
            raise InvalidArgument("this harness only issues temperature-0 requests")
        key = canonical_key(request)
        if self.mode == REPLAY:
            rec = self.cache.get(key)
            if rec is None:
                raise CacheMiss(key)
            return rec.outcome
        outcome = self._call_live(request)
        if isinstance(outcome, ContentFiltered):
            log.warning("content filter rejected request %s (%s)", key[:12], request.provider_id)
        if self.mode == RECORD:
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            self.cache.put(CacheRecord(key, request, outcome, stamp))
        return outcome

    def _call_live(self, request: ChatRequest) -> ChatOutcome:
        profile = self.profiles.get(request.provider_id)
        if profile is None or not profile.endpoint:
            return TransportError(f"no endpoint configured for {request.provider_id!r}")
        payload = {
            "model": request.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        limiter = self._limiters.setdefault(request.provider_id, FifoLimiter(profile.max_in_flight))
        detail = ""
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with limiter:
                    resp = self._http().post(profile.endpoint, json=payload,
                                             headers=profile.headers())
            except httpx.TransportError as exc:
                detail = f"{type(exc).__name__}: {exc}"
                continue
            try:
                body = resp.json()
            except ValueError:
                body = None
            if resp.status_code == 200:
                if body is None:
                    return MalformedResponse("response body is not JSON")
                return parse_completion(body)
            if _is_content_filter_error(body):
                return ContentFiltered(f"HTTP {resp.status_code}")
            detail = f"HTTP {resp.status_code}"
            if resp.status_code not in TRANSIENT_STATUS:
                return TransportError(detail)
        return TransportError(f"gave up after {self.max_retries} retries: {detail}")

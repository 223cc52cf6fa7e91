"""Prompt construction, chat endpoints, transcripts and replay.

One experiment is one conversation: the initial prompt, then one prompt per
cell, with the full history resent on every turn. Every exchange is appended
to a JSON Lines transcript before the next request goes out, so an aborted
run always leaves a valid prefix on disk.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from os import PathLike
from pathlib import Path
from typing import Callable, Iterable, Iterator, Protocol, Sequence, Union

import httpx

from .algebra import (
    NON_EQ_PAIRS,
    RELATIONS,
    BaseRelation,
    Lexicon,
    RCC8Error,
    _data_text,
    cell_key,
    lexicon,
)

log = logging.getLogger(__name__)


class EndpointError(RCC8Error):
    """The endpoint could not produce a response."""

    def __init__(self, msg: str, summary: "RunSummary | None" = None):
        super().__init__(msg)
        self.summary = summary


class TranscriptMismatch(RCC8Error):
    pass


class TranscriptExhausted(EndpointError):
    pass


class ExperimentKind(str, Enum):
    COMPOSITION = "composition"
    PREFERRED = "preferred"
    CONTINUITY = "continuity"


Cell = Union[tuple[BaseRelation, BaseRelation], BaseRelation]


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    anonymize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))

    @property
    def lexicon(self) -> Lexicon:
        return lexicon(self.anonymize)

    @property
    def cells(self) -> tuple[Cell, ...]:
        if self.kind is ExperimentKind.CONTINUITY:
            return RELATIONS
        return NON_EQ_PAIRS


def _template(name: str) -> str:
    return _data_text(f"prompts/{name}.txt").strip()


def build_initial_prompt(spec: ExperimentSpec) -> str:
    tokens = {r.name: spec.lexicon.token(r) for r in RELATIONS}
    definitions = _template("definitions").format(**tokens)
    calculus = "" if spec.anonymize else _template("calculus_sentence") + " "
    return _template(f"{spec.kind.value}_initial").format(
        calculus=calculus, definitions=definitions)


def build_cell_prompt(spec: ExperimentSpec, cell: Cell) -> str:
    lex = spec.lexicon
    if spec.kind is ExperimentKind.CONTINUITY:
        if not isinstance(cell, BaseRelation):
            raise ValueError("continuity cells are single relations")
        return _template("continuity_cell").format(r=lex.token(cell))
    r1, r2 = cell
    if BaseRelation.EQ in (r1, r2):
        raise ValueError("EQ cells are not part of the composition experiments")
    return _template(f"{spec.kind.value}_cell").format(r1=lex.token(r1), r2=lex.token(r2))


def iter_prompts(spec: ExperimentSpec) -> Iterator[tuple[str, str]]:
    """Yield ``(cell key, prompt)`` for the whole conversation, initial first."""
    yield "initial", build_initial_prompt(spec)
    for cell in spec.cells:
        yield cell_key(cell), build_cell_prompt(spec, cell)


@dataclass(frozen=True)
class TranscriptRecord:
    experiment: str
    anonymize: bool
    cell: str
    prompt: str
    response: str
    model: str
    temperature: float
    timestamp: str
    sequence: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_json(cls, line: str) -> "TranscriptRecord":
        data = json.loads(line)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValueError(f"bad transcript record: {exc}") from exc


class TranscriptStore:
    """Append-only JSON Lines sink; one store per run."""

    def __init__(self, path: str | PathLike[str]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next = 0

    def append(self, record: TranscriptRecord) -> None:
        with self._lock:
            if record.sequence != self._next:
                raise ValueError(f"expected sequence {self._next}, got {record.sequence}")
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._next += 1


def read_transcript(path: str | PathLike[str]) -> list[TranscriptRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [TranscriptRecord.from_json(ln) for ln in lines if ln.strip()]


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    temperature: float = 0.0
    timeout: float = 60.0
    retries: int = 3
    credential_env: str = "OPENAI_API_KEY"
    path: str = "/v1/chat/completions"
    min_interval: float = 1.0
    system_prompt: str | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.retries < 0:
            raise ValueError("retry count must be >= 0")

    @property
    def url(self) -> str:
        if self.base_url.rstrip("/").endswith(self.path.rstrip("/")):
            return self.base_url
        return self.base_url.rstrip("/") + "/" + self.path.lstrip("/")


Message = dict  # {"role": ..., "content": ...}


class Endpoint(Protocol):
    model: str
    temperature: float

    def complete(self, messages: Sequence[Message]) -> str: ...


class ChatEndpoint:
    """Chat-completions client over HTTP.

    Retries transport errors and 429/5xx responses with exponential backoff
    (1s, 2s, 4s, ...) before raising :class:`EndpointError`.
    """

    def __init__(self, cfg: EndpointConfig, client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.monotonic):
        self.cfg = cfg
        self.model = cfg.model
        self.temperature = cfg.temperature
        self._client = client or httpx.Client(timeout=cfg.timeout)
        self._sleep = sleep
        self._clock = clock
        self._last: float | None = None

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.cfg.credential_env) if self.cfg.credential_env else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _throttle(self) -> None:
        if self._last is not None and self.cfg.min_interval > 0:
            wait = self.cfg.min_interval - (self._clock() - self._last)
            if wait > 0:
                self._sleep(wait)
        self._last = self._clock()

    def complete(self, messages: Sequence[Message]) -> str:
        msgs = list(messages)
        if self.cfg.system_prompt:
            msgs = [{"role": "system", "content": self.cfg.system_prompt}] + msgs
        body = {"model": self.cfg.model, "temperature": self.cfg.temperature, "messages": msgs}
        last_err: Exception | None = None
        for attempt in range(self.cfg.retries + 1):
            if attempt:
                self._sleep(2 ** (attempt - 1))
            self._throttle()
            try:
                resp = self._client.post(self.cfg.url, json=body, headers=self._headers(),
                                         timeout=self.cfg.timeout)
            except httpx.HTTPError as exc:
                last_err = exc
                log.warning("request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_err = EndpointError(f"HTTP {resp.status_code}")
                log.warning("HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise EndpointError(f"malformed completion payload: {exc}") from exc
        raise EndpointError(f"giving up after {self.cfg.retries + 1} attempts: {last_err}")


class ReplayEndpoint:
    """Serves stored responses in order, checking each prompt against the
    transcript."""

    def __init__(self, records: Iterable[TranscriptRecord]):
        self.records = sorted(records, key=lambda r: r.sequence)
        self.model = self.records[0].model if self.records else "replay"
        self.temperature = self.records[0].temperature if self.records else 0.0
        self._pos = 0

    def complete(self, messages: Sequence[Message]) -> str:
        if self._pos >= len(self.records):
            raise TranscriptExhausted(f"transcript ends after {len(self.records)} records")
        prompt = messages[-1]["content"]
        rec = self.records[self._pos]
        if prompt != rec.prompt:
            raise TranscriptMismatch(
                f"prompt at sequence {rec.sequence} ({rec.cell}) differs from transcript")
        self._pos += 1
        return rec.response


class ScriptedEndpoint:
    """Offline endpoint answering each prompt with ``responder(prompt)``;
    useful for dry runs and tests."""

    def __init__(self, responder: Callable[[str], str], model: str = "scripted",
                 temperature: float = 0.0):
        self.responder = responder
        self.model = model
        self.temperature = temperature
        self.calls: list[list[Message]] = []

    def complete(self, messages: Sequence[Message]) -> str:
        self.calls.append([dict(m) for m in messages])
        return self.responder(messages[-1]["content"])


@dataclass
class RunSummary:
    exchanges: int = 0
    failures: int = 0
    aborted_at: int | None = None
    records: list[TranscriptRecord] = field(default_factory=list)


def run_experiment(spec: ExperimentSpec, endpoint: Endpoint,
                   sink: TranscriptStore | None = None,
                   now: Callable[[], datetime] = lambda: datetime.now(timezone.utc)
                   ) -> RunSummary:
    """Run one experiment as a single conversation.

    Never sends correctness feedback. On endpoint failure the summary (with
    ``aborted_at`` set to the failing sequence index) is attached to the
    raised :class:`EndpointError`.
    """
    summary = RunSummary()
    messages: list[Message] = []
    for seq, (cell, prompt) in enumerate(iter_prompts(spec)):
        messages.append({"role": "user", "content": prompt})
        try:
            response = endpoint.complete(messages)
        except EndpointError as exc:
            summary.failures += 1
            summary.aborted_at = seq
            exc.summary = summary
            raise
        messages.append({"role": "assistant", "content": response})
        rec = TranscriptRecord(
            experiment=spec.kind.value, anonymize=spec.anonymize, cell=cell,
            prompt=prompt, response=response, model=endpoint.model,
            temperature=float(endpoint.temperature),
            timestamp=now().isoformat(timespec="seconds"), sequence=seq)
        if sink is not None:
            sink.append(rec)
        summary.records.append(rec)
        summary.exchanges += 1
    return summary


def replay(records: Iterable[TranscriptRecord]) -> ReplayEndpoint:
    return ReplayEndpoint(records)


def spec_for_transcript(records: Sequence[TranscriptRecord]) -> ExperimentSpec:
    if not records:
        raise ValueError("empty transcript")
    first = records[0]
    return ExperimentSpec(ExperimentKind(first.experiment), first.anonymize)


def check_transcript(records: Sequence[TranscriptRecord]) -> ExperimentSpec:
    """Validate a stored run by replaying it against freshly built prompts."""
    spec = spec_for_transcript(records)
    seqs = [r.sequence for r in records]
    if seqs != list(range(len(records))):
        raise ValueError("transcript sequence indices are not consecutive from 0")
    if records[0].cell != "initial":
        raise ValueError("record 0 must be the initial prompt")
    ep = ReplayEndpoint(records)
    messages: list[Message] = []
    for _, prompt in list(iter_prompts(spec))[:len(records)]:
        messages.append({"role": "user", "content": prompt})
        messages.append({"role": "assistant", "content": ep.complete(messages)})
    return spec

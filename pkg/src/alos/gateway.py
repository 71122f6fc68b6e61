"""Chat-completion and embedding backends.

Two interchangeable backends: ``LiveBackend`` speaks the common
``/v1/chat/completions`` + ``/v1/embeddings`` wire format over HTTP with
retry/backoff, and ``MockBackend`` is a fully deterministic offline
stand-in. The mock answers object-creation prompts with parseable ALO
markdown and everything else with a fixed definition skeleton; above
temperature zero it injects seeded perturbations (synonym swaps, modifier
insertions, list reordering) whose count grows linearly with temperature,
so similarity-versus-temperature trends are testable without a network.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import httpx

from . import canned, parser
from .errors import (
    BackendError,
    EmptyInputError,
    HttpError,
    MalformedResponseError,
    RateLimitedError,
    TimeoutError_,
)
from .model import ALO

DEFAULT_EMBEDDING_DIM = 1536
DEFAULT_TEMPERATURE = 0.7

# How many perturbation operations one unit of temperature buys in the mock.
PERTURBATIONS_PER_UNIT = 4


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    temperature: float = DEFAULT_TEMPERATURE
    seed: int = 0  # mock only
    maxTokens: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        for i, msg in enumerate(self.messages):
            if msg.role not in ("system", "user", "assistant"):
                raise ValueError(f"unknown role {msg.role!r}")
            if msg.role == "system" and i != 0:
                raise ValueError("the system message must come first")
        if self.maxTokens is not None and self.maxTokens <= 0:
            raise ValueError("maxTokens must be > 0")

    def user_text(self) -> str:
        for msg in reversed(self.messages):
            if msg.role == "user":
                return msg.content
        return ""


def chat_request(system: Optional[str], user: str,
                 temperature: float = DEFAULT_TEMPERATURE, seed: int = 0) -> ChatRequest:
    msgs: list[Message] = []
    if system is not None:
        msgs.append(Message("system", system))
    msgs.append(Message("user", user))
    return ChatRequest(messages=tuple(msgs), temperature=temperature, seed=seed)


@dataclass(frozen=True)
class Completion:
    content: str
    backend: str  # live | mock
    latency: float = 0.0
    usage: Optional[dict] = None


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    sourceTextHash: str

    def __post_init__(self):
        if not self.values:
            raise ValueError("embedding must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding components must be finite")
        if all(v == 0.0 for v in self.values):
            raise ValueError("embedding must not be all-zero")

    @property
    def dim(self) -> int:
        return len(self.values)


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _stable_u64(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"),
                                          digest_size=8).digest(), "big")


# --- mock backend ---------------------------------------------------------------

_SYNONYMS = {
    "agile": ("nimble", "spry"),
    "domestic": ("household", "tame"),
    "small": ("little", "tiny"),
    "moving": ("shifting", "drifting"),
    "objects": ("things", "items"),
    "robot": ("automated", "mechanical"),
    "avoids": ("evades", "dodges"),
    "obstacles": ("hazards", "blockages"),
    "world": ("realm", "environment"),
    "interacts": ("engages", "connects"),
    "abstract": ("conceptual", "intangible"),
    "named": ("labelled", "designated"),
    "steady": ("stable", "constant"),
    "idea": ("notion", "concept"),
    "holds": ("keeps", "carries"),
    "meaning": ("sense", "significance"),
    "shared": ("common", "collective"),
    "simple": ("plain", "basic"),
    "answer": ("reply", "response"),
    "question": ("query", "inquiry"),
    "nature": ("character", "essence"),
    "people": ("humans", "speakers"),
    "everyday": ("ordinary", "routine"),
    "familiar": ("recognizable", "known"),
    "useful": ("practical", "handy"),
    "chase": ("pursue", "follow"),
    "nap": ("doze", "sleep"),
    "cleaning": ("tidying", "sweeping"),
}

_MODIFIERS = ("quietly", "steadily", "often", "broadly", "gently",
              "plainly", "roughly", "mostly", "notably", "slowly")

_DEFINITION_SECTIONS = (
    ("## Essence", (
        "{subject} names one idea that language holds steady for everyone.",
        "People reach for {subject} when a familiar thing needs a shared name.",
        "The word carries a simple meaning before any formal analysis begins.",
        "Its sense stays stable across speakers, places, and everyday use.",
    )),
    ("## Characteristics", (
        "- it is recognizable without special training",
        "- it keeps the same core meaning in new sentences",
        "- it links perception to description in one step",
        "- it invites comparison with neighboring ideas",
    )),
    ("## Significance", (
        "Defining {subject} shows how naming turns experience into knowledge.",
        "A good definition gives a useful answer to a practical question.",
        "The nature of {subject} rewards patient, ordinary observation.",
    )),
)

_CREATE_RE = re.compile(r"Create ALOs\(([^)]+)\)")
_ANY_ALOS_RE = re.compile(r"ALOs\(([^)]+)\)")


class MockBackend:
    """Offline stand-in; every answer is a pure function of the request."""

    kind = "mock"

    def __init__(self, embedding_dim: int = DEFAULT_EMBEDDING_DIM, max_inflight: int = 4):
        self.embedding_dim = embedding_dim
        self.max_inflight = max_inflight

    # -- completion ------------------------------------------------------------

    def complete(self, req: ChatRequest) -> Completion:
        user = req.user_text()
        rng = self._rng(req)
        ops = self._op_count(req.temperature)
        created = _CREATE_RE.search(user)
        if created:
            content = self._alo_document(created.group(1).strip(), rng, ops)
        elif "in table" in user and _ANY_ALOS_RE.search(user):
            content = self._parameter_table(
                _ANY_ALOS_RE.search(user).group(1).strip(), rng, ops)
        elif "brainstorm" in user and _ANY_ALOS_RE.search(user):
            content = self._brainstorm(
                _ANY_ALOS_RE.search(user).group(1).strip(), rng, ops)
        else:
            content = self._definition(user, rng, ops)
        return Completion(content=content, backend="mock", latency=0.0)

    def _rng(self, req: ChatRequest) -> random.Random:
        payload = json.dumps(
            [[m.role, m.content] for m in req.messages], sort_keys=True)
        mix = _stable_u64(f"{req.seed}|{req.temperature!r}|{payload}")
        return random.Random(mix)

    @staticmethod
    def _op_count(temperature: float) -> int:
        return int(round(temperature * PERTURBATIONS_PER_UNIT))

    def _alo_document(self, name: str, rng: random.Random, ops: int) -> str:
        alo = replace(canned.alo_for(name), provenance="llm-generated")
        alo = _perturb_knowledge(alo, rng, ops)
        doc = parser.serialize(alo)
        return (f"Here is the {name} object, built step by step and written as a"
                " markdown script.\n\n```markdown\n" + doc +
                "```\n\nAll steps validated; the object is ready for registration.\n")

    def _parameter_table(self, name: str, rng: random.Random, ops: int) -> str:
        alo = canned.alo_for(name)
        rows = []
        for sub in alo.subObjList:
            for state_name in sorted(sub.states):
                var = sub.states[state_name]
                value = parser.format_number(var.value) if var.kind == "scalar" \
                    else str(var.value)
                rows.append(f"| {sub.name} | {state_name} | {value} | {var.unit} |")
        intro = _perturb_words(
            f"The {name} object exposes these subobject parameters.", rng, ops)
        return (intro + "\n\n| subobject | parameter | value | unit |\n"
                "| --- | --- | --- | --- |\n" + "\n".join(rows) + "\n")

    def _brainstorm(self, name: str, rng: random.Random, ops: int) -> str:
        alo = canned.alo_for(name)
        bullets = []
        for sub in alo.subObjList:
            for state_name in sorted(sub.states):
                bullets.append(f"- {sub.name}.{state_name}: worth filling in early")
            for skill in sub.skills:
                bullets.append(f"- {sub.name}.{skill.name}: behavior to parameterize")
        intro = _perturb_words(
            f"Brainstorming the {name} object step by step, these parameters"
            " matter most.", rng, ops)
        return intro + "\n\n" + "\n".join(bullets) + "\n"

    def _definition(self, user: str, rng: random.Random, ops: int) -> str:
        words = re.findall(r"[A-Za-z0-9]+", user)
        drop = {"define", "the", "a", "an", "in", "of", "words", "word", "to",
                "describe", "explain", "what", "is", "please"}
        subject = " ".join(w for w in words if w.lower() not in drop) or "the subject"
        chunks = ["# Definition"]
        for heading, lines in _DEFINITION_SECTIONS:
            chunks.append(heading)
            body = [ln.format(subject=subject) for ln in lines]
            body = _perturb_lines(body, rng, ops)
            chunks.extend(body)
        return "\n".join(chunks) + "\n"

    # -- embeddings --------------------------------------------------------------

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise EmptyInputError("embed needs at least one text")
        out = []
        for text in texts:
            if not text:
                raise EmptyInputError("cannot embed an empty text")
            out.append(self._embed_one(text))
        return out

    def _embed_one(self, text: str) -> EmbeddingVector:
        tokens = re.findall(r"[a-z0-9]+", text.lower())
        if not tokens:
            tokens = ["raw:" + text]
        acc = [0.0] * self.embedding_dim
        for token in tokens:
            h = _stable_u64(token)
            bucket = h % self.embedding_dim
            sign = 1.0 if (h >> 62) & 1 == 0 else -1.0
            acc[bucket] += sign
        norm = math.sqrt(sum(v * v for v in acc))
        if norm == 0.0:  # opposite-sign collisions cancelled everything
            h = _stable_u64("rescue:" + text)
            acc[h % self.embedding_dim] += 1.0
            norm = 1.0
        values = tuple(v / norm for v in acc)
        return EmbeddingVector(values=values, sourceTextHash=_digest(text))


def _perturb_words(text: str, rng: random.Random, ops: int) -> str:
    words = text.split(" ")
    for _ in range(ops):
        i = rng.randrange(len(words))
        bare = words[i].strip(".,:;").lower()
        if bare in _SYNONYMS:
            words[i] = words[i].replace(bare, rng.choice(_SYNONYMS[bare]))
        else:
            words.insert(i, rng.choice(_MODIFIERS))
    return " ".join(words)


def _perturb_lines(lines: list[str], rng: random.Random, ops: int) -> list[str]:
    lines = list(lines)
    for _ in range(ops):
        if len(lines) > 1 and rng.random() < 0.3:
            i = rng.randrange(len(lines) - 1)
            lines[i], lines[i + 1] = lines[i + 1], lines[i]
        else:
            i = rng.randrange(len(lines))
            lines[i] = _perturb_words(lines[i], rng, 1)
    return lines


def _perturb_knowledge(alo: ALO, rng: random.Random, ops: int) -> ALO:
    """Reword/reorder knowledge facts only, so documents stay valid."""
    if ops == 0:
        return alo
    subs = []
    for sub in alo.subObjList:
        facts = _perturb_lines(list(sub.knowledge), rng, ops)
        subs.append(replace(sub, knowledge=tuple(facts)))
    return replace(alo, subObjList=tuple(subs))


# --- live backend -----------------------------------------------------------------

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class LiveBackend:
    """HTTP chat/embedding client with bounded exponential-backoff retries."""

    kind = "live"

    def __init__(self,
                 base_url: Optional[str] = None,
                 api_key: Optional[str] = None,
                 chat_model: str = "gpt-4",
                 embedding_model: str = "text-embedding-ada-002",
                 timeout: float = 60.0,
                 max_attempts: int = 3,
                 backoff_base: float = 0.5,
                 max_inflight: int = 4,
                 transport: Optional[httpx.BaseTransport] = None,
                 sleep=time.sleep):
        self.base_url = (base_url or os.environ.get("ALO_BASE_URL")
                         or os.environ.get("OPENAI_BASE_URL")
                         or "https://api.openai.com").rstrip("/")
        self.api_key = (api_key or os.environ.get("ALO_API_KEY")
                        or os.environ.get("OPENAI_API_KEY") or "")
        self.chat_model = chat_model
        self.embedding_model = embedding_model
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.max_inflight = max_inflight
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, path: str, body: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_exc: Optional[Exception] = None
        last_status: Optional[int] = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(url, json=body, headers=self._headers())
            except httpx.TimeoutException as e:
                last_exc = e
                continue
            except httpx.HTTPError as e:
                raise BackendError(str(e)) from e
            if resp.status_code in _RETRYABLE_STATUS:
                last_status = resp.status_code
                continue
            if resp.status_code != 200:
                raise HttpError(resp.status_code)
            try:
                return resp.json()
            except ValueError as e:
                raise MalformedResponseError("response body is not JSON") from e
        if last_status == 429:
            raise RateLimitedError(f"rate limited after {self.max_attempts} attempts")
        if last_status is not None:
            raise HttpError(last_status, f"gave up after {self.max_attempts} attempts")
        raise TimeoutError_(str(last_exc))

    def complete(self, req: ChatRequest) -> Completion:
        body = {
            "model": self.chat_model,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
        }
        if req.maxTokens is not None:
            body["max_tokens"] = req.maxTokens
        started = time.perf_counter()
        data = self._post("/v1/chat/completions", body)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise MalformedResponseError(f"missing choices[0].message.content: {e}") from e
        if content is None:
            content = ""
        return Completion(content=content, backend="live",
                          latency=time.perf_counter() - started,
                          usage=data.get("usage"))

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise EmptyInputError("embed needs at least one text")
        if any(not t for t in texts):
            raise EmptyInputError("cannot embed an empty text")
        body = {"model": self.embedding_model, "input": list(texts)}
        data = self._post("/v1/embeddings", body)
        try:
            items = sorted(data["data"], key=lambda d: d["index"])
            vectors = [tuple(float(x) for x in item["embedding"]) for item in items]
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedResponseError(f"bad embeddings payload: {e}") from e
        if len(vectors) != len(texts):
            raise MalformedResponseError(
                f"asked for {len(texts)} embeddings, got {len(vectors)}")
        return [EmbeddingVector(values=v, sourceTextHash=_digest(t))
                for v, t in zip(vectors, texts)]


Backend = object  # MockBackend | LiveBackend share the complete/embed surface


def complete(backend, req: ChatRequest) -> Completion:
    return backend.complete(req)


def embed(backend, texts: Sequence[str]) -> list[EmbeddingVector]:
    return backend.embed(texts)

"""Backend client for chat-completion endpoints plus robust parsing of
model outputs into predictions.

Two backends ship: an HTTP client speaking the JSON chat-completions
shape (messages array, model id, temperature) and a deterministic mock
whose completion is a pure function of the prompt, so the whole
evaluation stack runs offline.

Parsing is three-stage: strict JSON with the
``classification`` / ``casual_mention_spans`` / ``serious_intent_spans``
keys, then the first JSON object substring, then a
``Classification: ...`` regex with the remaining text as rationale. The
route taken is recorded in the prediction metadata.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import Label
from .errors import HttpBackendError, RetriesExhaustedError, UnparseableError
from .metrics import Prediction
from .prompts import LABEL_TO_TEXT, PromptInstance


@dataclass(frozen=True)
class BackendConfig:
    endpoint_url: str = ""
    model_id: str = "mock"
    api_key_env: str = "CESM_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrent: int = 4
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")

    @classmethod
    def from_json(cls, path) -> "BackendConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "endpoint_url": self.endpoint_url,
            "model_id": self.model_id,
            "api_key_env": self.api_key_env,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "max_concurrent": self.max_concurrent,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class RawCompletion:
    text: str
    latency_ms: float = 0.0
    backend_meta: dict = field(default_factory=dict, compare=False)


def prompt_digest(prompt: PromptInstance) -> str:
    payload = json.dumps(prompt.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class MockBackend:
    """Deterministic offline backend.

    The completion is a pure function of the prompt: fixture overrides
    win, otherwise a prompt carrying an expected output echoes it as
    JSON, and anything else gets a classification-plus-rationale text
    whose label derives from the prompt digest.
    """

    def __init__(self, fixtures: dict[str, str] | None = None):
        self.fixtures = dict(fixtures or {})

    def complete(self, prompt: PromptInstance) -> RawCompletion:
        digest = prompt_digest(prompt)
        if digest in self.fixtures:
            return RawCompletion(text=self.fixtures[digest], backend_meta={"mock": True})
        if prompt.expected_output is not None:
            text = json.dumps(prompt.expected_output, ensure_ascii=False)
        else:
            label = (
                Label.SELF_HARM if int(digest[:8], 16) % 2 == 0 else Label.NON_SELF_HARM
            )
            text = (
                f"Classification: {LABEL_TO_TEXT[label]}\n"
                f"Rationale: Deterministic mock rationale for digest {digest[:12]}."
            )
        return RawCompletion(text=text, backend_meta={"mock": True, "digest": digest})


class HttpBackend:
    """JSON-over-HTTP chat-completions client with bounded concurrency
    and exponential-backoff retries.

    ``transport`` is injectable for tests: a callable
    (url, payload, headers, timeout) -> (status_code, response_text).
    """

    RETRYABLE_STATUS = {429, 500, 502, 503, 504}

    def __init__(self, config: BackendConfig, transport=None, sleep=time.sleep):
        self.config = config
        self._sleep = sleep
        self._semaphore = threading.Semaphore(config.max_concurrent)
        self._transport = transport or self._default_transport

    def _default_transport(self, url, payload, headers, timeout):
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
        return resp.status_code, resp.text

    def _render_user_message(self, prompt: PromptInstance) -> str:
        body = json.dumps(prompt.input, ensure_ascii=False, indent=2)
        return f"## Instruction\n{prompt.instruction}\n\n## Input\n{body}\n\n## Output\n"

    def complete(self, prompt: PromptInstance) -> RawCompletion:
        cfg = self.config
        payload = {
            "model": cfg.model_id,
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
            "messages": [{"role": "user", "content": self._render_user_message(prompt)}],
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        with self._semaphore:
            for attempt in range(cfg.max_retries + 1):
                if attempt:
                    self._sleep(0.5 * 2 ** (attempt - 1))
                start = time.monotonic()
                try:
                    status, text = self._transport(
                        cfg.endpoint_url, payload, headers, cfg.timeout
                    )
                except requests.RequestException as exc:
                    last_error = exc
                    continue
                latency = (time.monotonic() - start) * 1000.0
                if status == 200:
                    content = self._extract_content(text)
                    return RawCompletion(
                        text=content,
                        latency_ms=latency,
                        backend_meta={"status": status, "attempts": attempt + 1},
                    )
                last_error = HttpBackendError(status)
                if status not in self.RETRYABLE_STATUS:
                    break
        raise RetriesExhaustedError(cfg.max_retries + 1, last_error)

    @staticmethod
    def _extract_content(body: str) -> str:
        try:
            obj = json.loads(body)
            return obj["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError):
            return body


def make_backend(kind: str, config: BackendConfig, fixtures=None):
    if kind == "mock":
        return MockBackend(fixtures=fixtures)
    if kind == "http":
        return HttpBackend(config)
    raise ValueError(f"unknown backend kind {kind!r}")


def serialize_prediction(pred: Prediction) -> str:
    """Canonical JSON rendering a backend would emit for a prediction."""
    return json.dumps(
        {
            "classification": LABEL_TO_TEXT[pred.label],
            "casual_mention_spans": list(pred.cm_spans),
            "serious_intent_spans": list(pred.si_spans),
            **({"rationale": pred.rationale} if pred.rationale else {}),
        },
        ensure_ascii=False,
    )


_LABEL_PATTERN = r"(self[\s_-]?harm|non[\s_-]?self[\s_-]?harm)"
_CLASSIFICATION_RE = re.compile(
    r"classification\s*[:\-]\s*\**\s*\[?\s*" + _LABEL_PATTERN, re.IGNORECASE
)
_RATIONALE_RE = re.compile(r"rationale\s*[:\-]\s*(.*)", re.IGNORECASE | re.DOTALL)


def _parse_label(value: str) -> Label | None:
    try:
        return Label.parse(value)
    except ValueError:
        return None


def _spans_from(obj, key) -> tuple[str, ...] | None:
    value = obj.get(key, [])
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
        return None
    return tuple(value)


def _prediction_from_obj(obj: dict, route: str) -> Prediction | None:
    if not isinstance(obj, dict) or "classification" not in obj:
        return None
    label = _parse_label(str(obj["classification"]))
    if label is None:
        return None
    cm = _spans_from(obj, "casual_mention_spans")
    si = _spans_from(obj, "serious_intent_spans")
    if cm is None or si is None:
        return None
    return Prediction(
        label=label,
        cm_spans=cm,
        si_spans=si,
        rationale=str(obj.get("rationale", "")),
        meta={"parse_route": route},
    )


def _first_json_object(text: str):
    """Yield candidate balanced {...} substrings, earliest first."""
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def parse_prediction(raw: RawCompletion) -> Prediction:
    """Parse a completion into a prediction, recording the route taken.

    Raises UnparseableError when no route succeeds; callers score such
    samples as classification errors and exclude them from span metrics.
    """
    text = raw.text.strip()
    if text:
        # strict: the whole completion is the JSON object
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            obj = None
        if obj is not None:
            pred = _prediction_from_obj(obj, "strict")
            if pred is not None:
                return pred

        # recovery: first parseable JSON object substring with a valid label
        for candidate in _first_json_object(text):
            try:
                obj = json.loads(candidate)
            except json.JSONDecodeError:
                continue
            pred = _prediction_from_obj(obj, "recovery")
            if pred is not None:
                return pred

        # fallback: plain-text "Classification: ..." format
        match = _CLASSIFICATION_RE.search(text)
        if match:
            label = _parse_label(match.group(1))
            if label is not None:
                rationale_match = _RATIONALE_RE.search(text, match.end())
                rationale = (
                    rationale_match.group(1).strip()
                    if rationale_match
                    else text[match.end() :].strip()
                )
                return Prediction(
                    label=label,
                    rationale=rationale,
                    meta={"parse_route": "fallback"},
                )
    raise UnparseableError("no parse route recovered a prediction")

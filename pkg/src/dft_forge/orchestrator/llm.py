"""Chat-completion clients: an HTTP one with retries and a scripted mock."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)

Message = dict[str, str]


class LlmTransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class RequestContext:
    design_id: str
    iteration: int


class LlmClient(Protocol):
    model: str

    def complete(self, messages: Sequence[Message], context: RequestContext) -> str: ...


@dataclass(frozen=True)
class LlmClientSpec:
    endpoint: str
    model: str
    token_env: str = "DFT_FORGE_LLM_TOKEN"
    timeout: float = 120.0
    max_retries: int = 4
    backoff: float = 1.0

    def __repr__(self) -> str:
        # the token itself never lives here, only the variable that holds it
        return f"LlmClientSpec(endpoint={self.endpoint!r}, model={self.model!r}, token_env={self.token_env!r})"


_RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class HttpLlmClient:
    """POSTs ``{model, messages}`` to an OpenAI-style ``/chat/completions`` URL."""

    def __init__(self, spec: LlmClientSpec, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.spec = spec
        self.model = spec.model
        self._transport = transport
        self._sleep = sleep

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.spec.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, messages: Sequence[Message], context: RequestContext) -> str:
        payload = {"model": self.spec.model, "messages": list(messages)}
        last = "no attempt made"
        for attempt in range(self.spec.max_retries + 1):
            if attempt:
                delay = self.spec.backoff * 2 ** (attempt - 1)
                log.info("retrying %s in %.1fs (%s)", self.spec.endpoint, delay, last)
                self._sleep(delay)
            try:
                with httpx.Client(timeout=self.spec.timeout, transport=self._transport) as client:
                    resp = client.post(self.spec.endpoint, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code in _RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise LlmTransportError(f"LLM endpoint returned HTTP {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise LlmTransportError(f"malformed chat-completion response: {exc!r}") from exc
        raise LlmTransportError(f"LLM request failed after {self.spec.max_retries + 1} attempts: {last}")


class MockLlmClient:
    """Replays scripted responses from ``<dir>/<n>.txt`` for iteration ``n``.

    A ``<dir>/<design_id>/`` subdirectory takes precedence when present. Past
    the last scripted file the final response repeats, so a one-file script
    models an LLM that always answers the same way.
    """

    model = "mock"

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(f"mock response directory not found: {self.directory}")

    def _script(self, design_id: str) -> list[Path]:
        base = self.directory / design_id
        if not base.is_dir():
            base = self.directory
        files = sorted((p for p in base.glob("*.txt") if p.stem.isdigit()), key=lambda p: int(p.stem))
        if not files:
            raise LlmTransportError(f"no scripted responses in {base}")
        return files

    def complete(self, messages: Sequence[Message], context: RequestContext) -> str:
        files = self._script(context.design_id)
        by_number = {int(p.stem): p for p in files}
        chosen = by_number.get(context.iteration)
        if chosen is None:
            earlier = [n for n in by_number if n <= context.iteration]
            chosen = by_number[max(earlier)] if earlier else files[0]
        return chosen.read_text()

"""Juror providers: the request/response contract, an HTTP adapter for live
runs, and the deterministic replay provider used everywhere in tests.

Replay responses live in a fixture directory, one file per
(juror_id, post_id, stage, prompt_version); a live run wrapped in
:class:`RecordingProvider` writes exactly those files.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

logger = logging.getLogger(__name__)


class ProviderError(Exception):
    """Transport-level failure: no usable response text was obtained."""


@dataclass(frozen=True)
class PromptRequest:
    """Prompt text plus the identity needed to key a replay fixture."""

    text: str
    post_id: int
    stage: str
    prompt_version: str


class Provider(Protocol):
    juror_id: str

    def complete(self, request: PromptRequest) -> str: ...


def response_fixture_name(juror_id: str, request: PromptRequest) -> str:
    return f"{juror_id}__{request.post_id}__{request.stage}__{request.prompt_version}.txt"


class ReplayProvider:
    """Serve canned response text from a fixture directory."""

    def __init__(self, juror_id: str, root: str | Path):
        self.juror_id = juror_id
        self.root = Path(root)

    def complete(self, request: PromptRequest) -> str:
        path = self.root / response_fixture_name(self.juror_id, request)
        if not path.is_file():
            raise ProviderError(
                f"no replay response for juror {self.juror_id}, post {request.post_id}, "
                f"stage {request.stage}, version {request.prompt_version}"
            )
        return path.read_text(encoding="utf-8")


class RecordingProvider:
    """Wrap a live provider and persist each response for later replay."""

    def __init__(self, inner: Provider, root: str | Path):
        self.inner = inner
        self.juror_id = inner.juror_id
        self.root = Path(root)

    def complete(self, request: PromptRequest) -> str:
        text = self.inner.complete(request)
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / response_fixture_name(self.juror_id, request)
        path.write_text(text, encoding="utf-8")
        return text


def api_key_env(juror_id: str) -> str:
    return f"{juror_id.upper().replace('-', '_')}_API_KEY"


class HttpProvider:
    """Minimal chat-completion style HTTP adapter.

    The API key comes from the ``<JUROR_ID>_API_KEY`` environment variable,
    never from config files. The transport is injectable for tests.
    """

    def __init__(
        self,
        juror_id: str,
        endpoint: str,
        model: str,
        timeout: float = 60.0,
        transport=None,
    ):
        self.juror_id = juror_id
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self._transport = transport

    def _api_key(self) -> str:
        env = api_key_env(self.juror_id)
        key = os.environ.get(env)
        if not key:
            raise ProviderError(f"missing API key: set {env}")
        return key

    def _send(self, payload: dict, headers: dict) -> dict:
        if self._transport is not None:
            return self._transport(self.endpoint, headers, payload)
        import requests

        try:
            response = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except Exception as err:
            raise ProviderError(f"request to {self.endpoint} failed: {err}") from err
        if response.status_code != 200:
            raise ProviderError(f"HTTP {response.status_code} from {self.endpoint}")
        return response.json()

    def complete(self, request: PromptRequest) -> str:
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.text}],
        }
        data = self._send(payload, headers)
        try:
            if "choices" in data:
                return data["choices"][0]["message"]["content"]
            return data["text"]
        except (KeyError, IndexError, TypeError) as err:
            raise ProviderError(f"unrecognized response shape from {self.endpoint}") from err

# -*- coding: utf-8 -*-
"""Text expansion clients: offline stub and HTTP endpoint."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import hashlib
import os
import re
from threading import Lock

import httpx

from .errors import ClientError

_RE_COUNT = re.compile(r"there are (\d+) prompts in total")
_RE_SUBJECT = re.compile(r"The movie is about (.*)\Z", re.DOTALL)
_SHOTS = ("wide shot", "close-up", "tracking shot", "aerial view", "low angle shot")


def prompt_key(prompt: str) -> str:
    """Fixture key of a prompt."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class TextExpansionClient:
    """
    Request/response text endpoint.

    Implementations must allow concurrent calls of complete().
    """

    name = "base"

    def complete(self, prompt: str, **params) -> str:
        """
        Return the completion of prompt.

        :param prompt: Full prompt text
        :param params: Generation parameters like temperature
        :return: <class 'str'> completion
        """
        raise NotImplementedError()


class StubExpansionClient(TextExpansionClient):
    """
    Deterministic offline client.

    Answers come from a fixture table keyed by the sha256 of the prompt.
    Unknown expansion prompts get a numbered scene list built from the movie
    subject, unknown tone prompts the keyword vote over the listed scenes.
    """

    name = "stub"

    def __init__(self, fixtures=None):
        """
        Init StubExpansionClient class.

        :param fixtures: dict prompt -> answer
        """
        self._fixtures = {}
        self._lck = Lock()
        self.calls = 0
        for prompt, answer in (fixtures or {}).items():
            self.add_fixture(prompt, answer)

    def add_fixture(self, prompt: str, answer: str) -> None:
        """Answer prompt with answer from now on."""
        with self._lck:
            self._fixtures[prompt_key(prompt)] = answer

    def complete(self, prompt: str, **params) -> str:
        with self._lck:
            self.calls += 1
            answer = self._fixtures.get(prompt_key(prompt))
        if answer is not None:
            return answer

        # Local import, script_gen depends on this module
        from .script_gen import TONE_PROMPT_HEAD, format_as_numbered_list, keyword_vote

        if prompt.startswith(TONE_PROMPT_HEAD):
            scenes = [
                line.split(". ", 1)[1]
                for line in prompt.splitlines()
                if re.match(r"^\d+\. ", line)
            ]
            return keyword_vote(scenes)[0]

        ma_count = _RE_COUNT.search(prompt)
        ma_subject = _RE_SUBJECT.search(prompt)
        if ma_count is None or ma_subject is None:
            return ""

        n = int(ma_count.group(1))
        subject = " ".join(ma_subject.group(1).split()).rstrip(".")
        return format_as_numbered_list(
            [
                "{0}, {1}, scene {2} of {3}, 4K, high resolution".format(
                    subject, _SHOTS[k % len(_SHOTS)], k + 1, n
                )
                for k in range(n)
            ]
        )


class HttpExpansionClient(TextExpansionClient):
    """
    Client of a JSON completion endpoint.

    POST {"prompt": ..., <params>} must answer {"completion": ...}. The bearer
    key is read from the environment variable named api_key_env.
    """

    name = "http"

    def __init__(self, endpoint: str, api_key_env="", timeout=30.0, model="", transport=None):
        if not endpoint:
            raise ValueError("http client needs an endpoint")
        self.api_key_env = api_key_env
        self.endpoint = endpoint
        self.model = model
        self.timeout = float(timeout)
        self._transport = transport

    def complete(self, prompt: str, **params) -> str:
        headers = {}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = "Bearer {0}".format(key)

        body = {"prompt": prompt}
        if self.model:
            body["model"] = self.model
        body.update(params)

        try:
            with httpx.Client(timeout=self.timeout, transport=self._transport) as client:
                response = client.post(self.endpoint, json=body, headers=headers)
                response.raise_for_status()
                data = response.json()
        except httpx.HTTPError as e:
            raise ClientError("request to '{0}' failed | {1}".format(self.endpoint, e))
        except ValueError as e:
            raise ClientError("endpoint answered no json | {0}".format(e))

        completion = data.get("completion") if isinstance(data, dict) else None
        if not isinstance(completion, str):
            raise ClientError("endpoint answer has no 'completion' text")
        return completion


def client_from_config(cfg) -> TextExpansionClient:
    """
    Create the client named by [llm] provider.

    :param cfg: PipelineConfig
    :return: TextExpansionClient
    """
    provider = cfg.get("llm", "provider")
    if provider == "stub":
        return StubExpansionClient()
    if provider == "http":
        return HttpExpansionClient(
            cfg.get("llm", "endpoint"),
            cfg.get("llm", "api_key_env"),
            cfg.get("llm", "timeout"),
            cfg.get("llm", "model"),
        )
    raise ValueError("unknown llm provider '{0}'".format(provider))

"""
Text-generation oracles used by the reverse-construction pipeline.

An oracle exposes `complete(prompt) -> str` plus the timeout and retry count
the pipeline honours. The production oracle talks to an HTTP chat-completion
endpoint; tests use the scripted oracle in unsolvable.testing.mock.
"""

import json
import logging
import os
from typing import Any, Dict, Optional, Protocol

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from .model import UnsolvableError

logger = logging.getLogger(__name__)


class OracleError(UnsolvableError):
    """Transport failure, or retries used up."""


class OracleTimeout(OracleError):
    """One request timed out; the caller may retry."""


class TextOracle(Protocol):
    timeout: float
    retries: int

    def complete(self, prompt: str) -> str:
        ...


def complete_with_retries(oracle: TextOracle, prompt: str) -> str:
    """Call the oracle, retrying timeouts up to oracle.retries extra times."""
    attempts = oracle.retries + 1
    for attempt in range(1, attempts + 1):
        try:
            return oracle.complete(prompt)
        except OracleTimeout as e:
            logger.warning("oracle timeout (attempt %d/%d): %s", attempt, attempts, e)
    raise OracleError(f"oracle timed out {attempts} time(s)")


def _redact(headers: Dict[str, str]) -> Dict[str, str]:
    return {k: ("***" if k.lower() == "authorization" else v) for k, v in headers.items()}


class HttpOracle:
    """Chat-completion client; the API key only ever comes from the environment."""

    def __init__(self, endpoint: str, model: str, api_key_env: str = "UNSOLVABLE_API_KEY",
                 timeout: float = 120.0, retries: int = 2, debug: bool = False,
                 temperature: float = 0.6, session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retries = retries
        self.debug = debug
        self.temperature = temperature
        self.session = session or self._make_session()

    @staticmethod
    def _make_session() -> requests.Session:
        session = requests.Session()
        adapter = HTTPAdapter(
            max_retries=Retry(
                total=3,
                connect=2,
                read=0,
                backoff_factor=0.5,
                status_forcelist=[500, 502, 503, 504],
                allowed_methods=["POST"],
            )
        )
        session.mount("http://", adapter)
        session.mount("https://", adapter)
        return session

    def _headers(self) -> Dict[str, str]:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise OracleError(f"environment variable {self.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def complete(self, prompt: str) -> str:
        headers = self._headers()
        body: Dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        if self.debug:
            logger.debug("POST %s headers=%s body=%s", self.endpoint, _redact(headers), json.dumps(body))
        try:
            response = self.session.post(self.endpoint, headers=headers, json=body, timeout=self.timeout)
            response.raise_for_status()
            data = response.json()
        except requests.Timeout as e:
            raise OracleTimeout(str(e))
        except (requests.RequestException, ValueError) as e:
            raise OracleError(f"oracle request failed: {e}")
        if self.debug:
            logger.debug("response %s", json.dumps(data)[:4000])
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise OracleError("unexpected response shape from chat-completion endpoint")

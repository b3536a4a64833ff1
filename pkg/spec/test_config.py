"""Project configuration and the HTTP oracle."""

import json
import os
import tempfile
from pathlib import Path

import requests

from unsolvable.config import ProjectConfig
from unsolvable.oracle import HttpOracle, OracleError, OracleTimeout, complete_with_retries
from unsolvable.testing import ScriptedOracle, describe, expect, it, timeout


class FakeResponse:
    def __init__(self, data, status=200):
        self.data = data
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.HTTPError(f"{self.status} error")

    def json(self):
        if isinstance(self.data, Exception):
            raise self.data
        return self.data


class FakeSession:
    def __init__(self, reply=None, error=None):
        self.reply = reply
        self.error = error
        self.requests = []

    def post(self, url, headers=None, json=None, timeout=None):
        self.requests.append({"url": url, "headers": headers, "json": json, "timeout": timeout})
        if self.error is not None:
            raise self.error
        return self.reply


def chat_reply(content):
    return FakeResponse({"choices": [{"message": {"content": content}}]})


def write_config(root, data):
    path = Path(root) / ".unsolvable"
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return ProjectConfig(Path(root))


class EnvVar:
    def __init__(self, name, value):
        self.name, self.value = name, value

    def __enter__(self):
        self.saved = os.environ.get(self.name)
        if self.value is None:
            os.environ.pop(self.name, None)
        else:
            os.environ[self.name] = self.value

    def __exit__(self, *exc):
        if self.saved is None:
            os.environ.pop(self.name, None)
        else:
            os.environ[self.name] = self.saved


with describe("ProjectConfig"):

    @it("falls back to defaults without a file")
    def test_config_defaults():
        with tempfile.TemporaryDirectory() as tmp:
            config = ProjectConfig(Path(tmp))
            expect(config.workers).to_equal(1)
            expect(config.max_attempts).to_be_none()
            expect(config.reward.rho).to_equal(-0.5)
            expect(config.reward.markers.unsolvable).to_equal(("<unsolvable>",))
            expect(config.tier1_samples).to_equal(1)
            expect(config.templates_path).to_be_none()

    @it("reads reward and generation sections")
    def test_config_sections():
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(tmp, {
                "reward": {"rho": -1.0, "lambda": 2.0, "tau_initial": 0.2, "tau_terminal": 0.9,
                           "tau_horizon": 10, "refusal_markers": ["i pass"]},
                "generation": {"workers": 3, "max_attempts": 7},
                "templates": "prompts.json",
            })
            reward = config.reward
            expect(reward.rho).to_equal(-1.0)
            expect(reward.lam).to_equal(2.0)
            expect(reward.tau.at(10)).to_equal(0.9)
            expect(reward.markers.refusal).to_equal(("i pass",))
            expect(config.workers).to_equal(3)
            expect(config.max_attempts).to_equal(7)
            expect(config.templates_path).to_equal(Path(tmp) / "prompts.json")

    @it("ignores an unparseable file")
    def test_config_bad_json():
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(tmp, "{not json")
            expect(config.config).to_equal({})
            expect(config.workers).to_equal(1)

    @it("requires an endpoint and model for the oracle")
    def test_config_oracle_missing():
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(tmp, {"oracle": {"model": "m"}})
            expect(lambda: config.make_oracle()).to_raise(OracleError, match="endpoint")

    @it("builds an HTTP oracle and never keeps a stored key")
    def test_config_oracle():
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(tmp, {"oracle": {
                "endpoint": "https://example.invalid/v1/chat", "model": "m",
                "api_key_env": "MY_KEY", "api_key": "leaked", "retries": 5, "timeout": 3,
            }})
            oracle = config.make_oracle()
            expect(oracle.api_key_env).to_equal("MY_KEY")
            expect(oracle.retries).to_equal(5)
            expect(oracle.timeout).to_equal(3.0)
            expect(hasattr(oracle, "api_key")).to_be_false()

with describe("HttpOracle"):

    @it("posts a chat request with the key from the environment")
    def test_http_complete():
        session = FakeSession(chat_reply("hello"))
        oracle = HttpOracle("https://example.invalid/chat", "m", api_key_env="TEST_ORACLE_KEY",
                            timeout=5, session=session)
        with EnvVar("TEST_ORACLE_KEY", "secret"):
            expect(oracle.complete("hi")).to_equal("hello")
        sent = session.requests[0]
        expect(sent["headers"]["Authorization"]).to_equal("Bearer secret")
        expect(sent["json"]["messages"]).to_equal([{"role": "user", "content": "hi"}])
        expect(sent["timeout"]).to_equal(5)

    @it("fails without the key")
    def test_http_no_key():
        oracle = HttpOracle("https://example.invalid/chat", "m", api_key_env="TEST_ORACLE_KEY",
                            session=FakeSession(chat_reply("x")))
        with EnvVar("TEST_ORACLE_KEY", None):
            expect(lambda: oracle.complete("hi")).to_raise(OracleError, match="TEST_ORACLE_KEY")

    @it("maps transport failures")
    def test_http_errors():
        with EnvVar("TEST_ORACLE_KEY", "secret"):
            slow = HttpOracle("u", "m", api_key_env="TEST_ORACLE_KEY",
                              session=FakeSession(error=requests.Timeout("slow")))
            expect(lambda: slow.complete("hi")).to_raise(OracleTimeout)
            broken = HttpOracle("u", "m", api_key_env="TEST_ORACLE_KEY",
                                session=FakeSession(FakeResponse({}, status=503)))
            expect(lambda: broken.complete("hi")).to_raise(OracleError, match="request failed")
            odd = HttpOracle("u", "m", api_key_env="TEST_ORACLE_KEY",
                             session=FakeSession(FakeResponse({"choices": []})))
            expect(lambda: odd.complete("hi")).to_raise(OracleError, match="unexpected")

with describe("complete_with_retries"):

    @it("retries timeouts up to the oracle's budget")
    def test_retries():
        oracle = ScriptedOracle(returns_sequence=[timeout(), timeout(), "ok"], retries=2)
        expect(complete_with_retries(oracle, "p")).to_equal("ok")
        oracle.assert_called_times(3)

    @it("does not retry other errors")
    def test_no_retry_on_error():
        def explode(prompt):
            raise OracleError("boom")
        oracle = ScriptedOracle(side_effect=explode, retries=3)
        expect(lambda: complete_with_retries(oracle, "p")).to_raise(OracleError, match="boom")

"""Built-in mock chat-completions endpoint for offline tests and demos.

The server answers with whatever a policy function returns for the decoded
(prompt, image) pair. Policies included here: a fixed answer, a truthful
annotator backed by an image-hash lookup, and a wrapper that garbles a
deterministic fraction of responses (keyed by request content, so reruns
see the same failures).
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from ..signalgen import SignalClass, TimeSeries
from .plotting import render_plot

Policy = Callable[[str, bytes], str]

_OPTION_RE = re.compile(r"\((\d)\) ([a-z ]+?)(?=\s*\(\d\)|$)")
_HAS_NUMBER_RE = re.compile(r"\(\d+\)")

MALFORMED_TEXT = "The signal shows an increasing trend."


def fixed_policy(text: str) -> Policy:
    return lambda prompt, image: text


def make_truthful_policy(samples: list[TimeSeries]) -> Policy:
    """Answer with the option number of the sample's true class.

    Samples are identified by the hash of their rendered plot; rendering is
    deterministic, so the lookup is exact.
    """
    lookup = {
        hashlib.sha256(render_plot(ts)).hexdigest(): ts.gt_class for ts in samples
    }

    def policy(prompt: str, image: bytes) -> str:
        cls = lookup[hashlib.sha256(image).hexdigest()]
        for pos, name in _OPTION_RE.findall(prompt):
            if name.strip() == cls.display_name:
                return f"({pos})"
        raise AssertionError(f"class {cls.display_name!r} not offered in prompt")

    return policy


def with_malformed(policy: Policy, rate: float, text: str = MALFORMED_TEXT) -> Policy:
    """Garble roughly ``rate`` of responses, chosen by request content hash."""

    def wrapped(prompt: str, image: bytes) -> str:
        digest = hashlib.sha256(prompt.encode() + image).digest()
        if int.from_bytes(digest[:8], "big") % 10_000 < int(rate * 10_000):
            return text
        return policy(prompt, image)

    return wrapped


class MockVlmServer:
    """OpenAI-compatible endpoint on an ephemeral localhost port.

    Counts every request and every malformed response (any answer without a
    parenthesized number). ``fail_first`` responds 500 that many times before
    behaving, to exercise retry paths.
    """

    def __init__(self, policy: Policy, api_key: str = "mock-key", fail_first: int = 0) -> None:
        self.policy = policy
        self.api_key = api_key
        self.requests_seen = 0
        self.malformed_served = 0
        self.auth_failures = 0
        self._remaining_failures = fail_first
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def do_POST(self) -> None:
                with outer._lock:
                    outer.requests_seen += 1
                    if outer._remaining_failures > 0:
                        outer._remaining_failures -= 1
                        self.send_response(500)
                        self.end_headers()
                        return
                if self.headers.get("Authorization") != f"Bearer {outer.api_key}":
                    with outer._lock:
                        outer.auth_failures += 1
                    self.send_response(401)
                    self.end_headers()
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                prompt, image = _decode_request(body)
                answer = outer.policy(prompt, image)
                if not _HAS_NUMBER_RE.search(answer):
                    with outer._lock:
                        outer.malformed_served += 1
                payload = json.dumps(
                    {"choices": [{"message": {"role": "assistant", "content": answer}}]}
                ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1"

    def __enter__(self) -> "MockVlmServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def _decode_request(body: dict) -> tuple[str, bytes]:
    prompt, image = "", b""
    for part in body["messages"][0]["content"]:
        if part["type"] == "text":
            prompt = part["text"]
        elif part["type"] == "image_url":
            url = part["image_url"]["url"]
            image = base64.b64decode(url.split("base64,", 1)[1])
    return prompt, image

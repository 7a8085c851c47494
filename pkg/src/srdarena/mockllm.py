"""Scripted local endpoint speaking the chat-completions JSON protocol.

Lets the whole LLM-adversary path run offline and deterministically:
fixed replies, regex-on-prompt dispatch, injected delays, HTTP errors,
and malformed bodies are all scriptable per request.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

CHAT_PATH = "/v1/chat/completions"


@dataclass(frozen=True)
class Behavior:
    kind: str  # reply | tool_reply | http_error | malformed
    text: str = ""
    action: int = 0
    status: int = 500
    delay: float = 0.0


def reply(text: str, delay: float = 0.0) -> Behavior:
    return Behavior("reply", text=text, delay=delay)


def tool_reply(action: int, delay: float = 0.0) -> Behavior:
    return Behavior("tool_reply", action=action, delay=delay)


def http_error(status: int = 500, delay: float = 0.0) -> Behavior:
    return Behavior("http_error", status=status, delay=delay)


def malformed(delay: float = 0.0) -> Behavior:
    return Behavior("malformed", delay=delay)


class PromptDispatch:
    """Pick a behavior by regex match against the last message content."""

    def __init__(self, rules: list[tuple[str, Behavior]], default: Behavior):
        self.rules = [(re.compile(pattern, re.S), behavior)
                      for pattern, behavior in rules]
        self.default = default

    def __call__(self, request: dict) -> Behavior:
        messages = request.get("messages", [])
        prompt = messages[-1].get("content", "") if messages else ""
        for pattern, behavior in self.rules:
            if pattern.search(prompt):
                return behavior
        return self.default


def _completion_body(request: dict, behavior: Behavior) -> dict:
    message: dict = {"role": "assistant", "content": None}
    if behavior.kind == "tool_reply":
        message["tool_calls"] = [{
            "id": "call_0",
            "type": "function",
            "function": {
                "name": "choose_action",
                "arguments": json.dumps({"action": behavior.action}),
            },
        }]
    else:
        message["content"] = behavior.text
    return {
        "id": "chatcmpl-mock",
        "object": "chat.completion",
        "created": 0,
        "model": request.get("model", "mock"),
        "choices": [{"index": 0, "message": message, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
    }


class MockLlmServer:
    """Local threaded HTTP server following a request-by-request script.

    ``script`` may be a single Behavior, a list of Behaviors (consumed
    in order, last one repeating), or any callable(request_dict) ->
    Behavior such as PromptDispatch.
    """

    def __init__(self, script, host: str = "127.0.0.1", port: int = 0):
        self._script = script
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[dict] = []

        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # silence default stderr noise
                pass

            def do_POST(self):
                if self.path != CHAT_PATH:
                    self.send_error(404, "unknown path")
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    request = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    self.send_error(400, "invalid JSON body")
                    return
                behavior = server._next_behavior(request)
                if behavior.delay:
                    time.sleep(behavior.delay)
                if behavior.kind == "http_error":
                    self.send_error(behavior.status, "scripted failure")
                    return
                if behavior.kind == "malformed":
                    payload = b"this is not json {"
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                    return
                payload = json.dumps(_completion_body(request, behavior)).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    def _next_behavior(self, request: dict) -> Behavior:
        with self._lock:
            self.requests.append(request)
            if callable(self._script):
                return self._script(request)
            if isinstance(self._script, Behavior):
                return self._script
            index = min(self._cursor, len(self._script) - 1)
            self._cursor += 1
            return self._script[index]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}{CHAT_PATH}"

    def start(self) -> "MockLlmServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "MockLlmServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve_mock(script, host: str = "127.0.0.1", port: int = 0) -> MockLlmServer:
    """Start a scripted endpoint; caller is responsible for .stop()."""
    return MockLlmServer(script, host=host, port=port).start()

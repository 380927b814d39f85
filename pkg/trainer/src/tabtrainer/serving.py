"""Serve a trained checkpoint over the generation wire protocol.

Endpoints:
  GET  /health          -> 200 {"status": "ok", "model": <dir name>}
  POST /generate        -> {"text": ...}   body {"prompt": str, "max_new_tokens": int}
  POST /batch_generate  -> {"texts": [...]} body {"prompts": [str], "max_new_tokens": int}

Decoding is greedy, so repeated requests for the same prompt return the
same text. Malformed bodies get a 400 with an ``error`` field; unknown
paths get a 404.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import torch
from transformers import GPT2LMHeadModel

from .tokenizer import EOS_ID, ByteTokenizer
from .training import INSTRUCTION_MARKER

logger = logging.getLogger(__name__)

DEFAULT_MAX_NEW_TOKENS = 64
MAX_NEW_TOKENS_CAP = 512


class CheckpointError(RuntimeError):
    pass


class Generator:
    """Greedy byte-level decoding against a loaded checkpoint."""

    def __init__(self, model: GPT2LMHeadModel, name: str = "checkpoint"):
        self.model = model
        self.model.eval()
        self.name = name
        self.tokenizer = ByteTokenizer()
        self.context_limit = int(model.config.n_positions)
        # generation is sequential per request; the lock keeps concurrent
        # requests from interleaving forward passes on the shared model
        self._lock = threading.Lock()

    def _fit_prompt(self, prompt: str, max_new_tokens: int) -> list[int]:
        ids = self.tokenizer.encode(prompt)
        budget = self.context_limit - max_new_tokens
        if budget < 1:
            budget = 1
        if len(ids) <= budget:
            return ids
        cut = prompt.rfind(INSTRUCTION_MARKER)
        if cut < 0:
            return ids[-budget:]
        suffix = self.tokenizer.encode(prompt[cut:])
        if len(suffix) >= budget:
            return suffix[-budget:]
        head = self.tokenizer.encode(prompt[:cut])
        return head[len(head) - (budget - len(suffix)) :] + suffix

    def generate(self, prompt: str, max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS) -> str:
        with self._lock:
            return self._generate_locked(prompt, max_new_tokens)

    @torch.no_grad()
    def _generate_locked(self, prompt: str, max_new_tokens: int) -> str:
        ids = self._fit_prompt(prompt, max_new_tokens)
        input_ids = torch.tensor([ids], dtype=torch.long)
        out = self.model(input_ids=input_ids, use_cache=True)
        past = out.past_key_values
        next_id = int(out.logits[0, -1].argmax())
        produced: list[int] = []
        for _ in range(max_new_tokens):
            if next_id == EOS_ID:
                break
            produced.append(next_id)
            step = self.model(
                input_ids=torch.tensor([[next_id]], dtype=torch.long),
                past_key_values=past,
                use_cache=True,
            )
            past = step.past_key_values
            next_id = int(step.logits[0, -1].argmax())
        return self.tokenizer.decode(produced)

    def generate_batch(self, prompts: list[str], max_new_tokens: int) -> list[str]:
        return [self.generate(p, max_new_tokens) for p in prompts]


def load_checkpoint(checkpoint_dir: str | Path) -> Generator:
    path = Path(checkpoint_dir)
    if not path.is_dir():
        raise CheckpointError(f"checkpoint directory not found: {path}")
    if not (path / "config.json").exists():
        raise CheckpointError(f"{path} holds no model config; was training interrupted?")
    try:
        model = GPT2LMHeadModel.from_pretrained(path)
    except Exception as e:
        raise CheckpointError(f"could not load checkpoint from {path}: {e}") from e
    return Generator(model, name=path.name)


class _BadRequest(ValueError):
    pass


def _require_max_new_tokens(doc: dict) -> int:
    value = doc.get("max_new_tokens", DEFAULT_MAX_NEW_TOKENS)
    if isinstance(value, bool) or not isinstance(value, int):
        raise _BadRequest("max_new_tokens must be an integer")
    if not 1 <= value <= MAX_NEW_TOKENS_CAP:
        raise _BadRequest(f"max_new_tokens must be in [1, {MAX_NEW_TOKENS_CAP}]")
    return value


class GenerationHandler(BaseHTTPRequestHandler):
    generator: Generator  # attached by make_server

    def log_message(self, format: str, *args) -> None:
        logger.debug("%s " + format, self.address_string(), *args)

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path == "/health":
            self._send_json(200, {"status": "ok", "model": self.generator.name})
        else:
            self._send_json(404, {"error": f"unknown path {self.path}"})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise _BadRequest(f"body is not valid JSON: {e}") from e
        if not isinstance(doc, dict):
            raise _BadRequest("body must be a JSON object")
        return doc

    def do_POST(self) -> None:
        try:
            if self.path == "/generate":
                doc = self._read_body()
                prompt = doc.get("prompt")
                if not isinstance(prompt, str):
                    raise _BadRequest("prompt must be a string")
                limit = _require_max_new_tokens(doc)
                self._send_json(200, {"text": self.generator.generate(prompt, limit)})
            elif self.path == "/batch_generate":
                doc = self._read_body()
                prompts = doc.get("prompts")
                if not isinstance(prompts, list) or not all(
                    isinstance(p, str) for p in prompts
                ):
                    raise _BadRequest("prompts must be a list of strings")
                limit = _require_max_new_tokens(doc)
                texts = self.generator.generate_batch(prompts, limit)
                self._send_json(200, {"texts": texts})
            else:
                self._send_json(404, {"error": f"unknown path {self.path}"})
        except _BadRequest as e:
            self._send_json(400, {"error": str(e)})
        except Exception as e:  # surface internal failures as JSON, not tracebacks
            logger.exception("request failed")
            self._send_json(500, {"error": str(e)})


def make_server(generator: Generator, host: str = "127.0.0.1", port: int = 8600) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (GenerationHandler,), {"generator": generator})
    return ThreadingHTTPServer((host, port), handler)


def serve(checkpoint_dir: str | Path, host: str = "127.0.0.1", port: int = 8600) -> None:
    generator = load_checkpoint(checkpoint_dir)
    server = make_server(generator, host, port)
    logger.info("serving %s on http://%s:%d", generator.name, host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

"""Generative-predictor backends sharing one generate() contract.

Three implementations bracket the evaluation pipeline: OracleBackend echoes
the stored reference (plumbing check, accuracy must be 1.0), ProxyBackend
answers from the calibrated tree ensemble without looking at labels (honest
prediction flow), and RemoteBackend talks to a served language model over
HTTP. The wire protocol here is the contract a serving process must honor.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .augmentor import AugmentedTarget, TreeEnsembleModel, serialize_target, settle_cents

DEFAULT_MAX_NEW_TOKENS = 64

# Wire protocol, also honored by the secondary serving process:
#   POST /generate        {"prompt": str, "max_new_tokens": int} -> {"text": str}
#   POST /batch_generate  {"prompts": [str], "max_new_tokens": int} -> {"texts": [str]}
#   GET  /health          -> 200
# Decoding on the serving side is greedy, so repeated requests must agree.


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    dataset_id: Optional[str] = None
    row_id: Optional[int] = None

    def __post_init__(self):
        if not self.prompt:
            raise BackendError("prompt must be non-empty")
        if self.max_new_tokens < 1:
            raise BackendError("max_new_tokens must be >= 1")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    latency: float
    backend_id: str
    ok: bool = True
    error: Optional[str] = None


class Backend:
    backend_id = "abstract"

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        raise NotImplementedError

    def batch_generate(self, reqs: Sequence[GenerationRequest]) -> list[GenerationResponse]:
        """Positionally aligned responses; per-item failures instead of raising."""
        out = []
        for req in reqs:
            try:
                out.append(self.generate(req))
            except BackendError as e:
                out.append(
                    GenerationResponse(
                        text="", latency=0.0, backend_id=self.backend_id, ok=False, error=str(e)
                    )
                )
        return out


class OracleBackend(Backend):
    """Echoes each record's reference text, keyed by (dataset_id, row_id)."""

    backend_id = "oracle"

    def __init__(self, references: dict[tuple[str, int], str]):
        self.references = dict(references)

    @classmethod
    def from_records(cls, records) -> "OracleBackend":
        return cls({(r.dataset_id, r.row_id): r.reference for r in records})

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        key = (req.dataset_id, req.row_id)
        if key not in self.references:
            raise BackendError(f"no reference recorded for {key}")
        return GenerationResponse(
            text=self.references[key], latency=0.0, backend_id=self.backend_id
        )


class ProxyBackend(Backend):
    """Answers with the fitted ensemble's calibrated probabilities, unswapped.

    Rounding to the serialized cent grid keeps the argmax, so the parsed
    prediction always equals the ensemble's own argmax decision.
    """

    backend_id = "proxy"

    def __init__(self, model: TreeEnsembleModel, rows: dict[tuple[str, int], np.ndarray]):
        self.model = model
        self.rows = dict(rows)

    @classmethod
    def from_dataset(cls, model: TreeEnsembleModel, dataset) -> "ProxyBackend":
        X = model.encoder.transform(dataset.rows, dataset.columns)
        rows = {
            (dataset.id, rid): X[i] for i, rid in enumerate(dataset.row_ids)
        }
        return cls(model, rows)

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        key = (req.dataset_id, req.row_id)
        if key not in self.rows:
            raise BackendError(f"no encoded row stored for {key}")
        start = time.perf_counter()
        p = self.model.predict_proba(self.rows[key].reshape(1, -1))[0]
        top = int(np.argmax(p))
        cents = settle_cents(p, top)
        text = serialize_target(
            AugmentedTarget(probs=tuple(c / 100.0 for c in cents), true_class=top)
        )
        return GenerationResponse(
            text=text, latency=time.perf_counter() - start, backend_id=self.backend_id
        )


@dataclass(frozen=True)
class RemoteConfig:
    base_url: str
    timeout: float = 60.0
    max_retries: int = 2
    max_in_flight: int = 4

    def __post_init__(self):
        if self.timeout <= 0 or self.max_retries < 0 or self.max_in_flight < 1:
            raise BackendError("invalid remote backend configuration")


class RemoteBackend(Backend):
    backend_id = "remote"

    def __init__(self, config: RemoteConfig):
        self.config = config
        self._gate = threading.Semaphore(config.max_in_flight)

    def _post(self, path: str, payload: dict) -> dict:
        import requests

        url = self.config.base_url.rstrip("/") + path
        last = None
        for _ in range(1 + self.config.max_retries):
            try:
                with self._gate:
                    resp = requests.post(url, json=payload, timeout=self.config.timeout)
                resp.raise_for_status()
                return resp.json()
            except Exception as e:  # connection, timeout, HTTP status, bad JSON
                last = e
        raise BackendError(f"remote call {path} failed after retries: {last}")

    def health(self) -> bool:
        import requests

        url = self.config.base_url.rstrip("/") + "/health"
        try:
            return requests.get(url, timeout=self.config.timeout).status_code == 200
        except Exception:
            return False

    def generate(self, req: GenerationRequest) -> GenerationResponse:
        start = time.perf_counter()
        doc = self._post(
            "/generate", {"prompt": req.prompt, "max_new_tokens": req.max_new_tokens}
        )
        if not isinstance(doc.get("text"), str):
            raise BackendError("remote /generate response missing text field")
        return GenerationResponse(
            text=doc["text"], latency=time.perf_counter() - start, backend_id=self.backend_id
        )

    def batch_generate(self, reqs: Sequence[GenerationRequest]) -> list[GenerationResponse]:
        """One /batch_generate round trip when possible, else per-item calls
        so failures stay attributable to single requests."""
        if not reqs:
            return []
        mnt = max(r.max_new_tokens for r in reqs)
        start = time.perf_counter()
        try:
            doc = self._post(
                "/batch_generate",
                {"prompts": [r.prompt for r in reqs], "max_new_tokens": mnt},
            )
            texts = doc.get("texts")
            if (
                isinstance(texts, list)
                and len(texts) == len(reqs)
                and all(isinstance(t, str) for t in texts)
            ):
                took = (time.perf_counter() - start) / len(reqs)
                return [
                    GenerationResponse(text=t, latency=took, backend_id=self.backend_id)
                    for t in texts
                ]
        except BackendError:
            pass
        return super().batch_generate(reqs)


# Conformance checks a serving process must pass to be usable as a
# RemoteBackend peer. Each check replays a canned request and validates the
# response shape; generation content is only pinned where greedy decoding
# forces it (same prompt twice -> same text).
PROTOCOL_SUITE_PROMPT = "# Object description: a is 1.\n# Answer: \n"


def run_protocol_suite(base_url: str, timeout: float = 60.0) -> list[tuple[str, bool, str]]:
    import requests

    base = base_url.rstrip("/")
    results: list[tuple[str, bool, str]] = []

    def check(name: str, fn):
        try:
            fn()
            results.append((name, True, ""))
        except Exception as e:
            results.append((name, False, str(e)))

    def health():
        r = requests.get(base + "/health", timeout=timeout)
        assert r.status_code == 200, f"expected 200, got {r.status_code}"

    def generate_shape():
        r = requests.post(
            base + "/generate",
            json={"prompt": PROTOCOL_SUITE_PROMPT, "max_new_tokens": 16},
            timeout=timeout,
        )
        assert r.status_code == 200, f"expected 200, got {r.status_code}"
        doc = r.json()
        assert isinstance(doc.get("text"), str), "response must carry a text string"

    def generate_deterministic():
        payload = {"prompt": PROTOCOL_SUITE_PROMPT, "max_new_tokens": 16}
        a = requests.post(base + "/generate", json=payload, timeout=timeout).json()
        b = requests.post(base + "/generate", json=payload, timeout=timeout).json()
        assert a["text"] == b["text"], "greedy decoding must repeat identically"

    def batch_alignment():
        prompts = [PROTOCOL_SUITE_PROMPT, "x is 2.\n# Answer: \n", "y is 3.\n# Answer: \n"]
        r = requests.post(
            base + "/batch_generate",
            json={"prompts": prompts, "max_new_tokens": 16},
            timeout=timeout,
        )
        assert r.status_code == 200, f"expected 200, got {r.status_code}"
        texts = r.json().get("texts")
        assert isinstance(texts, list) and len(texts) == len(prompts), "texts misaligned"
        assert all(isinstance(t, str) for t in texts), "texts must be strings"

    def batch_matches_single():
        single = requests.post(
            base + "/generate",
            json={"prompt": PROTOCOL_SUITE_PROMPT, "max_new_tokens": 16},
            timeout=timeout,
        ).json()["text"]
        batch = requests.post(
            base + "/batch_generate",
            json={"prompts": [PROTOCOL_SUITE_PROMPT], "max_new_tokens": 16},
            timeout=timeout,
        ).json()["texts"][0]
        assert single == batch, "batch and single generation must agree"

    check("health", health)
    check("generate_shape", generate_shape)
    check("generate_deterministic", generate_deterministic)
    check("batch_alignment", batch_alignment)
    check("batch_matches_single", batch_matches_single)
    return results

"""Metadata reformatting: raw dataset prose -> target + feature descriptions.

The heavy lifting is delegated to a chat-completion service (gpt-3.5 class);
responses are cached per dataset so corpus builds replay offline. When the
service is unavailable or keeps returning garbage, a deterministic fallback
produces a minimal description from the column names alone.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .ingest import Dataset, normalize_name_key

REFORMAT_PROMPT_TEMPLATE = (
    "The following is the metadata of a tabular dataset. Return the information for:\n"
    "1. the target of the dataset. If no target exists, choose one from the column as target for the dataset to classify.\n"
    "2. the features and their explanations, or N/A if there are no explanations. Replace all hyphens and/or underscores with spaces.\n"
    "\n"
    "Give your output in json. The following is an example output:\n"
    "{\n"
    '    "target": "Age",\n'
    '    "metadata": "The target of the dataset is Age. \\n Features and their explanations:\\n    gender: an animal\'s gender.\\n    weight: an animal\'s actual weight, in kg." \\n '
    "}\n"
    "\n"
    "Do NOT respond anything else than the needed information. Make it brief but informative.\n"
    "Your responses should only be code, without explanation or formatting.\n"
    "\n"
    "columns:{col}\n"
    "\n"
    "metadata:{metadata}\n"
    "Provide your response in stringfied JSON format."
)

API_KEY_ENV = "TABPROMPT_API_KEY"


class MetadataError(ValueError):
    pass


class ServiceError(RuntimeError):
    """The chat service could not produce a usable response."""


@dataclass(frozen=True)
class ReformattedMetadata:
    target: str  # resolved to an actual dataset column name
    description: str
    source: str = "service"  # "service" | "fallback"

    def __post_init__(self):
        if not self.description:
            raise MetadataError("description must be non-empty")


@dataclass(frozen=True)
class ChatClientConfig:
    endpoint: str
    model: str = "gpt-3.5-turbo"
    timeout: float = 30.0
    max_retries: int = 1

    def __post_init__(self):
        if self.timeout <= 0:
            raise MetadataError("timeout must be > 0")
        if self.max_retries < 0:
            raise MetadataError("max_retries must be >= 0")


def build_reformat_prompt(raw_metadata: str, columns: Sequence[str]) -> str:
    if not columns:
        raise MetadataError("columns must be non-empty")
    # .format would trip on the JSON braces in the template
    return REFORMAT_PROMPT_TEMPLATE.replace("{col}", ",".join(columns)).replace(
        "{metadata}", raw_metadata
    )


def parse_reformat_response(response: str, columns: Sequence[str]) -> ReformattedMetadata:
    """Decode the service's JSON and resolve its target against real columns.

    The reformat prompt tells the service to replace separators with spaces,
    so the returned target is matched case-insensitively after collapsing
    spaces/underscores/hyphens.
    """
    try:
        doc = json.loads(response)
    except json.JSONDecodeError as e:
        raise MetadataError(f"malformed reformat response: {e}") from e
    if not isinstance(doc, dict) or "target" not in doc or "metadata" not in doc:
        raise MetadataError("reformat response missing target/metadata fields")
    want = normalize_name_key(str(doc["target"]))
    hits = [c for c in columns if normalize_name_key(c) == want]
    if len(hits) != 1:
        raise MetadataError(
            f"reformat target {doc['target']!r} does not resolve to one column"
        )
    return ReformattedMetadata(target=hits[0], description=str(doc["metadata"]))


def fallback_reformat(d: Dataset) -> ReformattedMetadata:
    """Offline reformatter: never touches the network.

    Target is the manifest hint when set, else the last column; every other
    column gets an "{name}: N/A" line with separators replaced by spaces.
    """
    names = d.column_names
    if len(names) < 2:
        raise MetadataError("fallback needs at least 2 columns")
    target = d.target_column if d.target_column else names[-1]
    shown = target.replace("-", " ").replace("_", " ")
    lines = [f"The target of the dataset is {shown}."]
    for c in names:
        if c == target:
            continue
        lines.append(f"{c.replace('-', ' ').replace('_', ' ')}: N/A")
    return ReformattedMetadata(target=target, description="\n".join(lines), source="fallback")


class HttpChatClient:
    """Minimal chat-completion client: one user message in, text out."""

    def __init__(self, config: ChatClientConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = requests.post(
                self.config.endpoint,
                json=payload,
                headers=headers,
                timeout=self.config.timeout,
            )
            resp.raise_for_status()
            doc = resp.json()
            return doc["choices"][0]["message"]["content"]
        except Exception as e:
            raise ServiceError(f"chat service call failed: {e}") from e


class MetadataCache:
    """One JSON file per dataset id, keyed inside by a content hash of the
    raw metadata and column list so stale entries miss instead of lying."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def content_key(raw_metadata: str, columns: Sequence[str]) -> str:
        h = hashlib.sha256()
        h.update(raw_metadata.encode("utf-8"))
        for c in columns:
            h.update(b"\x00")
            h.update(c.encode("utf-8"))
        return h.hexdigest()

    def _path(self, dataset_id: str) -> Path:
        return self.directory / f"{dataset_id}.json"

    def get(self, dataset_id: str, key: str) -> Optional[ReformattedMetadata]:
        p = self._path(dataset_id)
        if not p.exists():
            return None
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if doc.get("content_key") != key:
            return None
        return ReformattedMetadata(
            target=doc["target"], description=doc["description"], source=doc["source"]
        )

    def put(self, dataset_id: str, key: str, meta: ReformattedMetadata) -> None:
        doc = {
            "content_key": key,
            "target": meta.target,
            "description": meta.description,
            "source": meta.source,
        }
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as f:
                    json.dump(doc, f, indent=2, sort_keys=True)
                    f.write("\n")
                os.replace(tmp, self._path(dataset_id))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise


def reformat(
    d: Dataset,
    client=None,
    cache: Optional[MetadataCache] = None,
    allow_fallback: bool = True,
) -> ReformattedMetadata:
    """Reformat one dataset's metadata, preferring cache, then service, then
    the offline fallback. A service response whose target does not resolve to
    a column counts as a failed attempt and consumes a retry."""
    columns = d.column_names
    key = MetadataCache.content_key(d.raw_metadata, columns)
    if cache is not None:
        hit = cache.get(d.id, key)
        if hit is not None:
            return hit
    meta = None
    if client is not None:
        prompt = build_reformat_prompt(d.raw_metadata, columns)
        attempts = 1 + client.config.max_retries
        for _ in range(attempts):
            try:
                meta = parse_reformat_response(client.complete(prompt), columns)
                break
            except (ServiceError, MetadataError):
                meta = None
    if meta is None:
        if not allow_fallback:
            raise ServiceError(f"metadata reformat failed for dataset {d.id!r}")
        meta = fallback_reformat(d)
    if cache is not None:
        cache.put(d.id, key, meta)
    return meta


def reformat_all(
    datasets: Sequence[Dataset],
    client=None,
    cache: Optional[MetadataCache] = None,
    allow_fallback: bool = True,
    parallelism: int = 4,
) -> dict[str, ReformattedMetadata]:
    """Reformat many datasets, fanning service calls out across threads."""
    if parallelism < 1:
        raise MetadataError("parallelism must be >= 1")
    from concurrent.futures import ThreadPoolExecutor

    def one(d: Dataset) -> tuple[str, ReformattedMetadata]:
        return d.id, reformat(d, client=client, cache=cache, allow_fallback=allow_fallback)

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return dict(pool.map(one, datasets))

"""HTTP client for a chat-completions style vision endpoint.

Requests carry one base64 PNG image part and one text part. Transport
failures are retried with exponential backoff; authentication failures
surface immediately; unparseable answers exclude the sample from training
and are counted, never retried. Successful raw responses are cached on
(sample id, model, permutation), so re-runs are free.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from ..errors import AuthenticationError, ExternalServiceError, UsageError
from ..rng import stream
from ..signalgen import N_CLASSES, TimeSeries
from .plotting import render_plot
from .prompt import ParseError, build_prompt, parse_answer
from .records import LabelRecord, VlmEndpointConfig
from .teachers import Teacher

_RETRY_STATUS = {429, 500, 502, 503, 504}


@dataclass
class LabelFailure:
    sample_id: str
    error: str
    raw_response: str | None


@dataclass
class LabelingResult:
    records: list[LabelRecord]
    failures: list[LabelFailure] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return len(self.failures)


class ResponseCache:
    """Append-only JSONL store, safe under one process with many threads."""

    def __init__(self, path: str | Path | None) -> None:
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    rec = json.loads(line)
                    self._entries[rec["key"]] = rec["response"]

    @staticmethod
    def key(sample_id: str, model: str, permutation: tuple[int, ...]) -> str:
        blob = f"{sample_id}|{model}|{','.join(map(str, permutation))}"
        return hashlib.sha256(blob.encode()).hexdigest()

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, response: str) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = response
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"key": key, "response": response}, sort_keys=True) + "\n")


class VlmClient:
    def __init__(
        self,
        config: VlmEndpointConfig,
        cache_path: str | Path | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.config = config
        self.cache = ResponseCache(cache_path)
        self._session = session or requests.Session()
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise UsageError(
                f"API key environment variable {config.api_key_env!r} is not set"
            )
        self._headers = {
            "Authorization": f"Bearer {key}",
            "Content-Type": "application/json",
        }

    def _post(self, body: dict) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = self._session.post(
                    url, headers=self._headers, json=body, timeout=self.config.timeout
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
            else:
                if resp.status_code in (401, 403):
                    raise AuthenticationError(
                        f"endpoint rejected credentials (HTTP {resp.status_code})"
                    )
                if resp.status_code == 200:
                    try:
                        return resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        last_exc = ExternalServiceError(f"malformed endpoint response: {exc}")
                elif resp.status_code in _RETRY_STATUS:
                    last_exc = ExternalServiceError(f"HTTP {resp.status_code} from endpoint")
                else:
                    raise ExternalServiceError(
                        f"HTTP {resp.status_code} from endpoint: {resp.text[:200]}"
                    )
            if attempt < self.config.max_retries:
                time.sleep(self.config.backoff * (2**attempt))
        raise ExternalServiceError(f"endpoint unreachable after retries: {last_exc}")

    def query(self, image_png: bytes, prompt: str) -> str:
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt},
                        {
                            "type": "image_url",
                            "image_url": {
                                "url": "data:image/png;base64,"
                                + base64.b64encode(image_png).decode("ascii")
                            },
                        },
                    ],
                }
            ],
        }
        return self._post(body)

    def label(
        self, ts: TimeSeries, perm_rng: np.random.Generator
    ) -> LabelRecord | LabelFailure:
        permutation = tuple(int(v) for v in perm_rng.permutation(N_CLASSES))
        key = ResponseCache.key(ts.id, self.config.model, permutation)
        raw = self.cache.get(key)
        if raw is None:
            raw = self.query(render_plot(ts), build_prompt(permutation))
            self.cache.put(key, raw)
        try:
            label = parse_answer(raw, permutation)
        except ParseError as exc:
            return LabelFailure(sample_id=ts.id, error=type(exc).__name__, raw_response=raw)
        return LabelRecord(
            sample_id=ts.id,
            label=label,
            teacher=f"vlm:{self.config.model}",
            option_permutation=permutation,
            raw_response=raw,
            correct=label == ts.gt_class,
        )

    def label_samples(self, samples: list[TimeSeries], seed: int, jobs: int = 1) -> LabelingResult:
        """Label a batch; per-sample permutation streams keyed by sample id,
        so results do not depend on thread scheduling."""
        jobs = max(1, min(jobs, self.config.max_concurrent))

        def one(ts: TimeSeries):
            return self.label(ts, stream(seed, "vlm-perm", ts.id))

        if jobs == 1:
            outcomes = [one(ts) for ts in samples]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(one, samples))
        records = [o for o in outcomes if isinstance(o, LabelRecord)]
        failures = [o for o in outcomes if isinstance(o, LabelFailure)]
        return LabelingResult(records=records, failures=failures)


class VlmTeacher(Teacher):
    """Adapter so the VLM slots into the common teacher interface.

    Permutations come from streams keyed by (seed, sample id), independent of
    any rng handed in by the caller; that keeps concurrent labeling and
    per-trial relabeling reproducible.
    """

    stochastic = False

    def __init__(self, client: VlmClient, seed: int) -> None:
        self.client = client
        self.seed = seed
        self.name = f"vlm:{client.config.model}"

    def label(self, ts: TimeSeries, rng=None) -> LabelRecord:
        outcome = self.client.label(ts, stream(self.seed, "vlm-perm", ts.id))
        if isinstance(outcome, LabelFailure):
            raise ParseError(f"sample {ts.id}: {outcome.error} on {outcome.raw_response!r}")
        return outcome

"""Web search backend: HTTP client with rate limiting, offline fixture replay, result filtering."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from pathlib import Path
from typing import Any, Protocol
from urllib.parse import urlsplit

import httpx

from ..core import ReferenceSentence, SourceKind, SourceTag, tokenize
from ..queries import Query
from .base import RetrievalConfig

log = logging.getLogger(__name__)


class SearchError(Exception):
    retryable = False


class SearchTransportError(SearchError):
    retryable = True


class SearchBackendError(SearchError):
    def __init__(self, status: int, message: str = ""):
        super().__init__(f"search backend returned HTTP {status}" + (f": {message}" if message else ""))
        self.status = status
        self.retryable = status == 429 or status >= 500


class SearchParseError(SearchError):
    pass


class SearchClient(Protocol):
    def search(self, query: str, num: int) -> list[dict[str, str]]: ...


def parse_results(payload: Any) -> list[dict[str, str]]:
    """Validate ``{"items": [{"title", "snippet", "link"}, ...]}``."""
    if not isinstance(payload, dict):
        raise SearchParseError("response is not a JSON object")
    items = payload.get("items", [])
    if not isinstance(items, list):
        raise SearchParseError("'items' is not a list")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise SearchParseError(f"item {i} is not an object")
        rec = {}
        for key in ("title", "snippet", "link"):
            val = item.get(key, "")
            if not isinstance(val, str):
                raise SearchParseError(f"item {i} field {key!r} is not a string")
            rec[key] = val
        out.append(rec)
    return out


class _HostThrottle:
    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._next: dict[str, float] = {}
        self._lock = threading.Lock()

    def wait(self, host: str) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next.get(host, now))
            self._next[host] = slot + self.min_interval
        if slot > now:
            time.sleep(slot - now)


class HttpSearchClient:
    """Generic JSON search endpoint: ``GET endpoint?q=...&num=...&key=...``.

    Bounded in-flight requests, a minimum interval per host, and bounded
    retries for transport errors, 429 and 5xx responses.
    """

    def __init__(self, endpoint: str, api_key_env: str = "SEARCH_API_KEY", *,
                 extra_params: dict[str, str] | None = None, timeout: float = 10.0,
                 max_in_flight: int = 4, min_interval: float = 0.5, max_retries: int = 2,
                 backoff: float = 0.5, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        self.api_key = os.environ.get(api_key_env, "")
        self.extra_params = dict(extra_params or {})
        self.max_retries = max_retries
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._throttle = _HostThrottle(min_interval)
        self._http = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def _once(self, params: dict[str, Any]) -> list[dict[str, str]]:
        self._throttle.wait(urlsplit(self.endpoint).netloc)
        with self._slots:
            try:
                resp = self._http.get(self.endpoint, params=params)
            except httpx.TransportError as exc:
                raise SearchTransportError(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise SearchBackendError(resp.status_code, resp.text[:200])
        try:
            payload = resp.json()
        except ValueError as exc:
            raise SearchParseError(f"invalid JSON: {exc}") from None
        return parse_results(payload)

    def search(self, query: str, num: int) -> list[dict[str, str]]:
        params = {"q": query, "num": num, **self.extra_params}
        if self.api_key:
            params["key"] = self.api_key
        attempt = 0
        while True:
            try:
                return self._once(params)
            except SearchError as exc:
                if not exc.retryable or attempt >= self.max_retries:
                    raise
                attempt += 1
                log.warning("search retry %d for %r: %s", attempt, query, exc)
                time.sleep(self.backoff * attempt)


class FixtureSearchClient:
    """Replays responses stored as ``{query: {"items": [...]}}`` in a JSON file."""

    def __init__(self, responses: dict[str, Any]):
        self.responses = {" ".join(k.lower().split()): v for k, v in responses.items()}

    @classmethod
    def load(cls, path: str | Path) -> "FixtureSearchClient":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise SearchParseError(f"{path}: fixture must map queries to responses")
        return cls(data)

    def search(self, query: str, num: int) -> list[dict[str, str]]:
        payload = self.responses.get(" ".join(query.lower().split()), {"items": []})
        return parse_results(payload)[:num]


def result_host(link: str) -> str:
    return (urlsplit(link).hostname or "").lower()


def is_blocked(link: str, blocked_domains: list[str]) -> bool:
    host = result_host(link)
    return any(host == d or host.endswith("." + d) for d in blocked_domains)


def internet_search(query: Query, cfg: RetrievalConfig, client: SearchClient,
                    source: SourceTag | None = None) -> list[ReferenceSentence]:
    """Title and snippet joined into one reference; blocked hosts and annotated text dropped."""
    source = source or SourceTag(SourceKind.INTERNET, "web")
    patterns = [re.compile(p) for p in cfg.annotation_patterns]
    out = []
    for item in client.search(query.text, cfg.top_g):
        if is_blocked(item["link"], cfg.blocked_domains):
            continue
        text = " ".join(part.strip() for part in (item["title"], item["snippet"]) if part.strip())
        if not text or any(p.search(text) for p in patterns):
            continue
        if not tokenize(text):
            continue
        out.append(ReferenceSentence.from_text(text, source, query.text, provenance=item["link"]))
        if len(out) == cfg.top_g:
            break
    return out


class InternetBackend:
    def __init__(self, client: SearchClient, cfg: RetrievalConfig | None = None, name: str = "web"):
        self.client = client
        self.cfg = cfg or RetrievalConfig()
        self.top_k = self.cfg.top_g
        self.source = SourceTag(SourceKind.INTERNET, name)

    def search(self, query: Query, top_k: int | None = None) -> list[ReferenceSentence]:
        refs = internet_search(query, self.cfg, self.client, self.source)
        return refs[:top_k] if top_k else refs

"""HTTP backend for engines reached over the network.

``LiveEngineClient`` speaks the service API in :mod:`indexsize.service`; the
``mock-live`` backend points it at a service wrapping a simulated engine. Every
request first takes a token from a :class:`TokenBucket`.
"""

from __future__ import annotations

import threading
import time
from typing import Callable

import httpx

from .engine import EngineServerError, HitCountEstimate, Query, ResultPage


class TokenBucket:
    """Allow ``rate_per_minute`` requests on average, bursts of up to ``capacity``."""

    def __init__(self, rate_per_minute: float, capacity: int = 1,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if rate_per_minute <= 0:
            raise ValueError("rate_per_minute must be positive")
        self.rate = rate_per_minute / 60.0
        self.capacity = max(1, capacity)
        self.clock = clock
        self.sleep = sleep
        self._tokens = float(self.capacity)
        self._stamp = clock()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Block until a token is available; returns the time waited."""
        with self._lock:
            now = self.clock()
            self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
            self._stamp = now
            wait = 0.0
            if self._tokens < 1:
                wait = (1 - self._tokens) / self.rate
                self.sleep(wait)
                self._stamp = self.clock()
                self._tokens = 1.0
            self._tokens -= 1
            return wait


class LiveEngineClient:
    name = "mock-live"

    def __init__(self, base_url: str | None = None, client: httpx.Client | None = None,
                 rate_limit_per_minute: float = 30.0, burst: int = 1, timeout: float = 30.0,
                 bucket: TokenBucket | None = None):
        if client is None:
            if base_url is None:
                raise ValueError("either base_url or client is required")
            client = httpx.Client(base_url=base_url, timeout=timeout)
        self.client = client
        self.bucket = bucket or TokenBucket(rate_limit_per_minute, burst)

    def _post(self, path: str, payload: dict) -> dict:
        self.bucket.acquire()
        try:
            resp = self.client.post(path, json=payload)
        except httpx.TransportError as exc:
            raise EngineServerError(f"transport failure: {exc}") from exc
        if resp.status_code >= 500:
            raise EngineServerError(resp.json().get("detail", resp.text))
        resp.raise_for_status()
        return resp.json()

    def capabilities(self) -> dict:
        resp = self.client.get("/engine/capabilities")
        resp.raise_for_status()
        return {**resp.json(), "backend": self.name}

    def count(self, query: Query) -> HitCountEstimate:
        data = self._post("/engine/count", query.to_dict())
        return HitCountEstimate(value=data["value"], rounded=data["rounded"],
                                raw_true_count=data.get("raw_true_count"),
                                diagnostics=data.get("diagnostics") or {})

    def fetch_page(self, query: Query) -> ResultPage:
        data = self._post("/engine/page", query.to_dict())
        hce = data["hce"]
        return ResultPage(
            ids=tuple(data["ids"]),
            hce=HitCountEstimate(value=hce["value"], rounded=hce["rounded"],
                                 raw_true_count=hce.get("raw_true_count"),
                                 diagnostics=hce.get("diagnostics") or {}),
            capped=data["capped"], false_serp=data["false_serp"],
        )

    def close(self) -> None:
        self.client.close()

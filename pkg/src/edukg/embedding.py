"""Text embeddings behind a uniform provider contract.

Two providers: a deterministic hash embedder for tests and offline runs, and a
client for an external embedding service (where a transformer model would be
deployed). Both return L2-normalized vectors of a fixed dimension.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from functools import lru_cache
from typing import Protocol, Sequence

import httpx
import numpy as np

from .errors import ConfigurationError, ContractViolation, TransportError

DEFAULT_DIM = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_token_re = re.compile(r"[a-z0-9]+")


def fnv1a_64(data: bytes, state: int = _FNV_OFFSET) -> int:
    """FNV-1a 64-bit hash; `state` lets a digest be extended incrementally."""
    h = state
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


class EmbeddingProvider(Protocol):
    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int) -> tuple:
    base = fnv1a_64(token.encode("utf-8"))
    out = np.empty(dim)
    for i in range(dim):
        u = fnv1a_64(i.to_bytes(8, "little"), base)
        out[i] = (u / 2**64) * 2.0 - 1.0
    return tuple(out)


def hash_embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic bag-of-words embedding from per-token FNV-1a hashes.

    Empty token list maps to the zero vector; everything else is L2-normalized.
    """
    tokens = _token_re.findall(text.lower())
    vec = np.zeros(dim)
    for t in tokens:
        vec += np.asarray(_token_vector(t, dim))
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


class HashEmbedder:
    """EmbeddingProvider backed by hash_embed, with a small result cache."""

    def __init__(self, dimension: int = DEFAULT_DIM):
        self.name = "hash"
        self.dimension = dimension
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        with self._lock:
            hit = self._cache.get(text)
        if hit is not None:
            return hit
        vec = hash_embed(text, self.dimension)
        with self._lock:
            if len(self._cache) < 100000:
                self._cache[text] = vec
        return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ContractViolation(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class RemoteEmbedder:
    """Client for an external embedding service.

    Wire format: POST {"texts": [...]} -> {"vectors": [[...], ...]}.
    Responses are cached by content hash; transient failures are retried with
    exponential backoff.
    """

    MAX_BATCH = 64

    def __init__(self, endpoint: str, dimension: int, *, name: str = "remote",
                 retries: int = 3, backoff: float = 0.2,
                 transport: httpx.BaseTransport | None = None):
        self.name = name
        self.endpoint = endpoint
        self.dimension = dimension
        self.retries = retries
        self.backoff = backoff
        self._client = httpx.Client(transport=transport, timeout=30.0)
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        if len(texts) > self.MAX_BATCH:
            raise ContractViolation(f"batch size {len(texts)} exceeds {self.MAX_BATCH}")
        keys = [hashlib.sha256(t.encode("utf-8")).hexdigest() for t in texts]
        with self._lock:
            missing = [(i, t) for i, (k, t) in enumerate(zip(keys, texts))
                       if k not in self._cache]
        if missing:
            vectors = self._request([t for _, t in missing])
            with self._lock:
                for (i, _), vec in zip(missing, vectors):
                    self._cache[keys[i]] = vec
        with self._lock:
            return [self._cache[k] for k in keys]

    def _request(self, texts: list[str]) -> list[np.ndarray]:
        last_exc: Exception | None = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(self.endpoint, json={"texts": texts})
            except httpx.TransportError as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = TransportError(f"server returned {resp.status_code}")
                continue
            resp.raise_for_status()
            payload = resp.json()
            vectors = [np.asarray(v, dtype=float) for v in payload["vectors"]]
            if len(vectors) != len(texts):
                raise TransportError("response vector count does not match request")
            for v in vectors:
                if v.shape != (self.dimension,):
                    raise ConfigurationError(
                        f"service returned dimension {v.shape[0]}, expected {self.dimension}")
            return vectors
        raise TransportError(f"embedding service unavailable after {self.retries} attempts: {last_exc}")


def vector_to_json(vec: np.ndarray) -> str:
    return json.dumps([float(x) for x in vec])
